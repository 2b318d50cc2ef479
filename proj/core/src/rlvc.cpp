#include "rlvc/rlvc.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "rlvc/clustering.hpp"

namespace rlvc {

void RlvcConfig::validate() const {
    if (!(tau >= 0.0)) throw std::invalid_argument("RlvcConfig: tau must be >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("RlvcConfig: alpha not in (0,1)");
    if (max_splits_per_iteration == 0 || max_iterations == 0 || candidate_cap == 0)
        throw std::invalid_argument("RlvcConfig: counts must be positive");
    if (!(equivalence.epsilon >= 0.0) || !std::isfinite(equivalence.epsilon))
        throw std::invalid_argument("RlvcConfig: epsilon must be finite and >= 0");
    composite.validate();
}

ClassId classify(const Classifier& c, const FeatureTest& test) {
    return std::visit([&](const auto& impl) { return impl.classify(test); }, c);
}

std::vector<ClassId> classes_of(const Classifier& c) {
    return std::visit([](const auto& impl) { return impl.classes(); }, c);
}

std::size_t num_classes(const Classifier& c) {
    return std::visit([](const auto& impl) { return impl.num_classes(); }, c);
}

FeatureTest feature_test(const SymbolizedPercept& s, const FeatureGraph& graph,
                         const CompositeParams& params) {
    auto memo = std::make_shared<std::unordered_map<FeatureId, bool>>();
    return [&s, &graph, params, memo](FeatureId f) {
        if (graph.is_primitive(f)) return s.has(f);
        if (auto it = memo->find(f); it != memo->end()) return it->second;
        const bool found = exhibits(f, s, graph, params);
        memo->emplace(f, found);
        return found;
    };
}

// ---------------------------------------------------------------- residuals

std::vector<ResidualSample> residuals(std::span<const Interaction> interactions,
                                      std::span<const ClassId> class_of, const MappedMdp& mapped,
                                      const QFunction& q) {
    const double gamma = mapped.mdp.discount();
    const auto best = optimal_values(q);
    std::vector<ResidualSample> out;
    out.reserve(interactions.size());
    for (std::size_t t = 0; t < interactions.size(); ++t) {
        const auto& it = interactions[t];
        const ClassId v = class_of[it.s];
        const StateId s = mapped.state_of(v);
        const double future = it.terminal_next ? 0.0 : best[mapped.state_of(class_of[it.s_next])];
        out.push_back({t, v, it.a, it.reward + gamma * future - q(s, it.a)});
    }
    return out;
}

namespace {

/// Worst per-action population variance (actions with < 2 samples skipped).
double worst_variance(std::span<const ResidualSample> samples) {
    std::map<ActionId, std::vector<double>> by_action;
    for (const auto& r : samples) by_action[r.action].push_back(r.delta);
    double worst = 0.0;
    for (const auto& [a, deltas] : by_action)
        if (deltas.size() >= 2) worst = std::max(worst, variance_of(deltas));
    return worst;
}

}  // namespace

bool aliased(std::span<const ResidualSample> samples, double tau) {
    return worst_variance(samples) > tau;
}

// ---------------------------------------------------------------- selection

std::optional<FeatureChoice> select_feature(
    std::span<const ResidualSample> samples, std::span<const FeatureId> candidates,
    const std::function<bool(std::size_t, FeatureId)>& exhibits, double alpha) {
    if (candidates.empty() || samples.empty()) return std::nullopt;

    std::map<ActionId, std::vector<const ResidualSample*>> by_action;
    for (const auto& r : samples) by_action[r.action].push_back(&r);

    std::optional<FeatureChoice> best;
    auto better = [&](double score, FeatureId f, ActionId a) {
        if (!best) return true;
        const double tol = 1e-9 * (1.0 + std::abs(best->score));
        if (score < best->score - tol) return true;
        if (score > best->score + tol) return false;
        return f != best->feature ? f < best->feature : a < best->action;
    };

    for (const auto& [a, group] : by_action) {
        Moments total;
        std::vector<double> deltas;
        for (const auto* r : group) {
            total.add(r->delta);
            deltas.push_back(r->delta);
        }
        const double before = variance_of(deltas);
        const double n = static_cast<double>(total.n);
        for (const FeatureId f : candidates) {
            Moments present;
            for (const auto* r : group)
                if (exhibits(r->t, f)) present.add(r->delta);
            const Moments absent = total - present;
            if (present.n == 0 || absent.n == 0) continue;
            const double score = static_cast<double>(present.n) / n * present.population_variance() +
                                 static_cast<double>(absent.n) / n * absent.population_variance();
            if (!better(score, f, a)) continue;
            if (!welch_significant(present, absent, alpha)) continue;
            best = FeatureChoice{f, a, score, before, welch_p_value(present, absent)};
        }
    }
    return best;
}

void write_trace_csv(std::ostream& out, const IterationTrace& trace) {
    out << "k,classes,splits,merges,aliased,max_residual_variance,error_learning,error_test\n";
    out.precision(10);
    for (const auto& r : trace.records)
        out << r.k << ',' << r.classes << ',' << r.splits << ',' << r.merges << ','
            << r.aliased_classes << ',' << r.max_residual_variance << ',' << r.error_learning
            << ',' << r.error_test << '\n';
}

// ---------------------------------------------------------------- visual policy

VisualPolicy::VisualPolicy(Classifier classifier, FeatureGraph graph, CompositeParams params,
                           std::vector<ClassId> classes, QFunction q, Policy policy)
    : classifier_(std::move(classifier)), graph_(std::move(graph)), params_(params),
      classes_(std::move(classes)), q_(std::move(q)), policy_(std::move(policy)) {
    if (!std::is_sorted(classes_.begin(), classes_.end()))
        throw std::invalid_argument("VisualPolicy: classes must be sorted");
    if (q_.num_states() < classes_.size() || policy_.size() < classes_.size())
        throw std::invalid_argument("VisualPolicy: Q/policy do not cover the classes");
}

std::optional<StateId> VisualPolicy::state_of(ClassId c) const {
    const auto it = std::lower_bound(classes_.begin(), classes_.end(), c);
    if (it == classes_.end() || *it != c) return std::nullopt;
    return static_cast<StateId>(it - classes_.begin());
}

ClassId VisualPolicy::classify(const SymbolizedPercept& s) const {
    return rlvc::classify(classifier_, feature_test(s, graph_, params_));
}

ActionId VisualPolicy::act(const SymbolizedPercept& s) const {
    const auto state = state_of(classify(s));
    return state ? policy_[*state] : 0;
}

std::vector<double> VisualPolicy::q_values(const SymbolizedPercept& s) const {
    const auto state = state_of(classify(s));
    if (!state) return std::vector<double>(q_.num_actions(), 0.0);
    const auto row = q_.row(*state);
    return {row.begin(), row.end()};
}

void VisualPolicy::save(const std::string& directory) const {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    {
        std::ofstream out(fs::path(directory) / "classifier.txt");
        std::visit([&](const auto& c) { c.write(out); }, classifier_);
    }
    {
        std::ofstream out(fs::path(directory) / "features.txt");
        write_feature_graph(out, graph_);
    }
    {
        std::ofstream out(fs::path(directory) / "params.txt");
        out.precision(std::numeric_limits<double>::max_digits10);
        out << "nu " << params_.nu << "\nmin_cooccurrence " << params_.min_cooccurrence
            << "\ncluster_cut " << params_.cluster_cut << "\nmin_cluster_size "
            << params_.min_cluster_size << "\nsigma_floor " << params_.sigma_floor << '\n';
    }
    {
        std::ofstream out(fs::path(directory) / "policy.csv");
        out.precision(std::numeric_limits<double>::max_digits10);
        out << "class,action";
        for (ActionId a = 0; a < q_.num_actions(); ++a) out << ",q" << a;
        out << '\n';
        for (std::size_t i = 0; i < classes_.size(); ++i) {
            out << classes_[i] << ',' << policy_[i];
            for (ActionId a = 0; a < q_.num_actions(); ++a) out << ',' << q_(i, a);
            out << '\n';
        }
    }
}

VisualPolicy VisualPolicy::load(const std::string& directory, const FeatureDictionary& dict) {
    namespace fs = std::filesystem;
    auto open = [&](const char* name) {
        std::ifstream in(fs::path(directory) / name);
        if (!in) throw std::runtime_error("checkpoint: cannot open " + std::string(name));
        return in;
    };

    Classifier classifier = TreeClassifier();
    {
        auto in = open("classifier.txt");
        const auto first = in.peek();
        if (first == 'b')
            classifier = BddClassifier::read(in);
        else
            classifier = TreeClassifier::read(in);
    }
    auto features_in = open("features.txt");
    FeatureGraph graph = read_feature_graph(features_in, dict);

    CompositeParams params;
    {
        auto in = open("params.txt");
        std::string key;
        while (in >> key) {
            if (key == "nu") in >> params.nu;
            else if (key == "min_cooccurrence") in >> params.min_cooccurrence;
            else if (key == "cluster_cut") in >> params.cluster_cut;
            else if (key == "min_cluster_size") in >> params.min_cluster_size;
            else if (key == "sigma_floor") in >> params.sigma_floor;
            else throw std::runtime_error("checkpoint: unknown parameter " + key);
        }
        params.validate();
    }

    std::vector<ClassId> classes;
    std::vector<std::vector<double>> rows;
    Policy policy;
    {
        auto in = open("policy.csv");
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream rec(line);
            ClassId c = 0;
            ActionId a = 0;
            rec >> c >> a;
            std::vector<double> row;
            for (double v; rec >> v;) row.push_back(v);
            if (row.empty() || (!rows.empty() && row.size() != rows.front().size()))
                throw std::runtime_error("checkpoint: malformed policy row");
            classes.push_back(c);
            policy.push_back(a);
            rows.push_back(std::move(row));
        }
    }
    if (rows.empty()) throw std::runtime_error("checkpoint: empty policy");
    QFunction q(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (ActionId a = 0; a < rows[i].size(); ++a) q(i, a) = rows[i][a];
    return VisualPolicy(std::move(classifier), std::move(graph), params, std::move(classes),
                        std::move(q), std::move(policy));
}

// ---------------------------------------------------------------- learner

RlvcLearner::RlvcLearner(const Dataset& data, const FeatureGraph& graph, RlvcConfig config)
    : data_(data), graph_(graph), config_(std::move(config)),
      assignment_(data.percepts.size(), 0) {
    config_.validate();
    if (data.interactions.empty()) throw std::invalid_argument("RlvcLearner: empty database");
    if (config_.backend == Backend::bdd)
        classifier_ = BddClassifier();
    else
        classifier_ = TreeClassifier();
}

bool RlvcLearner::exhibits(PerceptId p, FeatureId f) const {
    return rlvc::exhibits(f, data_.percepts[p], graph_, config_.composite);
}

void RlvcLearner::solve() {
    mapped_ = estimate_mapped_mdp(data_.interactions, assignment_, data_.num_actions,
                                  data_.discount);
    q_ = solve_optimal_q(mapped_->mdp, config_.solver);
    policy_ = greedy_observed_policy(q_, *mapped_);
}

VisualPolicy RlvcLearner::snapshot() const {
    if (!mapped_) throw std::logic_error("RlvcLearner::snapshot: call solve() first");
    // Drop the sink row so the policy only knows real classes.
    QFunction q(mapped_->classes.size(), data_.num_actions);
    for (StateId s = 0; s < mapped_->classes.size(); ++s)
        for (ActionId a = 0; a < data_.num_actions; ++a) q(s, a) = q_(s, a);
    Policy policy(policy_.begin(), policy_.begin() + static_cast<std::ptrdiff_t>(mapped_->classes.size()));
    return VisualPolicy(classifier_, graph_, config_.composite, mapped_->classes, std::move(q),
                        std::move(policy));
}

bool RlvcLearner::can_refine(ClassId v, FeatureId f) const {
    if (const auto* tree = std::get_if<TreeClassifier>(&classifier_)) {
        const auto path = tree->path_features(v);
        return std::find(path.begin(), path.end(), f) == path.end();
    }
    const auto& bdd = std::get<BddClassifier>(classifier_);
    const auto support = bdd.manager().support(bdd.function(v));
    if (std::find(support.begin(), support.end(), f) == support.end()) return true;
    // Support membership does not make f constant on the class; test on a copy.
    auto copy = bdd;
    try {
        copy.refine(v, f);
        return true;
    } catch (const std::logic_error&) {
        return false;
    }
}

void RlvcLearner::apply_split(ClassId v, FeatureId f) {
    const Split split = std::visit([&](auto& c) { return c.refine(v, f); }, classifier_);
    for (PerceptId p = 0; p < assignment_.size(); ++p)
        if (assignment_[p] == v) assignment_[p] = exhibits(p, f) ? split.present : split.absent;
    if (mutation_hook_) mutation_hook_(classifier_);
}

std::optional<FeatureChoice> RlvcLearner::choose_primitive(
    std::span<const ResidualSample> samples) const {
    // Distinct percepts of the class, and how many of them show each symbol.
    std::vector<PerceptId> percepts;
    for (const auto& r : samples) percepts.push_back(data_.interactions[r.t].s);
    std::sort(percepts.begin(), percepts.end());
    percepts.erase(std::unique(percepts.begin(), percepts.end()), percepts.end());
    std::map<FeatureId, std::size_t> shown;
    for (PerceptId p : percepts)
        for (Symbol s : data_.percepts[p].symbols()) ++shown[s];

    // A symbol shown by some but not all class percepts is never constant on the class.
    std::vector<std::pair<std::size_t, FeatureId>> ranked;
    for (const auto& [f, count] : shown)
        if (count < percepts.size()) ranked.emplace_back(count, f);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    if (ranked.size() > config_.candidate_cap) ranked.resize(config_.candidate_cap);
    std::vector<FeatureId> candidates;
    for (const auto& entry : ranked) candidates.push_back(entry.second);
    std::sort(candidates.begin(), candidates.end());

    return select_feature(
        samples, candidates,
        [&](std::size_t t, FeatureId f) { return data_.percepts[data_.interactions[t].s].has(f); },
        config_.alpha);
}

std::optional<std::pair<FeatureChoice, CompositeSpec>> RlvcLearner::choose_composite(
    std::span<const ResidualSample> samples) const {
    std::vector<PerceptId> percepts;
    for (const auto& r : samples) percepts.push_back(data_.interactions[r.t].s);
    std::sort(percepts.begin(), percepts.end());
    percepts.erase(std::unique(percepts.begin(), percepts.end()), percepts.end());
    std::vector<SymbolizedPercept> views;
    views.reserve(percepts.size());
    for (PerceptId p : percepts) views.push_back(data_.percepts[p]);

    auto specs = generate_composites(views, graph_, config_.composite);
    if (specs.empty()) return std::nullopt;

    // Presence table: specs x distinct percepts.
    std::vector<std::vector<bool>> present(specs.size(), std::vector<bool>(percepts.size()));
    std::vector<std::pair<std::size_t, std::size_t>> ranked;  // (count, spec index)
    for (std::size_t i = 0; i < specs.size(); ++i) {
        std::size_t count = 0;
        for (std::size_t j = 0; j < percepts.size(); ++j) {
            present[i][j] = !occurrences(specs[i], views[j], graph_, config_.composite).empty();
            count += present[i][j];
        }
        if (count > 0 && count < percepts.size()) ranked.emplace_back(count, i);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    if (ranked.size() > config_.candidate_cap) ranked.resize(config_.candidate_cap);
    std::vector<FeatureId> candidates;
    for (const auto& entry : ranked) candidates.push_back(entry.second);
    std::sort(candidates.begin(), candidates.end());

    // Candidate ids here are indices into `specs`.
    auto choice = select_feature(
        samples, candidates,
        [&](std::size_t t, FeatureId i) {
            const PerceptId p = data_.interactions[t].s;
            const auto j = static_cast<std::size_t>(
                std::lower_bound(percepts.begin(), percepts.end(), p) - percepts.begin());
            return static_cast<bool>(present[i][j]);
        },
        config_.alpha);
    if (!choice) return std::nullopt;
    return std::make_pair(*choice, specs[choice->feature]);
}

bool RlvcLearner::step(const IterationObserver& observer) {
    solve();
    const auto samples = residuals(data_.interactions, assignment_, *mapped_, q_);

    IterationRecord record;
    record.k = k_;
    record.classes = num_classes(classifier_);

    std::map<ClassId, std::vector<ResidualSample>> by_class;
    for (const auto& r : samples) by_class[r.cls].push_back(r);
    for (const auto& [v, group] : by_class) {
        const double worst = worst_variance(group);
        record.class_variances.emplace_back(v, worst);
        record.max_residual_variance = std::max(record.max_residual_variance, worst);
        if (worst > config_.tau) ++record.aliased_classes;
    }

    if (observer) observer(snapshot(), record);

    // Most samples first; ties by class id.
    std::vector<std::pair<std::size_t, ClassId>> order;
    for (const auto& [v, group] : by_class) order.emplace_back(group.size(), v);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    for (const auto& [count, v] : order) {
        if (record.splits >= config_.max_splits_per_iteration) break;
        const auto& group = by_class[v];
        if (!aliased(group, config_.tau)) continue;

        if (auto choice = choose_primitive(group)) {
            apply_split(v, choice->feature);
            record.selected.push_back(
                {v, choice->feature, false, choice->action, choice->variance_before, choice->score});
            ++record.splits;
            continue;
        }
        if (!config_.composites) continue;
        if (auto found = choose_composite(group)) {
            const auto& [choice, spec] = *found;
            const auto existing = graph_.find_equivalent(spec);
            const FeatureId f = existing ? *existing : graph_.size();
            if (existing && !can_refine(v, f)) continue;
            if (!existing) graph_.add_composite(spec);
            apply_split(v, f);
            record.selected.push_back({v, f, true, choice.action, choice.variance_before, choice.score});
            ++record.splits;
        }
    }

    ++k_;
    if (config_.backend == Backend::bdd && config_.compaction_period > 0 &&
        k_ % config_.compaction_period == 0)
        record.merges = post_process();

    const bool changed = record.splits > 0 || record.merges > 0;
    trace_.records.push_back(std::move(record));
    return changed;
}

std::size_t RlvcLearner::post_process() {
    auto* bdd = std::get_if<BddClassifier>(&classifier_);
    if (!bdd) return 0;
    const std::size_t num_actions = data_.num_actions;
    std::size_t merges = 0;
    while (true) {
        solve();
        // Bellman targets r + gamma V(s') per class and action. Q(v, a) is their
        // mean, so the pooled variance is what a merged class would show as
        // residual variance. Merges that would alias are skipped; they would
        // only be split again.
        std::map<ClassId, std::vector<Moments>> targets;
        for (const auto& r : residuals(data_.interactions, assignment_, *mapped_, q_)) {
            auto& row = targets[r.cls];
            row.resize(num_actions);
            row[r.action].add(r.delta + q_(mapped_->state_of(r.cls), r.action));
        }
        auto keeps_clean = [&](ClassId u, ClassId w) {
            for (ActionId a = 0; a < num_actions; ++a) {
                const Moments pooled = targets[u][a] + targets[w][a];
                if (pooled.n >= 2 && pooled.population_variance() > config_.tau) return false;
            }
            return true;
        };
        const auto pairs = find_equivalent_pairs(*mapped_, q_, config_.equivalence);
        const auto pick = std::find_if(pairs.begin(), pairs.end(),
                                       [&](const ClassPair& p) { return keeps_clean(p.first, p.second); });
        if (pick == pairs.end()) break;
        const ClassId joined = bdd->merge(pick->first, pick->second, false);
        for (auto& c : assignment_)
            if (c == pick->first || c == pick->second) c = joined;
        ++merges;
        if (mutation_hook_) mutation_hook_(classifier_);
    }
    if (merges > 0) bdd->reorder_variables();
    return merges;
}

RlvcResult RlvcLearner::run(const IterationObserver& observer) {
    bool converged = false;
    while (k_ < config_.max_iterations) {
        if (!step(observer)) {
            converged = true;
            break;
        }
    }
    solve();
    auto final_residuals = residuals(data_.interactions, assignment_, *mapped_, q_);
    return RlvcResult{snapshot(), *mapped_, trace_, converged, assignment_, std::move(final_residuals)};
}

RlvcResult run_rlvc(const Dataset& data, const FeatureGraph& graph, const RlvcConfig& config,
                    const IterationObserver& observer) {
    RlvcLearner learner(data, graph, config);
    return learner.run(observer);
}

}  // namespace rlvc
