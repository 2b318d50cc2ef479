#include "rlvc/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace rlvc {

namespace {

template <typename Entry>
auto find_class(std::vector<Entry>& entries, ClassId v) {
    return std::lower_bound(entries.begin(), entries.end(), v,
                            [](const Entry& e, ClassId id) { return e.first < id; });
}

template <typename Entry>
auto find_class(const std::vector<Entry>& entries, ClassId v) {
    return std::lower_bound(entries.begin(), entries.end(), v,
                            [](const Entry& e, ClassId id) { return e.first < id; });
}

std::istringstream next_line(std::istream& in, const char* what) {
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line.front() != '#') return std::istringstream(line);
    throw std::runtime_error(std::string("classifier: missing ") + what);
}

}  // namespace

// ---------------------------------------------------------------- tree

TreeClassifier::TreeClassifier() {
    nodes_.push_back(Node{});
    leaf_of_.emplace_back(0, 0);
    next_id_ = 1;
}

ClassId TreeClassifier::classify(const FeatureTest& test) const {
    std::size_t i = 0;
    while (!nodes_[i].leaf) i = test(nodes_[i].feature) ? nodes_[i].present : nodes_[i].absent;
    return nodes_[i].cls;
}

std::size_t TreeClassifier::leaf_index(ClassId v) const {
    const auto it = find_class(leaf_of_, v);
    if (it == leaf_of_.end() || it->first != v)
        throw std::out_of_range("TreeClassifier: unknown class " + std::to_string(v));
    return it->second;
}

bool TreeClassifier::has_class(ClassId v) const {
    const auto it = find_class(leaf_of_, v);
    return it != leaf_of_.end() && it->first == v;
}

std::vector<FeatureId> TreeClassifier::path_features(ClassId v) const {
    std::vector<FeatureId> path;
    for (std::size_t i = leaf_index(v); i != 0;) {
        i = nodes_[i].parent;
        path.push_back(nodes_[i].feature);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

Split TreeClassifier::refine(ClassId v, FeatureId f) {
    const std::size_t leaf = leaf_index(v);
    const auto path = path_features(v);
    if (std::find(path.begin(), path.end(), f) != path.end())
        throw std::logic_error("TreeClassifier::refine: feature already decided on this path");

    const Split split{next_id_, next_id_ + 1};
    next_id_ += 2;
    const std::size_t present = nodes_.size();
    nodes_.push_back(Node{true, 0, 0, 0, leaf, split.present});
    nodes_.push_back(Node{true, 0, 0, 0, leaf, split.absent});
    auto& n = nodes_[leaf];
    n.leaf = false;
    n.feature = f;
    n.present = present;
    n.absent = present + 1;

    leaf_of_.erase(find_class(leaf_of_, v));
    leaf_of_.emplace_back(split.present, present);
    leaf_of_.emplace_back(split.absent, present + 1);
    std::sort(leaf_of_.begin(), leaf_of_.end());
    return split;
}

std::vector<ClassId> TreeClassifier::classes() const {
    std::vector<ClassId> out;
    for (const auto& [id, index] : leaf_of_) out.push_back(id);
    return out;
}

void TreeClassifier::write(std::ostream& out) const {
    out << "tree " << next_id_ << '\n';
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
        const auto& n = nodes_[stack.back()];
        stack.pop_back();
        if (n.leaf) {
            out << "leaf " << n.cls << '\n';
        } else {
            out << "test " << n.feature << '\n';
            stack.push_back(n.absent);
            stack.push_back(n.present);
        }
    }
}

TreeClassifier TreeClassifier::read(std::istream& in) {
    TreeClassifier t;
    std::string tag;
    {
        auto header = next_line(in, "tree header");
        header >> tag >> t.next_id_;
        if (!header || tag != "tree") throw std::runtime_error("TreeClassifier::read: bad header");
    }
    t.nodes_.clear();
    t.leaf_of_.clear();
    // Preorder: each pending slot is (parent, is_present_branch).
    std::vector<std::pair<std::size_t, bool>> pending{{0, true}};
    bool root = true;
    while (!pending.empty()) {
        const auto [parent, present] = pending.back();
        pending.pop_back();
        auto rec = next_line(in, "tree node");
        Node n;
        n.parent = parent;
        rec >> tag;
        if (tag == "leaf") {
            rec >> n.cls;
            if (n.cls >= t.next_id_) throw std::runtime_error("TreeClassifier::read: class id");
        } else if (tag == "test") {
            n.leaf = false;
            rec >> n.feature;
        } else {
            throw std::runtime_error("TreeClassifier::read: unknown record " + tag);
        }
        if (!rec) throw std::runtime_error("TreeClassifier::read: malformed record");
        const std::size_t index = t.nodes_.size();
        t.nodes_.push_back(n);
        if (!root) (present ? t.nodes_[parent].present : t.nodes_[parent].absent) = index;
        root = false;
        if (n.leaf) {
            t.leaf_of_.emplace_back(n.cls, index);
        } else {
            pending.emplace_back(index, false);
            pending.emplace_back(index, true);
        }
    }
    std::sort(t.leaf_of_.begin(), t.leaf_of_.end());
    for (std::size_t i = 1; i < t.leaf_of_.size(); ++i)
        if (t.leaf_of_[i].first == t.leaf_of_[i - 1].first)
            throw std::runtime_error("TreeClassifier::read: duplicate class id");
    return t;
}

// ---------------------------------------------------------------- BDD

BddClassifier::BddClassifier() {
    classes_.emplace_back(0, BddManager::one);
    next_id_ = 1;
}

std::size_t BddClassifier::index_of(ClassId v) const {
    const auto it = find_class(classes_, v);
    if (it == classes_.end() || it->first != v)
        throw std::out_of_range("BddClassifier: unknown class " + std::to_string(v));
    return static_cast<std::size_t>(it - classes_.begin());
}

bool BddClassifier::has_class(ClassId v) const {
    const auto it = find_class(classes_, v);
    return it != classes_.end() && it->first == v;
}

BddManager::Ref BddClassifier::function(ClassId v) const { return classes_[index_of(v)].second; }

ClassId BddClassifier::classify(const FeatureTest& test) const {
    const auto assignment = [&](BddManager::Var v) { return test(static_cast<FeatureId>(v)); };
    std::size_t hits = 0;
    ClassId found = 0;
    for (const auto& [id, root] : classes_) {
        if (manager_.evaluate(root, assignment)) {
            ++hits;
            found = id;
        }
    }
    if (hits != 1)
        throw PartitionError("BddClassifier: " + std::to_string(hits) +
                             " classes accept the percept");
    return found;
}

std::size_t BddClassifier::count_true(const FeatureTest& test) const {
    const auto assignment = [&](BddManager::Var v) { return test(static_cast<FeatureId>(v)); };
    std::size_t hits = 0;
    for (const auto& entry : classes_)
        if (manager_.evaluate(entry.second, assignment)) ++hits;
    return hits;
}

Split BddClassifier::refine(ClassId v, FeatureId f) {
    const std::size_t i = index_of(v);
    const BddManager::Ref base = classes_[i].second;
    const BddManager::Ref with = manager_.conj(base, manager_.var(f));
    const BddManager::Ref without = manager_.conj(base, manager_.nvar(f));
    if (with == BddManager::zero || without == BddManager::zero)
        throw std::logic_error("BddClassifier::refine: feature is constant on the class");
    const Split split{next_id_, next_id_ + 1};
    next_id_ += 2;
    classes_.erase(classes_.begin() + static_cast<std::ptrdiff_t>(i));
    classes_.emplace_back(split.present, with);
    classes_.emplace_back(split.absent, without);
    std::sort(classes_.begin(), classes_.end());
    return split;
}

ClassId BddClassifier::merge(ClassId v1, ClassId v2, bool reorder) {
    if (v1 == v2) throw std::invalid_argument("BddClassifier::merge: identical classes");
    const BddManager::Ref joined = manager_.disj(function(v1), function(v2));
    classes_.erase(classes_.begin() + static_cast<std::ptrdiff_t>(index_of(v1)));
    classes_.erase(classes_.begin() + static_cast<std::ptrdiff_t>(index_of(v2)));
    const ClassId id = next_id_++;
    classes_.emplace_back(id, joined);
    std::sort(classes_.begin(), classes_.end());
    if (reorder) reorder_variables();
    return id;
}

void BddClassifier::reorder_variables() {
    std::vector<BddManager::Ref> roots;
    for (const auto& entry : classes_) roots.push_back(entry.second);
    manager_.sift(roots);
    manager_.drop_unused_variables(roots);
    for (std::size_t i = 0; i < classes_.size(); ++i) classes_[i].second = roots[i];
}

std::vector<ClassId> BddClassifier::classes() const {
    std::vector<ClassId> out;
    for (const auto& entry : classes_) out.push_back(entry.first);
    return out;
}

std::size_t BddClassifier::node_count() const {
    std::vector<BddManager::Ref> roots;
    for (const auto& entry : classes_) roots.push_back(entry.second);
    return manager_.node_count(roots);
}

std::vector<FeatureId> BddClassifier::variable_order() const {
    return {manager_.order().begin(), manager_.order().end()};
}

bool BddClassifier::is_partition() const {
    std::vector<BddManager::Ref> roots;
    for (const auto& entry : classes_) roots.push_back(entry.second);
    return manager_.is_partition(roots);
}

void BddClassifier::write(std::ostream& out) const {
    BddClassifier copy = *this;
    std::vector<BddManager::Ref> roots;
    for (const auto& entry : copy.classes_) roots.push_back(entry.second);
    copy.manager_.garbage_collect(roots);
    out << "bdd " << next_id_ << ' ' << classes_.size() << '\n';
    copy.manager_.write(out);
    for (std::size_t i = 0; i < roots.size(); ++i)
        out << "class " << copy.classes_[i].first << ' ' << roots[i] << '\n';
}

BddClassifier BddClassifier::read(std::istream& in) {
    BddClassifier c;
    std::string tag;
    std::size_t count = 0;
    {
        auto header = next_line(in, "bdd header");
        header >> tag >> c.next_id_ >> count;
        if (!header || tag != "bdd") throw std::runtime_error("BddClassifier::read: bad header");
    }
    c.manager_ = BddManager::read(in);
    c.classes_.clear();
    for (std::size_t i = 0; i < count; ++i) {
        auto rec = next_line(in, "class line");
        ClassId id = 0;
        BddManager::Ref root = 0;
        rec >> tag >> id >> root;
        if (!rec || tag != "class" || root >= c.manager_.store_size() || id >= c.next_id_)
            throw std::runtime_error("BddClassifier::read: malformed class line");
        c.classes_.emplace_back(id, root);
    }
    std::sort(c.classes_.begin(), c.classes_.end());
    if (!c.is_partition()) throw std::runtime_error("BddClassifier::read: not a partition");
    return c;
}

// ---------------------------------------------------------------- value semantics

TreeClassifier refine(const TreeClassifier& c, ClassId v, FeatureId f) {
    TreeClassifier out = c;
    out.refine(v, f);
    return out;
}

BddClassifier refine(const BddClassifier& c, ClassId v, FeatureId f) {
    BddClassifier out = c;
    out.refine(v, f);
    return out;
}

BddClassifier merge(const BddClassifier& c, ClassId v1, ClassId v2) {
    BddClassifier out = c;
    out.merge(v1, v2);
    return out;
}

BddClassifier reorder_variables(const BddClassifier& c) {
    BddClassifier out = c;
    out.reorder_variables();
    return out;
}

// ---------------------------------------------------------------- equivalences

std::vector<ClassPair> find_equivalent_pairs(const MappedMdp& mapped, const QFunction& q,
                                             const EquivalenceSpec& spec) {
    const std::size_t num_actions = q.num_actions();
    std::vector<StateId> eligible;
    for (StateId s = 0; s < mapped.classes.size(); ++s) {
        bool complete = true;
        for (ActionId a = 0; a < num_actions; ++a) complete = complete && mapped.observed(s, a);
        if (complete) eligible.push_back(s);
    }
    const auto values = optimal_values(q);
    const auto policy = greedy_policy(q);
    const double eps = spec.epsilon;

    std::vector<ClassPair> out;
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        for (std::size_t j = i + 1; j < eligible.size(); ++j) {
            const StateId u = eligible[i], w = eligible[j];
            bool ok = true;
            if (spec.uses(EquivalenceKind::value))
                ok = ok && std::abs(values[u] - values[w]) <= eps;
            if (ok && spec.uses(EquivalenceKind::policy))
                ok = std::abs(values[u] - q(w, policy[u])) <= eps &&
                     std::abs(values[w] - q(u, policy[w])) <= eps;
            if (ok && spec.uses(EquivalenceKind::state_action))
                for (ActionId a = 0; a < num_actions && ok; ++a)
                    ok = std::abs(q(u, a) - q(w, a)) <= eps;
            if (ok)
                out.push_back({mapped.classes[u], mapped.classes[w], std::abs(values[u] - values[w])});
        }
    }
    std::sort(out.begin(), out.end(), [](const ClassPair& a, const ClassPair& b) {
        if (a.value_gap != b.value_gap) return a.value_gap < b.value_gap;
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });
    return out;
}

}  // namespace rlvc
