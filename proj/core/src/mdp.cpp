#include "rlvc/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace rlvc {

FiniteMdp::FiniteMdp(std::size_t num_states, std::size_t num_actions, double discount)
    : num_states_(num_states), num_actions_(num_actions), discount_(discount),
      transitions_(num_states * num_actions), rewards_(num_states * num_actions, 0.0),
      terminal_(num_states, false) {
    if (num_actions == 0) throw std::invalid_argument("FiniteMdp: no actions");
    if (!(discount >= 0.0 && discount < 1.0))
        throw std::invalid_argument("FiniteMdp: discount must lie in [0,1)");
}

void FiniteMdp::set_transition(StateId s, ActionId a, Distribution successors) {
    for (const auto& [target, p] : successors) {
        if (target >= num_states_) throw std::out_of_range("FiniteMdp: successor out of range");
        if (!(p >= 0.0)) throw std::invalid_argument("FiniteMdp: negative probability");
    }
    transitions_.at(index(s, a)) = std::move(successors);
}

void FiniteMdp::set_reward(StateId s, ActionId a, double reward) {
    if (!std::isfinite(reward)) throw std::invalid_argument("FiniteMdp: reward not finite");
    rewards_.at(index(s, a)) = reward;
}

void FiniteMdp::set_terminal(StateId s, bool terminal) { terminal_.at(s) = terminal; }

double FiniteMdp::reward(StateId s, ActionId a) const {
    return terminal_[s] ? 0.0 : rewards_[index(s, a)];
}

const Distribution& FiniteMdp::transition(StateId s, ActionId a) const {
    return transitions_[index(s, a)];
}

void FiniteMdp::validate() const {
    for (StateId s = 0; s < num_states_; ++s) {
        if (terminal_[s]) continue;
        for (ActionId a = 0; a < num_actions_; ++a) {
            double total = 0.0;
            for (const auto& [target, p] : transitions_[index(s, a)]) total += p;
            if (std::abs(total - 1.0) > 1e-9)
                throw std::invalid_argument("FiniteMdp: row (" + std::to_string(s) + "," +
                                            std::to_string(a) + ") sums to " +
                                            std::to_string(total));
        }
    }
}

double QFunction::distance(const QFunction& other) const {
    if (other.values_.size() != values_.size())
        throw std::invalid_argument("QFunction::distance: shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
        worst = std::max(worst, std::abs(values_[i] - other.values_[i]));
    return worst;
}

double discounted_return(std::span<const double> rewards, double discount) {
    // Horner from the tail keeps the powers implicit.
    double total = 0.0;
    for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) total = *it + discount * total;
    return total;
}

namespace {

std::vector<double> row_maxima(const QFunction& q) {
    std::vector<double> best(q.num_states());
    for (StateId s = 0; s < q.num_states(); ++s) {
        const auto row = q.row(s);
        best[s] = *std::max_element(row.begin(), row.end());
    }
    return best;
}

void backup_into(const QFunction& q, const FiniteMdp& mdp, QFunction& out) {
    const auto best = row_maxima(q);
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        for (ActionId a = 0; a < mdp.num_actions(); ++a) {
            if (mdp.terminal(s)) {
                out(s, a) = 0.0;
                continue;
            }
            double future = 0.0;
            for (const auto& [target, p] : mdp.transition(s, a)) future += p * best[target];
            out(s, a) = mdp.reward(s, a) + mdp.discount() * future;
        }
    }
}

}  // namespace

QFunction bellman_backup(const QFunction& q, const FiniteMdp& mdp) {
    if (q.num_states() != mdp.num_states() || q.num_actions() != mdp.num_actions())
        throw std::invalid_argument("bellman_backup: Q does not cover the MDP");
    QFunction out(mdp.num_states(), mdp.num_actions());
    backup_into(q, mdp, out);
    return out;
}

QFunction solve_optimal_q(const FiniteMdp& mdp, const SolverOptions& options) {
    if (!(options.tolerance > 0.0)) throw std::invalid_argument("solve_optimal_q: tolerance <= 0");
    QFunction current(mdp.num_states(), mdp.num_actions());
    QFunction next(mdp.num_states(), mdp.num_actions());
    for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
        backup_into(current, mdp, next);
        const double change = next.distance(current);
        std::swap(current, next);
        if (change <= options.tolerance) return current;
    }
    throw ConvergenceError("solve_optimal_q: no convergence after " +
                           std::to_string(options.max_sweeps) + " sweeps");
}

Policy greedy_policy(const QFunction& q) {
    Policy policy(q.num_states(), 0);
    for (StateId s = 0; s < q.num_states(); ++s) {
        const auto row = q.row(s);
        policy[s] = static_cast<ActionId>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return policy;
}

ValueFunction optimal_values(const QFunction& q) { return row_maxima(q); }

StateId MappedMdp::state_of(ClassId c) const {
    const auto it = std::lower_bound(classes.begin(), classes.end(), c);
    if (it == classes.end() || *it != c) return sink();
    return static_cast<StateId>(it - classes.begin());
}

MappedMdp estimate_mapped_mdp(std::span<const Interaction> interactions,
                              std::span<const ClassId> class_of, std::size_t num_actions,
                              double discount) {
    return estimate_mapped_mdp(
        interactions, [&](PerceptId p) { return class_of[p]; }, num_actions, discount);
}

MappedMdp estimate_mapped_mdp(std::span<const Interaction> interactions,
                              const std::function<ClassId(PerceptId)>& classify,
                              std::size_t num_actions, double discount) {
    if (interactions.empty()) throw std::invalid_argument("estimate_mapped_mdp: no interactions");

    std::vector<ClassId> source(interactions.size());
    std::vector<ClassId> target(interactions.size());
    std::vector<ClassId> classes;
    classes.reserve(2 * interactions.size());
    for (std::size_t t = 0; t < interactions.size(); ++t) {
        const auto& it = interactions[t];
        if (it.a >= num_actions) throw std::out_of_range("estimate_mapped_mdp: bad action");
        source[t] = classify(it.s);
        classes.push_back(source[t]);
        if (!it.terminal_next) {
            target[t] = classify(it.s_next);
            classes.push_back(target[t]);
        }
    }
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

    const std::size_t n = classes.size() + 1;
    MappedMdp mapped{std::move(classes), FiniteMdp(n, num_actions, discount),
                     std::vector<std::size_t>(n * num_actions, 0)};
    const StateId sink = mapped.sink();

    std::vector<std::map<StateId, std::size_t>> hits(n * num_actions);
    std::vector<double> reward_sum(n * num_actions, 0.0);
    for (std::size_t t = 0; t < interactions.size(); ++t) {
        const auto& it = interactions[t];
        const StateId s = mapped.state_of(source[t]);
        const StateId s2 = it.terminal_next ? sink : mapped.state_of(target[t]);
        const std::size_t k = s * num_actions + it.a;
        ++hits[k][s2];
        ++mapped.counts[k];
        reward_sum[k] += it.reward;
    }

    for (StateId s = 0; s < n; ++s) {
        for (ActionId a = 0; a < num_actions; ++a) {
            const std::size_t k = s * num_actions + a;
            const std::size_t eta = mapped.counts[k];
            if (eta == 0) {
                mapped.mdp.set_transition(s, a, {{s, 1.0}});
                continue;
            }
            Distribution row;
            row.reserve(hits[k].size());
            for (const auto& [s2, c] : hits[k])
                row.emplace_back(s2, static_cast<double>(c) / static_cast<double>(eta));
            mapped.mdp.set_transition(s, a, std::move(row));
            mapped.mdp.set_reward(s, a, reward_sum[k] / static_cast<double>(eta));
        }
    }
    mapped.mdp.set_terminal(sink);
    return mapped;
}

Policy greedy_observed_policy(const QFunction& q, const MappedMdp& mapped) {
    Policy policy = greedy_policy(q);
    for (StateId s = 0; s < q.num_states(); ++s) {
        bool found = false;
        double best = 0.0;
        for (ActionId a = 0; a < q.num_actions(); ++a) {
            if (!mapped.observed(s, a)) continue;
            if (!found || q(s, a) > best) {
                best = q(s, a);
                policy[s] = a;
                found = true;
            }
        }
    }
    return policy;
}

}  // namespace rlvc
