#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rlvc {

using StateId = std::size_t;
using ActionId = std::size_t;
using PerceptId = std::size_t;
using ClassId = std::uint64_t;

/// Sparse successor distribution of one (state, action) pair.
using Distribution = std::vector<std::pair<StateId, double>>;

/// Thrown when value iteration hits its sweep cap.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Finite MDP with sparse transitions. States flagged terminal are absorbing
 * and pay nothing, whatever the stored rows say; the constructor rewrites
 * their rows to enforce that.
 */
class FiniteMdp {
public:
    FiniteMdp(std::size_t num_states, std::size_t num_actions, double discount);

    void set_transition(StateId s, ActionId a, Distribution successors);
    void set_reward(StateId s, ActionId a, double reward);
    void set_terminal(StateId s, bool terminal = true);

    /// Throws std::invalid_argument when a row is not a distribution.
    void validate() const;

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    double discount() const { return discount_; }
    bool terminal(StateId s) const { return terminal_[s]; }
    double reward(StateId s, ActionId a) const;
    const Distribution& transition(StateId s, ActionId a) const;

private:
    std::size_t index(StateId s, ActionId a) const { return s * num_actions_ + a; }

    std::size_t num_states_;
    std::size_t num_actions_;
    double discount_;
    std::vector<Distribution> transitions_;
    std::vector<double> rewards_;
    std::vector<bool> terminal_;
};

/// Dense state-action table.
class QFunction {
public:
    QFunction() = default;
    QFunction(std::size_t num_states, std::size_t num_actions, double fill = 0.0)
        : num_states_(num_states), num_actions_(num_actions),
          values_(num_states * num_actions, fill) {}

    double& operator()(StateId s, ActionId a) { return values_[s * num_actions_ + a]; }
    double operator()(StateId s, ActionId a) const { return values_[s * num_actions_ + a]; }

    std::span<const double> row(StateId s) const {
        return {values_.data() + s * num_actions_, num_actions_};
    }

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    const std::vector<double>& values() const { return values_; }

    /// Sup-norm distance; both tables must share a shape.
    double distance(const QFunction& other) const;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<double> values_;
};

using ValueFunction = std::vector<double>;
using Policy = std::vector<ActionId>;

struct SolverOptions {
    double tolerance = 1e-9;
    std::size_t max_sweeps = 100000;
};

double discounted_return(std::span<const double> rewards, double discount);

/// (HQ)(s,a) = R(s,a) + gamma * sum_s' T(s,a,s') max_a' Q(s',a'); zero on terminals.
QFunction bellman_backup(const QFunction& q, const FiniteMdp& mdp);

/// Value iteration from Q = 0 until successive sweeps differ by at most
/// `tolerance` in sup-norm, which bounds ||HQ - Q|| by gamma * tolerance.
QFunction solve_optimal_q(const FiniteMdp& mdp, const SolverOptions& options = {});

/// argmax per state, lowest action index on ties.
Policy greedy_policy(const QFunction& q);

ValueFunction optimal_values(const QFunction& q);

/// One transition of a logged trajectory. `reward` is r_{t+1}.
struct Interaction {
    PerceptId s = 0;
    ActionId a = 0;
    double reward = 0.0;
    PerceptId s_next = 0;
    bool terminal_next = false;
};

/**
 * MDP over visual classes estimated by relative frequencies. State i < classes.size()
 * stands for classes[i]; the extra last state is the absorbing sink that terminal
 * interactions lead to. Unobserved pairs are zero-reward self-loops.
 */
struct MappedMdp {
    std::vector<ClassId> classes;
    FiniteMdp mdp;
    std::vector<std::size_t> counts;  // eta(V,a), row-major over (state, action)

    std::size_t count(StateId s, ActionId a) const { return counts[s * mdp.num_actions() + a]; }
    bool observed(StateId s, ActionId a) const { return count(s, a) > 0; }
    StateId sink() const { return classes.size(); }

    /// State index of a class id, or sink() when the class was never seen.
    StateId state_of(ClassId c) const;
};

/// `class_of[p]` is the class of percept p.
MappedMdp estimate_mapped_mdp(std::span<const Interaction> interactions,
                              std::span<const ClassId> class_of, std::size_t num_actions,
                              double discount);

MappedMdp estimate_mapped_mdp(std::span<const Interaction> interactions,
                              const std::function<ClassId(PerceptId)>& classify,
                              std::size_t num_actions, double discount);

/// Greedy policy that ignores unobserved actions whenever a state has an observed one.
Policy greedy_observed_policy(const QFunction& q, const MappedMdp& mapped);

}  // namespace rlvc
