#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rlvc/environments.hpp"
#include "rlvc/mdp.hpp"
#include "rlvc/rlvc.hpp"

namespace rlvc {

/// Regular grid over a 2-D box of true states.
struct GridSpec {
    std::size_t nx = 1;
    std::size_t ny = 1;
    double x0 = 0.0, x1 = 1.0;
    double y0 = 0.0, y1 = 1.0;

    std::size_t cells() const { return nx * ny; }
    /// Cell of a state; states outside the box fall into the nearest border cell.
    std::size_t cell_of(const TaskState& s) const;
    TaskState center(std::size_t cell) const;
    void validate() const;
};

GridSpec maze_grid(const MazeTask& task, std::size_t n);
GridSpec car_grid(const CarTask& task, std::size_t n);
/// One cell per (spot, heading).
GridSpec campus_grid();

/// Transition between true states, as seen by an agent with direct perception.
struct StateTransition {
    TaskState s;
    ActionId a;
    double reward;
    TaskState next;
    bool terminal;
};

std::vector<StateTransition> state_transitions(const InteractionDatabase& db);

/// `per_pair` transitions for every (cell, action), from states uniform in the cell.
std::vector<StateTransition> sample_grid_transitions(const VisualTask& task, const GridSpec& grid,
                                                     std::size_t per_pair, std::uint64_t seed);

struct BaselineResult {
    GridSpec grid;
    std::size_t num_actions = 0;
    std::vector<StateId> state_of_cell;  // mapped state per cell, the sink when unseen
    QFunction q;
    Policy policy;        // per mapped state
    ValueFunction values;  // per mapped state

    ActionId act(const TaskState& s) const;
    double value(const TaskState& s) const;
    double q_value(const TaskState& s, ActionId a) const;
    /// Row-major over cells (y outer).
    std::vector<double> value_grid() const;
};

/// Grid-keyed mapped MDP estimated from `transitions` and solved.
BaselineResult direct_perception_baseline(std::span<const StateTransition> transitions,
                                          const GridSpec& grid, std::size_t num_actions,
                                          double discount, const SolverOptions& solver = {});

double pearson(std::span<const double> a, std::span<const double> b);

/// Percepts rendered at fixed true states, resolved once.
struct Probe {
    std::vector<TaskState> states;
    std::vector<SymbolizedPercept> views;
};

/// Percepts at the centres of `grid` cells accepted by `keep` (all when empty).
Probe grid_probe(const VisualTask& task, const GridSpec& grid, std::uint64_t seed,
                 const std::function<bool(const TaskState&)>& keep = {});

/// Share of probe points where the learned action's oracle Q falls more than
/// `slack` below the oracle value.
double policy_error(const Probe& probe, const VisualPolicy& policy, const BaselineResult& oracle,
                    double slack);

/// V(s) = max_a Q(C(s), a) at each probe view.
std::vector<double> visual_values(const Probe& probe, const VisualPolicy& policy);

/// Optimal actions of each state (all within `tolerance` of the maximum).
std::vector<std::vector<ActionId>> optimal_action_sets(const QFunction& q, double tolerance = 1e-9);

struct CampusProbe {
    Probe learning;
    Probe test;
};

CampusProbe campus_probe(const CampusTask& task);

/// Share of views whose learned action is not optimal in the true state.
double campus_error(const Probe& probe, const VisualPolicy& policy,
                    const std::vector<std::vector<ActionId>>& optimal);

using Controller = std::function<ActionId(const TaskState&, Rng&)>;

Controller visual_controller(const VisualTask& task, const VisualPolicy& policy);
Controller direct_controller(const BaselineResult& baseline);
Controller random_controller(std::size_t num_actions);

struct EvaluationReport {
    std::size_t trials = 0;
    std::size_t successes = 0;
    std::size_t failures = 0;   // terminal without the goal reward
    std::size_t timeouts = 0;   // step cap reached
    double miss_rate = 0.0;     // (failures + timeouts) / trials
    double mean_success_length = 0.0;
    double mean_return = 0.0;   // discounted
};

/// Rolls out `controller` from the task's evaluation starts. Throws
/// std::invalid_argument for zero trials.
EvaluationReport evaluate_policy(const VisualTask& task, const Controller& controller,
                                 std::size_t trials, std::uint64_t seed, std::size_t max_steps = 1000);

/// CSV with header metric,value.
void write_report_csv(std::ostream& out, const EvaluationReport& report);

/// CSV with header ix,iy,x,y,value.
void write_grid_csv(std::ostream& out, const GridSpec& grid, std::span<const double> values);

}  // namespace rlvc
