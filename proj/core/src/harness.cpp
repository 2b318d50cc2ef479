#include "rlvc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace rlvc {

std::size_t GridSpec::cell_of(const TaskState& s) const {
    auto index = [](double v, double lo, double hi, std::size_t n) {
        const double t = (v - lo) / (hi - lo) * static_cast<double>(n);
        if (!(t > 0.0)) return std::size_t{0};
        return std::min(n - 1, static_cast<std::size_t>(t));
    };
    return index(s[1], y0, y1, ny) * nx + index(s[0], x0, x1, nx);
}

TaskState GridSpec::center(std::size_t cell) const {
    const auto ix = static_cast<double>(cell % nx);
    const auto iy = static_cast<double>(cell / nx);
    return {x0 + (ix + 0.5) * (x1 - x0) / static_cast<double>(nx),
            y0 + (iy + 0.5) * (y1 - y0) / static_cast<double>(ny)};
}

void GridSpec::validate() const {
    if (nx == 0 || ny == 0) throw std::invalid_argument("grid: resolution must be positive");
    if (!(x1 > x0) || !(y1 > y0)) throw std::invalid_argument("grid: empty box");
}

GridSpec maze_grid(const MazeTask& task, std::size_t n) {
    return {n, n, 0.0, task.spec().size, 0.0, task.spec().size};
}

GridSpec car_grid(const CarTask& task, std::size_t n) {
    return {n, n, -1.0, 1.0, -task.spec().max_speed, task.spec().max_speed};
}

GridSpec campus_grid() {
    return {CampusTask::num_spots, 4, 0.0, static_cast<double>(CampusTask::num_spots), 0.0, 4.0};
}

std::vector<StateTransition> state_transitions(const InteractionDatabase& db) {
    std::vector<StateTransition> out;
    out.reserve(db.interactions.size());
    for (const auto& i : db.interactions)
        out.push_back({db.states[i.s], i.a, i.reward, db.states[i.s_next], i.terminal_next});
    return out;
}

std::vector<StateTransition> sample_grid_transitions(const VisualTask& task, const GridSpec& grid,
                                                     std::size_t per_pair, std::uint64_t seed) {
    grid.validate();
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const double wx = (grid.x1 - grid.x0) / static_cast<double>(grid.nx);
    const double wy = (grid.y1 - grid.y0) / static_cast<double>(grid.ny);
    std::vector<StateTransition> out;
    out.reserve(grid.cells() * task.num_actions() * per_pair);
    for (std::size_t c = 0; c < grid.cells(); ++c) {
        const TaskState mid = grid.center(c);
        for (ActionId a = 0; a < task.num_actions(); ++a)
            for (std::size_t k = 0; k < per_pair; ++k) {
                const TaskState s{mid[0] + wx * u(rng), mid[1] + wy * u(rng)};
                const StepResult r = task.step(s, a, rng);
                out.push_back({s, a, r.reward, r.next, r.terminal});
            }
    }
    return out;
}

ActionId BaselineResult::act(const TaskState& s) const {
    const StateId m = state_of_cell[grid.cell_of(s)];
    return m < policy.size() ? policy[m] : 0;
}

double BaselineResult::value(const TaskState& s) const {
    return values[state_of_cell[grid.cell_of(s)]];
}

double BaselineResult::q_value(const TaskState& s, ActionId a) const {
    return q(state_of_cell[grid.cell_of(s)], a);
}

std::vector<double> BaselineResult::value_grid() const {
    std::vector<double> out(grid.cells());
    for (std::size_t c = 0; c < grid.cells(); ++c) out[c] = values[state_of_cell[c]];
    return out;
}

BaselineResult direct_perception_baseline(std::span<const StateTransition> transitions,
                                          const GridSpec& grid, std::size_t num_actions,
                                          double discount, const SolverOptions& solver) {
    grid.validate();
    // Percept 2i is the origin of transition i, 2i + 1 its successor.
    std::vector<Interaction> interactions;
    std::vector<ClassId> cell_of;
    interactions.reserve(transitions.size());
    cell_of.reserve(2 * transitions.size());
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const auto& t = transitions[i];
        interactions.push_back({2 * i, t.a, t.reward, 2 * i + 1, t.terminal});
        cell_of.push_back(grid.cell_of(t.s));
        cell_of.push_back(grid.cell_of(t.next));
    }
    const MappedMdp mapped = estimate_mapped_mdp(interactions, cell_of, num_actions, discount);

    BaselineResult out{grid, num_actions, {}, solve_optimal_q(mapped.mdp, solver), {}, {}};
    out.policy = greedy_observed_policy(out.q, mapped);
    out.values = optimal_values(out.q);
    out.state_of_cell.resize(grid.cells());
    for (std::size_t c = 0; c < grid.cells(); ++c) out.state_of_cell[c] = mapped.state_of(c);
    return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: need two equal series");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

Probe grid_probe(const VisualTask& task, const GridSpec& grid, std::uint64_t seed,
                 const std::function<bool(const TaskState&)>& keep) {
    Rng rng(seed);
    Probe probe;
    for (std::size_t c = 0; c < grid.cells(); ++c) {
        const TaskState s = grid.center(c);
        if (keep && !keep(s)) continue;
        probe.states.push_back(s);
        probe.views.push_back(symbolize(task.percept(s, rng), task.dictionary()));
    }
    return probe;
}

double policy_error(const Probe& probe, const VisualPolicy& policy, const BaselineResult& oracle,
                    double slack) {
    if (probe.views.empty()) throw std::invalid_argument("policy_error: empty probe");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < probe.views.size(); ++i) {
        const ActionId a = policy.act(probe.views[i]);
        if (oracle.q_value(probe.states[i], a) < oracle.value(probe.states[i]) - slack) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(probe.views.size());
}

std::vector<double> visual_values(const Probe& probe, const VisualPolicy& policy) {
    std::vector<double> out;
    out.reserve(probe.views.size());
    for (const auto& v : probe.views) {
        const auto q = policy.q_values(v);
        out.push_back(q.empty() ? 0.0 : *std::max_element(q.begin(), q.end()));
    }
    return out;
}

std::vector<std::vector<ActionId>> optimal_action_sets(const QFunction& q, double tolerance) {
    std::vector<std::vector<ActionId>> out(q.num_states());
    for (StateId s = 0; s < q.num_states(); ++s) {
        double best = q(s, 0);
        for (ActionId a = 1; a < q.num_actions(); ++a) best = std::max(best, q(s, a));
        for (ActionId a = 0; a < q.num_actions(); ++a)
            if (q(s, a) >= best - tolerance) out[s].push_back(a);
    }
    return out;
}

CampusProbe campus_probe(const CampusTask& task) {
    CampusProbe probe;
    for (std::size_t s = 0; s < CampusTask::num_states; ++s) {
        const TaskState state = CampusTask::to_state(s);
        for (std::size_t i = 0; i < task.pool_size(true); ++i) {
            probe.learning.states.push_back(state);
            probe.learning.views.push_back(symbolize(task.pool_percept(s, true, i), task.dictionary()));
        }
        for (std::size_t i = 0; i < task.pool_size(false); ++i) {
            probe.test.states.push_back(state);
            probe.test.views.push_back(symbolize(task.pool_percept(s, false, i), task.dictionary()));
        }
    }
    return probe;
}

double campus_error(const Probe& probe, const VisualPolicy& policy,
                    const std::vector<std::vector<ActionId>>& optimal) {
    if (probe.views.empty()) throw std::invalid_argument("campus_error: empty probe");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < probe.views.size(); ++i) {
        const auto& best = optimal.at(CampusTask::index_of(probe.states[i]));
        if (std::find(best.begin(), best.end(), policy.act(probe.views[i])) == best.end()) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(probe.views.size());
}

Controller visual_controller(const VisualTask& task, const VisualPolicy& policy) {
    return [&task, &policy](const TaskState& s, Rng& rng) {
        return policy.act(symbolize(task.percept(s, rng), task.dictionary()));
    };
}

Controller direct_controller(const BaselineResult& baseline) {
    return [&baseline](const TaskState& s, Rng&) { return baseline.act(s); };
}

Controller random_controller(std::size_t num_actions) {
    return [num_actions](const TaskState&, Rng& rng) {
        return std::uniform_int_distribution<ActionId>(0, num_actions - 1)(rng);
    };
}

EvaluationReport evaluate_policy(const VisualTask& task, const Controller& controller,
                                 std::size_t trials, std::uint64_t seed, std::size_t max_steps) {
    if (trials == 0) throw std::invalid_argument("evaluate_policy: no trials");
    struct Outcome {
        int kind = 0;  // 1 success, 2 failure, 0 timeout
        std::size_t steps = 0;
        double ret = 0.0;
    };
    std::vector<Outcome> outcomes(trials);
    // One stream per trial keeps results independent of trial order and thread count.
    auto roll = [&](std::size_t i) {
        Rng rng(seed + 0x9e3779b97f4a7c15ULL * (i + 1));
        TaskState s = task.evaluation_start(rng);
        Outcome& o = outcomes[i];
        double weight = 1.0;
        while (o.steps < max_steps) {
            const StepResult r = task.step(s, controller(s, rng), rng);
            ++o.steps;
            o.ret += weight * r.reward;
            weight *= task.discount();
            if (r.terminal) {
                o.kind = r.reward > 0.0 ? 1 : 2;
                break;
            }
            s = r.next;
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, trials);
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < trials; i += workers) roll(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        try {
            for (std::size_t i = 0; i < trials; i += workers) roll(i);
        } catch (...) {
            errors[0] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    EvaluationReport report;
    report.trials = trials;
    double total_length = 0.0, total_return = 0.0;
    for (const auto& o : outcomes) {
        if (o.kind == 1) {
            ++report.successes;
            total_length += static_cast<double>(o.steps);
        } else if (o.kind == 2) {
            ++report.failures;
        } else {
            ++report.timeouts;
        }
        total_return += o.ret;
    }
    report.miss_rate = static_cast<double>(report.failures + report.timeouts) / static_cast<double>(trials);
    report.mean_success_length = report.successes ? total_length / static_cast<double>(report.successes) : 0.0;
    report.mean_return = total_return / static_cast<double>(trials);
    return report;
}

void write_report_csv(std::ostream& out, const EvaluationReport& r) {
    out << "metric,value\n";
    out << "trials," << r.trials << '\n';
    out << "successes," << r.successes << '\n';
    out << "failures," << r.failures << '\n';
    out << "timeouts," << r.timeouts << '\n';
    out << "miss_rate," << r.miss_rate << '\n';
    out << "mean_success_length," << r.mean_success_length << '\n';
    out << "mean_return," << r.mean_return << '\n';
}

void write_grid_csv(std::ostream& out, const GridSpec& grid, std::span<const double> values) {
    if (values.size() != grid.cells()) throw std::invalid_argument("write_grid_csv: size mismatch");
    out << "ix,iy,x,y,value\n";
    for (std::size_t c = 0; c < grid.cells(); ++c) {
        const TaskState at = grid.center(c);
        out << c % grid.nx << ',' << c / grid.nx << ',' << at[0] << ',' << at[1] << ',' << values[c] << '\n';
    }
}

}  // namespace rlvc
