#include "rlvc/experiment.hpp"

#include <algorithm>
#include <stdexcept>

namespace rlvc {

Experiment prepare_experiment(ExperimentConfig config) {
    Experiment e;
    e.task = make_task(config);
    config.finalize(e.task->max_abs_reward());
    e.config = std::move(config);
    CollectOptions collect = e.config.collect;
    collect.seed = e.config.collect_seed();
    e.database = collect_interactions(*e.task, collect);
    e.data = prepare_dataset(e.database, e.task->dictionary());
    return e;
}

namespace {

GridSpec grid_for(const VisualTask& task, std::size_t n) {
    if (const auto* maze = dynamic_cast<const MazeTask*>(&task)) return maze_grid(*maze, n);
    if (const auto* car = dynamic_cast<const CarTask*>(&task)) return car_grid(*car, n);
    return campus_grid();
}

}  // namespace

Evaluator::Evaluator(const Experiment& experiment) : experiment_(experiment) {
    const auto& cfg = experiment.config;
    const VisualTask& task = *experiment.task;
    const auto transitions = state_transitions(experiment.database);

    const GridSpec base_grid = grid_for(task, cfg.baseline.resolution);
    if (cfg.baseline.samples_per_pair > 0) {
        const auto sampled = sample_grid_transitions(task, base_grid, cfg.baseline.samples_per_pair, cfg.oracle_seed());
        baseline_ = direct_perception_baseline(sampled, base_grid, task.num_actions(), task.discount(),
                                               cfg.rlvc.solver);
    } else {
        baseline_ = direct_perception_baseline(transitions, base_grid, task.num_actions(), task.discount(),
                                               cfg.rlvc.solver);
    }
    export_grid_ = base_grid;

    if (const auto* maze = dynamic_cast<const MazeTask*>(&task)) {
        const GridSpec fine = maze_grid(*maze, cfg.evaluation.oracle_resolution);
        const auto sampled = sample_grid_transitions(task, fine, cfg.evaluation.oracle_samples, cfg.oracle_seed());
        oracle_ = direct_perception_baseline(sampled, fine, task.num_actions(), task.discount(), cfg.rlvc.solver);
        auto outside_exits = [maze](const TaskState& s) { return !maze->in_exit({s[0], s[1]}); };
        decision_probe_ = grid_probe(task, maze_grid(*maze, cfg.evaluation.probe_resolution),
                                     cfg.evaluation_seed(), outside_exits);
        value_probe_ = grid_probe(task, fine, cfg.evaluation_seed(), outside_exits);
        for (const auto& s : value_probe_.states) oracle_values_.push_back(oracle_->value(s));
        export_grid_ = fine;
    } else if (const auto* campus = dynamic_cast<const CampusTask*>(&task)) {
        campus_ = campus_probe(*campus);
        const auto exact = solve_optimal_q(campus->exact_mdp(), cfg.rlvc.solver);
        campus_optimal_ = optimal_action_sets(exact, 1e-6);
    }
    export_probe_ = grid_probe(task, export_grid_, cfg.evaluation_seed());
}

void Evaluator::observe(const VisualPolicy& policy, IterationRecord& record) const {
    if (oracle_) {
        record.error_learning = policy_error(decision_probe_, policy, *oracle_, experiment_.config.evaluation.slack);
    } else if (campus_) {
        record.error_learning = campus_error(campus_->learning, policy, campus_optimal_);
        record.error_test = campus_error(campus_->test, policy, campus_optimal_);
    }
}

IterationObserver Evaluator::observer() const {
    return [this](const VisualPolicy& policy, IterationRecord& record) { observe(policy, record); };
}

Metrics Evaluator::report(const VisualPolicy& policy) const {
    Metrics out;
    out.emplace_back("classes", static_cast<double>(policy.classes().size()));
    out.emplace_back("composite_features", static_cast<double>(policy.graph().num_composites()));
    const auto& cfg = experiment_.config;
    if (oracle_) {
        out.emplace_back("policy_error", policy_error(decision_probe_, policy, *oracle_, cfg.evaluation.slack));
        const auto values = visual_values(value_probe_, policy);
        out.emplace_back("value_correlation", pearson(values, oracle_values_));
    } else if (campus_) {
        out.emplace_back("error_learning", campus_error(campus_->learning, policy, campus_optimal_));
        out.emplace_back("error_test", campus_error(campus_->test, policy, campus_optimal_));
    } else {
        const auto r = evaluate_policy(*experiment_.task, visual_controller(*experiment_.task, policy),
                                       cfg.evaluation.trials, cfg.evaluation_seed(), cfg.evaluation.max_steps);
        out.emplace_back("miss_rate", r.miss_rate);
        out.emplace_back("mean_success_length", r.mean_success_length);
        out.emplace_back("timeouts", static_cast<double>(r.timeouts));
    }
    return out;
}

Metrics Evaluator::baseline_report() const {
    Metrics out;
    const auto& cfg = experiment_.config;
    out.emplace_back("cells", static_cast<double>(baseline_->grid.cells()));
    if (oracle_) {
        std::size_t wrong = 0;
        for (const auto& s : decision_probe_.states)
            if (oracle_->q_value(s, baseline_->act(s)) < oracle_->value(s) - cfg.evaluation.slack) ++wrong;
        out.emplace_back("policy_error", static_cast<double>(wrong) / static_cast<double>(decision_probe_.states.size()));
        std::vector<double> values;
        for (const auto& s : value_probe_.states) values.push_back(baseline_->value(s));
        out.emplace_back("value_correlation", pearson(values, oracle_values_));
    } else if (campus_) {
        std::size_t wrong = 0;
        for (std::size_t s = 0; s < CampusTask::num_states; ++s) {
            const auto& best = campus_optimal_[s];
            if (std::find(best.begin(), best.end(), baseline_->act(CampusTask::to_state(s))) == best.end()) ++wrong;
        }
        out.emplace_back("error_states", static_cast<double>(wrong) / static_cast<double>(CampusTask::num_states));
    } else {
        const auto r = evaluate_policy(*experiment_.task, direct_controller(*baseline_), cfg.evaluation.trials,
                                       cfg.evaluation_seed(), cfg.evaluation.max_steps);
        out.emplace_back("miss_rate", r.miss_rate);
        out.emplace_back("mean_success_length", r.mean_success_length);
        out.emplace_back("timeouts", static_cast<double>(r.timeouts));
    }
    return out;
}

std::vector<double> Evaluator::value_grid(const VisualPolicy& policy) const {
    return visual_values(export_probe_, policy);
}

}  // namespace rlvc
