#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rlvc/config.hpp"
#include "rlvc/environments.hpp"
#include "rlvc/harness.hpp"
#include "rlvc/rlvc.hpp"

namespace rlvc {

/// A task with its exploration database, ready for learning.
struct Experiment {
    ExperimentConfig config;
    std::unique_ptr<VisualTask> task;
    InteractionDatabase database;
    Dataset data;
};

/// Finalizes the config for the task, then collects and resolves the database.
Experiment prepare_experiment(ExperimentConfig config);

using Metrics = std::vector<std::pair<std::string, double>>;

/// Task-specific judgement of visual policies.
class Evaluator {
public:
    explicit Evaluator(const Experiment& experiment);

    /// Fills the per-iteration error columns where that is cheap (maze, campus).
    void observe(const VisualPolicy& policy, IterationRecord& record) const;
    IterationObserver observer() const;

    /// Full report: policy error and value correlation on the maze, pool
    /// errors on the campus, rollout statistics on the car.
    Metrics report(const VisualPolicy& policy) const;

    /// Direct-perception baseline metrics on the configured grid.
    Metrics baseline_report() const;
    const BaselineResult& baseline() const { return *baseline_; }

    /// Value grid of a visual policy over the export grid, and that grid.
    std::vector<double> value_grid(const VisualPolicy& policy) const;
    const GridSpec& export_grid() const { return export_grid_; }

    /// Maze oracle values at the correlation probe points.
    const std::vector<double>& oracle_values() const { return oracle_values_; }

private:
    const Experiment& experiment_;
    std::optional<BaselineResult> baseline_;
    std::optional<BaselineResult> oracle_;  // maze only
    Probe decision_probe_;                  // maze policy-error points
    Probe value_probe_;                     // maze correlation points
    std::vector<double> oracle_values_;
    std::optional<CampusProbe> campus_;
    std::vector<std::vector<ActionId>> campus_optimal_;
    GridSpec export_grid_;
    Probe export_probe_;
};

}  // namespace rlvc
