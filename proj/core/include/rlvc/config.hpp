#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "rlvc/environments.hpp"
#include "rlvc/rlvc.hpp"

namespace rlvc {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BaselineOptions {
    std::size_t resolution = 50;      // cells per dimension
    std::size_t samples_per_pair = 0;  // 0: reuse the interaction database
};

struct EvaluationOptions {
    std::size_t trials = 10000;
    std::size_t max_steps = 1000;
    std::size_t probe_resolution = 32;  // maze sample points per dimension
    std::size_t oracle_resolution = 50;
    std::size_t oracle_samples = 200;   // transitions per (cell, action) for the maze oracle
    double slack = -1.0;                // negative: 0.01 * max |r|
};

/// One experiment: a task, how to explore it, and how to learn and judge.
struct ExperimentConfig {
    std::string task = "maze";
    std::uint64_t seed = 1;
    MazeSpec maze = MazeSpec::standard();
    CampusSpec campus;
    CarSpec car;
    CollectOptions collect;
    RlvcConfig rlvc;
    bool tau_auto = true;      // tau = (0.01 * max |r|)^2
    bool epsilon_auto = true;  // epsilon = 0.05 * max |r|
    BaselineOptions baseline;
    EvaluationOptions evaluation;

    /// Fills the automatic thresholds from the task's reward scale.
    void finalize(double max_abs_reward);

    /// Seeds derived from `seed` for each random stream.
    std::uint64_t task_seed() const { return seed; }
    std::uint64_t collect_seed() const { return seed + 1; }
    std::uint64_t evaluation_seed() const { return seed + 2; }
    std::uint64_t oracle_seed() const { return seed + 3; }
};

/// INI text, one section per concern: [task], [maze], [campus], [car],
/// [collect], [rlvc], [baseline], [evaluate]. Unknown keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Task generated with `config.task_seed()`.
std::unique_ptr<VisualTask> make_task(const ExperimentConfig& config);

}  // namespace rlvc
