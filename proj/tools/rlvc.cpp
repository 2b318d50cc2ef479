// rlvc: train, evaluate, baseline and export for the visual control tasks.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rlvc/config.hpp"
#include "rlvc/experiment.hpp"
#include "rlvc/harness.hpp"
#include "rlvc/rlvc.hpp"

namespace fs = std::filesystem;
using namespace rlvc;

namespace {

enum Exit { ok = 0, usage = 1, config_error = 2, runtime_failure = 3 };

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string checkpoint;
};

ExperimentConfig configure(const Common& c) {
    auto cfg = load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(10);
    return out;
}

void write_metrics(const fs::path& path, const Metrics& metrics) {
    auto out = open_out(path);
    out << "metric,value\n";
    for (const auto& [name, value] : metrics) out << name << ',' << value << '\n';
}

void print_metrics(const Metrics& metrics) {
    for (const auto& [name, value] : metrics) std::cout << name << " = " << value << '\n';
}

int train(const Common& c) {
    const Experiment e = prepare_experiment(configure(c));
    const Evaluator judge(e);
    const fs::path dir = c.out;
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "interactions.csv");
        write_interactions_csv(out, e.database.interactions);
    }
    {
        auto out = open_out(dir / "percepts.txt");
        write_percepts(out, e.database.percepts, e.task->dictionary().dimension());
    }
    {
        auto out = open_out(dir / "dictionary.txt");
        write_dictionary(out, e.task->dictionary());
    }

    const FeatureGraph graph(e.task->dictionary());
    RlvcLearner learner(e.data, graph, e.config.rlvc);
    const auto observer = judge.observer();
    auto result = learner.run([&](const VisualPolicy& p, IterationRecord& r) {
        observer(p, r);
        std::cerr << "k=" << r.k << " classes=" << r.classes << " aliased=" << r.aliased_classes;
        if (r.error_learning >= 0.0) std::cerr << " error=" << r.error_learning;
        if (r.error_test >= 0.0) std::cerr << " test=" << r.error_test;
        std::cerr << '\n';
    });
    {
        auto out = open_out(dir / "trace.csv");
        write_trace_csv(out, result.trace);
    }
    result.policy.save((dir / "checkpoint").string());
    auto metrics = judge.report(result.policy);
    metrics.emplace_back("iterations", static_cast<double>(result.trace.records.size()));
    metrics.emplace_back("converged", result.converged ? 1.0 : 0.0);
    write_metrics(dir / "report.csv", metrics);
    print_metrics(metrics);
    return ok;
}

int evaluate(const Common& c) {
    const Experiment e = prepare_experiment(configure(c));
    const Evaluator judge(e);
    const auto policy = VisualPolicy::load(c.checkpoint, e.task->dictionary());
    const auto metrics = judge.report(policy);
    write_metrics(c.out, metrics);
    print_metrics(metrics);
    return ok;
}

int baseline(const Common& c) {
    const Experiment e = prepare_experiment(configure(c));
    const Evaluator judge(e);
    const fs::path dir = c.out;
    const auto metrics = judge.baseline_report();
    write_metrics(dir / "baseline.csv", metrics);
    auto out = open_out(dir / "baseline_values.csv");
    const auto values = judge.baseline().value_grid();
    write_grid_csv(out, judge.baseline().grid, values);
    print_metrics(metrics);
    return ok;
}

int export_values(const Common& c) {
    const Experiment e = prepare_experiment(configure(c));
    const Evaluator judge(e);
    const auto policy = VisualPolicy::load(c.checkpoint, e.task->dictionary());
    const auto values = judge.value_grid(policy);
    auto out = open_out(c.out);
    write_grid_csv(out, judge.export_grid(), values);
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reinforcement learning of visual classes"};
    app.require_subcommand(1);
    Common common;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", common.config, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
        sub->add_option("-s,--seed", common.seed, "Seed for every random stream");
    };
    auto* train_cmd = app.add_subcommand("train", "Run RLVC; write trace, checkpoint and report");
    add_common(train_cmd);
    train_cmd->add_option("-o,--out", common.out, "Output directory")->required();

    auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint");
    add_common(eval_cmd);
    eval_cmd->add_option("-k,--checkpoint", common.checkpoint, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("-o,--out", common.out, "Report CSV")->required();

    auto* base_cmd = app.add_subcommand("baseline", "Direct-perception baseline");
    add_common(base_cmd);
    base_cmd->add_option("-o,--out", common.out, "Output directory")->required();

    auto* export_cmd = app.add_subcommand("export", "Value grid of a checkpoint as CSV");
    add_common(export_cmd);
    export_cmd->add_option("-k,--checkpoint", common.checkpoint, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
    export_cmd->add_option("-o,--out", common.out, "Grid CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (train_cmd->parsed()) return train(common);
        if (eval_cmd->parsed()) return evaluate(common);
        if (base_cmd->parsed()) return baseline(common);
        if (export_cmd->parsed()) return export_values(common);
    } catch (const ConfigError& e) {
        std::cerr << "rlvc: " << e.what() << '\n';
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "rlvc: " << e.what() << '\n';
        return runtime_failure;
    }
    return usage;
}
