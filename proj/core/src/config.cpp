#include "rlvc/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace rlvc {

namespace {

template <typename T>
T as(const std::string& key, const std::string& text) {
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (text == "true" || text == "1" || text == "yes") return true;
            if (text == "false" || text == "0" || text == "no") return false;
            throw boost::bad_lexical_cast();
        } else {
            if constexpr (std::is_unsigned_v<T>)
                if (!text.empty() && text.front() == '-') throw boost::bad_lexical_cast();
            return boost::lexical_cast<T>(text);
        }
    } catch (const boost::bad_lexical_cast&) {
        throw ConfigError("config: bad value '" + text + "' for " + key);
    }
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

template <typename T, typename Field>
Setter field(Field field) {
    return [field](ExperimentConfig& c, const std::string& key, const std::string& v) {
        std::invoke(field, c) = as<T>(key, v);
    };
}

unsigned parse_relations(const std::string& key, const std::string& text) {
    unsigned out = 0;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item == "value") out |= static_cast<unsigned>(EquivalenceKind::value);
        else if (item == "policy") out |= static_cast<unsigned>(EquivalenceKind::policy);
        else if (item == "state_action") out |= static_cast<unsigned>(EquivalenceKind::state_action);
        else throw ConfigError("config: unknown relation '" + item + "' in " + key);
    }
    if (out == 0) throw ConfigError("config: " + key + " names no relation");
    return out;
}

const std::map<std::string, Setter>& setters() {
    using C = ExperimentConfig;
    static const std::map<std::string, Setter> table = {
        {"task.name", [](C& c, const std::string& key, const std::string& v) {
             if (v != "maze" && v != "campus" && v != "car") throw ConfigError("config: unknown task '" + v + "' in " + key);
             c.task = v;
         }},
        {"task.seed", field<std::uint64_t>([](C& c) -> auto& { return c.seed; })},

        {"maze.size", [](C& c, const std::string& key, const std::string& v) {
             const double size = as<double>(key, v);
             if (!(size > 0.0)) throw ConfigError("config: " + key + " must be positive");
             // Geometry scales with the side; explicit keys below override it.
             auto scaled = MazeSpec::standard(size);
             scaled.dictionary_size = c.maze.dictionary_size;
             scaled.dimension = c.maze.dimension;
             scaled.match_threshold = c.maze.match_threshold;
             scaled.descriptor_noise = c.maze.descriptor_noise;
             scaled.dropout = c.maze.dropout;
             scaled.noise_fraction = c.maze.noise_fraction;
             c.maze = std::move(scaled);
         }},
        {"maze.move_step", field<double>([](C& c) -> auto& { return c.maze.move_step; })},
        {"maze.noise_fraction", field<double>([](C& c) -> auto& { return c.maze.noise_fraction; })},
        {"maze.sensor_window", field<double>([](C& c) -> auto& { return c.maze.sensor_window; })},
        {"maze.point_spacing", field<double>([](C& c) -> auto& { return c.maze.point_spacing; })},
        {"maze.dictionary_size", field<std::size_t>([](C& c) -> auto& { return c.maze.dictionary_size; })},
        {"maze.dimension", field<std::size_t>([](C& c) -> auto& { return c.maze.dimension; })},
        {"maze.match_threshold", field<double>([](C& c) -> auto& { return c.maze.match_threshold; })},
        {"maze.descriptor_noise", field<double>([](C& c) -> auto& { return c.maze.descriptor_noise; })},
        {"maze.dropout", field<double>([](C& c) -> auto& { return c.maze.dropout; })},
        {"maze.discount", field<double>([](C& c) -> auto& { return c.maze.discount; })},

        {"campus.learning_pool", field<std::size_t>([](C& c) -> auto& { return c.campus.learning_pool; })},
        {"campus.test_pool", field<std::size_t>([](C& c) -> auto& { return c.campus.test_pool; })},
        {"campus.scene_points", field<std::size_t>([](C& c) -> auto& { return c.campus.scene_points; })},
        {"campus.shared_points", field<std::size_t>([](C& c) -> auto& { return c.campus.shared_points; })},
        {"campus.clutter_symbols", field<std::size_t>([](C& c) -> auto& { return c.campus.clutter_symbols; })},
        {"campus.clutter_per_view", field<std::size_t>([](C& c) -> auto& { return c.campus.clutter_per_view; })},
        {"campus.dropout", field<double>([](C& c) -> auto& { return c.campus.dropout; })},
        {"campus.viewpoint_shift", field<double>([](C& c) -> auto& { return c.campus.viewpoint_shift; })},
        {"campus.descriptor_noise", field<double>([](C& c) -> auto& { return c.campus.descriptor_noise; })},
        {"campus.discount", field<double>([](C& c) -> auto& { return c.campus.discount; })},

        {"car.ground_window", field<double>([](C& c) -> auto& { return c.car.ground_window; })},
        {"car.ground_spacing", field<double>([](C& c) -> auto& { return c.car.ground_spacing; })},
        {"car.tick_spacing", field<double>([](C& c) -> auto& { return c.car.tick_spacing; })},
        {"car.gauge_band", field<double>([](C& c) -> auto& { return c.car.gauge_band; })},
        {"car.descriptor_noise", field<double>([](C& c) -> auto& { return c.car.descriptor_noise; })},
        {"car.discount", field<double>([](C& c) -> auto& { return c.car.discount; })},

        {"collect.count", field<std::size_t>([](C& c) -> auto& { return c.collect.count; })},
        {"collect.max_episode_length", field<std::size_t>([](C& c) -> auto& { return c.collect.max_episode_length; })},

        {"rlvc.tau", [](C& c, const std::string& key, const std::string& v) {
             c.tau_auto = v == "auto";
             if (!c.tau_auto) c.rlvc.tau = as<double>(key, v);
         }},
        {"rlvc.alpha", field<double>([](C& c) -> auto& { return c.rlvc.alpha; })},
        {"rlvc.max_splits_per_iteration", field<std::size_t>([](C& c) -> auto& { return c.rlvc.max_splits_per_iteration; })},
        {"rlvc.compaction_period", field<std::size_t>([](C& c) -> auto& { return c.rlvc.compaction_period; })},
        {"rlvc.max_iterations", field<std::size_t>([](C& c) -> auto& { return c.rlvc.max_iterations; })},
        {"rlvc.candidate_cap", field<std::size_t>([](C& c) -> auto& { return c.rlvc.candidate_cap; })},
        {"rlvc.backend", [](C& c, const std::string& key, const std::string& v) {
             if (v == "tree") c.rlvc.backend = Backend::tree;
             else if (v == "bdd") c.rlvc.backend = Backend::bdd;
             else throw ConfigError("config: unknown backend '" + v + "' in " + key);
         }},
        {"rlvc.composites", field<bool>([](C& c) -> auto& { return c.rlvc.composites; })},
        {"rlvc.nu", field<double>([](C& c) -> auto& { return c.rlvc.composite.nu; })},
        {"rlvc.min_cooccurrence", field<std::size_t>([](C& c) -> auto& { return c.rlvc.composite.min_cooccurrence; })},
        {"rlvc.cluster_cut", field<double>([](C& c) -> auto& { return c.rlvc.composite.cluster_cut; })},
        {"rlvc.min_cluster_size", field<std::size_t>([](C& c) -> auto& { return c.rlvc.composite.min_cluster_size; })},
        {"rlvc.sigma_floor", field<double>([](C& c) -> auto& { return c.rlvc.composite.sigma_floor; })},
        {"rlvc.epsilon", [](C& c, const std::string& key, const std::string& v) {
             c.epsilon_auto = v == "auto";
             if (!c.epsilon_auto) c.rlvc.equivalence.epsilon = as<double>(key, v);
         }},
        {"rlvc.relations", [](C& c, const std::string& key, const std::string& v) {
             c.rlvc.equivalence.relations = parse_relations(key, v);
         }},

        {"baseline.resolution", field<std::size_t>([](C& c) -> auto& { return c.baseline.resolution; })},
        {"baseline.samples_per_pair", field<std::size_t>([](C& c) -> auto& { return c.baseline.samples_per_pair; })},

        {"evaluate.trials", field<std::size_t>([](C& c) -> auto& { return c.evaluation.trials; })},
        {"evaluate.max_steps", field<std::size_t>([](C& c) -> auto& { return c.evaluation.max_steps; })},
        {"evaluate.probe_resolution", field<std::size_t>([](C& c) -> auto& { return c.evaluation.probe_resolution; })},
        {"evaluate.oracle_resolution", field<std::size_t>([](C& c) -> auto& { return c.evaluation.oracle_resolution; })},
        {"evaluate.oracle_samples", field<std::size_t>([](C& c) -> auto& { return c.evaluation.oracle_samples; })},
        {"evaluate.slack", field<double>([](C& c) -> auto& { return c.evaluation.slack; })},
    };
    return table;
}

}  // namespace

void ExperimentConfig::finalize(double max_abs_reward) {
    if (tau_auto) rlvc.tau = (0.01 * max_abs_reward) * (0.01 * max_abs_reward);
    if (epsilon_auto) rlvc.equivalence.epsilon = 0.05 * max_abs_reward;
    if (evaluation.slack < 0.0) evaluation.slack = 0.01 * max_abs_reward;
}

ExperimentConfig parse_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.message() + " on line " + std::to_string(e.line()));
    }
    ExperimentConfig config;
    // [maze] size rescales the geometry, so it goes first.
    if (auto size = tree.get_optional<std::string>("maze.size"))
        setters().at("maze.size")(config, "maze.size", *size);
    for (const auto& [section, keys] : tree) {
        if (keys.empty() && !keys.data().empty())
            throw ConfigError("config: key '" + section + "' outside a section");
        for (const auto& [key, value] : keys) {
            const std::string name = section + "." + key;
            const auto it = setters().find(name);
            if (it == setters().end()) throw ConfigError("config: unknown key " + name);
            if (name == "maze.size") continue;
            it->second(config, name, value.data());
        }
    }
    try {
        config.rlvc.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (config.collect.count == 0) throw ConfigError("config: collect.count must be positive");
    if (config.baseline.resolution == 0 || config.evaluation.probe_resolution == 0 ||
        config.evaluation.oracle_resolution == 0)
        throw ConfigError("config: resolutions must be positive");
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    return parse_config(in);
}

std::unique_ptr<VisualTask> make_task(const ExperimentConfig& config) {
    try {
        if (config.task == "maze") {
            auto spec = config.maze;
            spec.seed = config.task_seed();
            return std::make_unique<MazeTask>(std::move(spec));
        }
        if (config.task == "campus") {
            auto spec = config.campus;
            spec.seed = config.task_seed();
            return std::make_unique<CampusTask>(std::move(spec));
        }
        if (config.task == "car") {
            auto spec = config.car;
            spec.seed = config.task_seed();
            return std::make_unique<CarTask>(std::move(spec));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    throw ConfigError("config: unknown task '" + config.task + "'");
}

}  // namespace rlvc
