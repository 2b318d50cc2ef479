#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rlvc/mdp.hpp"
#include "rlvc/percept.hpp"

namespace rlvc {

using Rng = std::mt19937_64;

/// Physical state of a task: (x, y) for the maze, (spot, orientation) for the
/// campus, (position, velocity) for the car.
using TaskState = std::array<double, 2>;

struct StepResult {
    TaskState next;
    double reward = 0.0;
    bool terminal = false;
};

/// Episodic task whose agent only sees percepts.
class VisualTask {
public:
    virtual ~VisualTask() = default;

    virtual std::string name() const = 0;
    virtual std::size_t num_actions() const = 0;
    virtual double discount() const = 0;
    virtual double max_abs_reward() const = 0;
    virtual const FeatureDictionary& dictionary() const = 0;

    /// Start state for exploration episodes.
    virtual TaskState sample_start(Rng& rng) const = 0;
    /// Start state for evaluation trials.
    virtual TaskState evaluation_start(Rng& rng) const { return sample_start(rng); }
    virtual StepResult step(const TaskState& state, ActionId a, Rng& rng) const = 0;
    virtual Percept percept(const TaskState& state, Rng& rng) const = 0;
};

/// Interactions with the percepts and true states behind them.
struct InteractionDatabase {
    std::vector<Percept> percepts;    // percepts[i].id == i
    std::vector<TaskState> states;    // true state behind percepts[i]
    std::vector<Interaction> interactions;
    std::size_t num_actions = 0;
    double discount = 0.9;
};

struct CollectOptions {
    std::size_t count = 10000;
    std::uint64_t seed = 1;
    std::size_t max_episode_length = 0;  // 0: episodes end only on terminal states
};

/// Uniform-random exploration with restarts. An interaction that ends an
/// episode on a terminal state has `s_next == s` and `terminal_next` set.
InteractionDatabase collect_interactions(const VisualTask& task, const CollectOptions& options);

/// Resolves every percept against the task dictionary.
struct Dataset;
Dataset prepare_dataset(const InteractionDatabase& db, const FeatureDictionary& dict);

/// CSV of quadruples: s_id,action,reward,s_next_id,terminal.
void write_interactions_csv(std::ostream& out, std::span<const Interaction> interactions);
std::vector<Interaction> read_interactions_csv(std::istream& in);

/// Random dictionary in [0,1]^dimension with pairwise Euclidean separation above `separation`.
FeatureDictionary random_dictionary(std::size_t size, std::size_t dimension, double threshold,
                                    double separation, Rng& rng);

/// Descriptor of `symbol` with uniform per-axis jitter whose norm stays below `max_norm`.
Descriptor jittered(const FeatureDictionary& dict, Symbol symbol, double max_norm, Rng& rng);

/// Bridson Poisson-disk sampling in [0,width) x [0,height).
std::vector<Point2> poisson_disk(double width, double height, double min_distance, Rng& rng,
                                 std::size_t attempts = 30);

// ------------------------------------------------------------------ maze

struct Segment {
    Point2 a;
    Point2 b;
};

struct Box {
    double x0, y0, x1, y1;
    bool contains(const Point2& p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

bool segments_cross(const Segment& s, const Segment& t);

struct MazeSpec {
    double size = 640.0;
    double move_step = 40.0;
    double noise_fraction = 0.02;  // noise sigma as a fraction of size
    double sensor_window = 160.0;
    double point_spacing = 32.0;
    std::size_t dictionary_size = 400;  // at least the number of tapestry points
    std::size_t dimension = 8;
    double match_threshold = 0.05;
    double descriptor_noise = 0.02;  // jitter norm bound, below match_threshold / 2
    double dropout = 0.0;
    double discount = 0.9;
    double exit_reward = 100.0;
    std::vector<Segment> walls;
    std::vector<Box> exits;
    std::uint64_t seed = 1;
    std::size_t observability_grid = 16;

    double noise_sigma() const { return noise_fraction * size; }
    /// Two exits in opposite corners and three glass walls, scaled to `size`.
    static MazeSpec standard(double size = 640.0);
};

/// Continuous noisy navigation; actions up, right, down, left.
class MazeTask : public VisualTask {
public:
    enum Action : ActionId { up = 0, right = 1, down = 2, left = 3 };

    explicit MazeTask(MazeSpec spec);

    std::string name() const override { return "maze"; }
    std::size_t num_actions() const override { return 4; }
    double discount() const override { return spec_.discount; }
    double max_abs_reward() const override { return spec_.exit_reward; }
    const FeatureDictionary& dictionary() const override { return dict_; }

    TaskState sample_start(Rng& rng) const override;
    StepResult step(const TaskState& state, ActionId a, Rng& rng) const override;
    Percept percept(const TaskState& state, Rng& rng) const override;

    /// Noise-free move, used with an explicit displacement.
    StepResult move(const TaskState& state, double dx, double dy) const;
    /// Visible symbols from `state` without sensor noise, sorted.
    std::vector<Symbol> signature(const TaskState& state) const;
    bool in_exit(const Point2& p) const;

    const MazeSpec& spec() const { return spec_; }
    const std::vector<LocatedSymbol>& tapestry() const { return tapestry_; }
    std::uint64_t generation_seed() const { return generation_seed_; }

private:
    bool fully_observable() const;

    MazeSpec spec_;
    FeatureDictionary dict_;
    std::vector<LocatedSymbol> tapestry_;
    std::uint64_t generation_seed_ = 0;
};

// ------------------------------------------------------------------ campus

struct CampusSpec {
    std::size_t learning_pool = 18;
    std::size_t test_pool = 6;
    std::size_t scene_points = 14;   // distinctive points per view
    std::size_t shared_points = 4;   // landmark points shared with views of the same landmark
    std::size_t clutter_symbols = 40;
    std::size_t clutter_per_view = 3;
    double dropout = 0.25;
    double viewpoint_shift = 40.0;
    std::size_t dimension = 8;
    double match_threshold = 0.05;
    double descriptor_noise = 0.02;
    double frame_width = 1024.0;
    double frame_height = 768.0;
    double goal_reward = 100.0;
    double turn_penalty = -5.0;
    double forward_penalty = -10.0;
    double discount = 0.8;
    std::uint64_t seed = 1;
};

/// Navigation between 11 spots x 4 orientations; actions left, right, forward.
class CampusTask : public VisualTask {
public:
    enum Action : ActionId { turn_left = 0, turn_right = 1, forward = 2 };
    enum Heading : int { north = 0, east = 1, south = 2, west = 3 };
    static constexpr std::size_t num_spots = 11;
    static constexpr std::size_t num_states = 44;
    static constexpr int no_edge = -1;

    explicit CampusTask(CampusSpec spec);

    std::string name() const override { return "campus"; }
    std::size_t num_actions() const override { return 3; }
    double discount() const override { return spec_.discount; }
    double max_abs_reward() const override { return spec_.goal_reward; }
    const FeatureDictionary& dictionary() const override { return dict_; }

    TaskState sample_start(Rng& rng) const override;
    StepResult step(const TaskState& state, ActionId a, Rng& rng) const override;
    /// Draws from the learning pool.
    Percept percept(const TaskState& state, Rng& rng) const override;

    StepResult transition(std::size_t spot, int heading, ActionId a) const;
    const Percept& pool_percept(std::size_t state, bool learning, std::size_t index) const;
    std::size_t pool_size(bool learning) const;
    Percept draw(const TaskState& state, bool learning, Rng& rng) const;

    /// Destination of a forward move, or no_edge.
    int neighbour(std::size_t spot, int heading) const { return edges_[spot][heading]; }
    std::size_t goal_spot() const { return goal_spot_; }
    int goal_heading() const { return goal_heading_; }
    static std::size_t state_index(std::size_t spot, int heading) { return spot * 4 + heading; }
    static TaskState to_state(std::size_t index) {
        return {static_cast<double>(index / 4), static_cast<double>(index % 4)};
    }
    static std::size_t index_of(const TaskState& s) {
        return static_cast<std::size_t>(s[0]) * 4 + static_cast<std::size_t>(s[1]);
    }

    /// Exact model over the 44 physical states plus a goal sink (index 44).
    FiniteMdp exact_mdp() const;
    /// Base symbol set of each physical state's view.
    const std::vector<Symbol>& base_symbols(std::size_t state) const { return base_[state]; }

    const CampusSpec& spec() const { return spec_; }

private:
    CampusSpec spec_;
    std::array<std::array<int, 4>, num_spots> edges_{};
    std::size_t goal_spot_ = 0;
    int goal_heading_ = north;
    FeatureDictionary dict_;
    std::vector<std::vector<Symbol>> base_;
    std::vector<std::vector<Percept>> learning_;
    std::vector<std::vector<Percept>> test_;
};

// ------------------------------------------------------------------ car on the hill

struct CarSpec {
    double mass = 1.0;
    double gravity = 9.81;
    double dt = 0.1;
    double thrust = 4.0;
    double max_speed = 3.0;
    double goal_reward = 100.0;
    double discount = 0.75;
    double strip_width = 1280.0;
    double strip_height = 128.0;
    double ground_window = 256.0;
    double ground_spacing = 28.0;
    double gauge_band = 200.0;  // y offset of the gauge band in combined percepts
    double tick_spacing = 40.0;
    std::size_t dimension = 8;
    double match_threshold = 0.05;
    double descriptor_noise = 0.0;
    std::uint64_t seed = 1;
};

double hill_height(double p);
double hill_slope(double p);
/// Acceleration of the velocity for thrust `a` at position `p`.
double car_acceleration(double p, double a, const CarSpec& spec);

/// Car on the hill with one camera on the ground and one on a velocity gauge.
class CarTask : public VisualTask {
public:
    enum Action : ActionId { push_left = 0, push_right = 1 };

    explicit CarTask(CarSpec spec);

    std::string name() const override { return "car"; }
    std::size_t num_actions() const override { return 2; }
    double discount() const override { return spec_.discount; }
    double max_abs_reward() const override { return spec_.goal_reward; }
    const FeatureDictionary& dictionary() const override { return dict_; }

    /// Uniform over |p| <= 1, |s| <= 3.
    TaskState sample_start(Rng& rng) const override;
    /// Uniform p, zero velocity.
    TaskState evaluation_start(Rng& rng) const override;
    StepResult step(const TaskState& state, ActionId a, Rng& rng) const override;
    Percept percept(const TaskState& state, Rng& rng) const override;

    StepResult dynamics(double p, double s, double thrust) const;
    Percept ground_percept(double p, Rng& rng) const;
    Percept gauge_percept(double s, Rng& rng) const;
    /// Left edge of the ground window on the strip for position p.
    double window_left(double p) const;

    Symbol cursor_symbol() const { return cursor_; }
    const std::vector<Symbol>& tick_symbols() const { return ticks_; }
    const std::vector<Symbol>& digit_symbols() const { return digits_; }
    const CarSpec& spec() const { return spec_; }

private:
    void add_point(Percept& out, const Point2& at, Symbol symbol, Rng& rng) const;

    CarSpec spec_;
    FeatureDictionary dict_;
    std::vector<LocatedSymbol> ground_;
    std::vector<Symbol> ticks_;
    std::vector<Symbol> digits_;
    Symbol cursor_ = 0;
};

}  // namespace rlvc
