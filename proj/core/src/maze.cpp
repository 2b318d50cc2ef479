#include "rlvc/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace rlvc {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Point2& p, const Segment& s) {
    return std::min(s.a.x, s.b.x) <= p.x && p.x <= std::max(s.a.x, s.b.x) &&
           std::min(s.a.y, s.b.y) <= p.y && p.y <= std::max(s.a.y, s.b.y);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

bool segments_cross(const Segment& s, const Segment& t) {
    const int d1 = sign(cross(t.a, t.b, s.a));
    const int d2 = sign(cross(t.a, t.b, s.b));
    const int d3 = sign(cross(s.a, s.b, t.a));
    const int d4 = sign(cross(s.a, s.b, t.b));
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    // Touching counts as crossing.
    if (d1 == 0 && on_segment(s.a, t)) return true;
    if (d2 == 0 && on_segment(s.b, t)) return true;
    if (d3 == 0 && on_segment(t.a, s)) return true;
    if (d4 == 0 && on_segment(t.b, s)) return true;
    return false;
}

MazeSpec MazeSpec::standard(double size) {
    MazeSpec spec;
    const double s = size;
    spec.size = s;
    spec.move_step = 0.125 * s;
    spec.sensor_window = 0.25 * s;
    spec.point_spacing = 0.05 * s;
    spec.walls = {
        {{0.25 * s, 0.0}, {0.25 * s, 0.6 * s}},
        {{0.45 * s, 0.4 * s}, {s, 0.4 * s}},
        {{0.7 * s, 0.65 * s}, {0.7 * s, s}},
    };
    spec.exits = {
        {0.875 * s, 0.0, s, 0.125 * s},
        {0.0, 0.875 * s, 0.125 * s, s},
    };
    return spec;
}

MazeTask::MazeTask(MazeSpec spec) : spec_(std::move(spec)), dict_({Descriptor{{0.0}}}, 0.1) {
    if (spec_.size <= 0.0 || spec_.sensor_window <= 0.0 || spec_.point_spacing <= 0.0)
        throw std::invalid_argument("maze: sizes must be positive");
    if (spec_.descriptor_noise >= spec_.match_threshold / 2.0)
        throw std::invalid_argument("maze: descriptor noise must stay below half the match threshold");

    constexpr int max_attempts = 50;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        generation_seed_ = spec_.seed + static_cast<std::uint64_t>(attempt) * 7919u;
        Rng rng(generation_seed_);
        // The tapestry extends half a window past every wall of the maze.
        const double half = spec_.sensor_window / 2.0;
        const double extent = spec_.size + spec_.sensor_window;
        auto points = poisson_disk(extent, extent, spec_.point_spacing, rng);
        const std::size_t k = spec_.dictionary_size == 0 ? points.size()
                                                         : std::max(spec_.dictionary_size, points.size());
        dict_ = random_dictionary(k, spec_.dimension, spec_.match_threshold, 4.0 * spec_.match_threshold, rng);
        std::vector<Symbol> symbols(k);
        std::iota(symbols.begin(), symbols.end(), Symbol{0});
        std::shuffle(symbols.begin(), symbols.end(), rng);
        tapestry_.clear();
        for (std::size_t i = 0; i < points.size(); ++i)
            tapestry_.push_back({{points[i].x - half, points[i].y - half}, symbols[i]});
        if (fully_observable()) return;
    }
    throw std::runtime_error("maze: no fully observable tapestry found");
}

bool MazeTask::in_exit(const Point2& p) const {
    return std::any_of(spec_.exits.begin(), spec_.exits.end(), [&](const Box& b) { return b.contains(p); });
}

TaskState MazeTask::sample_start(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, spec_.size);
    while (true) {
        const Point2 p{u(rng), u(rng)};
        if (!in_exit(p)) return {p.x, p.y};
    }
}

StepResult MazeTask::move(const TaskState& state, double dx, double dy) const {
    const Point2 from{state[0], state[1]};
    const Point2 to{from.x + dx, from.y + dy};
    StepResult r{state, 0.0, false};
    if (to.x < 0.0 || to.y < 0.0 || to.x > spec_.size || to.y > spec_.size) return r;
    const Segment path{from, to};
    for (const auto& w : spec_.walls)
        if (segments_cross(path, w)) return r;
    r.next = {to.x, to.y};
    if (in_exit(to)) {
        r.reward = spec_.exit_reward;
        r.terminal = true;
    }
    return r;
}

StepResult MazeTask::step(const TaskState& state, ActionId a, Rng& rng) const {
    static constexpr double dx[] = {0.0, 1.0, 0.0, -1.0};
    static constexpr double dy[] = {-1.0, 0.0, 1.0, 0.0};
    if (a >= 4) throw std::out_of_range("maze: action out of range");
    std::normal_distribution<double> noise(0.0, spec_.noise_sigma());
    const double nx = noise(rng);
    const double ny = noise(rng);
    return move(state, spec_.move_step * dx[a] + nx, spec_.move_step * dy[a] + ny);
}

Percept MazeTask::percept(const TaskState& state, Rng& rng) const {
    const double half = spec_.sensor_window / 2.0;
    const double left = state[0] - half;
    const double top = state[1] - half;
    Percept p;
    p.width = spec_.sensor_window;
    p.height = spec_.sensor_window;
    std::bernoulli_distribution drop(spec_.dropout);
    for (const auto& t : tapestry_) {
        const double x = t.location.x - left;
        const double y = t.location.y - top;
        if (x < 0.0 || y < 0.0 || x > spec_.sensor_window || y > spec_.sensor_window) continue;
        if (spec_.dropout > 0.0 && drop(rng)) continue;
        p.points.push_back({{x, y}, jittered(dict_, t.symbol, spec_.descriptor_noise, rng)});
    }
    return p;
}

std::vector<Symbol> MazeTask::signature(const TaskState& state) const {
    const double half = spec_.sensor_window / 2.0;
    std::vector<Symbol> out;
    for (const auto& t : tapestry_)
        if (std::abs(t.location.x - state[0]) <= half && std::abs(t.location.y - state[1]) <= half)
            out.push_back(t.symbol);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool MazeTask::fully_observable() const {
    // Distinct views on a grid of cell centres; a stronger demand than
    // separating states with different optimal actions.
    const std::size_t g = spec_.observability_grid;
    const double cell = spec_.size / static_cast<double>(g);
    std::set<std::vector<Symbol>> seen;
    for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = 0; j < g; ++j) {
            const TaskState s{(static_cast<double>(i) + 0.5) * cell, (static_cast<double>(j) + 0.5) * cell};
            if (in_exit({s[0], s[1]})) continue;
            auto sig = signature(s);
            if (sig.size() < 3 || !seen.insert(std::move(sig)).second) return false;
        }
    return true;
}

}  // namespace rlvc
