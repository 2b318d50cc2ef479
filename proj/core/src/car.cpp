#include "rlvc/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rlvc {

double hill_height(double p) { return p < 0.0 ? p * p + p : p / std::sqrt(1.0 + 5.0 * p * p); }

double hill_slope(double p) { return p < 0.0 ? 2.0 * p + 1.0 : std::pow(1.0 + 5.0 * p * p, -1.5); }

double car_acceleration(double p, double a, const CarSpec& spec) {
    const double h1 = hill_slope(p);
    const double q = 1.0 + h1 * h1;
    return a / (spec.mass * std::sqrt(q)) - spec.gravity * h1 / q;
}

namespace {

constexpr std::size_t gauge_ticks = 7;  // velocities -3 .. 3
constexpr double gauge_margin = 20.0;
constexpr double digit_row = 10.0;
constexpr double tick_row = 40.0;
constexpr double cursor_row = 60.0;

}  // namespace

CarTask::CarTask(CarSpec spec) : spec_(std::move(spec)), dict_({Descriptor{{0.0}}}, 0.1) {
    if (spec_.ground_window <= 0.0 || spec_.ground_window > spec_.strip_width)
        throw std::invalid_argument("car: ground window must fit on the strip");
    if (spec_.descriptor_noise >= spec_.match_threshold / 2.0)
        throw std::invalid_argument("car: descriptor noise must stay below half the match threshold");

    Rng rng(spec_.seed);
    const auto points = poisson_disk(spec_.strip_width, spec_.strip_height, spec_.ground_spacing, rng);
    const std::size_t k = points.size() + 2 * gauge_ticks + 1;
    dict_ = random_dictionary(k, spec_.dimension, spec_.match_threshold, 4.0 * spec_.match_threshold, rng);

    std::vector<Symbol> symbols(k);
    std::iota(symbols.begin(), symbols.end(), Symbol{0});
    std::shuffle(symbols.begin(), symbols.end(), rng);
    std::size_t next = 0;
    for (const auto& p : points) ground_.push_back({p, symbols[next++]});
    for (std::size_t i = 0; i < gauge_ticks; ++i) ticks_.push_back(symbols[next++]);
    for (std::size_t i = 0; i < gauge_ticks; ++i) digits_.push_back(symbols[next++]);
    cursor_ = symbols[next++];
}

TaskState CarTask::sample_start(Rng& rng) const {
    std::uniform_real_distribution<double> up(-1.0, 1.0);
    std::uniform_real_distribution<double> us(-spec_.max_speed, spec_.max_speed);
    return {up(rng), us(rng)};
}

TaskState CarTask::evaluation_start(Rng& rng) const {
    std::uniform_real_distribution<double> up(-1.0, 1.0);
    return {up(rng), 0.0};
}

StepResult CarTask::dynamics(double p, double s, double thrust) const {
    const double h = spec_.dt;
    const double acc = car_acceleration(p, thrust, spec_);
    const double p2 = p + h * s + 0.5 * h * h * acc;
    const double s2 = s + h * acc;
    StepResult r{{p2, s2}, 0.0, false};
    if (p2 >= 1.0 && std::abs(s2) <= spec_.max_speed) {
        r.reward = spec_.goal_reward;
        r.terminal = true;
    } else if (p2 < -1.0 || std::abs(s2) > spec_.max_speed) {
        r.terminal = true;
    }
    return r;
}

StepResult CarTask::step(const TaskState& state, ActionId a, Rng&) const {
    if (a >= 2) throw std::out_of_range("car: action out of range");
    return dynamics(state[0], state[1], a == push_left ? -spec_.thrust : spec_.thrust);
}

double CarTask::window_left(double p) const {
    const double t = std::clamp((p + 1.0) / 2.0, 0.0, 1.0);
    return t * (spec_.strip_width - spec_.ground_window);
}

void CarTask::add_point(Percept& out, const Point2& at, Symbol symbol, Rng& rng) const {
    out.points.push_back({at, jittered(dict_, symbol, spec_.descriptor_noise, rng)});
}

Percept CarTask::ground_percept(double p, Rng& rng) const {
    Percept out;
    out.width = spec_.ground_window;
    out.height = spec_.strip_height;
    const double left = window_left(p);
    for (const auto& g : ground_) {
        const double x = g.location.x - left;
        if (x < 0.0 || x > spec_.ground_window) continue;
        add_point(out, {x, g.location.y}, g.symbol, rng);
    }
    return out;
}

Percept CarTask::gauge_percept(double s, Rng& rng) const {
    Percept out;
    const double span = spec_.tick_spacing * static_cast<double>(gauge_ticks - 1);
    out.width = span + 2.0 * gauge_margin;
    out.height = cursor_row + gauge_margin;
    for (std::size_t i = 0; i < gauge_ticks; ++i) {
        const double x = gauge_margin + spec_.tick_spacing * static_cast<double>(i);
        add_point(out, {x, digit_row}, digits_[i], rng);
        add_point(out, {x, tick_row}, ticks_[i], rng);
    }
    const double offset = std::clamp(spec_.tick_spacing * (s + spec_.max_speed), 0.0, span);
    add_point(out, {gauge_margin + offset, cursor_row}, cursor_, rng);
    return out;
}

Percept CarTask::percept(const TaskState& state, Rng& rng) const {
    // Both cameras in one frame; the gauge sits in its own band below the ground.
    Percept out = ground_percept(state[0], rng);
    const Percept gauge = gauge_percept(state[1], rng);
    for (auto pt : gauge.points) {
        pt.location.y += spec_.gauge_band;
        out.points.push_back(std::move(pt));
    }
    out.width = std::max(out.width, gauge.width);
    out.height = spec_.gauge_band + gauge.height;
    return out;
}

}  // namespace rlvc
