#include "rlvc/environments.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace rlvc {

namespace {

// Spots on a 4 x 3 grid (column, row); row 0 is north.
//   0 - 1 - 2 - 3
//   |       |   |
//   4       5   6
//   |       |   |
//   7 - 8 < 9 - 10
constexpr std::array<std::array<int, 2>, CampusTask::num_spots> spot_cell = {{
    {0, 0}, {1, 0}, {2, 0}, {3, 0}, {0, 1}, {2, 1}, {3, 1}, {0, 2}, {1, 2}, {2, 2}, {3, 2},
}};

struct Edge {
    int from, to, heading;
};

constexpr std::array<Edge, 23> edge_list = {{
    {0, 1, CampusTask::east}, {1, 0, CampusTask::west},
    {1, 2, CampusTask::east}, {2, 1, CampusTask::west},
    {2, 3, CampusTask::east}, {3, 2, CampusTask::west},
    {0, 4, CampusTask::south}, {4, 0, CampusTask::north},
    {4, 7, CampusTask::south}, {7, 4, CampusTask::north},
    {2, 5, CampusTask::south}, {5, 2, CampusTask::north},
    {5, 9, CampusTask::south}, {9, 5, CampusTask::north},
    {3, 6, CampusTask::south}, {6, 3, CampusTask::north},
    {6, 10, CampusTask::south}, {10, 6, CampusTask::north},
    {7, 8, CampusTask::east}, {8, 7, CampusTask::west},
    {9, 10, CampusTask::east}, {10, 9, CampusTask::west},
    {9, 8, CampusTask::west},  // one way
}};

}  // namespace

CampusTask::CampusTask(CampusSpec spec) : spec_(std::move(spec)), dict_({Descriptor{{0.0}}}, 0.1) {
    if (spec_.learning_pool == 0 || spec_.test_pool == 0)
        throw std::invalid_argument("campus: pools must not be empty");
    if (spec_.descriptor_noise >= spec_.match_threshold / 2.0)
        throw std::invalid_argument("campus: descriptor noise must stay below half the match threshold");

    for (auto& row : edges_) row.fill(no_edge);
    for (const auto& e : edge_list) edges_[e.from][e.heading] = e.to;
    goal_spot_ = 1;
    goal_heading_ = north;

    // Landmarks: what lies ahead along a column or row, shared by every view
    // with that heading on that line.
    std::map<std::pair<int, int>, std::size_t> landmark_of;
    for (std::size_t spot = 0; spot < num_spots; ++spot)
        for (int h = 0; h < 4; ++h) {
            const int line = (h == north || h == south) ? spot_cell[spot][0] : spot_cell[spot][1];
            landmark_of.try_emplace({h, line}, landmark_of.size());
        }

    const std::size_t scene_total = num_states * spec_.scene_points;
    const std::size_t landmark_total = landmark_of.size() * spec_.shared_points;
    const std::size_t k = scene_total + landmark_total + spec_.clutter_symbols;
    Rng rng(spec_.seed);
    dict_ = random_dictionary(k, spec_.dimension, spec_.match_threshold, 4.0 * spec_.match_threshold, rng);

    std::vector<Symbol> symbols(k);
    std::iota(symbols.begin(), symbols.end(), Symbol{0});
    std::shuffle(symbols.begin(), symbols.end(), rng);
    auto next_symbol = symbols.begin();
    auto take = [&](std::size_t n) {
        std::vector<Symbol> out(next_symbol, next_symbol + static_cast<std::ptrdiff_t>(n));
        next_symbol += static_cast<std::ptrdiff_t>(n);
        return out;
    };
    std::vector<std::vector<Symbol>> landmark_symbols(landmark_of.size());
    for (auto& l : landmark_symbols) l = take(spec_.shared_points);
    const std::vector<Symbol> clutter = take(spec_.clutter_symbols);

    std::uniform_real_distribution<double> ux(0.1 * spec_.frame_width, 0.9 * spec_.frame_width);
    std::uniform_real_distribution<double> uy(0.1 * spec_.frame_height, 0.9 * spec_.frame_height);
    std::uniform_real_distribution<double> shift(-spec_.viewpoint_shift, spec_.viewpoint_shift);
    std::bernoulli_distribution drop(spec_.dropout);
    std::uniform_int_distribution<std::size_t> pick_clutter(0, clutter.empty() ? 0 : clutter.size() - 1);

    base_.resize(num_states);
    learning_.resize(num_states);
    test_.resize(num_states);
    for (std::size_t spot = 0; spot < num_spots; ++spot)
        for (int h = 0; h < 4; ++h) {
            const std::size_t state = state_index(spot, h);
            const int line = (h == north || h == south) ? spot_cell[spot][0] : spot_cell[spot][1];
            std::vector<Symbol> scene = take(spec_.scene_points);
            const auto& shared = landmark_symbols[landmark_of.at({h, line})];
            scene.insert(scene.end(), shared.begin(), shared.end());
            std::vector<Point2> where;
            for (std::size_t i = 0; i < scene.size(); ++i) where.push_back({ux(rng), uy(rng)});
            base_[state] = scene;
            std::sort(base_[state].begin(), base_[state].end());

            auto render = [&]() {
                Percept p;
                p.width = spec_.frame_width;
                p.height = spec_.frame_height;
                const double dx = shift(rng), dy = shift(rng);
                for (std::size_t i = 0; i < scene.size(); ++i) {
                    if (drop(rng)) continue;
                    p.points.push_back({{where[i].x + dx, where[i].y + dy},
                                        jittered(dict_, scene[i], spec_.descriptor_noise, rng)});
                }
                for (std::size_t c = 0; c < spec_.clutter_per_view && !clutter.empty(); ++c)
                    p.points.push_back(
                        {{ux(rng), uy(rng)}, jittered(dict_, clutter[pick_clutter(rng)], spec_.descriptor_noise, rng)});
                return p;
            };
            for (std::size_t i = 0; i < spec_.learning_pool; ++i) learning_[state].push_back(render());
            for (std::size_t i = 0; i < spec_.test_pool; ++i) test_[state].push_back(render());
        }
}

TaskState CampusTask::sample_start(Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, num_states - 1);
    return to_state(pick(rng));
}

StepResult CampusTask::transition(std::size_t spot, int heading, ActionId a) const {
    StepResult r{{static_cast<double>(spot), static_cast<double>(heading)}, 0.0, false};
    switch (a) {
    case turn_left:
        r.next[1] = static_cast<double>((heading + 3) % 4);
        r.reward = spec_.turn_penalty;
        break;
    case turn_right:
        r.next[1] = static_cast<double>((heading + 1) % 4);
        r.reward = spec_.turn_penalty;
        break;
    case forward:
        if (spot == goal_spot_ && heading == goal_heading_) {
            r.reward = spec_.goal_reward;
            r.terminal = true;
        } else {
            r.reward = spec_.forward_penalty;
            if (const int to = edges_[spot][heading]; to != no_edge) r.next[0] = static_cast<double>(to);
        }
        break;
    default:
        throw std::out_of_range("campus: action out of range");
    }
    return r;
}

StepResult CampusTask::step(const TaskState& state, ActionId a, Rng&) const {
    return transition(static_cast<std::size_t>(state[0]), static_cast<int>(state[1]), a);
}

const Percept& CampusTask::pool_percept(std::size_t state, bool learning, std::size_t index) const {
    return (learning ? learning_ : test_).at(state).at(index);
}

std::size_t CampusTask::pool_size(bool learning) const {
    return learning ? spec_.learning_pool : spec_.test_pool;
}

Percept CampusTask::draw(const TaskState& state, bool learning, Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, pool_size(learning) - 1);
    return pool_percept(index_of(state), learning, pick(rng));
}

Percept CampusTask::percept(const TaskState& state, Rng& rng) const { return draw(state, true, rng); }

FiniteMdp CampusTask::exact_mdp() const {
    FiniteMdp mdp(num_states + 1, 3, spec_.discount);
    const StateId goal = num_states;
    mdp.set_terminal(goal);
    for (StateId a = 0; a < 3; ++a) mdp.set_transition(goal, a, {{goal, 1.0}});
    for (std::size_t s = 0; s < num_states; ++s)
        for (ActionId a = 0; a < 3; ++a) {
            const auto r = transition(s / 4, static_cast<int>(s % 4), a);
            mdp.set_reward(s, a, r.reward);
            mdp.set_transition(s, a, {{r.terminal ? goal : index_of(r.next), 1.0}});
        }
    mdp.validate();
    return mdp;
}

}  // namespace rlvc
