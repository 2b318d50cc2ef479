#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "rlvc/environments.hpp"
#include "rlvc/harness.hpp"

using namespace rlvc;

namespace {

std::set<Symbol> symbols_of(const Percept& p, const FeatureDictionary& dict) {
    std::set<Symbol> out;
    for (const auto& pt : p.points)
        if (auto s = symbol_of(pt.descriptor, dict)) out.insert(*s);
    return out;
}

MazeTask quiet_maze() {
    auto spec = MazeSpec::standard(640.0);
    spec.noise_fraction = 0.0;
    return MazeTask(spec);
}

}  // namespace

TEST_CASE("maze geometry") {
    const auto spec = MazeSpec::standard(640.0);
    CHECK(spec.noise_sigma() == doctest::Approx(12.8));
    CHECK(spec.exits.size() == 2);
    const MazeTask maze(spec);
    CHECK(maze.dictionary().size() >= 300);

    // The first wall runs along x = 160 from y = 0 to 384.
    const auto blocked = maze.move({150.0, 100.0}, 20.0, 0.0);
    CHECK(blocked.next == TaskState{150.0, 100.0});
    CHECK(blocked.reward == 0.0);
    CHECK_FALSE(blocked.terminal);
    const auto outside = maze.move({10.0, 300.0}, -40.0, 0.0);
    CHECK(outside.next == TaskState{10.0, 300.0});
    const auto exit = maze.move({600.0, 100.0}, 0.0, -40.0);
    CHECK(exit.reward == 100.0);
    CHECK(exit.terminal);
}

TEST_CASE("noise-free maze moves are exactly one step") {
    const auto maze = quiet_maze();
    Rng rng(1);
    const double step = maze.spec().move_step;
    CHECK(maze.step({320.0, 560.0}, MazeTask::up, rng).next == TaskState{320.0, 560.0 - step});
    CHECK(maze.step({320.0, 560.0}, MazeTask::left, rng).next == TaskState{320.0 - step, 560.0});
}

TEST_CASE("maze percepts") {
    const MazeTask maze(MazeSpec::standard(640.0));
    Rng rng(3);
    const auto a = maze.percept({100.0, 100.0}, rng);
    const auto again = maze.percept({100.0, 100.0}, rng);
    const auto far = maze.percept({520.0, 520.0}, rng);
    const auto sa = symbols_of(a, maze.dictionary());
    CHECK(!sa.empty());
    CHECK(sa == symbols_of(again, maze.dictionary()));
    const auto sig = maze.signature({100.0, 100.0});
    CHECK(std::set<Symbol>(sig.begin(), sig.end()) == sa);
    std::vector<Symbol> common;
    const auto sf = symbols_of(far, maze.dictionary());
    std::set_intersection(sa.begin(), sa.end(), sf.begin(), sf.end(), std::back_inserter(common));
    CHECK(common.empty());
}

TEST_CASE("campus moves") {
    const CampusTask campus(CampusSpec{});
    const auto left = campus.transition(4, CampusTask::north, CampusTask::turn_left);
    CHECK(left.next == TaskState{4.0, double(CampusTask::west)});
    CHECK(left.reward == -5.0);
    const auto right = campus.transition(4, CampusTask::west, CampusTask::turn_right);
    CHECK(right.next == TaskState{4.0, double(CampusTask::north)});
    const auto blocked = campus.transition(1, CampusTask::south, CampusTask::forward);
    CHECK(blocked.next == TaskState{1.0, double(CampusTask::south)});
    CHECK(blocked.reward == -10.0);
    const auto moved = campus.transition(0, CampusTask::east, CampusTask::forward);
    CHECK(moved.next == TaskState{1.0, double(CampusTask::east)});
    const auto goal = campus.transition(campus.goal_spot(), campus.goal_heading(), CampusTask::forward);
    CHECK(goal.reward == 100.0);
    CHECK(goal.terminal);
}

TEST_CASE("campus pools and views") {
    const CampusTask campus(CampusSpec{});
    CHECK(campus.pool_size(true) == 18);
    CHECK(campus.pool_size(false) == 6);
    for (std::size_t s = 0; s < CampusTask::num_states; ++s)
        for (std::size_t t = s + 1; t < CampusTask::num_states; ++t)
            CHECK(campus.base_symbols(s) != campus.base_symbols(t));
    // Optimal value at the goal state is the goal reward.
    const auto q = solve_optimal_q(campus.exact_mdp());
    const auto g = CampusTask::state_index(campus.goal_spot(), campus.goal_heading());
    CHECK(q(g, CampusTask::forward) == doctest::Approx(100.0));
    CHECK(greedy_policy(q)[g] == CampusTask::forward);
}

TEST_CASE("car dynamics against hand evaluation") {
    const CarTask car(CarSpec{});
    const auto r = car.dynamics(0.0, 0.0, 4.0);
    const auto [p, s] = oracle::car_step(0.0, 0.0, 4.0);
    CHECK(std::abs(r.next[0] - p) <= 1e-12);
    CHECK(std::abs(r.next[1] - s) <= 1e-12);
    CHECK(r.next[0] == doctest::Approx(-0.0103829).epsilon(1e-5));
    CHECK(r.next[1] == doctest::Approx(-0.207657).epsilon(1e-5));
    for (double p0 : {-0.9, -0.3, 0.2, 0.7})
        for (double s0 : {-2.0, 0.5})
            for (double a : {-4.0, 4.0}) {
                const auto mine = car.dynamics(p0, s0, a);
                const auto ref = oracle::car_step(p0, s0, a);
                CHECK(std::abs(mine.next[0] - ref.first) <= 1e-12);
                CHECK(std::abs(mine.next[1] - ref.second) <= 1e-12);
            }
    CHECK(hill_height(0.0) == 0.0);
    CHECK(std::abs(hill_height(-1e-9)) < 1e-8);
    CHECK(hill_slope(0.0) == 1.0);
    CHECK(hill_slope(-1e-12) == doctest::Approx(1.0));
}

TEST_CASE("car terminal rules") {
    const CarTask car(CarSpec{});
    const auto goal = car.dynamics(0.99, 1.0, 4.0);
    CHECK(goal.next[0] >= 1.0);
    CHECK(goal.reward == 100.0);
    CHECK(goal.terminal);
    const auto crash = car.dynamics(0.0, 2.99, 4.0);  // speeds past 3 going downhill? check sign
    if (std::abs(crash.next[1]) > 3.0) {
        CHECK(crash.terminal);
        CHECK(crash.reward == 0.0);
    }
    const auto fast = car.dynamics(-0.5, -3.0, -4.0);
    CHECK(std::abs(fast.next[1]) > 3.0);
    CHECK(fast.terminal);
    CHECK(fast.reward == 0.0);
    const auto fell = car.dynamics(-0.99, -0.5, -4.0);
    CHECK(fell.next[0] < -1.0);
    CHECK(fell.terminal);
    CHECK(fell.reward == 0.0);
}

TEST_CASE("car gauge hides velocity in its symbol set") {
    const CarTask car(CarSpec{});
    Rng rng(1);
    const auto slow = car.gauge_percept(-1.5, rng);
    const auto quick = car.gauge_percept(2.0, rng);
    CHECK(symbols_of(slow, car.dictionary()) == symbols_of(quick, car.dictionary()));
    auto cursor_x = [&](double s) {
        const auto g = car.gauge_percept(s, rng);
        for (const auto& pt : g.points)
            if (symbol_of(pt.descriptor, car.dictionary()) == car.cursor_symbol()) return pt.location.x;
        return -1.0;
    };
    const double x0 = cursor_x(0.0), x1 = cursor_x(1.0), x2 = cursor_x(2.5);
    CHECK(x1 - x0 > 0.0);
    CHECK((x2 - x0) == doctest::Approx(2.5 * (x1 - x0)));
    CHECK(car.window_left(0.1) == car.window_left(0.1));
    CHECK(!car.ground_percept(0.1, rng).points.empty());
}

TEST_CASE("exploration database") {
    const CampusTask campus(CampusSpec{});
    CHECK(collect_interactions(campus, {0, 1, 0}).interactions.empty());
    const auto a = collect_interactions(campus, {3000, 9, 0});
    const auto b = collect_interactions(campus, {3000, 9, 0});
    REQUIRE(a.interactions.size() == 3000);
    bool saw_terminal = false;
    for (std::size_t i = 0; i < 3000; ++i) {
        CHECK(a.interactions[i].s == b.interactions[i].s);
        CHECK(a.interactions[i].a == b.interactions[i].a);
        if (a.interactions[i].terminal_next) {
            saw_terminal = true;
            CHECK(a.interactions[i].s_next == a.interactions[i].s);
            CHECK(a.interactions[i].reward == 100.0);
        }
    }
    CHECK(saw_terminal);
    std::stringstream csv;
    write_interactions_csv(csv, a.interactions);
    const auto back = read_interactions_csv(csv);
    REQUIRE(back.size() == a.interactions.size());
    CHECK(back[7].s_next == a.interactions[7].s_next);
    CHECK(back[7].reward == a.interactions[7].reward);
}
