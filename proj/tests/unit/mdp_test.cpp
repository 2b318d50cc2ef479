#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rlvc/mdp.hpp"
#include "rlvc/stats.hpp"

using namespace rlvc;

TEST_CASE("discounted return") {
    CHECK(discounted_return({}, 0.9) == 0.0);
    const std::vector<double> one{100.0};
    CHECK(discounted_return(one, 0.9) == 100.0);
    const std::vector<double> ones(50, 1.0);
    CHECK(discounted_return(ones, 0.5) == doctest::Approx(2.0 * (1.0 - std::pow(0.5, 50))).epsilon(1e-15));
}

TEST_CASE("bellman backup by hand") {
    // s=0 goes to u=1 or v=2 with equal odds; u and v self-loop.
    FiniteMdp mdp(3, 1, 0.5);
    mdp.set_transition(0, 0, {{1, 0.5}, {2, 0.5}});
    mdp.set_transition(1, 0, {{1, 1.0}});
    mdp.set_transition(2, 0, {{2, 1.0}});
    mdp.set_reward(0, 0, 1.0);
    QFunction q(3, 1);
    q(1, 0) = 10.0;
    q(2, 0) = 20.0;
    CHECK(bellman_backup(q, mdp)(0, 0) == doctest::Approx(8.5));

    QFunction zero(3, 1);
    mdp.set_reward(1, 0, 7.0);
    CHECK(bellman_backup(zero, mdp)(1, 0) == 7.0);
}

TEST_CASE("terminal states pay nothing") {
    FiniteMdp mdp(2, 1, 0.9);
    mdp.set_transition(0, 0, {{1, 1.0}});
    mdp.set_reward(0, 0, 100.0);
    mdp.set_transition(1, 0, {{1, 1.0}});
    mdp.set_reward(1, 0, 5.0);
    mdp.set_terminal(1);
    const auto q = solve_optimal_q(mdp);
    CHECK(q(0, 0) == doctest::Approx(100.0));
    CHECK(q(1, 0) == 0.0);
    CHECK(optimal_values(q)[0] == doctest::Approx(100.0));
    CHECK(greedy_policy(q)[0] == 0);
}

TEST_CASE("self loop solves to the geometric sum") {
    FiniteMdp mdp(1, 1, 0.5);
    mdp.set_transition(0, 0, {{0, 1.0}});
    mdp.set_reward(0, 0, 1.0);
    CHECK(solve_optimal_q(mdp)(0, 0) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("malformed rows are rejected") {
    FiniteMdp mdp(2, 1, 0.9);
    mdp.set_transition(0, 0, {{1, 0.4}});
    mdp.set_transition(1, 0, {{1, 1.0}});
    CHECK_THROWS_AS(mdp.validate(), std::invalid_argument);
}

TEST_CASE("sweep cap raises") {
    FiniteMdp mdp(1, 1, 0.99);
    mdp.set_transition(0, 0, {{0, 1.0}});
    mdp.set_reward(0, 0, 1.0);
    CHECK_THROWS_AS(solve_optimal_q(mdp, {1e-12, 5}), ConvergenceError);
}

TEST_CASE("greedy ties go to the lowest action; shifts do not matter") {
    QFunction q(2, 3);
    q(0, 0) = 1.0;
    q(0, 1) = 3.0;
    q(0, 2) = 3.0;
    CHECK(greedy_policy(q) == Policy{1, 0});
    QFunction shifted = q;
    for (StateId s = 0; s < 2; ++s)
        for (ActionId a = 0; a < 3; ++a) shifted(s, a) += 42.0;
    CHECK(greedy_policy(shifted) == greedy_policy(q));
}

TEST_CASE("value iteration matches policy enumeration") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 40; ++i) {
        const double gamma = i % 2 ? 0.9 : 0.5;
        const auto dense = oracle::random_dense_mdp(rng, 5, 3, gamma);
        const auto expected = oracle::enumerate_optimal_q(dense);
        const auto q = solve_optimal_q(oracle::to_finite(dense));
        for (std::size_t s = 0; s < dense.n; ++s)
            for (std::size_t a = 0; a < dense.m; ++a) CHECK(q(s, a) == doctest::Approx(expected[s][a]).epsilon(1e-7));
        // Fixed point: one more backup moves nothing beyond the tolerance.
        CHECK(bellman_backup(q, oracle::to_finite(dense)).distance(q) <= 1e-9);
    }
}

TEST_CASE("mapped MDP by relative frequencies") {
    // Classes: percept 0 -> V=10, percept 1 -> W=20.
    const std::vector<Interaction> log{{0, 0, 0.0, 0, false}, {0, 0, 10.0, 1, false}};
    const std::vector<ClassId> class_of{10, 20};
    const auto m = estimate_mapped_mdp(log, class_of, 2, 0.9);
    const StateId v = m.state_of(10);
    CHECK(m.mdp.reward(v, 0) == doctest::Approx(5.0));
    double to_v = 0.0, to_w = 0.0;
    for (const auto& [t, p] : m.mdp.transition(v, 0)) (t == v ? to_v : to_w) += p;
    CHECK(to_v == doctest::Approx(0.5));
    CHECK(to_w == doctest::Approx(0.5));
    CHECK(m.count(v, 0) == 2);
    CHECK_FALSE(m.observed(v, 1));
    // Unobserved: zero-reward self-loop.
    CHECK(m.mdp.reward(v, 1) == 0.0);
    REQUIRE(m.mdp.transition(v, 1).size() == 1);
    CHECK(m.mdp.transition(v, 1)[0].first == v);
}

TEST_CASE("mapped MDP counts equal a brute-force recount") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> pick(0, 9), act(0, 2);
    std::vector<Interaction> log;
    for (int i = 0; i < 500; ++i) log.push_back({pick(rng), act(rng), 1.0, pick(rng), i % 17 == 0});
    std::vector<ClassId> class_of(10);
    for (std::size_t p = 0; p < 10; ++p) class_of[p] = p % 4;
    const auto m = estimate_mapped_mdp(log, class_of, 3, 0.9);
    for (ClassId c = 0; c < 4; ++c)
        for (ActionId a = 0; a < 3; ++a) {
            std::size_t n = 0;
            for (const auto& it : log) n += class_of[it.s] == c && it.a == a;
            CHECK(m.count(m.state_of(c), a) == n);
            if (n == 0) continue;
            double total = 0.0;
            for (const auto& [t, p] : m.mdp.transition(m.state_of(c), a)) total += p;
            CHECK(total == doctest::Approx(1.0));
        }
    CHECK(m.mdp.terminal(m.sink()));
}

TEST_CASE("greedy observed policy skips unseen actions") {
    const std::vector<Interaction> log{{0, 1, -5.0, 0, false}};
    const std::vector<ClassId> class_of{0};
    const auto m = estimate_mapped_mdp(log, class_of, 2, 0.5);
    const auto q = solve_optimal_q(m.mdp);
    CHECK(greedy_policy(q)[0] == 0);  // the unseen action looks better (0 > -10)
    CHECK(greedy_observed_policy(q, m)[0] == 1);
}

TEST_CASE("welch test") {
    Moments a, b;
    for (double x : {1.0, 2.0, 3.0, 4.0}) a.add(x);
    for (double x : {11.0, 12.0, 13.0, 14.0}) b.add(x);
    CHECK(a.population_variance() == doctest::Approx(1.25));
    CHECK(a.sample_variance() == doctest::Approx(5.0 / 3.0));
    // t = 10 / sqrt(5/3/4 * 2), df = 6; p from a t table well below 1e-4.
    CHECK(welch_p_value(a, b) < 1e-4);
    CHECK(welch_significant(a, b, 0.05));
    Moments c, d;
    for (double x : {0.0, 0.0}) c.add(x);
    for (double x : {100.0, 100.0}) d.add(x);
    CHECK(welch_p_value(c, d) == 0.0);
    CHECK(welch_p_value(c, c) == 1.0);
}
