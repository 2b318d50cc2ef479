#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "rlvc/clustering.hpp"
#include "rlvc/feature_graph.hpp"

using namespace rlvc;

TEST_CASE("complete linkage agrees with the quadratic version") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> xs(25);
        for (auto& x : xs) x = u(rng);
        for (double cut : {0.0, 3.0, 15.0, 60.0}) {
            CHECK(complete_linkage_1d(xs, cut) == oracle::naive_complete_linkage(xs, cut));
        }
    }
    CHECK(complete_linkage_1d(std::vector<double>{}, 1.0).empty());
}

TEST_CASE("composite detection by hand") {
    const auto dict = oracle::line_dictionary(3);
    FeatureGraph g(dict);
    const CompositeParams p{0.5, 10, 15.0, 5, 0.5};
    const auto s = oracle::view({{{0, 0}, 0}, {{10, 0}, 1}});
    const auto at = occurrences(CompositeSpec{0, 1, 10.0, 1.0}, s, g, p);
    CHECK(at == std::vector<Point2>{{5, 0}});
    const auto far = oracle::view({{{0, 0}, 0}, {{20, 0}, 1}});
    CHECK(occurrences(CompositeSpec{0, 1, 10.0, 1.0}, far, g, p).empty());
    CHECK(occurrences(CompositeSpec{0, 2, 10.0, 1.0}, s, g, p).empty());
}

TEST_CASE("composite detection matches the double loop, symmetric, monotone in nu") {
    const auto dict = oracle::line_dictionary(3);
    FeatureGraph g(dict);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> pos(0.0, 60.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<LocatedSymbol> pts;
        std::vector<Point2> a, b;
        for (int i = 0; i < 6; ++i) {
            const Point2 p{std::round(pos(rng)), std::round(pos(rng))};
            const Symbol sym = static_cast<Symbol>(i % 2);
            pts.push_back({p, sym});
            (sym == 0 ? a : b).push_back(p);
        }
        const auto s = oracle::view(pts);
        std::size_t last_count = 1000;
        for (double nu : {0.05, 0.3, 0.8}) {
            const CompositeParams p{nu, 10, 15.0, 5, 0.5};
            const auto got = occurrences(CompositeSpec{0, 1, 25.0, 6.0}, s, g, p);
            std::set<std::pair<double, double>> mine;
            for (const auto& q : got) mine.emplace(q.x, q.y);
            CHECK(mine == oracle::brute_force_midpoints(a, b, 25.0, 6.0, nu));
            const auto swapped = occurrences(CompositeSpec{1, 0, 25.0, 6.0}, s, g, p);
            CHECK(swapped == got);
            CHECK(got.size() <= last_count);
            last_count = got.size();
        }
    }
}

TEST_CASE("nested composites detect through their parts") {
    const auto dict = oracle::line_dictionary(3);
    FeatureGraph g(dict);
    const CompositeParams p{0.5, 10, 15.0, 5, 0.5};
    const FeatureId c01 = g.add_composite({0, 1, 10.0, 1.0});
    const FeatureId top = g.add_composite({c01, 2, 5.0, 1.0});
    CHECK(g.leaf_count(top) == 3);
    // Pair (0,0)-(10,0) sits at (5,0); symbol 2 at (5,5) is 5 away.
    const auto s = oracle::view({{{0, 0}, 0}, {{10, 0}, 1}, {{5, 5}, 2}});
    CHECK(occurrences(top, s, g, p) == std::vector<Point2>{{5, 2.5}});
    CHECK(exhibits(top, s, g, p));
    CHECK_FALSE(exhibits(top, oracle::view({{{0, 0}, 0}, {{10, 0}, 1}}), g, p));
}

TEST_CASE("graph stays acyclic and deduplicates") {
    const auto dict = oracle::line_dictionary(2);
    FeatureGraph g(dict);
    const FeatureId c = g.add_composite({0, 1, 10.0, 1.0});
    CHECK(c == 2);
    CHECK(g.add_composite({0, 1, 10.4, 1.0}) == c);
    CHECK(g.size() == 3);
    CHECK_THROWS(g.add_composite({0, 7, 1.0, 1.0}));
    std::stringstream io;
    write_feature_graph(io, g);
    const auto back = read_feature_graph(io, dict);
    CHECK(back.size() == 3);
    CHECK(back.composite(2) == g.composite(2));
}

TEST_CASE("composite generation from distance clusters") {
    const auto dict = oracle::line_dictionary(2);
    FeatureGraph g(dict);
    const CompositeParams p{0.1, 10, 15.0, 5, 0.5};
    std::vector<SymbolizedPercept> stable, bimodal, rare;
    for (int i = 0; i < 20; ++i) {
        const double jitter = (i % 3 - 1) * 0.1;
        stable.push_back(oracle::view({{{0, 0}, 0}, {{10 + jitter, 0}, 1}}));
        const double d = i % 2 ? 40.0 : 10.0;
        bimodal.push_back(oracle::view({{{0, 0}, 0}, {{d, 0}, 1}}));
    }
    for (int i = 0; i < 9; ++i) rare.push_back(oracle::view({{{0, 0}, 0}, {{10, 0}, 1}}));

    const auto one = generate_composites(stable, g, p);
    REQUIRE(one.size() == 1);
    CHECK(one[0].mu == doctest::Approx(10.0).epsilon(1e-2));
    CHECK(one[0].sigma >= 0.5);

    const auto two = generate_composites(bimodal, g, p);
    REQUIRE(two.size() == 2);
    CHECK(two[0].mu == doctest::Approx(10.0));
    CHECK(two[1].mu == doctest::Approx(40.0));

    CHECK(generate_composites(rare, g, p).empty());
}
