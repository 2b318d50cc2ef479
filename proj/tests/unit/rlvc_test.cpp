#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "oracles.hpp"
#include "rlvc/rlvc.hpp"

using namespace rlvc;

namespace {

double max_abs_delta(const std::vector<ResidualSample>& rs) {
    double m = 0.0;
    for (const auto& r : rs) m = std::max(m, std::abs(r.delta));
    return m;
}

RlvcConfig config(Backend backend = Backend::tree) {
    RlvcConfig c;
    c.tau = 1.0;
    c.backend = backend;
    c.equivalence.epsilon = 5.0;
    return c;
}

}  // namespace

TEST_CASE("aliased bandit residuals by hand") {
    const auto d = oracle::aliased_bandit();
    const std::vector<ClassId> one_class(d.percepts.size(), 0);
    const auto mapped = estimate_mapped_mdp(d.interactions, one_class, 1, d.discount);
    const auto q = solve_optimal_q(mapped.mdp);
    CHECK(q(mapped.state_of(0), 0) == doctest::Approx(50.0));
    const auto rs = residuals(d.interactions, one_class, mapped, q);
    for (const auto& r : rs) CHECK(std::abs(r.delta) == doctest::Approx(50.0));
    CHECK(aliased(rs, 1.0));
    CHECK_FALSE(aliased(rs, 2500.0));
}

TEST_CASE("aliasing needs two samples for an action") {
    const std::vector<ResidualSample> lone{{0, 0, 0, 50.0}, {1, 0, 1, -50.0}};
    CHECK_FALSE(aliased(lone, 1.0));
}

TEST_CASE("feature selection picks the perfect split") {
    const std::vector<ResidualSample> rs{{0, 0, 0, 0.0}, {1, 0, 0, 0.0}, {2, 0, 0, 100.0}, {3, 0, 0, 100.0}};
    const std::vector<FeatureId> candidates{4, 9};
    // Feature 9 is present exactly on the 100s; 4 on a mixed half.
    auto shows = [](std::size_t t, FeatureId f) { return f == 9 ? t >= 2 : t % 2 == 0; };
    const auto choice = select_feature(rs, candidates, shows, 0.05);
    REQUIRE(choice);
    CHECK(choice->feature == 9);
    CHECK(choice->score == 0.0);
    CHECK(choice->variance_before == doctest::Approx(2500.0));
    // Nothing significant: only a noisy split is offered.
    const std::vector<FeatureId> noisy{4};
    CHECK_FALSE(select_feature(rs, noisy, shows, 0.05));
}

TEST_CASE("the bandit is split once and its residuals vanish") {
    const auto d = oracle::aliased_bandit();
    const auto dict = oracle::line_dictionary(2);
    const FeatureGraph g(dict);
    RlvcLearner learner(d, g, config());
    IterationRecord seen;
    CHECK(learner.step([&](const VisualPolicy&, IterationRecord& r) { seen = r; }));
    CHECK(seen.aliased_classes == 1);
    CHECK(seen.max_residual_variance == doctest::Approx(2500.0));
    CHECK(learner.trace().records.back().splits == 1);
    CHECK(num_classes(learner.classifier()) == 2);
    learner.solve();
    CHECK(max_abs_delta(residuals(d.interactions, learner.assignment(), learner.mapped(), learner.q())) == 0.0);
    CHECK_FALSE(learner.step());
}

TEST_CASE("a perfect classifier on a deterministic grid has zero residuals") {
    const auto d = oracle::Grid4::dataset(10000, 1);
    const auto dict = oracle::line_dictionary(oracle::Grid4::cells);
    const FeatureGraph g(dict);
    RlvcLearner learner(d, g, config());
    for (FeatureId f = 0; f + 1 < oracle::Grid4::cells; ++f) {
        const ClassId rest = learner.assignment()[oracle::Grid4::cells - 1];
        learner.refine(rest, f);
    }
    CHECK(num_classes(learner.classifier()) == 16);
    learner.solve();
    CHECK(max_abs_delta(residuals(d.interactions, learner.assignment(), learner.mapped(), learner.q())) <= 1e-6);
}

TEST_CASE("learning the grid from scratch recovers the optimal policy") {
    const auto d = oracle::Grid4::dataset(10000, 2);
    const auto dict = oracle::line_dictionary(oracle::Grid4::cells);
    const FeatureGraph g(dict);
    auto cfg = config();
    cfg.max_splits_per_iteration = 2;
    const auto result = run_rlvc(d, g, cfg);
    CHECK(result.converged);
    for (const auto& r : result.trace.records) CHECK(r.splits <= 2);
    for (std::size_t k = 1; k < result.trace.records.size(); ++k)
        CHECK(result.trace.records[k].classes >= result.trace.records[k - 1].classes);
    CHECK(max_abs_delta(result.final_residuals) <= 1e-6);
    // Optimal moves from every non-goal cell: any action that brings the
    // Manhattan distance to the goal down.
    for (std::size_t c = 0; c + 1 < oracle::Grid4::cells; ++c) {
        const ActionId a = result.policy.act(d.percepts[c]);
        const auto [n, r] = oracle::Grid4::move(c, a);
        auto dist = [](std::size_t x) { return 6 - x % 4 - x / 4; };
        CHECK(dist(n) + 1 == dist(c));
        (void)r;
    }
}

TEST_CASE("post-processing merges a chain of equivalent classes") {
    // Three percepts paying the same and ending the episode.
    Dataset d;
    d.num_actions = 1;
    d.discount = 0.9;
    for (Symbol s = 0; s < 3; ++s) d.percepts.push_back(oracle::view({{{0, 0}, s}}));
    for (int i = 0; i < 10; ++i)
        for (PerceptId p = 0; p < 3; ++p) d.interactions.push_back({p, 0, 10.0, p, true});
    const auto dict = oracle::line_dictionary(3);
    const FeatureGraph g(dict);
    RlvcLearner learner(d, g, config(Backend::bdd));
    learner.refine(learner.assignment()[0], 0);
    learner.refine(learner.assignment()[1], 1);
    CHECK(num_classes(learner.classifier()) == 3);
    CHECK(learner.post_process() == 2);
    CHECK(num_classes(learner.classifier()) == 1);
    // Nothing left to merge; the tree backend never merges.
    CHECK(learner.post_process() == 0);
}

TEST_CASE("merges that would alias are refused") {
    // Same values within epsilon, but pooling 10 and 14 leaves variance 4 > tau.
    Dataset d;
    d.num_actions = 1;
    d.discount = 0.9;
    for (Symbol s = 0; s < 2; ++s) d.percepts.push_back(oracle::view({{{0, 0}, s}}));
    for (int i = 0; i < 10; ++i) {
        d.interactions.push_back({0, 0, 10.0, 0, true});
        d.interactions.push_back({1, 0, 14.0, 1, true});
    }
    const auto dict = oracle::line_dictionary(2);
    const FeatureGraph g(dict);
    RlvcLearner learner(d, g, config(Backend::bdd));
    learner.refine(learner.assignment()[0], 0);
    CHECK(learner.post_process() == 0);
    CHECK(num_classes(learner.classifier()) == 2);
}

TEST_CASE("mutation hook sees every refine and merge") {
    const auto d = oracle::aliased_bandit();
    const auto dict = oracle::line_dictionary(2);
    const FeatureGraph g(dict);
    RlvcLearner learner(d, g, config(Backend::bdd));
    int calls = 0;
    learner.on_mutation([&](const Classifier& c) {
        ++calls;
        CHECK(std::get<BddClassifier>(c).num_classes() >= 1);
    });
    learner.run();
    CHECK(calls == 1);
}

TEST_CASE("trace CSV and checkpoints") {
    const auto d = oracle::aliased_bandit();
    const auto dict = oracle::line_dictionary(2);
    const FeatureGraph g(dict);
    for (Backend b : {Backend::tree, Backend::bdd}) {
        const auto result = run_rlvc(d, g, config(b));
        std::ostringstream csv;
        write_trace_csv(csv, result.trace);
        CHECK(csv.str().rfind("k,classes,splits,merges,aliased,max_residual_variance,error_learning,error_test\n", 0) == 0);
        const auto dir = std::filesystem::temp_directory_path() / ("rlvc_ckpt_" + std::to_string(int(b)));
        result.policy.save(dir.string());
        const auto back = VisualPolicy::load(dir.string(), dict);
        for (const auto& p : d.percepts) {
            CHECK(back.act(p) == result.policy.act(p));
            CHECK(back.q_values(p) == result.policy.q_values(p));
        }
        std::filesystem::remove_all(dir);
    }
}

TEST_CASE("config validation") {
    RlvcConfig c;
    c.alpha = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = RlvcConfig{};
    c.tau = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    const Dataset empty;
    const auto dict = oracle::line_dictionary(1);
    CHECK_THROWS_AS(RlvcLearner(empty, FeatureGraph(dict), RlvcConfig{}), std::invalid_argument);
}
