#include <doctest.h>

#include <map>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "rlvc/classifier.hpp"

using namespace rlvc;

namespace {

FeatureTest bits(unsigned mask) {
    return [mask](FeatureId f) { return f < 32 && ((mask >> f) & 1u); };
}

}  // namespace

TEST_CASE("fresh classifiers put everything in one class") {
    TreeClassifier t;
    BddClassifier b;
    CHECK(t.num_classes() == 1);
    CHECK(b.num_classes() == 1);
    for (unsigned m = 0; m < 8; ++m) {
        CHECK(t.classify(bits(m)) == t.classes()[0]);
        CHECK(b.classify(bits(m)) == b.classes()[0]);
    }
}

TEST_CASE("tree refinement") {
    TreeClassifier t;
    const ClassId root = t.classes()[0];
    const Split s = t.refine(root, 3);
    CHECK(t.num_classes() == 2);
    CHECK_FALSE(t.has_class(root));
    CHECK(t.classify(bits(1u << 3)) == s.present);
    CHECK(t.classify(bits(0)) == s.absent);
    const Split s2 = t.refine(s.absent, 1);
    CHECK(t.path_features(s2.present) == std::vector<FeatureId>{3, 1});
    CHECK_THROWS(t.refine(root, 2));
    std::stringstream io;
    t.write(io);
    const auto back = TreeClassifier::read(io);
    for (unsigned m = 0; m < 16; ++m) CHECK(back.classify(bits(m)) == t.classify(bits(m)));
}

TEST_CASE("BDD refine then merge is the identity") {
    BddClassifier b;
    const Split s = b.refine(b.classes()[0], 0);
    const auto g = b.function(s.present);  // g = x0
    const Split t = b.refine(s.present, 5);
    for (unsigned m = 0; m < 64; ++m) {
        auto at = [m](BddManager::Var v) { return ((m >> v) & 1u) != 0; };
        const bool either = b.manager().evaluate(b.function(t.present), at) || b.manager().evaluate(b.function(t.absent), at);
        CHECK(either == b.manager().evaluate(g, at));
    }
    // Without reordering the store keeps its numbering, so equal functions share one node.
    const ClassId joined = b.merge(t.present, t.absent, false);
    CHECK(b.function(joined) == g);
    CHECK(b.is_partition());
    b.reorder_variables();
    for (unsigned m = 0; m < 64; ++m) {
        auto at = [m](BddManager::Var v) { return ((m >> v) & 1u) != 0; };
        CHECK(b.manager().evaluate(b.function(joined), at) == ((m & 1u) != 0));
    }
}

TEST_CASE("BDD refine rejects constant features") {
    BddClassifier b;
    const Split s = b.refine(b.classes()[0], 0);
    CHECK_THROWS_AS(b.refine(s.present, 0), std::logic_error);
}

TEST_CASE("merging drops a vacuous variable") {
    BddClassifier b;
    const Split s = b.refine(b.classes()[0], 2);
    const Split t = b.refine(s.present, 4);
    b.merge(t.present, t.absent);  // x2 and x4 | x2 and not x4 = x2
    const auto order = b.variable_order();
    CHECK(std::find(order.begin(), order.end(), FeatureId{4}) == order.end());
    const auto support = b.manager().support(b.function(b.classify(bits(1u << 2))));
    CHECK(support == std::vector<BddManager::Var>{2});
}

TEST_CASE("merging beyond tree expressiveness keeps a partition") {
    BddClassifier b;
    const Split a = b.refine(b.classes()[0], 0);
    const Split p = b.refine(a.present, 1);
    const Split q = b.refine(a.absent, 1);
    // x0 x1 | !x0 !x1 : not a tree leaf.
    const ClassId same = b.merge(p.present, q.absent);
    CHECK(b.num_classes() == 3);
    CHECK(b.is_partition());
    CHECK(b.classify(bits(0b11)) == same);
    CHECK(b.classify(bits(0b00)) == same);
    CHECK(b.classify(bits(0b01)) != same);
    for (unsigned m = 0; m < 4; ++m) CHECK(b.count_true(bits(m)) == 1);
}

TEST_CASE("BDD agrees with the tree on the same splits and matches truth tables") {
    std::mt19937_64 rng(4);
    TreeClassifier t;
    BddClassifier b;
    std::map<ClassId, ClassId> tree_to_bdd{{t.classes()[0], b.classes()[0]}};
    std::uniform_int_distribution<FeatureId> feat(0, 7);
    for (int step = 0; step < 40; ++step) {
        const auto leaves = t.classes();
        const ClassId v = leaves[rng() % leaves.size()];
        const FeatureId f = feat(rng);
        const auto path = t.path_features(v);
        if (std::find(path.begin(), path.end(), f) != path.end()) continue;
        const Split st = t.refine(v, f);
        const Split sb = b.refine(tree_to_bdd.at(v), f);
        tree_to_bdd[st.present] = sb.present;
        tree_to_bdd[st.absent] = sb.absent;
    }
    CHECK(b.is_partition());
    for (unsigned m = 0; m < 256; ++m) {
        CHECK(tree_to_bdd.at(t.classify(bits(m))) == b.classify(bits(m)));
        CHECK(b.count_true(bits(m)) == 1);
    }
    std::stringstream io;
    b.write(io);
    const auto back = BddClassifier::read(io);
    for (unsigned m = 0; m < 256; ++m) CHECK(back.classify(bits(m)) == b.classify(bits(m)));
}

TEST_CASE("sifting never grows the diagram") {
    // f = x0 x3 | x1 x4 | x2 x5 under the interleaved order 0,1,2,3,4,5 is
    // exponential; pairing the variables is linear.
    BddManager m;
    for (BddManager::Var v = 0; v < 6; ++v) m.var(v);
    auto f = m.disj(m.disj(m.conj(m.var(0), m.var(3)), m.conj(m.var(1), m.var(4))), m.conj(m.var(2), m.var(5)));
    std::vector<BddManager::Ref> roots{f};
    const std::size_t before = m.node_count(roots);
    std::vector<bool> table;
    for (unsigned x = 0; x < 64; ++x) table.push_back(m.evaluate(f, [x](auto v) { return (x >> v) & 1u; }));
    m.sift(roots);
    CHECK(m.node_count(roots) <= before);
    CHECK(m.node_count(roots) == 6);
    for (unsigned x = 0; x < 64; ++x) CHECK(m.evaluate(roots[0], [x](auto v) { return (x >> v) & 1u; }) == table[x]);
}

TEST_CASE("BDD operations match truth tables") {
    std::mt19937_64 rng(8);
    BddManager m;
    auto eval = [&](BddManager::Ref f, unsigned x) { return m.evaluate(f, [x](auto v) { return (x >> v) & 1u; }); };
    for (int trial = 0; trial < 50; ++trial) {
        // Random formula over 4 variables with its truth table.
        std::vector<std::pair<BddManager::Ref, unsigned>> pool;
        for (BddManager::Var v = 0; v < 4; ++v) {
            unsigned tt = 0;
            for (unsigned x = 0; x < 16; ++x) tt |= ((x >> v) & 1u) << x;
            pool.emplace_back(m.var(v), tt);
        }
        for (int k = 0; k < 6; ++k) {
            const auto& [f, tf] = pool[rng() % pool.size()];
            const auto& [g, tg] = pool[rng() % pool.size()];
            switch (rng() % 3) {
                case 0: pool.emplace_back(m.conj(f, g), tf & tg); break;
                case 1: pool.emplace_back(m.disj(f, g), tf | tg); break;
                default: pool.emplace_back(m.negate(f), ~tf & 0xffffu); break;
            }
        }
        for (const auto& [f, tt] : pool)
            for (unsigned x = 0; x < 16; ++x) CHECK(eval(f, x) == bool((tt >> x) & 1u));
        // Canonical: equal tables give equal refs.
        for (const auto& [f, tf] : pool)
            for (const auto& [g, tg] : pool) CHECK((f == g) == (tf == tg));
    }
}

TEST_CASE("equivalence relations") {
    // Two classes with both actions observed, plus a third seen on one action.
    const std::vector<Interaction> log{{0, 0, 0, 0, false}, {0, 1, 0, 0, false}, {1, 0, 0, 1, false},
                                       {1, 1, 0, 1, false}, {2, 0, 0, 2, false}};
    const std::vector<ClassId> class_of{100, 200, 300};
    const auto mapped = estimate_mapped_mdp(log, class_of, 2, 0.9);
    QFunction q(mapped.mdp.num_states(), 2);
    const StateId v = mapped.state_of(100), w = mapped.state_of(200), x = mapped.state_of(300);
    q(v, 0) = 10.0;
    q(v, 1) = 9.9;
    q(w, 0) = 9.8;
    q(w, 1) = 10.4;
    q(x, 0) = 10.0;

    EquivalenceSpec vp{0.5};
    const auto pairs = find_equivalent_pairs(mapped, q, vp);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].first == 100);
    CHECK(pairs[0].second == 200);

    EquivalenceSpec strict{0.3};
    CHECK(find_equivalent_pairs(mapped, q, strict).empty());

    // Per-action gaps are 0.2 and 0.5.
    EquivalenceSpec sa{0.4, static_cast<unsigned>(EquivalenceKind::state_action)};
    CHECK(find_equivalent_pairs(mapped, q, sa).empty());
    EquivalenceSpec sa2{0.5, static_cast<unsigned>(EquivalenceKind::state_action)};
    CHECK(find_equivalent_pairs(mapped, q, sa2).size() == 1);

    QFunction same(mapped.mdp.num_states(), 2);
    same(v, 0) = same(w, 0) = 3.0;
    same(v, 1) = same(w, 1) = 1.0;
    for (unsigned rel : {1u, 2u, 4u}) CHECK(find_equivalent_pairs(mapped, same, {0.0, rel}).size() == 1);
}

TEST_CASE("symbolic partition check catches overlaps and gaps") {
    BddManager m;
    const auto x0 = m.var(0), x1 = m.var(1), x2 = m.var(2);
    const auto both = m.conj(x0, x1);
    std::vector<BddManager::Ref> split{x0, m.negate(x0)};
    CHECK(m.is_partition(split));
    std::vector<BddManager::Ref> overlap{x0, m.negate(x0), both};
    CHECK_FALSE(m.is_partition(overlap));
    std::vector<BddManager::Ref> gap{both, m.negate(x0)};
    CHECK_FALSE(m.is_partition(gap));
    // Counting spans variables no root mentions.
    std::vector<BddManager::Ref> three{m.conj(x0, x2), m.conj(x0, m.negate(x2)), m.negate(x0)};
    CHECK(m.is_partition(three));
    CHECK(m.intersects(x1, x2));
    CHECK_FALSE(m.intersects(both, m.negate(x1)));
}
