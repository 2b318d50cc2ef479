#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rlvc/bdd.hpp"
#include "rlvc/feature_graph.hpp"
#include "rlvc/mdp.hpp"

namespace rlvc {

/// Answers "does the percept exhibit feature f?".
using FeatureTest = std::function<bool(FeatureId)>;

/// Raised when the class functions stop forming a partition.
class PartitionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Split {
    ClassId present;  // percepts exhibiting the feature
    ClassId absent;
};

/**
 * Binary decision tree over feature tests. Leaves are the visual classes;
 * every refinement retires one class id and mints two fresh ones.
 */
class TreeClassifier {
public:
    TreeClassifier();

    ClassId classify(const FeatureTest& test) const;
    Split refine(ClassId v, FeatureId f);

    std::vector<ClassId> classes() const;
    std::size_t num_classes() const { return leaf_of_.size(); }
    bool has_class(ClassId v) const;
    /// Features tested on the path from the root to `v`'s leaf.
    std::vector<FeatureId> path_features(ClassId v) const;
    std::size_t depth(ClassId v) const { return path_features(v).size(); }

    void write(std::ostream& out) const;
    static TreeClassifier read(std::istream& in);

private:
    struct Node {
        bool leaf = true;
        FeatureId feature = 0;
        std::size_t present = 0;
        std::size_t absent = 0;
        std::size_t parent = 0;
        ClassId cls = 0;
    };

    std::size_t leaf_index(ClassId v) const;

    std::vector<Node> nodes_;
    std::vector<std::pair<ClassId, std::size_t>> leaf_of_;  // sorted by class id
    ClassId next_id_ = 0;
};

/**
 * One BDD per visual class over feature variables, sharing a node store.
 * The class functions partition the assignment space.
 */
class BddClassifier {
public:
    BddClassifier();

    /// Throws PartitionError unless exactly one class function holds.
    ClassId classify(const FeatureTest& test) const;
    Split refine(ClassId v, FeatureId f);
    /// Replaces v1 and v2 by one class holding their disjunction, then reorders.
    ClassId merge(ClassId v1, ClassId v2, bool reorder = true);
    void reorder_variables();

    std::vector<ClassId> classes() const;
    std::size_t num_classes() const { return classes_.size(); }
    bool has_class(ClassId v) const;

    BddManager::Ref function(ClassId v) const;
    const BddManager& manager() const { return manager_; }
    std::size_t node_count() const;
    std::vector<FeatureId> variable_order() const;

    /// Class functions on `assignment`; for checking the partition invariant.
    std::size_t count_true(const FeatureTest& test) const;
    /// Pairwise disjoint and jointly exhaustive, checked symbolically.
    bool is_partition() const;

    void write(std::ostream& out) const;
    static BddClassifier read(std::istream& in);

private:
    std::size_t index_of(ClassId v) const;

    BddManager manager_;
    std::vector<std::pair<ClassId, BddManager::Ref>> classes_;  // sorted by class id
    ClassId next_id_ = 0;
};

TreeClassifier refine(const TreeClassifier& c, ClassId v, FeatureId f);
BddClassifier refine(const BddClassifier& c, ClassId v, FeatureId f);
BddClassifier merge(const BddClassifier& c, ClassId v1, ClassId v2);
BddClassifier reorder_variables(const BddClassifier& c);

enum class EquivalenceKind : unsigned { value = 1, policy = 2, state_action = 4 };

struct EquivalenceSpec {
    double epsilon = 0.0;
    unsigned relations = static_cast<unsigned>(EquivalenceKind::value) |
                         static_cast<unsigned>(EquivalenceKind::policy);

    bool uses(EquivalenceKind k) const { return (relations & static_cast<unsigned>(k)) != 0; }
};

struct ClassPair {
    ClassId first;
    ClassId second;
    double value_gap;  // |V*(first) - V*(second)|
};

/**
 * Class pairs satisfying every enabled relation, sorted by value gap then ids.
 * States of `mapped` with an unobserved action are never matched; the sink
 * state is ignored.
 */
std::vector<ClassPair> find_equivalent_pairs(const MappedMdp& mapped, const QFunction& q,
                                             const EquivalenceSpec& spec);

}  // namespace rlvc
