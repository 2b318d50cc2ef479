#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

namespace rlvc {

/**
 * Reduced ordered BDD store with hash-consing. Variables are arbitrary
 * 64-bit labels; the order is kept explicitly and can be changed by adjacent
 * level swaps, which rewrite nodes in place so that every Ref keeps denoting
 * the same Boolean function.
 *
 * Refs of dead nodes stay valid until garbage_collect(), which renumbers the
 * store and rewrites the caller's roots.
 */
class BddManager {
public:
    using Ref = std::uint32_t;
    using Var = std::uint64_t;
    static constexpr Ref zero = 0;
    static constexpr Ref one = 1;

    BddManager();

    /// Literal for `v`; an unknown variable is appended at the bottom of the order.
    Ref var(Var v);
    Ref nvar(Var v);

    Ref negate(Ref f);
    Ref conj(Ref f, Ref g);
    Ref disj(Ref f, Ref g);
    Ref ite(Ref f, Ref g, Ref h);

    bool evaluate(Ref f, const std::function<bool(Var)>& assignment) const;

    /// True iff some assignment satisfies both; builds no nodes.
    bool intersects(Ref f, Ref g) const;

    /// True iff every assignment satisfies exactly one of `roots`: pairwise
    /// disjoint, and model counts summing to 2^n. Builds no nodes.
    bool is_partition(std::span<const Ref> roots) const;

    /// Variables `f` depends on, in current order.
    std::vector<Var> support(Ref f) const;

    /// Internal nodes reachable from `roots` (terminals excluded).
    std::size_t node_count(std::span<const Ref> roots) const;

    const std::vector<Var>& order() const { return order_; }
    bool has_var(Var v) const { return level_.contains(v); }
    std::size_t level_of(Var v) const { return level_.at(v); }

    /// Exchanges the variables at `level` and `level + 1`.
    void swap_adjacent(std::size_t level);

    /// Greedy sifting against the total size of `roots`; never ends larger.
    void sift(std::span<Ref> roots, double max_growth = 1.2);

    /// Drops unreachable nodes and renumbers; `roots` are rewritten.
    void garbage_collect(std::span<Ref> roots);

    /// Removes variables that no root depends on from the order.
    void drop_unused_variables(std::span<Ref> roots);

    std::size_t store_size() const { return nodes_.size(); }

    struct Node {
        Var var;
        Ref low;
        Ref high;
    };
    const Node& node(Ref f) const { return nodes_[f]; }
    bool is_terminal(Ref f) const { return f <= one; }

    /// Node table (children before parents) followed by the order; `roots`
    /// are written as refs into that table.
    void write(std::ostream& out) const;
    /// Reads the format written by write(); the store must be fresh.
    static BddManager read(std::istream& in);

private:
    struct Key {
        Var var;
        Ref low;
        Ref high;
        friend bool operator==(const Key&, const Key&) = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept;
    };
    struct Triple {
        Ref f, g, h;
        friend bool operator==(const Triple&, const Triple&) = default;
    };
    struct TripleHash {
        std::size_t operator()(const Triple& t) const noexcept;
    };

    std::size_t level_of_ref(Ref f) const;
    Ref make(Var v, Ref low, Ref high);
    Ref cofactor(Ref f, Var v, bool value) const;
    void clear_caches();

    std::vector<Node> nodes_;
    std::unordered_map<Key, Ref, KeyHash> unique_;
    std::unordered_map<Triple, Ref, TripleHash> ite_cache_;
    std::vector<Var> order_;
    std::unordered_map<Var, std::size_t> level_;
};

}  // namespace rlvc
