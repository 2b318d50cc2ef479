#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rlvc/percept.hpp"

namespace rlvc {

using FeatureId = std::size_t;

/// Two parts whose separation follows a Gaussian of mean `mu`, deviation `sigma`.
struct CompositeSpec {
    FeatureId part1 = 0;
    FeatureId part2 = 0;
    double mu = 0.0;
    double sigma = 1.0;

    friend bool operator==(const CompositeSpec&, const CompositeSpec&) = default;
};

struct CompositeParams {
    double nu = 0.1;                    // likelihood threshold, in (0, 1]
    std::size_t min_cooccurrence = 10;  // percepts that must show both parts
    double cluster_cut = 15.0;          // complete-linkage diameter
    std::size_t min_cluster_size = 5;
    double sigma_floor = 0.5;

    void validate() const;
};

/**
 * Binary DAG of visual features. Vertex ids [0, num_primitives) are the
 * dictionary symbols; composites are appended after them and may only
 * reference vertices that already exist, so the graph stays acyclic.
 */
class FeatureGraph {
public:
    explicit FeatureGraph(const FeatureDictionary& dict);

    std::size_t size() const { return num_primitives_ + composites_.size(); }
    std::size_t num_primitives() const { return num_primitives_; }
    std::size_t num_composites() const { return composites_.size(); }
    bool contains(FeatureId v) const { return v < size(); }
    bool is_primitive(FeatureId v) const { return v < num_primitives_; }
    const CompositeSpec& composite(FeatureId v) const;
    const Descriptor& descriptor(FeatureId v) const { return descriptors_.at(v); }

    /// Id of a composite with the same parts, |mu - mu'| < 1 and overlapping
    /// [mu - sigma, mu + sigma] ranges, if one exists.
    std::optional<FeatureId> find_equivalent(const CompositeSpec& spec) const;

    /// Appends `spec` unless an equivalent vertex exists; returns the vertex id.
    FeatureId add_composite(const CompositeSpec& spec);

    /// Number of primitive leaves under `v` counted with multiplicity (1 for a primitive).
    std::size_t leaf_count(FeatureId v) const;

private:
    std::size_t num_primitives_;
    std::vector<Descriptor> descriptors_;
    std::vector<CompositeSpec> composites_;
};

/// exp(-(d - mu)^2 / (2 sigma^2)), equal to 1 at d = mu.
double composite_likelihood(double distance, double mu, double sigma);

/// Occurrences of `v` in `s` (sorted, distinct). A composite occurs at the
/// midpoint of every pair of part occurrences whose distance is likely enough.
std::vector<Point2> occurrences(FeatureId v, const SymbolizedPercept& s,
                                const FeatureGraph& graph, const CompositeParams& params);

/// Same, for a composite that is not (yet) a vertex of the graph.
std::vector<Point2> occurrences(const CompositeSpec& spec, const SymbolizedPercept& s,
                                const FeatureGraph& graph, const CompositeParams& params);

/// Raw-percept form: resolves points through the dictionary first.
std::vector<Point2> occurrences(FeatureId v, const Percept& s, const FeatureDictionary& dict,
                                const FeatureGraph& graph, const CompositeParams& params);

bool exhibits(FeatureId v, const SymbolizedPercept& s, const FeatureGraph& graph,
              const CompositeParams& params);

/// Composite candidates built from spatial coincidences among `percepts`,
/// sorted by (part1, part2, mu).
std::vector<CompositeSpec> generate_composites(std::span<const SymbolizedPercept> percepts,
                                               const FeatureGraph& graph,
                                               const CompositeParams& params);

// Text format:
//   features <num_primitives> <dimension>
//   primitive <id> <c_1> ... <c_dim>
//   composite <id> <part1> <part2> <mu> <sigma>
void write_feature_graph(std::ostream& out, const FeatureGraph& graph);
/// Rebuilds composites on top of `dict`'s primitives; throws if the file disagrees.
FeatureGraph read_feature_graph(std::istream& in, const FeatureDictionary& dict);

}  // namespace rlvc
