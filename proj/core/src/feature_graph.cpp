#include "rlvc/feature_graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "rlvc/clustering.hpp"

namespace rlvc {

void CompositeParams::validate() const {
    if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("CompositeParams: nu not in (0,1]");
    if (min_cooccurrence == 0 || min_cluster_size == 0)
        throw std::invalid_argument("CompositeParams: counts must be positive");
    if (!(cluster_cut > 0.0) || !(sigma_floor > 0.0))
        throw std::invalid_argument("CompositeParams: cut and sigma floor must be positive");
}

FeatureGraph::FeatureGraph(const FeatureDictionary& dict) : num_primitives_(dict.size()) {
    descriptors_.reserve(dict.size());
    for (Symbol s = 0; s < dict.size(); ++s) descriptors_.push_back(dict.entry(s));
}

const CompositeSpec& FeatureGraph::composite(FeatureId v) const {
    if (v < num_primitives_ || v >= size())
        throw std::out_of_range("FeatureGraph: " + std::to_string(v) + " is not a composite");
    return composites_[v - num_primitives_];
}

std::optional<FeatureId> FeatureGraph::find_equivalent(const CompositeSpec& spec) const {
    for (std::size_t i = 0; i < composites_.size(); ++i) {
        const auto& c = composites_[i];
        const bool same_parts = (c.part1 == spec.part1 && c.part2 == spec.part2) ||
                                (c.part1 == spec.part2 && c.part2 == spec.part1);
        if (!same_parts || std::abs(c.mu - spec.mu) >= 1.0) continue;
        if (c.mu - c.sigma <= spec.mu + spec.sigma && spec.mu - spec.sigma <= c.mu + c.sigma)
            return num_primitives_ + i;
    }
    return std::nullopt;
}

FeatureId FeatureGraph::add_composite(const CompositeSpec& spec) {
    if (!contains(spec.part1) || !contains(spec.part2))
        throw std::out_of_range("FeatureGraph: composite references an unknown vertex");
    if (!(spec.sigma > 0.0) || !std::isfinite(spec.mu))
        throw std::invalid_argument("FeatureGraph: composite needs finite mu and sigma > 0");
    if (auto existing = find_equivalent(spec)) return *existing;
    composites_.push_back(spec);
    return size() - 1;
}

std::size_t FeatureGraph::leaf_count(FeatureId v) const {
    if (is_primitive(v)) return 1;
    const auto& c = composite(v);
    return leaf_count(c.part1) + leaf_count(c.part2);
}

double composite_likelihood(double distance, double mu, double sigma) {
    const double z = (distance - mu) / sigma;
    return std::exp(-0.5 * z * z);
}

namespace {

std::vector<Point2> primitive_locations(Symbol symbol, const SymbolizedPercept& s) {
    std::vector<Point2> out;
    for (const auto& p : s.with_symbol(symbol)) out.push_back(p.location);
    return out;
}

double euclid(const Point2& a, const Point2& b) { return std::hypot(b.x - a.x, b.y - a.y); }

std::vector<Point2> combine(const CompositeSpec& spec, const std::vector<Point2>& first,
                            const std::vector<Point2>& second, double nu) {
    std::vector<Point2> out;
    for (const auto& p1 : first) {
        for (const auto& p2 : second) {
            if (spec.part1 == spec.part2 && p1 == p2) continue;
            if (composite_likelihood(euclid(p1, p2), spec.mu, spec.sigma) >= nu)
                out.push_back({(p1.x + p2.x) / 2.0, (p1.y + p2.y) / 2.0});
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

std::vector<Point2> occurrences(FeatureId v, const SymbolizedPercept& s,
                                const FeatureGraph& graph, const CompositeParams& params) {
    if (!graph.contains(v)) throw std::out_of_range("occurrences: unknown feature");
    if (graph.is_primitive(v)) return primitive_locations(v, s);
    return occurrences(graph.composite(v), s, graph, params);
}

std::vector<Point2> occurrences(const CompositeSpec& spec, const SymbolizedPercept& s,
                                const FeatureGraph& graph, const CompositeParams& params) {
    const auto first = occurrences(spec.part1, s, graph, params);
    if (first.empty()) return {};
    const auto second =
        spec.part2 == spec.part1 ? first : occurrences(spec.part2, s, graph, params);
    if (second.empty()) return {};
    return combine(spec, first, second, params.nu);
}

std::vector<Point2> occurrences(FeatureId v, const Percept& s, const FeatureDictionary& dict,
                                const FeatureGraph& graph, const CompositeParams& params) {
    return occurrences(v, symbolize(s, dict), graph, params);
}

bool exhibits(FeatureId v, const SymbolizedPercept& s, const FeatureGraph& graph,
              const CompositeParams& params) {
    if (graph.is_primitive(v)) return s.has(v);
    return !occurrences(v, s, graph, params).empty();
}

std::vector<CompositeSpec> generate_composites(std::span<const SymbolizedPercept> percepts,
                                               const FeatureGraph& graph,
                                               const CompositeParams& params) {
    params.validate();
    using Located = std::pair<FeatureId, std::vector<Point2>>;

    // Features exhibited by each percept, with their occurrences, sorted by id.
    std::vector<std::vector<Located>> shown(percepts.size());
    for (std::size_t i = 0; i < percepts.size(); ++i) {
        const auto& s = percepts[i];
        for (Symbol sym : s.symbols()) shown[i].emplace_back(sym, primitive_locations(sym, s));
        for (FeatureId v = graph.num_primitives(); v < graph.size(); ++v) {
            auto occ = occurrences(v, s, graph, params);
            if (!occ.empty()) shown[i].emplace_back(v, std::move(occ));
        }
    }

    auto key = [](FeatureId a, FeatureId b) { return (static_cast<std::uint64_t>(a) << 32) | b; };
    std::unordered_map<std::uint64_t, std::size_t> together;
    for (const auto& list : shown)
        for (std::size_t a = 0; a < list.size(); ++a)
            for (std::size_t b = a; b < list.size(); ++b) {
                // A feature pairs with itself only when it occurs twice.
                if (a == b && list[a].second.size() < 2) continue;
                ++together[key(list[a].first, list[b].first)];
            }

    std::vector<std::pair<FeatureId, FeatureId>> frequent;
    for (const auto& [k, count] : together)
        if (count >= params.min_cooccurrence)
            frequent.emplace_back(static_cast<FeatureId>(k >> 32),
                                  static_cast<FeatureId>(k & 0xffffffffu));
    std::sort(frequent.begin(), frequent.end());

    std::unordered_map<std::uint64_t, std::vector<double>> distances;
    for (const auto& pair : frequent) distances[key(pair.first, pair.second)];
    for (const auto& list : shown)
        for (std::size_t a = 0; a < list.size(); ++a)
            for (std::size_t b = a; b < list.size(); ++b) {
                auto it = distances.find(key(list[a].first, list[b].first));
                if (it == distances.end()) continue;
                const auto& o1 = list[a].second;
                const auto& o2 = list[b].second;
                for (std::size_t i = 0; i < o1.size(); ++i)
                    for (std::size_t j = (a == b ? i + 1 : 0); j < o2.size(); ++j)
                        it->second.push_back(euclid(o1[i], o2[j]));
            }

    std::vector<CompositeSpec> out;
    for (const auto& [v1, v2] : frequent) {
        const auto& lambda = distances[key(v1, v2)];
        for (const auto& cluster : complete_linkage_1d(lambda, params.cluster_cut)) {
            if (cluster.size() < params.min_cluster_size) continue;
            const double mu = mean_of(cluster);
            const double sigma = std::max(std::sqrt(variance_of(cluster)), params.sigma_floor);
            out.push_back({v1, v2, mu, sigma});
        }
    }
    std::sort(out.begin(), out.end(), [](const CompositeSpec& a, const CompositeSpec& b) {
        if (a.part1 != b.part1) return a.part1 < b.part1;
        if (a.part2 != b.part2) return a.part2 < b.part2;
        return a.mu < b.mu;
    });
    return out;
}

void write_feature_graph(std::ostream& out, const FeatureGraph& graph) {
    out.precision(std::numeric_limits<double>::max_digits10);
    const std::size_t dim = graph.num_primitives() ? graph.descriptor(0).coords.size() : 0;
    out << "# rlvc feature graph v1\n";
    out << "features " << graph.num_primitives() << ' ' << dim << '\n';
    for (FeatureId v = 0; v < graph.num_primitives(); ++v) {
        out << "primitive " << v;
        for (double c : graph.descriptor(v).coords) out << ' ' << c;
        out << '\n';
    }
    for (FeatureId v = graph.num_primitives(); v < graph.size(); ++v) {
        const auto& c = graph.composite(v);
        out << "composite " << v << ' ' << c.part1 << ' ' << c.part2 << ' ' << c.mu << ' '
            << c.sigma << '\n';
    }
}

FeatureGraph read_feature_graph(std::istream& in, const FeatureDictionary& dict) {
    FeatureGraph graph(dict);
    std::string line, tag;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        std::istringstream rec(line);
        rec >> tag;
        if (tag == "features") {
            std::size_t n = 0, dim = 0;
            rec >> n >> dim;
            if (n != dict.size() || (n && dim != dict.dimension()))
                throw std::runtime_error("read_feature_graph: dictionary mismatch");
            header = true;
        } else if (tag == "primitive") {
            FeatureId id = 0;
            rec >> id;
            Descriptor d{std::vector<double>(dict.dimension())};
            for (auto& c : d.coords) rec >> c;
            if (!rec || id >= dict.size() || dict.distance(d, dict.entry(id)) > 1e-9)
                throw std::runtime_error("read_feature_graph: primitive " + std::to_string(id) +
                                         " does not match the dictionary");
        } else if (tag == "composite") {
            FeatureId id = 0;
            CompositeSpec spec;
            rec >> id >> spec.part1 >> spec.part2 >> spec.mu >> spec.sigma;
            if (!rec || id != graph.size())
                throw std::runtime_error("read_feature_graph: malformed composite line");
            if (graph.add_composite(spec) != id)
                throw std::runtime_error("read_feature_graph: duplicate composite " +
                                         std::to_string(id));
        } else {
            throw std::runtime_error("read_feature_graph: unknown record '" + tag + "'");
        }
    }
    if (!header) throw std::runtime_error("read_feature_graph: missing header");
    return graph;
}

}  // namespace rlvc
