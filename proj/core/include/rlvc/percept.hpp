#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rlvc/mdp.hpp"

namespace rlvc {

using Symbol = std::size_t;

struct Descriptor {
    std::vector<double> coords;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
    friend auto operator<=>(const Point2&, const Point2&) = default;
};

struct InterestPoint {
    Point2 location;
    Descriptor descriptor;
};

/// Synthetic stand-in for an image: located descriptors inside a frame.
struct Percept {
    PerceptId id = 0;
    double width = 0.0;
    double height = 0.0;
    std::vector<InterestPoint> points;
};

enum class Metric { euclidean, diagonal };

/**
 * Prototype descriptors with a matching radius. Prototypes must lie farther
 * than the radius from each other so that a descriptor matches at most one
 * of them. With `Metric::diagonal`, each axis difference is scaled by
 * 1/sqrt(variance) before taking the Euclidean norm.
 */
class FeatureDictionary {
public:
    FeatureDictionary(std::vector<Descriptor> entries, double match_threshold,
                      Metric metric = Metric::euclidean, std::vector<double> variances = {});

    std::size_t size() const { return entries_.size(); }
    std::size_t dimension() const { return dimension_; }
    double match_threshold() const { return threshold_; }
    Metric metric() const { return metric_; }
    const Descriptor& entry(Symbol s) const { return entries_.at(s); }
    const std::vector<double>& variances() const { return variances_; }

    double distance(const Descriptor& a, const Descriptor& b) const;

    /// Throws std::invalid_argument on dimension mismatch.
    std::optional<Symbol> symbol_of(const Descriptor& d) const;

private:
    std::vector<Descriptor> entries_;
    std::size_t dimension_ = 0;
    double threshold_;
    Metric metric_;
    std::vector<double> variances_;
};

std::optional<Symbol> symbol_of(const Descriptor& d, const FeatureDictionary& dict);

/// Locations of the points of `s` whose descriptor matches `symbol`.
std::vector<Point2> detect_primitive(Symbol symbol, const Percept& s,
                                     const FeatureDictionary& dict);

/// Canonical generator: every symbol seen at some point of some percept, sorted.
std::vector<Symbol> generate_candidates(std::span<const Percept> percepts,
                                        const FeatureDictionary& dict);

struct LocatedSymbol {
    Point2 location;
    Symbol symbol;
};

/// A percept with every point resolved against the dictionary once.
/// Points matching no prototype are dropped. Sorted by (symbol, location).
struct SymbolizedPercept {
    std::vector<LocatedSymbol> points;

    /// Range of points carrying `symbol`.
    std::span<const LocatedSymbol> with_symbol(Symbol symbol) const;
    bool has(Symbol symbol) const { return !with_symbol(symbol).empty(); }
    /// Sorted distinct symbols.
    std::vector<Symbol> symbols() const;
};

SymbolizedPercept symbolize(const Percept& s, const FeatureDictionary& dict);

// Line-oriented text formats. Percept records:
//   percept <id> <width> <height> <n>
//   followed by n lines "<x> <y> <c_1> ... <c_dim>"
// Dictionary: "dictionary <size> <dim> <threshold> <euclidean|diagonal>",
// an optional "variances ..." line, then one prototype per line.
void write_percepts(std::ostream& out, std::span<const Percept> percepts, std::size_t dimension);
std::vector<Percept> read_percepts(std::istream& in);

void write_dictionary(std::ostream& out, const FeatureDictionary& dict);
FeatureDictionary read_dictionary(std::istream& in);

}  // namespace rlvc
