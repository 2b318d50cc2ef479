#include "rlvc/percept.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rlvc {

FeatureDictionary::FeatureDictionary(std::vector<Descriptor> entries, double match_threshold,
                                     Metric metric, std::vector<double> variances)
    : entries_(std::move(entries)), threshold_(match_threshold), metric_(metric),
      variances_(std::move(variances)) {
    if (!(threshold_ > 0.0)) throw std::invalid_argument("FeatureDictionary: threshold <= 0");
    if (!entries_.empty()) dimension_ = entries_.front().coords.size();
    for (const auto& e : entries_) {
        if (e.coords.size() != dimension_)
            throw std::invalid_argument("FeatureDictionary: mixed dimensions");
        for (double c : e.coords)
            if (!std::isfinite(c)) throw std::invalid_argument("FeatureDictionary: non-finite");
    }
    if (metric_ == Metric::diagonal) {
        if (variances_.size() != dimension_)
            throw std::invalid_argument("FeatureDictionary: need one variance per axis");
        for (double v : variances_)
            if (!(v > 0.0)) throw std::invalid_argument("FeatureDictionary: variance <= 0");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i)
        for (std::size_t j = i + 1; j < entries_.size(); ++j)
            if (distance(entries_[i], entries_[j]) <= threshold_)
                throw std::invalid_argument("FeatureDictionary: prototypes " + std::to_string(i) +
                                            " and " + std::to_string(j) +
                                            " are within the match threshold");
}

double FeatureDictionary::distance(const Descriptor& a, const Descriptor& b) const {
    if (a.coords.size() != b.coords.size())
        throw std::invalid_argument("FeatureDictionary: dimension mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < a.coords.size(); ++i) {
        double d = a.coords[i] - b.coords[i];
        if (metric_ == Metric::diagonal) d /= std::sqrt(variances_[i]);
        total += d * d;
    }
    return std::sqrt(total);
}

std::optional<Symbol> FeatureDictionary::symbol_of(const Descriptor& d) const {
    if (d.coords.size() != dimension_)
        throw std::invalid_argument("symbol_of: descriptor dimension " +
                                    std::to_string(d.coords.size()) + " != " +
                                    std::to_string(dimension_));
    for (Symbol s = 0; s < entries_.size(); ++s)
        if (distance(d, entries_[s]) <= threshold_) return s;
    return std::nullopt;
}

std::optional<Symbol> symbol_of(const Descriptor& d, const FeatureDictionary& dict) {
    return dict.symbol_of(d);
}

std::vector<Point2> detect_primitive(Symbol symbol, const Percept& s,
                                     const FeatureDictionary& dict) {
    std::vector<Point2> found;
    for (const auto& p : s.points)
        if (dict.symbol_of(p.descriptor) == symbol) found.push_back(p.location);
    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end()), found.end());
    return found;
}

std::vector<Symbol> generate_candidates(std::span<const Percept> percepts,
                                        const FeatureDictionary& dict) {
    std::vector<Symbol> out;
    for (const auto& s : percepts)
        for (const auto& p : s.points)
            if (auto sym = dict.symbol_of(p.descriptor)) out.push_back(*sym);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::span<const LocatedSymbol> SymbolizedPercept::with_symbol(Symbol symbol) const {
    const auto lo = std::lower_bound(points.begin(), points.end(), symbol,
                                     [](const LocatedSymbol& p, Symbol s) { return p.symbol < s; });
    auto hi = lo;
    while (hi != points.end() && hi->symbol == symbol) ++hi;
    return {lo, hi};
}

std::vector<Symbol> SymbolizedPercept::symbols() const {
    std::vector<Symbol> out;
    for (const auto& p : points)
        if (out.empty() || out.back() != p.symbol) out.push_back(p.symbol);
    return out;
}

SymbolizedPercept symbolize(const Percept& s, const FeatureDictionary& dict) {
    SymbolizedPercept out;
    out.points.reserve(s.points.size());
    for (const auto& p : s.points)
        if (auto sym = dict.symbol_of(p.descriptor)) out.points.push_back({p.location, *sym});
    std::sort(out.points.begin(), out.points.end(), [](const auto& a, const auto& b) {
        return a.symbol != b.symbol ? a.symbol < b.symbol : a.location < b.location;
    });
    out.points.erase(std::unique(out.points.begin(), out.points.end(),
                                 [](const auto& a, const auto& b) {
                                     return a.symbol == b.symbol && a.location == b.location;
                                 }),
                     out.points.end());
    return out;
}

namespace {

void put(std::ostream& out, double v) {
    out.precision(std::numeric_limits<double>::max_digits10);
    out << v;
}

std::istringstream next_record(std::istream& in, const char* what) {
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        return std::istringstream(line);
    }
    throw std::runtime_error(std::string("unexpected end of input while reading ") + what);
}

}  // namespace

void write_percepts(std::ostream& out, std::span<const Percept> percepts, std::size_t dimension) {
    out << "# rlvc percepts v1\n";
    out << "dimension " << dimension << '\n';
    for (const auto& s : percepts) {
        out << "percept " << s.id << ' ';
        put(out, s.width);
        out << ' ';
        put(out, s.height);
        out << ' ' << s.points.size() << '\n';
        for (const auto& p : s.points) {
            if (p.descriptor.coords.size() != dimension)
                throw std::invalid_argument("write_percepts: descriptor dimension mismatch");
            put(out, p.location.x);
            out << ' ';
            put(out, p.location.y);
            for (double c : p.descriptor.coords) {
                out << ' ';
                put(out, c);
            }
            out << '\n';
        }
    }
}

std::vector<Percept> read_percepts(std::istream& in) {
    std::string tag;
    std::size_t dimension = 0;
    {
        auto header = next_record(in, "percept header");
        if (!(header >> tag >> dimension) || tag != "dimension")
            throw std::runtime_error("read_percepts: expected 'dimension <n>'");
    }
    std::vector<Percept> out;
    std::string line;
    while (true) {
        while (std::getline(in, line) && (line.empty() || line.front() == '#')) {
        }
        if (!in) break;
        std::istringstream rec(line);
        Percept s;
        std::size_t n = 0;
        if (!(rec >> tag >> s.id >> s.width >> s.height >> n) || tag != "percept")
            throw std::runtime_error("read_percepts: malformed record: " + line);
        s.points.resize(n);
        for (auto& p : s.points) {
            auto row = next_record(in, "interest point");
            p.descriptor.coords.resize(dimension);
            row >> p.location.x >> p.location.y;
            for (auto& c : p.descriptor.coords) row >> c;
            if (!row) throw std::runtime_error("read_percepts: malformed interest point");
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_dictionary(std::ostream& out, const FeatureDictionary& dict) {
    out << "dictionary " << dict.size() << ' ' << dict.dimension() << ' ';
    put(out, dict.match_threshold());
    out << ' ' << (dict.metric() == Metric::diagonal ? "diagonal" : "euclidean") << '\n';
    if (dict.metric() == Metric::diagonal) {
        out << "variances";
        for (double v : dict.variances()) {
            out << ' ';
            put(out, v);
        }
        out << '\n';
    }
    for (Symbol s = 0; s < dict.size(); ++s) {
        const auto& c = dict.entry(s).coords;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (i) out << ' ';
            put(out, c[i]);
        }
        out << '\n';
    }
}

FeatureDictionary read_dictionary(std::istream& in) {
    auto header = next_record(in, "dictionary header");
    std::string tag, metric_name;
    std::size_t size = 0, dimension = 0;
    double threshold = 0.0;
    if (!(header >> tag >> size >> dimension >> threshold >> metric_name) || tag != "dictionary")
        throw std::runtime_error("read_dictionary: malformed header");
    const Metric metric = metric_name == "diagonal" ? Metric::diagonal : Metric::euclidean;
    std::vector<double> variances;
    if (metric == Metric::diagonal) {
        auto row = next_record(in, "variances");
        row >> tag;
        variances.resize(dimension);
        for (auto& v : variances) row >> v;
        if (!row || tag != "variances") throw std::runtime_error("read_dictionary: bad variances");
    }
    std::vector<Descriptor> entries(size);
    for (auto& e : entries) {
        auto row = next_record(in, "prototype");
        e.coords.resize(dimension);
        for (auto& c : e.coords) row >> c;
        if (!row) throw std::runtime_error("read_dictionary: malformed prototype");
    }
    return FeatureDictionary(std::move(entries), threshold, metric, std::move(variances));
}

}  // namespace rlvc
