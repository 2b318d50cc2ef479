#include "rlvc/bdd.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include <boost/multiprecision/cpp_int.hpp>

namespace rlvc {

namespace {

constexpr BddManager::Var kTerminalVar = std::numeric_limits<BddManager::Var>::max();

std::size_t mix(std::size_t seed, std::uint64_t v) {
    return seed ^ (std::hash<std::uint64_t>{}(v) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace

std::size_t BddManager::KeyHash::operator()(const Key& k) const noexcept {
    return mix(mix(std::hash<Var>{}(k.var), k.low), k.high);
}

std::size_t BddManager::TripleHash::operator()(const Triple& t) const noexcept {
    return mix(mix(std::hash<Ref>{}(t.f), t.g), t.h);
}

BddManager::BddManager() {
    nodes_.push_back({kTerminalVar, zero, zero});
    nodes_.push_back({kTerminalVar, one, one});
}

std::size_t BddManager::level_of_ref(Ref f) const {
    if (is_terminal(f)) return std::numeric_limits<std::size_t>::max();
    return level_.at(nodes_[f].var);
}

BddManager::Ref BddManager::make(Var v, Ref low, Ref high) {
    if (low == high) return low;
    const Key key{v, low, high};
    if (auto it = unique_.find(key); it != unique_.end()) return it->second;
    const Ref r = static_cast<Ref>(nodes_.size());
    nodes_.push_back({v, low, high});
    unique_.emplace(key, r);
    return r;
}

BddManager::Ref BddManager::var(Var v) {
    if (v == kTerminalVar) throw std::invalid_argument("BddManager: reserved variable label");
    if (!level_.contains(v)) {
        level_.emplace(v, order_.size());
        order_.push_back(v);
    }
    return make(v, zero, one);
}

BddManager::Ref BddManager::nvar(Var v) {
    var(v);
    return make(v, one, zero);
}

BddManager::Ref BddManager::cofactor(Ref f, Var v, bool value) const {
    if (is_terminal(f) || nodes_[f].var != v) return f;
    return value ? nodes_[f].high : nodes_[f].low;
}

BddManager::Ref BddManager::ite(Ref f, Ref g, Ref h) {
    if (f == one) return g;
    if (f == zero) return h;
    if (g == h) return g;
    if (g == one && h == zero) return f;

    const Triple key{f, g, h};
    if (auto it = ite_cache_.find(key); it != ite_cache_.end()) return it->second;

    std::size_t top = level_of_ref(f);
    top = std::min(top, level_of_ref(g));
    top = std::min(top, level_of_ref(h));
    const Var v = order_[top];

    const Ref high = ite(cofactor(f, v, true), cofactor(g, v, true), cofactor(h, v, true));
    const Ref low = ite(cofactor(f, v, false), cofactor(g, v, false), cofactor(h, v, false));
    const Ref r = make(v, low, high);
    ite_cache_.emplace(key, r);
    return r;
}

BddManager::Ref BddManager::negate(Ref f) { return ite(f, zero, one); }
BddManager::Ref BddManager::conj(Ref f, Ref g) { return ite(f, g, zero); }
BddManager::Ref BddManager::disj(Ref f, Ref g) { return ite(f, one, g); }

bool BddManager::evaluate(Ref f, const std::function<bool(Var)>& assignment) const {
    while (!is_terminal(f)) f = assignment(nodes_[f].var) ? nodes_[f].high : nodes_[f].low;
    return f == one;
}

bool BddManager::intersects(Ref f, Ref g) const {
    std::unordered_set<std::uint64_t> empty;  // pairs known to have no common model
    auto walk = [&](auto&& self, Ref a, Ref b) -> bool {
        if (a == zero || b == zero) return false;
        if (a == one || b == one || a == b) return true;
        if (a > b) std::swap(a, b);
        const std::uint64_t key = (std::uint64_t{a} << 32) | b;
        if (empty.contains(key)) return false;
        const std::size_t la = level_of_ref(a), lb = level_of_ref(b);
        const Ref a0 = la <= lb ? nodes_[a].low : a, a1 = la <= lb ? nodes_[a].high : a;
        const Ref b0 = lb <= la ? nodes_[b].low : b, b1 = lb <= la ? nodes_[b].high : b;
        if (self(self, a0, b0) || self(self, a1, b1)) return true;
        empty.insert(key);
        return false;
    };
    return walk(walk, f, g);
}

bool BddManager::is_partition(std::span<const Ref> roots) const {
    for (std::size_t i = 0; i < roots.size(); ++i)
        for (std::size_t j = i + 1; j < roots.size(); ++j)
            if (intersects(roots[i], roots[j])) return false;
    // Models over all order_.size() variables, exact.
    using boost::multiprecision::cpp_int;
    const std::size_t n = order_.size();
    auto level = [&](Ref f) { return is_terminal(f) ? n : level_.at(nodes_[f].var); };
    std::unordered_map<Ref, cpp_int> memo;
    auto count = [&](auto&& self, Ref f) -> cpp_int {  // models over levels [level(f), n)
        if (f == zero) return 0;
        if (f == one) return 1;
        if (auto it = memo.find(f); it != memo.end()) return it->second;
        const std::size_t l = level(f);
        const Ref lo = nodes_[f].low, hi = nodes_[f].high;
        cpp_int c = (self(self, lo) << (level(lo) - l - 1)) + (self(self, hi) << (level(hi) - l - 1));
        memo.emplace(f, c);
        return c;
    };
    cpp_int total = 0;
    for (Ref r : roots) total += count(count, r) << level(r);
    return total == (cpp_int(1) << n);
}

std::vector<BddManager::Var> BddManager::support(Ref f) const {
    std::vector<bool> seen(nodes_.size(), false), used(order_.size(), false);
    std::vector<Ref> stack{f};
    while (!stack.empty()) {
        const Ref r = stack.back();
        stack.pop_back();
        if (is_terminal(r) || seen[r]) continue;
        seen[r] = true;
        used[level_.at(nodes_[r].var)] = true;
        stack.push_back(nodes_[r].low);
        stack.push_back(nodes_[r].high);
    }
    std::vector<Var> out;
    for (std::size_t l = 0; l < order_.size(); ++l)
        if (used[l]) out.push_back(order_[l]);
    return out;
}

std::size_t BddManager::node_count(std::span<const Ref> roots) const {
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<Ref> stack(roots.begin(), roots.end());
    std::size_t count = 0;
    while (!stack.empty()) {
        const Ref r = stack.back();
        stack.pop_back();
        if (is_terminal(r) || seen[r]) continue;
        seen[r] = true;
        ++count;
        stack.push_back(nodes_[r].low);
        stack.push_back(nodes_[r].high);
    }
    return count;
}

void BddManager::clear_caches() { ite_cache_.clear(); }

void BddManager::swap_adjacent(std::size_t level) {
    if (level + 1 >= order_.size()) throw std::out_of_range("swap_adjacent: no level below");
    const Var x = order_[level];
    const Var y = order_[level + 1];

    std::vector<Ref> upper;
    for (Ref r = 2; r < nodes_.size(); ++r)
        if (nodes_[r].var == x) upper.push_back(r);

    // x becomes the lower variable before any node is rebuilt, so make()
    // below creates x-nodes under the new order.
    order_[level] = y;
    order_[level + 1] = x;
    level_[y] = level;
    level_[x] = level + 1;

    for (const Ref r : upper) {
        const Node n = nodes_[r];
        const bool low_y = !is_terminal(n.low) && nodes_[n.low].var == y;
        const bool high_y = !is_terminal(n.high) && nodes_[n.high].var == y;
        if (!low_y && !high_y) continue;
        const Ref f00 = cofactor(n.low, y, false), f01 = cofactor(n.low, y, true);
        const Ref f10 = cofactor(n.high, y, false), f11 = cofactor(n.high, y, true);
        unique_.erase(Key{x, n.low, n.high});
        const Ref low = make(x, f00, f10);
        const Ref high = make(x, f01, f11);
        nodes_[r] = {y, low, high};
        unique_.emplace(Key{y, low, high}, r);
    }
    clear_caches();
}

void BddManager::sift(std::span<Ref> roots, double max_growth) {
    garbage_collect(roots);
    if (order_.size() < 2) return;

    std::unordered_map<Var, std::size_t> population;
    for (Ref r = 2; r < nodes_.size(); ++r) ++population[nodes_[r].var];
    std::vector<Var> schedule = order_;
    std::stable_sort(schedule.begin(), schedule.end(),
                     [&](Var a, Var b) { return population[a] > population[b]; });

    const std::size_t last = order_.size() - 1;
    for (const Var v : schedule) {
        std::size_t best = node_count(roots);
        std::size_t best_level = level_.at(v);
        const std::size_t limit = static_cast<std::size_t>(static_cast<double>(best) * max_growth) + 1;

        while (level_.at(v) < last) {
            swap_adjacent(level_.at(v));
            const std::size_t size = node_count(roots);
            if (size < best) {
                best = size;
                best_level = level_.at(v);
            }
            if (size > limit) break;
        }
        while (level_.at(v) > 0) {
            swap_adjacent(level_.at(v) - 1);
            const std::size_t size = node_count(roots);
            if (size < best) {
                best = size;
                best_level = level_.at(v);
            }
            if (size > limit) break;
        }
        while (level_.at(v) < best_level) swap_adjacent(level_.at(v));
        while (level_.at(v) > best_level) swap_adjacent(level_.at(v) - 1);
        garbage_collect(roots);
    }
}

void BddManager::garbage_collect(std::span<Ref> roots) {
    // Post-order renumbering keeps children ahead of their parents.
    std::vector<Ref> remap(nodes_.size(), std::numeric_limits<Ref>::max());
    remap[zero] = zero;
    remap[one] = one;
    std::vector<Node> kept{nodes_[zero], nodes_[one]};
    std::vector<std::pair<Ref, bool>> stack;
    for (const Ref root : roots) {
        stack.emplace_back(root, false);
        while (!stack.empty()) {
            auto [r, expanded] = stack.back();
            stack.pop_back();
            if (remap[r] != std::numeric_limits<Ref>::max()) continue;
            if (!expanded) {
                stack.emplace_back(r, true);
                stack.emplace_back(nodes_[r].high, false);
                stack.emplace_back(nodes_[r].low, false);
                continue;
            }
            remap[r] = static_cast<Ref>(kept.size());
            kept.push_back({nodes_[r].var, remap[nodes_[r].low], remap[nodes_[r].high]});
        }
    }
    for (auto& root : roots) root = remap[root];
    nodes_ = std::move(kept);
    unique_.clear();
    for (Ref r = 2; r < nodes_.size(); ++r)
        unique_.emplace(Key{nodes_[r].var, nodes_[r].low, nodes_[r].high}, r);
    clear_caches();
}

void BddManager::drop_unused_variables(std::span<Ref> roots) {
    garbage_collect(roots);
    std::vector<bool> used(order_.size(), false);
    for (Ref r = 2; r < nodes_.size(); ++r) used[level_.at(nodes_[r].var)] = true;
    std::vector<Var> kept;
    for (std::size_t l = 0; l < order_.size(); ++l)
        if (used[l]) kept.push_back(order_[l]);
    order_ = std::move(kept);
    level_.clear();
    for (std::size_t l = 0; l < order_.size(); ++l) level_.emplace(order_[l], l);
    clear_caches();
}

void BddManager::write(std::ostream& out) const {
    out << "order " << order_.size();
    for (Var v : order_) out << ' ' << v;
    out << '\n';
    out << "nodes " << nodes_.size() - 2 << '\n';
    for (Ref r = 2; r < nodes_.size(); ++r) {
        const auto& n = nodes_[r];
        if (n.low >= r || n.high >= r)
            throw std::logic_error("BddManager::write: store not topologically ordered");
        out << "node " << r << ' ' << n.var << ' ' << n.low << ' ' << n.high << '\n';
    }
}

BddManager BddManager::read(std::istream& in) {
    BddManager m;
    std::string line, tag;
    auto next = [&](const char* what) {
        while (std::getline(in, line))
            if (!line.empty() && line.front() != '#') return std::istringstream(line);
        throw std::runtime_error(std::string("BddManager::read: missing ") + what);
    };
    {
        auto rec = next("order");
        std::size_t n = 0;
        rec >> tag >> n;
        if (tag != "order") throw std::runtime_error("BddManager::read: expected order");
        for (std::size_t i = 0; i < n; ++i) {
            Var v = 0;
            if (!(rec >> v)) throw std::runtime_error("BddManager::read: short order");
            m.var(v);
        }
    }
    auto rec = next("nodes");
    std::size_t count = 0;
    rec >> tag >> count;
    if (tag != "nodes") throw std::runtime_error("BddManager::read: expected nodes");
    // The literals created above are garbage; rebuild from scratch with the same order.
    m.nodes_.resize(2);
    m.unique_.clear();
    for (std::size_t i = 0; i < count; ++i) {
        auto row = next("node");
        Ref id = 0, low = 0, high = 0;
        Var v = 0;
        row >> tag >> id >> v >> low >> high;
        if (!row || tag != "node" || id != m.nodes_.size() || low >= id || high >= id ||
            !m.level_.contains(v) || low == high)
            throw std::runtime_error("BddManager::read: malformed node line: " + line);
        if (m.level_of_ref(low) <= m.level_.at(v) || m.level_of_ref(high) <= m.level_.at(v))
            throw std::runtime_error("BddManager::read: node violates the variable order");
        if (m.make(v, low, high) != id)
            throw std::runtime_error("BddManager::read: duplicate node " + std::to_string(id));
    }
    return m;
}

}  // namespace rlvc
