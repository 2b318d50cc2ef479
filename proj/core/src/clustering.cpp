#include "rlvc/clustering.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace rlvc {

std::vector<std::vector<double>> complete_linkage_1d(std::span<const double> values,
                                                     double max_diameter) {
    if (max_diameter < 0.0) throw std::invalid_argument("complete_linkage_1d: negative cut");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    if (n == 0) return {};

    // Clusters are index ranges [lo, hi] of `sorted`, chained left to right.
    std::vector<std::size_t> lo(n), hi(n), prev(n), next(n);
    std::vector<bool> alive(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        lo[i] = hi[i] = i;
        prev[i] = i == 0 ? n : i - 1;
        next[i] = i + 1;
    }

    // (span, left lo, left id, right id); ties go to the leftmost pair.
    using Entry = std::tuple<double, std::size_t, std::size_t, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    auto push = [&](std::size_t left) {
        const std::size_t right = next[left];
        if (right >= n) return;
        heap.emplace(sorted[hi[right]] - sorted[lo[left]], lo[left], left, right);
    };
    for (std::size_t i = 0; i + 1 < n; ++i) push(i);

    while (!heap.empty()) {
        const auto [span, key, left, right] = heap.top();
        heap.pop();
        if (!alive[left] || !alive[right] || next[left] != right) continue;
        if (sorted[hi[right]] - sorted[lo[left]] != span) continue;
        if (span > max_diameter) break;
        hi[left] = hi[right];
        alive[right] = false;
        next[left] = next[right];
        if (next[left] < n) prev[next[left]] = left;
        if (prev[left] < n) push(prev[left]);
        push(left);
    }

    std::vector<std::vector<double>> clusters;
    for (std::size_t c = 0; c < n; c = next[c])
        clusters.emplace_back(sorted.begin() + static_cast<std::ptrdiff_t>(lo[c]),
                              sorted.begin() + static_cast<std::ptrdiff_t>(hi[c]) + 1);
    return clusters;
}

double mean_of(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double total = 0.0;
    for (double v : values) total += v;
    return total / static_cast<double>(values.size());
}

double variance_of(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean_of(values);
    double total = 0.0;
    for (double v : values) total += (v - m) * (v - m);
    return total / static_cast<double>(values.size());
}

}  // namespace rlvc
