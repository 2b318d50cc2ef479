#pragma once

#include <span>
#include <vector>

namespace rlvc {

/// Complete-linkage agglomerative clustering of scalars, cut at `max_diameter`:
/// clusters keep merging while the closest pair (largest member distance
/// across the pair) is no farther apart than `max_diameter`. On the line, the
/// closest pair under complete linkage is always two neighbouring intervals,
/// which is what makes this O(n log n). Returned clusters are sorted, as are
/// their members.
std::vector<std::vector<double>> complete_linkage_1d(std::span<const double> values,
                                                     double max_diameter);

double mean_of(std::span<const double> values);
/// Population variance (divides by n); 0 for fewer than two values.
double variance_of(std::span<const double> values);

}  // namespace rlvc
