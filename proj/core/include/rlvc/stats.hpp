#pragma once

#include <cstddef>

namespace rlvc {

/// Running sums for one sample set; enough for mean and both variances.
struct Moments {
    std::size_t n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double x) {
        ++n;
        sum += x;
        sum_sq += x * x;
    }
    Moments operator+(const Moments& other) const {
        return {n + other.n, sum + other.sum, sum_sq + other.sum_sq};
    }
    Moments operator-(const Moments& other) const {
        return {n - other.n, sum - other.sum, sum_sq - other.sum_sq};
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    /// Divides by n.
    double population_variance() const;
    /// Divides by n - 1.
    double sample_variance() const;
};

/// Two-sided p-value of Welch's unequal-variance t-test. Needs two samples
/// on each side; with zero standard error it is 0 when the means differ and
/// 1 otherwise.
double welch_p_value(const Moments& a, const Moments& b);

bool welch_significant(const Moments& a, const Moments& b, double alpha);

}  // namespace rlvc
