#include "rlvc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace rlvc {

double Moments::population_variance() const {
    if (n < 2) return 0.0;
    const double m = mean();
    return std::max(0.0, sum_sq / static_cast<double>(n) - m * m);
}

double Moments::sample_variance() const {
    if (n < 2) return 0.0;
    return population_variance() * static_cast<double>(n) / static_cast<double>(n - 1);
}

double welch_p_value(const Moments& a, const Moments& b) {
    if (a.n < 2 || b.n < 2) throw std::invalid_argument("welch_p_value: need two samples per side");
    const double va = a.sample_variance() / static_cast<double>(a.n);
    const double vb = b.sample_variance() / static_cast<double>(b.n);
    const double se2 = va + vb;
    const double diff = a.mean() - b.mean();
    // Sums of squares carry rounding noise of order eps * sum_sq.
    const double scale = std::max({std::abs(a.mean()), std::abs(b.mean()), 1.0});
    if (se2 <= 1e-24 * scale * scale) return std::abs(diff) > 1e-12 * scale ? 0.0 : 1.0;
    const double t = diff / std::sqrt(se2);
    const double dof = se2 * se2 /
                       (va * va / static_cast<double>(a.n - 1) + vb * vb / static_cast<double>(b.n - 1));
    const boost::math::students_t dist(dof);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

bool welch_significant(const Moments& a, const Moments& b, double alpha) {
    if (a.n < 2 || b.n < 2) return false;
    return welch_p_value(a, b) < alpha;
}

}  // namespace rlvc
