#pragma once

// Continuous laws used by the simulators and their discretization onto a
// common grid of half-open bins.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>

#include "didinv/distributions.hpp"

namespace didinv {

/// Quantile level at which analytic laws are truncated on each side; tail mass
/// is folded into the end bins.
inline constexpr double kTruncationLevel = 1e-8;

struct NormalLaw {
    double mu = 0.0;
    double sigma = 1.0;

    double cdf(double x) const { return boost::math::cdf(boost::math::normal(mu, sigma), x); }
    double ccdf(double x) const { return boost::math::cdf(boost::math::complement(boost::math::normal(mu, sigma), x)); }
    double quantile(double p) const { return boost::math::quantile(boost::math::normal(mu, sigma), p); }
    double median() const { return mu; }
    double mean() const { return mu; }
};

/// exp(N(mu, sigma^2)).
struct LognormalLaw {
    double mu = 0.0;
    double sigma = 1.0;

    double cdf(double x) const { return x <= 0.0 ? 0.0 : boost::math::cdf(boost::math::lognormal(mu, sigma), x); }
    double ccdf(double x) const {
        return x <= 0.0 ? 1.0 : boost::math::cdf(boost::math::complement(boost::math::lognormal(mu, sigma), x));
    }
    double quantile(double p) const { return boost::math::quantile(boost::math::lognormal(mu, sigma), p); }
    double median() const { return std::exp(mu); }
    double mean() const { return std::exp(mu + 0.5 * sigma * sigma); }
    double log_mean() const { return mu; }
};

/// `count` bins of `width` whose edges are the multiples k*width for
/// k >= first_index. The first and last bins are open towards -inf and +inf.
/// Edges coincide with the labels produced by Binning{width, 0}.
struct Grid {
    long long first_index = 0;
    double width = 1.0;
    std::size_t count = 1;

    Binning binning() const { return Binning{width, 0.0, false}; }
    double edge(std::size_t k) const { return binning().edge(first_index + static_cast<long long>(k)); }
};

/// Smallest grid with edges on multiples of `width` covering [lo, hi].
inline Grid grid_covering(double lo, double hi, double width) {
    const Binning b{width, 0.0, false};
    const auto first = std::llround(b.label(lo) / width);
    const auto last = std::llround(b.label(hi) / width);
    return Grid{first, width, static_cast<std::size_t>(last - first) + 1};
}

/// Grid covering the truncation quantiles of every law given.
template <class Law>
Grid truncation_grid(std::span<const Law> laws, double width) {
    double lo = laws.front().quantile(kTruncationLevel);
    double hi = laws.front().quantile(1.0 - kTruncationLevel);
    for (const auto& law : laws) {
        lo = std::min(lo, law.quantile(kTruncationLevel));
        hi = std::max(hi, law.quantile(1.0 - kTruncationLevel));
    }
    return grid_covering(lo, hi, width);
}

/// Bin masses of `law` on `grid`, labelled by left edges. Upper-tail masses are
/// computed from the complementary CDF so small bins keep their precision.
template <class Law>
DiscreteDistribution discretize_law(const Law& law, const Grid& grid) {
    std::vector<double> support(grid.count);
    std::vector<double> masses(grid.count);
    const double med = law.median();
    for (std::size_t k = 0; k < grid.count; ++k) {
        support[k] = grid.edge(k);
        const bool first = k == 0;
        const bool last = k + 1 == grid.count;
        const double a = support[k];
        const double b = grid.edge(k + 1);
        double m;
        if (first && last) {
            m = 1.0;
        } else if (first) {
            m = law.cdf(b);
        } else if (last) {
            m = law.ccdf(a);
        } else if (a >= med) {
            m = law.ccdf(a) - law.ccdf(b);
        } else {
            m = law.cdf(b) - law.cdf(a);
        }
        masses[k] = std::max(m, 0.0);
    }
    // Remove the float residue of the telescoping sum.
    const double total = detail::sum(masses);
    for (double& m : masses) m /= total;
    return DiscreteDistribution(std::move(support), std::move(masses));
}

} // namespace didinv
