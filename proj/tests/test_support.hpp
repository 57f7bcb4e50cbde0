#pragma once

// Random instance generators shared by the unit and acceptance suites.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "didinv/distributions.hpp"

namespace didinv::testing {

using Engine = std::mt19937_64;

inline double uniform(Engine& eng, double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Engine& eng, std::size_t n) { return static_cast<std::size_t>(eng() % n); }

/// `size` distinct support points drawn from a grid of step 0.5 within [lo, lo + 0.5 * span).
inline std::vector<double> random_support(Engine& eng, std::size_t size, double lo = 0.5, std::size_t span = 200) {
    std::set<std::size_t> picks;
    while (picks.size() < size) picks.insert(uniform_index(eng, span));
    std::vector<double> out;
    for (auto k : picks) out.push_back(lo + 0.5 * static_cast<double>(k));
    return out;
}

/// Random PMF on `support`; some masses may be zero.
inline DiscreteDistribution random_pmf(Engine& eng, const std::vector<double>& support, double zero_prob = 0.2) {
    std::vector<double> m(support.size());
    double total = 0.0;
    for (double& x : m) {
        x = uniform(eng, 0.0, 1.0) < zero_prob ? 0.0 : uniform(eng, 0.01, 1.0);
        total += x;
    }
    if (total == 0.0) {
        m[0] = 1.0;
        total = 1.0;
    }
    for (double& x : m) x /= total;
    return DiscreteDistribution(support, m);
}

/// Random PMF whose masses are multiples of 2^-bits (exact in binary floating point).
inline std::vector<std::uint64_t> random_composition(Engine& eng, std::size_t parts, std::uint64_t total) {
    std::vector<std::uint64_t> cuts{0, total};
    for (std::size_t i = 0; i + 1 < parts; ++i) cuts.push_back(eng() % (total + 1));
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) out.push_back(cuts[i + 1] - cuts[i]);
    return out;
}

} // namespace didinv::testing

#include "didinv/mixture.hpp"

namespace didinv::testing {

/// Random theta in [0,1], hitting the endpoints now and then.
inline double random_theta(Engine& eng) {
    const double u = uniform(eng, 0.0, 1.0);
    if (u < 0.05) return 0.0;
    if (u < 0.10) return 1.0;
    return uniform(eng, 0.0, 1.0);
}

/// Random mixture-representation spec on a shared random support of at most
/// `max_size` positive points.
inline Case3Spec random_case3_spec(Engine& eng, std::size_t max_size = 50) {
    const auto support = random_support(eng, 1 + uniform_index(eng, max_size));
    return Case3Spec{random_theta(eng), random_pmf(eng, support), random_pmf(eng, support), random_pmf(eng, support),
                     random_pmf(eng, support)};
}

/// Four unrelated random PMFs on a shared random support.
inline FourCells random_quadruple(Engine& eng, std::size_t max_size = 20) {
    const auto support = random_support(eng, 1 + uniform_index(eng, max_size));
    return FourCells(random_pmf(eng, support), random_pmf(eng, support), random_pmf(eng, support),
                     random_pmf(eng, support));
}

/// Random strictly increasing piecewise-linear map covering [lo, hi].
inline MonotoneTransform random_table(Engine& eng, double lo, double hi) {
    const std::size_t knots = 2 + uniform_index(eng, 6);
    std::vector<double> xs{lo - 1.0};
    std::vector<double> ys{uniform(eng, -10.0, 10.0)};
    for (std::size_t i = 1; i < knots; ++i) {
        xs.push_back(xs.back() + (hi - lo + 2.0) / static_cast<double>(knots - 1));
        ys.push_back(ys.back() + uniform(eng, 0.01, 5.0));
    }
    return MonotoneTransform::table(xs, ys);
}

} // namespace didinv::testing
