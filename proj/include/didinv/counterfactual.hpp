#pragma once

// Counterfactual distributions for the treated group in the post period.
//
// Two routes are provided: the distribution implied by parallel trends of
// CDFs (pre-treated + post-comparison - pre-comparison, pointwise), and the
// changes-in-changes quantile map. Neither route reads cell (1,1): treated
// post-period outcomes are not untreated outcomes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "didinv/distributions.hpp"
#include "didinv/panel.hpp"

namespace didinv {

/// The three cells a counterfactual may legitimately use. Built from FourCells
/// without copying cell (1,1) so it cannot be read by accident.
class UntreatedCells {
public:
    explicit UntreatedCells(const FourCells& cells)
        : support_(cells.support().begin(), cells.support().end()),
          comparison_pre_(cells.masses(0, 0).begin(), cells.masses(0, 0).end()),
          comparison_post_(cells.masses(0, 1).begin(), cells.masses(0, 1).end()),
          treated_pre_(cells.masses(1, 0).begin(), cells.masses(1, 0).end()) {}

    std::span<const double> support() const noexcept { return support_; }
    std::span<const double> comparison_pre() const noexcept { return comparison_pre_; }
    std::span<const double> comparison_post() const noexcept { return comparison_post_; }
    std::span<const double> treated_pre() const noexcept { return treated_pre_; }

private:
    std::vector<double> support_;
    std::vector<double> comparison_pre_;
    std::vector<double> comparison_post_;
    std::vector<double> treated_pre_;
};

struct ImpliedCounterfactual {
    SignedMeasure pmf;
    CumulativeCurve cdf;
    double min_mass;
    double argmin;
    bool is_proper;
};

inline ImpliedCounterfactual implied_counterfactual(const UntreatedCells& cells) {
    const auto s = cells.support();
    const auto f00 = cells.comparison_pre();
    const auto f01 = cells.comparison_post();
    const auto f10 = cells.treated_pre();
    std::vector<double> masses(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) masses[i] = f10[i] + f01[i] - f00[i];

    const auto min_it = std::min_element(masses.begin(), masses.end());
    const double min_mass = *min_it;
    const double argmin = s[static_cast<std::size_t>(min_it - masses.begin())];
    SignedMeasure pmf(std::vector<double>(s.begin(), s.end()), std::move(masses));
    auto curve = cdf(pmf);
    return {std::move(pmf), std::move(curve), min_mass, argmin, min_mass >= -kMassTolerance};
}

inline ImpliedCounterfactual implied_counterfactual(const FourCells& cells) {
    return implied_counterfactual(UntreatedCells(cells));
}

struct ParallelCheck {
    bool holds;
    double max_abs_deviation;
    double argmax;
};

/// sup_y |(F11 - F10)(y) - (F01 - F00)(y)| for four untreated-outcome laws.
inline ParallelCheck check_cdf_parallel(const FourCells& cells, double tolerance) {
    const auto s = cells.support();
    const auto f00 = cells.masses(0, 0);
    const auto f01 = cells.masses(0, 1);
    const auto f10 = cells.masses(1, 0);
    const auto f11 = cells.masses(1, 1);
    double running = 0.0;
    double worst = 0.0;
    double where = s.front();
    for (std::size_t i = 0; i < s.size(); ++i) {
        running += (f11[i] - f10[i]) - (f01[i] - f00[i]);
        if (std::abs(running) > worst) {
            worst = std::abs(running);
            where = s[i];
        }
    }
    return {worst <= tolerance, worst, where};
}

/// Difference-in-differences of means after transforming outcomes by `g`.
inline double did_att(const FourCells& cells, const MonotoneTransform& g) {
    auto m = [&](int d, int t) { return mean(apply_transform(cells.dist(d, t), g)); };
    return (m(1, 1) - m(1, 0)) - (m(0, 1) - m(0, 0));
}

namespace detail {
// Slack when comparing cumulative sums inside the generalized inverse.
inline constexpr double kQuantileSlack = 1e-14;
} // namespace detail

/// Changes-in-changes counterfactual F10(F00^{-1}(F01(y))) evaluated on the
/// shared support, with F^{-1}(q) = inf{y : F(y) >= q}. Mass of F10 lying above
/// the comparison-pre support cannot be reached by the inverse; it is placed on
/// the largest support point so the result is a proper distribution.
inline DiscreteDistribution cic_counterfactual(const UntreatedCells& cells) {
    const auto s = cells.support();
    const auto n = s.size();
    std::vector<double> F00(n), F01(n), F10(n);
    std::partial_sum(cells.comparison_pre().begin(), cells.comparison_pre().end(), F00.begin());
    std::partial_sum(cells.comparison_post().begin(), cells.comparison_post().end(), F01.begin());
    std::partial_sum(cells.treated_pre().begin(), cells.treated_pre().end(), F10.begin());

    std::vector<double> values(n);
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double q = F01[i];
        if (q <= detail::kQuantileSlack) {
            values[i] = 0.0;
            continue;
        }
        while (j + 1 < n && F00[j] < q - detail::kQuantileSlack) ++j;
        values[i] = std::clamp(F10[j], 0.0, 1.0);
    }
    values[n - 1] = 1.0;

    std::vector<double> masses(n);
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        masses[i] = std::max(values[i] - prev, 0.0);
        prev = std::max(prev, values[i]);
    }
    return DiscreteDistribution(std::vector<double>(s.begin(), s.end()), std::move(masses));
}

inline DiscreteDistribution cic_counterfactual(const FourCells& cells) {
    return cic_counterfactual(UntreatedCells(cells));
}

struct CounterfactualDivergence {
    double sup_distance;
    // True when the implied counterfactual had negative mass and its
    // normalized positive part was compared instead.
    bool used_positive_part;
};

inline CounterfactualDivergence counterfactual_divergence(const FourCells& cells) {
    const UntreatedCells untreated(cells);
    const auto implied = implied_counterfactual(untreated);
    const auto cic = cdf(cic_counterfactual(untreated));

    std::vector<double> reference = implied.cdf.values;
    const bool positive_part = !implied.is_proper;
    if (positive_part) {
        std::vector<double> pos(implied.pmf.masses().begin(), implied.pmf.masses().end());
        for (double& m : pos) m = std::max(m, 0.0);
        const double total = detail::sum(pos);
        std::partial_sum(pos.begin(), pos.end(), reference.begin());
        for (double& v : reference) v /= total;
    }
    double sup = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        sup = std::max(sup, std::abs(reference[i] - cic.values[i]));
    }
    return {sup, positive_part};
}

} // namespace didinv
