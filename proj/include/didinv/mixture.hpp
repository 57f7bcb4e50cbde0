#pragma once

// Mixture structure behind parallel trends of CDFs.
//
// Four untreated laws satisfy parallel trends of CDFs exactly when
//     F_dt = theta * G_t + (1 - theta) * H_d
// for some theta in [0,1]: a share theta whose law depends only on time and a
// share 1 - theta whose law depends only on group. decompose() recovers theta
// and the component laws from a pair of PMFs; theta is their total variation
// distance and both theta and the time components depend on the pair only
// through its difference.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "didinv/analytic.hpp"
#include "didinv/counterfactual.hpp"
#include "didinv/distributions.hpp"
#include "didinv/panel.hpp"

namespace didinv {

enum class DegenerateCase { none, theta_zero, theta_one };

struct MixtureDecomposition {
    double theta;
    DiscreteDistribution f_min;
    DiscreteDistribution f_tilde_1;
    DiscreteDistribution f_tilde_2;
    DegenerateCase degenerate_case;
};

namespace detail {

inline DiscreteDistribution normalized(std::span<const double> support, std::vector<double> masses, double total) {
    for (double& m : masses) m /= total;
    return DiscreteDistribution(std::vector<double>(support.begin(), support.end()), std::move(masses));
}

} // namespace detail

/// f_j = (1 - theta) f_min + theta f~_j with theta = sum (f1 - f2)_+.
/// Where the weights make a component arbitrary, it is fixed as: theta = 0 ->
/// f~_1 = f~_2 = f_min = f1; theta = 1 -> f_min = f1 and f~_j = f_j.
inline MixtureDecomposition decompose(const DiscreteDistribution& f1, const DiscreteDistribution& f2) {
    const std::array pair{f1, f2};
    const auto aligned = align_supports(pair);
    const auto s = aligned[0].support();
    const auto a = aligned[0].masses();
    const auto b = aligned[1].masses();
    const std::size_t n = s.size();

    std::vector<double> pos(n), neg(n), common(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double diff = a[i] - b[i];
        pos[i] = std::max(diff, 0.0);
        neg[i] = std::max(-diff, 0.0);
        common[i] = std::min(a[i], b[i]);
    }
    const double theta = total_variation(f1, f2);
    const double pos_total = detail::sum(pos);
    const double neg_total = detail::sum(neg);
    const double common_total = detail::sum(common);

    if (pos_total == 0.0) {
        return {theta, aligned[0], aligned[0], aligned[0], DegenerateCase::theta_zero};
    }
    if (common_total == 0.0) {
        return {theta, aligned[0], aligned[0], aligned[1], DegenerateCase::theta_one};
    }
    auto f_min = detail::normalized(s, std::move(common), common_total);
    auto f_tilde_1 = detail::normalized(s, std::move(pos), pos_total);
    // neg_total can only vanish when the pair differs by float residue alone.
    auto f_tilde_2 = neg_total > 0.0 ? detail::normalized(s, std::move(neg), neg_total) : f_min;
    return {theta, std::move(f_min), std::move(f_tilde_1), std::move(f_tilde_2), DegenerateCase::none};
}

/// Pointwise mixture (1 - theta) w + theta v on a shared support.
inline DiscreteDistribution mix(double theta, const DiscreteDistribution& v, const DiscreteDistribution& w) {
    const std::array pair{v, w};
    const auto aligned = align_supports(pair);
    const auto x = aligned[0].masses();
    const auto y = aligned[1].masses();
    std::vector<double> masses(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) masses[i] = theta * x[i] + (1.0 - theta) * y[i];
    return DiscreteDistribution(std::vector<double>(aligned[0].support().begin(), aligned[0].support().end()),
                                std::move(masses));
}

inline std::pair<DiscreteDistribution, DiscreteDistribution> reconstruct(const MixtureDecomposition& d) {
    return {mix(d.theta, d.f_tilde_1, d.f_min), mix(d.theta, d.f_tilde_2, d.f_min)};
}

/// theta, time components G_t, and group components H_d.
struct Case3Spec {
    double theta;
    DiscreteDistribution G0;
    DiscreteDistribution G1;
    DiscreteDistribution H0;
    DiscreteDistribution H1;
};

/// Untreated laws F_dt = theta G_t + (1 - theta) H_d.
inline FourCells build_case3_quadruple(const Case3Spec& spec) {
    if (!(spec.theta >= 0.0 && spec.theta <= 1.0)) {
        throw InputError("case 3 quadruple: theta must lie in [0,1]");
    }
    const std::array parts{spec.G0, spec.G1, spec.H0, spec.H1};
    const auto al = align_supports(parts);
    const auto& G0 = al[0];
    const auto& G1 = al[1];
    const auto& H0 = al[2];
    const auto& H1 = al[3];
    return FourCells(mix(spec.theta, G0, H0), mix(spec.theta, G1, H0), mix(spec.theta, G0, H1),
                     mix(spec.theta, G1, H1));
}

/// A mixture representation of the four laws, if one exists. Candidate
/// components come from decomposing each group's (post, pre) pair; the
/// candidate is accepted only if it rebuilds every cell within `tolerance`.
inline std::optional<Case3Spec> find_mixture_representation(const FourCells& cells, double tolerance = 1e-12) {
    const auto treated = decompose(cells.dist(1, 1), cells.dist(1, 0));
    const auto comparison = decompose(cells.dist(0, 1), cells.dist(0, 0));
    if (std::abs(treated.theta - comparison.theta) > tolerance) return std::nullopt;

    Case3Spec spec{treated.theta, treated.f_tilde_2, treated.f_tilde_1, comparison.f_min, treated.f_min};
    const auto rebuilt = build_case3_quadruple(spec);
    for (int d = 0; d < 2; ++d) {
        for (int t = 0; t < 2; ++t) {
            const auto want = masses_on(cells.dist(d, t), rebuilt.support());
            const auto got = rebuilt.masses(d, t);
            for (std::size_t i = 0; i < want.size(); ++i) {
                if (std::abs(want[i] - got[i]) > tolerance) return std::nullopt;
            }
        }
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Lognormal mixtures

/// Components of the lognormal mixture family: G_t = LN(g_mu[t], sigma),
/// H_d = LN(h_mu[d], sigma). The defaults give the example3 family.
struct LognormalMixture {
    double theta = 0.5;
    std::array<double, 2> g_mu{2.0, 3.0};
    std::array<double, 2> h_mu{3.0, 4.0};
    double sigma = 1.0;

    LognormalLaw G(int t) const { return {g_mu[static_cast<std::size_t>(t)], sigma}; }
    LognormalLaw H(int d) const { return {h_mu[static_cast<std::size_t>(d)], sigma}; }
};

enum class MeanScale { levels, log };

/// Analytic E[g(Y(0)) | D=d] in period t for g = identity or log.
inline double example3_oracle_mean(double theta, const LognormalLaw& time_component, const LognormalLaw& group_component,
                                   MeanScale scale) {
    if (scale == MeanScale::levels) {
        return theta * time_component.mean() + (1.0 - theta) * group_component.mean();
    }
    return theta * time_component.log_mean() + (1.0 - theta) * group_component.log_mean();
}

inline double example3_oracle_mean(const LognormalMixture& mixture, int group, int period, MeanScale scale) {
    return example3_oracle_mean(mixture.theta, mixture.G(period), mixture.H(group), scale);
}

/// The family discretized on a common grid of `bin_width` bins, then mixed.
inline FourCells lognormal_mixture_quadruple(const LognormalMixture& m, double bin_width) {
    const std::array laws{m.G(0), m.G(1), m.H(0), m.H(1)};
    const auto grid = truncation_grid<LognormalLaw>(laws, bin_width);
    return build_case3_quadruple({m.theta, discretize_law(laws[0], grid), discretize_law(laws[1], grid),
                                  discretize_law(laws[2], grid), discretize_law(laws[3], grid)});
}

inline FourCells example3_quadruple(double bin_width) { return lognormal_mixture_quadruple(LognormalMixture{}, bin_width); }

} // namespace didinv
