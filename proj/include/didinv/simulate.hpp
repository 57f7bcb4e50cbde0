#pragma once

// Data-generating processes for two-group / two-period panels.
//
// Each group has `n_per_cell` units observed in both periods. Every random
// quantity for a unit is drawn from the counter-based generator at an index
// derived from (group, unit), so a dataset is a pure function of its options
// and does not depend on generation order.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "didinv/analytic.hpp"
#include "didinv/errors.hpp"
#include "didinv/mixture.hpp"
#include "didinv/panel.hpp"
#include "didinv/rng.hpp"

namespace didinv {

struct SimulationOptions {
    std::size_t n_per_cell = 1000;
    std::uint64_t seed = 1;
    // Total clusters, split between the groups (group 0 takes the extra one when odd).
    std::size_t clusters = 50;
    std::optional<Binning> binning;
};

/// Draws one unit: `draw(group, unit_rng, index)` returns the pair of untreated
/// outcomes (period 0, period 1). Slots used by a sampler must stay below 16.
class UnitDraws {
public:
    UnitDraws(const rng::CounterRng& rng, std::uint64_t index) : rng_(rng), index_(index) {}
    double uniform(std::uint64_t slot) const { return rng_.uniform(index_, slot); }
    double normal(std::uint64_t slot) const { return rng_.normal(index_, slot); }

private:
    const rng::CounterRng& rng_;
    std::uint64_t index_;
};

template <class Sampler>
PanelDataset simulate_panel(const SimulationOptions& opt, Sampler&& sampler) {
    if (opt.n_per_cell < 1) throw InputError("simulation needs at least one unit per cell");
    if (opt.clusters < 2) throw InputError("simulation needs at least two clusters");
    const rng::CounterRng rng(opt.seed, rng::Stream::simulate);
    const std::array<std::size_t, 2> per_group{(opt.clusters + 1) / 2, opt.clusters / 2};

    PanelDataset panel;
    panel.source = "simulated";
    panel.binning_applied = opt.binning;
    panel.rows.reserve(4 * opt.n_per_cell);
    for (int d = 0; d < 2; ++d) {
        for (std::size_t i = 0; i < opt.n_per_cell; ++i) {
            const std::uint64_t index = (static_cast<std::uint64_t>(d) << 48) | i;
            const UnitDraws draws(rng, index);
            const std::array<double, 2> y = sampler(d, draws);
            const auto cluster = i % per_group[static_cast<std::size_t>(d)];
            std::string id = "g" + std::to_string(d) + "c" + std::to_string(cluster);
            for (int t = 0; t < 2; ++t) {
                double outcome = y[static_cast<std::size_t>(t)];
                if (opt.binning) outcome = opt.binning->label(outcome);
                panel.rows.push_back({id, d, t, outcome, 1.0});
            }
        }
    }
    return panel;
}

/// Lognormal mixture family. A unit belongs to the time-component share with
/// probability theta for both periods; its outcomes are then drawn from G_t,
/// otherwise from its group's H_d, independently in each period.
inline PanelDataset simulate_lognormal_mixture(const LognormalMixture& m, const SimulationOptions& opt) {
    return simulate_panel(opt, [&](int d, const UnitDraws& u) {
        const bool time_share = u.uniform(0) < m.theta;
        std::array<double, 2> y{};
        for (int t = 0; t < 2; ++t) {
            const auto law = time_share ? m.G(t) : m.H(d);
            y[static_cast<std::size_t>(t)] = std::exp(law.mu + law.sigma * u.normal(2 + 2 * static_cast<unsigned>(t)));
        }
        return y;
    });
}

inline PanelDataset simulate_example3(const SimulationOptions& opt) {
    return simulate_lognormal_mixture(LognormalMixture{}, opt);
}

/// Binary outcomes with P(Y_dt = 1) = p[d][t], independent across periods.
struct BinaryDgp {
    std::array<std::array<double, 2>, 2> p{{{0.3, 0.4}, {0.5, 0.6}}};
};

inline PanelDataset simulate_binary(const BinaryDgp& dgp, const SimulationOptions& opt) {
    for (const auto& row : dgp.p) {
        for (double p : row) {
            if (!(p >= 0.0 && p <= 1.0)) throw InputError("binary DGP: probabilities must lie in [0,1]");
        }
    }
    return simulate_panel(opt, [&](int d, const UnitDraws& u) {
        const auto& p = dgp.p[static_cast<std::size_t>(d)];
        return std::array<double, 2>{u.uniform(0) < p[0] ? 1.0 : 0.0, u.uniform(1) < p[1] ? 1.0 : 0.0};
    });
}

/// Gaussian cells N(mean[d][t], sd[d][t]^2). The defaults shrink the comparison
/// group's dispersion over time while the treated group stays put, so the
/// implied counterfactual has negative mass in the tails.
struct NormalDgp {
    std::array<std::array<double, 2>, 2> mean{{{0.0, 0.0}, {0.0, 0.0}}};
    std::array<std::array<double, 2>, 2> sd{{{1.35, 1.0}, {1.0, 1.0}}};

    NormalLaw law(int d, int t) const {
        return {mean[static_cast<std::size_t>(d)][static_cast<std::size_t>(t)],
                sd[static_cast<std::size_t>(d)][static_cast<std::size_t>(t)]};
    }
};

inline PanelDataset simulate_normal(const NormalDgp& dgp, const SimulationOptions& opt) {
    for (int d = 0; d < 2; ++d) {
        for (int t = 0; t < 2; ++t) {
            if (!(dgp.law(d, t).sigma > 0.0)) throw InputError("normal DGP: standard deviations must be positive");
        }
    }
    return simulate_panel(opt, [&](int d, const UnitDraws& u) {
        std::array<double, 2> y{};
        for (int t = 0; t < 2; ++t) {
            const auto law = dgp.law(d, t);
            y[static_cast<std::size_t>(t)] = law.mu + law.sigma * u.normal(2 * static_cast<unsigned>(t));
        }
        return y;
    });
}

/// Population cell PMFs of a normal DGP on `bin_width` bins (truncated grid).
inline FourCells normal_population_cells(const NormalDgp& dgp, double bin_width) {
    const std::array laws{dgp.law(0, 0), dgp.law(0, 1), dgp.law(1, 0), dgp.law(1, 1)};
    const auto grid = truncation_grid<NormalLaw>(laws, bin_width);
    return FourCells(discretize_law(laws[0], grid), discretize_law(laws[1], grid), discretize_law(laws[2], grid),
                     discretize_law(laws[3], grid));
}

} // namespace didinv
