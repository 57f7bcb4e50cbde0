#pragma once

// Falsification test for parallel trends of CDFs on a finite support.
//
// Under the null every mass of the implied counterfactual PMF is
// non-negative. The test studentizes the estimated masses with a cluster
// bootstrap, takes the minimum, and compares it with the least-favorable
// critical value: the alpha-quantile of min_j Z_j where Z is a centred Gaussian
// with the bootstrap correlation (all moments binding at zero).
//
// Randomness is counter-based and indexed by replicate / simulation number, so
// results are bitwise identical for any number of workers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "didinv/counterfactual.hpp"
#include "didinv/distributions.hpp"
#include "didinv/errors.hpp"
#include "didinv/panel.hpp"
#include "didinv/rng.hpp"

namespace didinv {

struct TestConfig {
    double alpha = 0.05;
    std::size_t bootstrap_reps = 1000;
    std::size_t cv_sims = 10000;
    std::uint64_t seed = 0;
    std::optional<Binning> binning;
    double min_se_floor = 0.0;
    bool drop_empty_bins = true;
    // Threads used for bootstrap replicates; results do not depend on it.
    std::size_t workers = 1;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
        if (bootstrap_reps < 100) throw InputError("at least 100 bootstrap replications are required");
        if (cv_sims < 1000) throw InputError("at least 1000 critical-value simulations are required");
        if (!(min_se_floor >= 0.0) || !std::isfinite(min_se_floor)) throw InputError("min_se_floor must be >= 0");
        if (binning && !(binning->width > 0.0)) throw InputError("bin width must be positive");
        if (workers < 1) throw InputError("workers must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// Point estimate

/// Implied counterfactual PMF from sample cell PMFs. With `drop_empty_bins`
/// the support keeps only points where one of the three cells used has mass.
inline SignedMeasure estimate_implied_pmf(const PanelDataset& panel, const std::optional<Binning>& binning,
                                          bool drop_empty_bins = true) {
    const auto cells = cell_distributions(panel, binning);
    const UntreatedCells untreated(cells);
    const auto implied = implied_counterfactual(untreated);
    if (!drop_empty_bins) return implied.pmf;

    std::vector<double> support;
    std::vector<double> masses;
    for (std::size_t i = 0; i < untreated.support().size(); ++i) {
        if (untreated.comparison_pre()[i] > 0.0 || untreated.comparison_post()[i] > 0.0 ||
            untreated.treated_pre()[i] > 0.0) {
            support.push_back(untreated.support()[i]);
            masses.push_back(implied.pmf.masses()[i]);
        }
    }
    return SignedMeasure(std::move(support), std::move(masses));
}

// ---------------------------------------------------------------------------
// Cluster bootstrap

/// Per-cluster weight totals of the three counterfactual cells on a fixed support.
class ClusterTable {
public:
    ClusterTable(const PanelDataset& panel, const std::optional<Binning>& binning, std::span<const double> support)
        : bins_(support.size()) {
        std::vector<std::string_view> ids;
        for (const auto& r : panel.rows) ids.push_back(r.cluster_id);
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        clusters_ = ids.size();
        for (auto& w : weights_) w.assign(clusters_ * bins_, 0.0);
        for (auto& t : totals_) t.assign(clusters_, 0.0);

        for (const auto& r : panel.rows) {
            const int slot = cell_slot(r.group, r.period);
            if (slot < 0) continue;
            const auto c = static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), r.cluster_id) - ids.begin());
            const double y = binning ? binning->label(r.outcome) : r.outcome;
            const auto it = std::lower_bound(support.begin(), support.end(), y);
            totals_[static_cast<std::size_t>(slot)][c] += r.weight;
            if (it != support.end() && *it == y) {
                weights_[static_cast<std::size_t>(slot)][c * bins_ + static_cast<std::size_t>(it - support.begin())] +=
                    r.weight;
            }
        }
    }

    std::size_t clusters() const noexcept { return clusters_; }
    std::size_t bins() const noexcept { return bins_; }

    /// Implied masses for a resample given per-cluster multiplicities; false
    /// when one of the three cells used is empty in the resample.
    bool implied(std::span<const std::uint32_t> multiplicity, std::span<double> out) const {
        std::fill(out.begin(), out.end(), 0.0);
        std::vector<double> cell(bins_);
        for (std::size_t slot = 0; slot < 3; ++slot) {
            double total = 0.0;
            std::fill(cell.begin(), cell.end(), 0.0);
            for (std::size_t c = 0; c < clusters_; ++c) {
                if (multiplicity[c] == 0) continue;
                const double m = multiplicity[c];
                total += m * totals_[slot][c];
                const double* w = &weights_[slot][c * bins_];
                for (std::size_t b = 0; b < bins_; ++b) cell[b] += m * w[b];
            }
            if (!(total > 0.0)) return false;
            const double sign = slot == 0 ? -1.0 : 1.0;
            for (std::size_t b = 0; b < bins_; ++b) out[b] += sign * (cell[b] / total);
        }
        return true;
    }

private:
    // 0: comparison pre, 1: comparison post, 2: treated pre. Treated post is never used.
    static int cell_slot(int group, int period) noexcept {
        if (group == 0) return period == 0 ? 0 : 1;
        return period == 0 ? 2 : -1;
    }

    std::size_t clusters_ = 0;
    std::size_t bins_;
    std::array<std::vector<double>, 3> weights_;
    std::array<std::vector<double>, 3> totals_;
};

struct BootstrapCovariance {
    std::vector<double> support;
    Eigen::MatrixXd covariance;
    // Replicates redrawn because a resample emptied a required cell.
    std::size_t redrawn = 0;
};

namespace detail {

inline constexpr std::uint64_t kMaxAttemptsPerReplicate = 10;

template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
}

} // namespace detail

/// Resamples clusters with replacement (as many as observed), recomputes the
/// implied PMF on `support`, and returns the covariance across replicates
/// (divisor B - 1). Replicate r, attempt a draws from counter index r*10 + a.
inline BootstrapCovariance cluster_bootstrap_cov(const PanelDataset& panel, const std::optional<Binning>& binning,
                                                 std::span<const double> support, std::size_t reps, std::uint64_t seed,
                                                 std::size_t workers = 1) {
    if (reps < 100) throw InputError("at least 100 bootstrap replications are required");
    const ClusterTable table(panel, binning, support);
    if (table.clusters() < 2) throw InputError("cluster bootstrap needs at least two clusters");

    const rng::CounterRng rng(seed, rng::Stream::bootstrap);
    const std::size_t k = support.size();
    const std::size_t C = table.clusters();
    Eigen::MatrixXd draws(static_cast<Eigen::Index>(reps), static_cast<Eigen::Index>(k));
    std::vector<std::uint8_t> first_bad(reps, 0);
    std::vector<std::uint8_t> exhausted(reps, 0);
    std::vector<std::uint32_t> attempts_used(reps, 0);

    detail::parallel_for(reps, workers, [&](std::size_t r) {
        std::vector<std::uint32_t> mult(C);
        std::vector<double> est(k);
        for (std::uint64_t a = 0; a < detail::kMaxAttemptsPerReplicate; ++a) {
            std::fill(mult.begin(), mult.end(), 0u);
            const std::uint64_t index = r * detail::kMaxAttemptsPerReplicate + a;
            for (std::size_t j = 0; j < C; ++j) ++mult[rng.below(C, index, j)];
            if (table.implied(mult, est)) {
                for (std::size_t b = 0; b < k; ++b) draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) = est[b];
                attempts_used[r] = static_cast<std::uint32_t>(a + 1);
                return;
            }
            if (a == 0) first_bad[r] = 1;
        }
        exhausted[r] = 1;
    });

    std::size_t bad_first = 0;
    std::size_t redrawn = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        if (exhausted[r]) {
            throw NumericalError("cluster bootstrap: resamples keep leaving a required cell empty; more clusters "
                                 "per group are needed");
        }
        bad_first += first_bad[r];
        redrawn += attempts_used[r] - 1;
    }
    if (2 * bad_first > reps) {
        throw NumericalError("cluster bootstrap: more than half of the resamples left a required cell empty; "
                             "more clusters per group are needed");
    }

    const Eigen::RowVectorXd centre = draws.colwise().mean();
    const Eigen::MatrixXd centred = draws.rowwise() - centre;
    BootstrapCovariance out;
    out.support.assign(support.begin(), support.end());
    out.covariance = (centred.transpose() * centred) / static_cast<double>(reps - 1);
    out.redrawn = redrawn;
    return out;
}

inline BootstrapCovariance cluster_bootstrap_cov(const PanelDataset& panel, const std::optional<Binning>& binning,
                                                 std::size_t reps, std::uint64_t seed, std::size_t workers = 1) {
    const auto pmf = estimate_implied_pmf(panel, binning);
    return cluster_bootstrap_cov(panel, binning, pmf.support(), reps, seed, workers);
}

// ---------------------------------------------------------------------------
// Statistic and critical value

struct StudentizedMin {
    double statistic;  // -inf when a zero-variance point has negative mass
    std::size_t argmin;
    std::vector<double> studentized; // NaN where excluded
    std::vector<std::size_t> usable; // points with positive standard error
};

/// min over points of estimate / se. Points with se = 0 are excluded when the
/// estimate is non-negative and force the statistic to -inf otherwise.
inline StudentizedMin studentized_min(std::span<const double> estimate, std::span<const double> se) {
    if (estimate.size() != se.size()) throw InputError("studentized_min: length mismatch");
    StudentizedMin out{std::numeric_limits<double>::infinity(), 0,
                       std::vector<double>(estimate.size(), std::numeric_limits<double>::quiet_NaN()), {}};
    bool any = false;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        if (!(se[i] >= 0.0)) throw InputError("studentized_min: standard errors must be non-negative");
        double z;
        if (se[i] > 0.0) {
            z = estimate[i] / se[i];
            out.usable.push_back(i);
        } else if (estimate[i] < 0.0) {
            z = -std::numeric_limits<double>::infinity();
        } else {
            continue;
        }
        out.studentized[i] = z;
        if (!any || z < out.statistic) {
            out.statistic = z;
            out.argmin = i;
        }
        any = true;
    }
    if (!any) throw NumericalError("studentized_min: every point has zero standard error and non-negative mass");
    return out;
}

struct LeastFavorableDraws {
    std::vector<double> sorted_minima;
    bool projected = false; // negative eigenvalues were clipped
    double min_eigenvalue = 0.0;
};

/// S draws of min_j Z_j with Z ~ N(0, correlation), sorted ascending.
inline LeastFavorableDraws least_favorable_minima(const Eigen::MatrixXd& correlation, std::size_t sims,
                                                  std::uint64_t seed) {
    if (correlation.rows() != correlation.cols() || correlation.rows() == 0) {
        throw InputError("correlation matrix must be square and non-empty");
    }
    if (!correlation.allFinite() || (correlation - correlation.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw InputError("correlation matrix must be finite and symmetric");
    }
    if (sims < 1) throw InputError("at least one simulation is required");
    const Eigen::Index k = correlation.rows();

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (correlation + correlation.transpose()));
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of the correlation matrix failed");
    LeastFavorableDraws out;
    out.min_eigenvalue = eig.eigenvalues().minCoeff();
    out.projected = out.min_eigenvalue < -1e-10;
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd factor = eig.eigenvectors() * root.asDiagonal();
    // Restore unit variances after clipping.
    for (Eigen::Index i = 0; i < k; ++i) {
        const double norm = factor.row(i).norm();
        if (norm > 0.0) factor.row(i) /= norm;
    }

    const rng::CounterRng rng(seed, rng::Stream::critical_value);
    out.sorted_minima.resize(sims);
    constexpr std::size_t kBlock = 1024;
    Eigen::MatrixXd shocks(k, static_cast<Eigen::Index>(kBlock));
    for (std::size_t start = 0; start < sims; start += kBlock) {
        const std::size_t count = std::min(kBlock, sims - start);
        for (std::size_t s = 0; s < count; ++s) {
            for (Eigen::Index j = 0; j < k; ++j) {
                shocks(j, static_cast<Eigen::Index>(s)) = rng.normal(start + s, 2 * static_cast<std::uint64_t>(j));
            }
        }
        const Eigen::MatrixXd z = factor * shocks.leftCols(static_cast<Eigen::Index>(count));
        for (std::size_t s = 0; s < count; ++s) out.sorted_minima[start + s] = z.col(static_cast<Eigen::Index>(s)).minCoeff();
    }
    std::sort(out.sorted_minima.begin(), out.sorted_minima.end());
    return out;
}

/// Empirical alpha-quantile inf{x : F_S(x) >= alpha} of sorted minima.
inline double lower_quantile(std::span<const double> sorted, double alpha) {
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(alpha * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

inline double least_favorable_cv(const Eigen::MatrixXd& correlation, double alpha, std::size_t sims,
                                 std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
    const auto draws = least_favorable_minima(correlation, sims, seed);
    return lower_quantile(draws.sorted_minima, alpha);
}

// ---------------------------------------------------------------------------
// Full test

enum class Decision { reject, fail_to_reject };
enum class TestStatus { ok, numerical_error };

struct BinDiagnostic {
    double support;
    double estimate;
    double se;
    double studentized; // NaN when the point is excluded
    bool negative;
    bool zero_se;
};

struct CorrelationSummary {
    std::size_t dimension = 0;
    double min_off_diagonal = 0.0;
    double max_off_diagonal = 0.0;
    double min_eigenvalue = 0.0;
    bool projected = false;
};

struct TestResult {
    TestStatus status = TestStatus::ok;
    std::string error;
    std::vector<BinDiagnostic> bins;
    double statistic = 0.0;
    double argmin_support = 0.0;
    double critical_value = 0.0;
    double p_value = 1.0;
    Decision decision = Decision::fail_to_reject;
    TestConfig config;
    CorrelationSummary correlation;
    std::size_t redrawn_replicates = 0;
    std::vector<std::string> warnings;
};

/// Estimate, bootstrap, studentize, compare with the least-favorable critical
/// value. p-value: share of simulated minima strictly below the statistic.
/// Reject iff statistic < critical value. Numerical failures are reported in
/// the result; invalid input throws.
inline TestResult falsification_test(const PanelDataset& panel, const TestConfig& config) {
    config.validate();
    validate_panel(panel);
    TestResult result;
    result.config = config;

    const auto pmf = estimate_implied_pmf(panel, config.binning, config.drop_empty_bins);
    const auto support = pmf.support();
    const auto estimate = pmf.masses();
    result.bins.reserve(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
        result.bins.push_back({support[i], estimate[i], 0.0, std::numeric_limits<double>::quiet_NaN(), estimate[i] < 0.0,
                               false});
    }

    try {
        const auto boot =
            cluster_bootstrap_cov(panel, config.binning, support, config.bootstrap_reps, config.seed, config.workers);
        result.redrawn_replicates = boot.redrawn;
        if (boot.redrawn > 0) {
            result.warnings.push_back(std::to_string(boot.redrawn) +
                                      " bootstrap resamples left a required cell empty and were redrawn");
        }
        std::vector<double> se(support.size());
        for (std::size_t i = 0; i < se.size(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double raw = std::sqrt(std::max(boot.covariance(ii, ii), 0.0));
            result.bins[i].zero_se = raw == 0.0;
            se[i] = std::max(raw, config.min_se_floor);
            result.bins[i].se = se[i];
        }

        const auto stud = studentized_min(estimate, se);
        for (std::size_t i = 0; i < se.size(); ++i) result.bins[i].studentized = stud.studentized[i];
        result.statistic = stud.statistic;
        result.argmin_support = support[stud.argmin];

        const std::size_t zero_se =
            static_cast<std::size_t>(std::count_if(result.bins.begin(), result.bins.end(), [](const auto& b) { return b.zero_se; }));
        if (zero_se > 0) {
            result.warnings.push_back(std::to_string(zero_se) + " support points have zero bootstrap variance");
        }

        const auto& usable = stud.usable;
        if (usable.empty()) {
            // Only zero-variance points remain and one is negative: rejection is deterministic.
            result.critical_value = std::numeric_limits<double>::infinity();
            result.p_value = 0.0;
            result.warnings.push_back("no support point has positive standard error");
        } else {
            const auto k = static_cast<Eigen::Index>(usable.size());
            Eigen::MatrixXd corr(k, k);
            for (Eigen::Index a = 0; a < k; ++a) {
                for (Eigen::Index b = 0; b < k; ++b) {
                    const auto i = static_cast<Eigen::Index>(usable[static_cast<std::size_t>(a)]);
                    const auto j = static_cast<Eigen::Index>(usable[static_cast<std::size_t>(b)]);
                    corr(a, b) = a == b ? 1.0 : boot.covariance(i, j) / (se[static_cast<std::size_t>(i)] * se[static_cast<std::size_t>(j)]);
                }
            }
            const auto draws = least_favorable_minima(corr, config.cv_sims, config.seed);
            result.critical_value = lower_quantile(draws.sorted_minima, config.alpha);
            const auto below = std::lower_bound(draws.sorted_minima.begin(), draws.sorted_minima.end(), result.statistic) -
                               draws.sorted_minima.begin();
            result.p_value = static_cast<double>(below) / static_cast<double>(draws.sorted_minima.size());

            auto& cs = result.correlation;
            cs.dimension = usable.size();
            cs.min_eigenvalue = draws.min_eigenvalue;
            cs.projected = draws.projected;
            cs.min_off_diagonal = k > 1 ? 1.0 : 0.0;
            cs.max_off_diagonal = k > 1 ? -1.0 : 0.0;
            for (Eigen::Index a = 0; a < k; ++a) {
                for (Eigen::Index b = 0; b < k; ++b) {
                    if (a == b) continue;
                    cs.min_off_diagonal = std::min(cs.min_off_diagonal, corr(a, b));
                    cs.max_off_diagonal = std::max(cs.max_off_diagonal, corr(a, b));
                }
            }
            if (draws.projected) {
                result.warnings.push_back("bootstrap correlation matrix was not positive semi-definite; negative "
                                          "eigenvalues were clipped to zero");
            }
        }
        result.decision = result.statistic < result.critical_value ? Decision::reject : Decision::fail_to_reject;
    } catch (const NumericalError& e) {
        result.status = TestStatus::numerical_error;
        result.error = e.what();
        result.decision = Decision::fail_to_reject;
        result.statistic = std::numeric_limits<double>::quiet_NaN();
        result.critical_value = std::numeric_limits<double>::quiet_NaN();
        result.p_value = std::numeric_limits<double>::quiet_NaN();
    }
    return result;
}

} // namespace didinv
