#pragma once

// Finite discrete distributions on the real line.
//
// All density statements in this library are mass-function statements with
// respect to counting measure on a finite support. Distributions are small
// immutable values; every operation here is a pure function.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "didinv/errors.hpp"

namespace didinv {

inline constexpr double kMassTolerance = 1e-12;

namespace detail {

inline void require_strictly_increasing(std::span<const double> support, const char* what) {
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (!std::isfinite(support[i])) {
            throw InputError(std::string(what) + ": support point is not finite");
        }
        if (i > 0 && !(support[i - 1] < support[i])) {
            throw InputError(std::string(what) + ": support must be strictly increasing");
        }
    }
}

inline double sum(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0);
}

} // namespace detail

/// Probability mass function with finite, strictly increasing support.
class DiscreteDistribution {
public:
    DiscreteDistribution(std::vector<double> support, std::vector<double> masses, double total_weight = 1.0)
        : support_(std::move(support)), masses_(std::move(masses)), total_weight_(total_weight) {
        if (support_.empty()) {
            throw InputError("distribution: empty support");
        }
        if (support_.size() != masses_.size()) {
            throw InputError("distribution: support and masses differ in length");
        }
        detail::require_strictly_increasing(support_, "distribution");
        for (double m : masses_) {
            if (!(m >= 0.0) || !std::isfinite(m)) {
                throw InputError("distribution: masses must be finite and non-negative");
            }
        }
        if (std::abs(detail::sum(masses_) - 1.0) > kMassTolerance) {
            throw InputError("distribution: masses do not sum to 1");
        }
        if (!(total_weight_ > 0.0)) {
            throw InputError("distribution: total weight must be positive");
        }
    }

    static DiscreteDistribution point_mass(double y) { return DiscreteDistribution({y}, {1.0}); }

    std::span<const double> support() const noexcept { return support_; }
    std::span<const double> masses() const noexcept { return masses_; }
    std::size_t size() const noexcept { return support_.size(); }
    double total_weight() const noexcept { return total_weight_; }

    /// Mass at `y`, or 0 when `y` is not a support point.
    double mass_at(double y) const noexcept {
        auto it = std::lower_bound(support_.begin(), support_.end(), y);
        if (it == support_.end() || *it != y) return 0.0;
        return masses_[static_cast<std::size_t>(it - support_.begin())];
    }

    friend bool operator==(const DiscreteDistribution& a, const DiscreteDistribution& b) {
        return a.support_ == b.support_ && a.masses_ == b.masses_;
    }

private:
    std::vector<double> support_;
    std::vector<double> masses_;
    double total_weight_;
};

/// Finite measure whose masses may be negative but still sum to one.
class SignedMeasure {
public:
    SignedMeasure(std::vector<double> support, std::vector<double> masses)
        : support_(std::move(support)), masses_(std::move(masses)) {
        if (support_.empty()) {
            throw InputError("signed measure: empty support");
        }
        if (support_.size() != masses_.size()) {
            throw InputError("signed measure: support and masses differ in length");
        }
        detail::require_strictly_increasing(support_, "signed measure");
        if (std::abs(detail::sum(masses_) - 1.0) > kMassTolerance) {
            throw InputError("signed measure: masses do not sum to 1");
        }
    }

    std::span<const double> support() const noexcept { return support_; }
    std::span<const double> masses() const noexcept { return masses_; }
    std::size_t size() const noexcept { return support_.size(); }

    friend bool operator==(const SignedMeasure&, const SignedMeasure&) = default;

private:
    std::vector<double> support_;
    std::vector<double> masses_;
};

/// Right-continuous step function stored at its jump points.
struct CumulativeCurve {
    std::vector<double> support;
    std::vector<double> values;

    /// Value at `y`: the value at the largest support point <= y, or 0 below the support.
    double operator()(double y) const noexcept {
        auto it = std::upper_bound(support.begin(), support.end(), y);
        if (it == support.begin()) return 0.0;
        return values[static_cast<std::size_t>(it - support.begin()) - 1];
    }

    bool is_monotone() const noexcept {
        if (!values.empty() && values.front() < 0.0) return false;
        return std::is_sorted(values.begin(), values.end());
    }
};

struct Observation {
    double outcome;
    double weight = 1.0;
};

// ---------------------------------------------------------------------------
// Construction

inline DiscreteDistribution empirical_pmf(std::span<const Observation> observations) {
    if (observations.empty()) {
        throw InputError("empirical_pmf: no observations");
    }
    std::vector<Observation> sorted(observations.begin(), observations.end());
    for (const auto& o : sorted) {
        if (!std::isfinite(o.outcome)) throw InputError("empirical_pmf: non-finite outcome");
        if (!(o.weight > 0.0) || !std::isfinite(o.weight)) throw InputError("empirical_pmf: weight must be positive");
    }
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Observation& a, const Observation& b) { return a.outcome < b.outcome; });

    std::vector<double> support;
    std::vector<double> weights;
    for (const auto& o : sorted) {
        if (support.empty() || support.back() != o.outcome) {
            support.push_back(o.outcome);
            weights.push_back(0.0);
        }
        weights.back() += o.weight;
    }
    const double total = detail::sum(weights);
    for (double& w : weights) w /= total;
    return DiscreteDistribution(std::move(support), std::move(weights), total);
}

/// Label carried by the dedicated bin for outcomes exactly equal to zero.
/// It sorts below every ordinary bin label at or above -bin_width and is
/// distinct from the label of the ordinary bin starting at 0.
inline constexpr double kZeroBinLabel = -std::numeric_limits<double>::denorm_min();

/// Half-open bins [origin + k*width, origin + (k+1)*width) labelled by their
/// left edge. Labels are always recomputed as origin + k*width from integer k,
/// so binning an already binned label returns the same label.
struct Binning {
    double width = 1.0;
    double origin = 0.0;
    bool zero_bin = false;

    double edge(long long k) const noexcept { return origin + static_cast<double>(k) * width; }

    double label(double x) const {
        if (!(width > 0.0) || !std::isfinite(width)) {
            throw InputError("binning: bin width must be positive");
        }
        if (!std::isfinite(x)) {
            throw InputError("binning: non-finite outcome");
        }
        if (zero_bin && (x == 0.0 || x == kZeroBinLabel)) {
            return kZeroBinLabel;
        }
        auto k = static_cast<long long>(std::floor((x - origin) / width));
        // Division can land one bin off near an edge; settle against the edges themselves.
        while (edge(k) > x) --k;
        while (edge(k + 1) <= x) ++k;
        return edge(k);
    }
};

inline DiscreteDistribution discretize(std::span<const Observation> observations, const Binning& binning) {
    std::vector<Observation> binned;
    binned.reserve(observations.size());
    for (const auto& o : observations) {
        binned.push_back({binning.label(o.outcome), o.weight});
    }
    return empirical_pmf(binned);
}

// ---------------------------------------------------------------------------
// Support alignment

/// Sorted union of the given supports.
inline std::vector<double> union_support(std::span<const std::span<const double>> supports) {
    std::vector<double> out;
    for (auto s : supports) out.insert(out.end(), s.begin(), s.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Masses of `dist` evaluated on a superset `support` of its own support.
inline std::vector<double> masses_on(const DiscreteDistribution& dist, std::span<const double> support) {
    std::vector<double> out(support.size(), 0.0);
    const auto ds = dist.support();
    const auto dm = dist.masses();
    std::size_t j = 0;
    for (std::size_t i = 0; i < support.size() && j < ds.size(); ++i) {
        if (support[i] == ds[j]) out[i] = dm[j++];
    }
    if (j != ds.size()) {
        throw InputError("masses_on: target support does not contain the distribution's support");
    }
    return out;
}

inline DiscreteDistribution restrict_to(const DiscreteDistribution& dist, std::span<const double> support) {
    return DiscreteDistribution(std::vector<double>(support.begin(), support.end()), masses_on(dist, support),
                                dist.total_weight());
}

inline std::vector<DiscreteDistribution> align_supports(std::span<const DiscreteDistribution> dists) {
    if (dists.empty()) {
        throw InputError("align_supports: empty list");
    }
    std::vector<std::span<const double>> supports;
    for (const auto& d : dists) supports.push_back(d.support());
    const auto common = union_support(supports);
    std::vector<DiscreteDistribution> out;
    out.reserve(dists.size());
    for (const auto& d : dists) out.push_back(restrict_to(d, common));
    return out;
}

// ---------------------------------------------------------------------------
// Summaries

namespace detail {
inline CumulativeCurve prefix_curve(std::span<const double> support, std::span<const double> masses) {
    CumulativeCurve c;
    c.support.assign(support.begin(), support.end());
    c.values.resize(masses.size());
    std::partial_sum(masses.begin(), masses.end(), c.values.begin());
    return c;
}
} // namespace detail

inline CumulativeCurve cdf(const DiscreteDistribution& dist) {
    return detail::prefix_curve(dist.support(), dist.masses());
}

inline CumulativeCurve cdf(const SignedMeasure& measure) {
    return detail::prefix_curve(measure.support(), measure.masses());
}

/// sum_y (f1(y) - f2(y))_+ on the union support; equals half the L1 distance.
inline double total_variation(const DiscreteDistribution& f1, const DiscreteDistribution& f2) {
    const std::span<const double> supports[] = {f1.support(), f2.support()};
    const auto common = union_support(supports);
    const auto a = masses_on(f1, common);
    const auto b = masses_on(f2, common);
    double theta = 0.0;
    for (std::size_t i = 0; i < common.size(); ++i) theta += std::max(a[i] - b[i], 0.0);
    return std::min(theta, 1.0);
}

inline double mean(const DiscreteDistribution& dist) {
    const auto s = dist.support();
    const auto m = dist.masses();
    return std::inner_product(s.begin(), s.end(), m.begin(), 0.0);
}

// ---------------------------------------------------------------------------
// Monotone transforms

/// A strictly increasing map of outcomes.
class MonotoneTransform {
public:
    enum class Kind { identity, log, affine, indicator_shift, table };

    static MonotoneTransform identity() { return MonotoneTransform(Kind::identity); }
    static MonotoneTransform log() { return MonotoneTransform(Kind::log); }

    static MonotoneTransform affine(double scale, double shift) {
        if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(shift)) {
            throw InputError("affine transform needs a finite positive scale");
        }
        MonotoneTransform g(Kind::affine);
        g.a_ = scale;
        g.b_ = shift;
        return g;
    }

    /// y - 1[y <= threshold]
    static MonotoneTransform indicator_shift(double threshold) {
        if (!std::isfinite(threshold)) throw InputError("indicator_shift: threshold must be finite");
        MonotoneTransform g(Kind::indicator_shift);
        g.a_ = threshold;
        return g;
    }

    /// Piecewise-linear interpolation through (inputs[i], outputs[i]); undefined outside the inputs' range.
    static MonotoneTransform table(std::vector<double> inputs, std::vector<double> outputs) {
        if (inputs.size() != outputs.size() || inputs.empty()) {
            throw InputError("table transform: inputs and outputs must be non-empty and equal length");
        }
        detail::require_strictly_increasing(inputs, "table transform inputs");
        detail::require_strictly_increasing(outputs, "table transform outputs");
        MonotoneTransform g(Kind::table);
        g.xs_ = std::move(inputs);
        g.ys_ = std::move(outputs);
        return g;
    }

    Kind kind() const noexcept { return kind_; }

    double operator()(double y) const {
        switch (kind_) {
        case Kind::identity:
            return y;
        case Kind::log:
            if (!(y > 0.0)) throw DomainError("log transform applied to non-positive value " + std::to_string(y));
            return std::log(y);
        case Kind::affine:
            return a_ * y + b_;
        case Kind::indicator_shift:
            return y <= a_ ? y - 1.0 : y;
        case Kind::table: {
            if (y < xs_.front() || y > xs_.back()) {
                throw DomainError("table transform evaluated outside its range at " + std::to_string(y));
            }
            auto it = std::lower_bound(xs_.begin(), xs_.end(), y);
            const auto i = static_cast<std::size_t>(it - xs_.begin());
            if (xs_[i] == y) return ys_[i];
            const double t = (y - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
            return ys_[i - 1] + t * (ys_[i] - ys_[i - 1]);
        }
        }
        return y;
    }

private:
    explicit MonotoneTransform(Kind k) : kind_(k) {}

    Kind kind_;
    double a_ = 1.0;
    double b_ = 0.0;
    std::vector<double> xs_;
    std::vector<double> ys_;
};

inline DiscreteDistribution apply_transform(const DiscreteDistribution& dist, const MonotoneTransform& g) {
    std::vector<double> mapped;
    mapped.reserve(dist.size());
    for (double y : dist.support()) {
        const double v = g(y);
        if (!std::isfinite(v)) throw DomainError("transform produced a non-finite value");
        if (!mapped.empty() && !(mapped.back() < v)) {
            throw MonotonicityError("transform does not keep the support strictly increasing");
        }
        mapped.push_back(v);
    }
    return DiscreteDistribution(std::move(mapped), std::vector<double>(dist.masses().begin(), dist.masses().end()),
                                dist.total_weight());
}

} // namespace didinv
