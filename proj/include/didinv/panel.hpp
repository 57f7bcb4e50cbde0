#pragma once

// Two-group / two-period data: rows, CSV I/O, and the four cell distributions.

#include <array>
#include <charconv>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "didinv/distributions.hpp"
#include "didinv/errors.hpp"

namespace didinv {

struct ObservationRow {
    std::string cluster_id;
    int group = 0;  // D_i
    int period = 0; // t
    double outcome = 0.0;
    double weight = 1.0;

    friend bool operator==(const ObservationRow&, const ObservationRow&) = default;
};

struct PanelDataset {
    std::vector<ObservationRow> rows;
    std::string source;
    std::optional<Binning> binning_applied;

    std::size_t cluster_count() const {
        std::set<std::string_view> ids;
        for (const auto& r : rows) ids.insert(r.cluster_id);
        return ids.size();
    }
};

constexpr std::size_t cell_index(int group, int period) noexcept {
    return static_cast<std::size_t>(2 * group + period);
}

inline std::string cell_name(int group, int period) {
    return "(d=" + std::to_string(group) + ",t=" + std::to_string(period) + ")";
}

/// Throws ValidationError unless all four cells are populated and there are at least two clusters.
inline void validate_panel(const PanelDataset& panel) {
    std::array<bool, 4> seen{};
    for (const auto& r : panel.rows) {
        if ((r.group != 0 && r.group != 1) || (r.period != 0 && r.period != 1)) {
            throw ValidationError("group and period must be 0 or 1");
        }
        if (!(r.weight > 0.0) || !std::isfinite(r.weight) || !std::isfinite(r.outcome)) {
            throw ValidationError("rows need a finite outcome and a positive weight");
        }
        seen[cell_index(r.group, r.period)] = true;
    }
    for (int d = 0; d < 2; ++d) {
        for (int t = 0; t < 2; ++t) {
            if (!seen[cell_index(d, t)]) throw ValidationError("empty cell " + cell_name(d, t));
        }
    }
    if (panel.cluster_count() < 2) {
        throw ValidationError("at least two clusters are required");
    }
}

/// Apply a monotone map to every outcome (for example, analysing log outcomes).
inline PanelDataset transform_outcomes(PanelDataset panel, const MonotoneTransform& g) {
    for (auto& r : panel.rows) r.outcome = g(r.outcome);
    return panel;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvSchema {
    std::string cluster_column = "cluster_id";
    std::string group_column = "group";
    std::string period_column = "period";
    std::string outcome_column = "outcome";
    std::string weight_column = "weight";
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back(trim(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.emplace_back(trim(field));
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
    return v;
}

inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace detail

inline PanelDataset parse_panel_csv(std::istream& in, const CsvSchema& schema = {}, std::string source = {}) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::trim(line).empty()) break;
    }
    if (detail::trim(line).empty()) {
        throw SchemaError(schema.cluster_column);
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    const auto header = detail::split_csv_line(line);
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    };
    auto required = [&](const std::string& name) {
        auto c = column(name);
        if (!c) throw SchemaError(name);
        return *c;
    };
    const std::size_t c_cluster = required(schema.cluster_column);
    const std::size_t c_group = required(schema.group_column);
    const std::size_t c_period = required(schema.period_column);
    const std::size_t c_outcome = required(schema.outcome_column);
    const auto c_weight = column(schema.weight_column);

    PanelDataset panel;
    panel.source = std::move(source);
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                          std::to_string(fields.size()));
        }
        ObservationRow row;
        row.cluster_id = fields[c_cluster];
        if (row.cluster_id.empty()) throw ParseError(line_no, "empty cluster_id");

        auto binary = [&](std::size_t c, const std::string& name) {
            if (fields[c] == "0") return 0;
            if (fields[c] == "1") return 1;
            throw ParseError(line_no, name + " must be 0 or 1, got '" + fields[c] + "'");
        };
        row.group = binary(c_group, schema.group_column);
        row.period = binary(c_period, schema.period_column);

        const auto outcome = detail::parse_double(fields[c_outcome]);
        if (!outcome || !std::isfinite(*outcome)) {
            throw ParseError(line_no, "unparseable outcome '" + fields[c_outcome] + "'");
        }
        row.outcome = *outcome;
        if (c_weight) {
            const auto w = detail::parse_double(fields[*c_weight]);
            if (!w || !std::isfinite(*w) || !(*w > 0.0)) {
                throw ParseError(line_no, "weight must be a positive number, got '" + fields[*c_weight] + "'");
            }
            row.weight = *w;
        }
        panel.rows.push_back(std::move(row));
    }
    validate_panel(panel);
    return panel;
}

inline void write_panel_csv(std::ostream& out, const PanelDataset& panel) {
    out << "cluster_id,group,period,outcome,weight\n";
    for (const auto& r : panel.rows) {
        out << detail::quote_if_needed(r.cluster_id) << ',' << r.group << ',' << r.period << ','
            << detail::format_double(r.outcome) << ',' << detail::format_double(r.weight) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Cell distributions

/// The four (group, period) distributions on one shared support, plus cell means.
class FourCells {
public:
    /// Aligns the inputs; means default to the means of the distributions.
    FourCells(const DiscreteDistribution& d0t0, const DiscreteDistribution& d0t1, const DiscreteDistribution& d1t0,
              const DiscreteDistribution& d1t1)
        : dists_(align_supports(std::array{d0t0, d0t1, d1t0, d1t1})) {
        for (std::size_t i = 0; i < 4; ++i) means_[i] = didinv::mean(dists_[i]);
    }

    const DiscreteDistribution& dist(int group, int period) const { return dists_[cell_index(group, period)]; }
    double mean(int group, int period) const { return means_[cell_index(group, period)]; }
    void set_mean(int group, int period, double value) { means_[cell_index(group, period)] = value; }
    std::span<const double> support() const { return dists_[0].support(); }

    /// Masses of cell (group, period) on the shared support.
    std::span<const double> masses(int group, int period) const { return dist(group, period).masses(); }

private:
    std::vector<DiscreteDistribution> dists_;
    std::array<double, 4> means_{};
};

/// Per-cell weighted PMFs (binned when `binning` is given) and means of the raw outcomes.
inline FourCells cell_distributions(const PanelDataset& panel, const std::optional<Binning>& binning = std::nullopt) {
    std::array<std::vector<Observation>, 4> obs;
    std::array<double, 4> weighted_sum{};
    std::array<double, 4> weight_total{};
    for (const auto& r : panel.rows) {
        if ((r.group != 0 && r.group != 1) || (r.period != 0 && r.period != 1)) {
            throw ValidationError("group and period must be 0 or 1");
        }
        const auto c = cell_index(r.group, r.period);
        obs[c].push_back({r.outcome, r.weight});
        weighted_sum[c] += r.weight * r.outcome;
        weight_total[c] += r.weight;
    }
    for (int d = 0; d < 2; ++d) {
        for (int t = 0; t < 2; ++t) {
            if (obs[cell_index(d, t)].empty()) throw ValidationError("empty cell " + cell_name(d, t));
        }
    }
    auto make = [&](std::size_t c) { return binning ? discretize(obs[c], *binning) : empirical_pmf(obs[c]); };
    FourCells cells(make(0), make(1), make(2), make(3));
    for (int d = 0; d < 2; ++d) {
        for (int t = 0; t < 2; ++t) {
            const auto c = cell_index(d, t);
            cells.set_mean(d, t, weighted_sum[c] / weight_total[c]);
        }
    }
    return cells;
}

} // namespace didinv
