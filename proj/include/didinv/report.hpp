#pragma once

// Machine-readable outputs: the test report (JSON, schema_version 1), plot
// series (CSV), and the quadruple / pair input formats (JSON).

#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "didinv/errors.hpp"
#include "didinv/inference.hpp"
#include "didinv/panel.hpp"

namespace didinv {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

using json = nlohmann::json;

// JSON has no infinities; they are written as the strings "inf" / "-inf".
inline json number_to_json(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline double number_from_json(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw InputError("unexpected string where a number was expected: " + s);
    }
    return j.get<double>();
}

inline json optional_to_json(const std::optional<double>& v) { return v ? number_to_json(*v) : json(nullptr); }

inline std::optional<double> optional_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return number_from_json(j);
}

struct ReportConfig {
    double alpha = 0.05;
    std::size_t bootstrap_reps = 0;
    std::size_t cv_sims = 0;
    std::uint64_t seed = 0;
    std::optional<double> bin_width;
    double bin_origin = 0.0;
    bool zero_bin = false;
    double min_se_floor = 0.0;
    bool drop_empty_bins = true;

    friend bool operator==(const ReportConfig&, const ReportConfig&) = default;
};

struct ReportBin {
    double support = 0.0;
    double implied_pmf = 0.0;
    double se = 0.0;
    std::optional<double> studentized; // absent when the point is excluded
    bool negative = false;
    bool zero_se = false;

    friend bool operator==(const ReportBin&, const ReportBin&) = default;
};

struct ReportSummary {
    std::string status = "ok";
    std::optional<std::string> error;
    std::optional<double> statistic;
    std::optional<double> argmin_support;
    std::optional<double> critical_value;
    std::optional<double> p_value;
    std::string decision = "fail_to_reject";
    std::size_t redrawn_replicates = 0;

    friend bool operator==(const ReportSummary&, const ReportSummary&) = default;
};

struct ReportCorrelation {
    std::size_t dimension = 0;
    double min_off_diagonal = 0.0;
    double max_off_diagonal = 0.0;
    double min_eigenvalue = 0.0;
    bool projected = false;

    friend bool operator==(const ReportCorrelation&, const ReportCorrelation&) = default;
};

struct ReportDecomposition {
    // Total variation between periods within each group (observed cells).
    double theta_treated = 0.0;
    double theta_comparison = 0.0;
    // sup |(F11 - F10) - (F01 - F00)| on observed cells.
    double cdf_parallel_deviation = 0.0;

    friend bool operator==(const ReportDecomposition&, const ReportDecomposition&) = default;
};

struct ReportCic {
    double divergence = 0.0;
    bool used_positive_part = false;

    friend bool operator==(const ReportCic&, const ReportCic&) = default;
};

struct ReportDocument {
    int schema_version = kSchemaVersion;
    std::string tool_version = kToolVersion;
    std::vector<std::string> command;
    ReportConfig config;
    std::vector<ReportBin> bins;
    ReportSummary summary;
    ReportCorrelation correlation;
    std::optional<ReportDecomposition> decomposition;
    std::optional<ReportCic> cic;
    std::vector<std::string> warnings;

    friend bool operator==(const ReportDocument&, const ReportDocument&) = default;
};

inline ReportDocument make_report(const TestResult& r, std::vector<std::string> command) {
    ReportDocument doc;
    doc.command = std::move(command);
    const auto& c = r.config;
    doc.config = {c.alpha,
                  c.bootstrap_reps,
                  c.cv_sims,
                  c.seed,
                  c.binning ? std::optional<double>(c.binning->width) : std::nullopt,
                  c.binning ? c.binning->origin : 0.0,
                  c.binning ? c.binning->zero_bin : false,
                  c.min_se_floor,
                  c.drop_empty_bins};
    for (const auto& b : r.bins) {
        doc.bins.push_back({b.support, b.estimate, b.se,
                            std::isnan(b.studentized) ? std::nullopt : std::optional<double>(b.studentized), b.negative,
                            b.zero_se});
    }
    auto& s = doc.summary;
    const bool ok = r.status == TestStatus::ok;
    s.status = ok ? "ok" : "numerical_error";
    if (!ok) s.error = r.error;
    if (ok) {
        s.statistic = r.statistic;
        s.argmin_support = r.argmin_support;
        s.critical_value = r.critical_value;
        s.p_value = r.p_value;
    }
    s.decision = r.decision == Decision::reject ? "reject" : "fail_to_reject";
    s.redrawn_replicates = r.redrawn_replicates;
    doc.correlation = {r.correlation.dimension, r.correlation.min_off_diagonal, r.correlation.max_off_diagonal,
                       r.correlation.min_eigenvalue, r.correlation.projected};
    doc.warnings = r.warnings;
    return doc;
}

inline json to_json(const ReportDocument& d) {
    json j;
    j["schema_version"] = d.schema_version;
    j["tool_version"] = d.tool_version;
    j["command"] = d.command;
    j["config"] = {{"alpha", d.config.alpha},
                   {"bootstrap_reps", d.config.bootstrap_reps},
                   {"cv_sims", d.config.cv_sims},
                   {"seed", d.config.seed},
                   {"bin_width", optional_to_json(d.config.bin_width)},
                   {"bin_origin", d.config.bin_origin},
                   {"zero_bin", d.config.zero_bin},
                   {"min_se_floor", d.config.min_se_floor},
                   {"drop_empty_bins", d.config.drop_empty_bins}};
    json bins = json::array();
    for (const auto& b : d.bins) {
        bins.push_back({{"support", number_to_json(b.support)},
                        {"implied_pmf", number_to_json(b.implied_pmf)},
                        {"se", number_to_json(b.se)},
                        {"studentized", optional_to_json(b.studentized)},
                        {"negative", b.negative},
                        {"zero_se", b.zero_se}});
    }
    j["bins"] = std::move(bins);
    j["summary"] = {{"status", d.summary.status},
                    {"error", d.summary.error ? json(*d.summary.error) : json(nullptr)},
                    {"statistic", optional_to_json(d.summary.statistic)},
                    {"argmin_support", optional_to_json(d.summary.argmin_support)},
                    {"critical_value", optional_to_json(d.summary.critical_value)},
                    {"p_value", optional_to_json(d.summary.p_value)},
                    {"decision", d.summary.decision},
                    {"redrawn_replicates", d.summary.redrawn_replicates}};
    j["correlation"] = {{"dimension", d.correlation.dimension},
                        {"min_off_diagonal", d.correlation.min_off_diagonal},
                        {"max_off_diagonal", d.correlation.max_off_diagonal},
                        {"min_eigenvalue", d.correlation.min_eigenvalue},
                        {"projected", d.correlation.projected}};
    j["decomposition"] = d.decomposition ? json{{"theta_treated", d.decomposition->theta_treated},
                                                {"theta_comparison", d.decomposition->theta_comparison},
                                                {"cdf_parallel_deviation", d.decomposition->cdf_parallel_deviation}}
                                         : json(nullptr);
    j["cic"] = d.cic ? json{{"divergence", d.cic->divergence}, {"used_positive_part", d.cic->used_positive_part}}
                     : json(nullptr);
    j["warnings"] = d.warnings;
    return j;
}

inline ReportDocument report_from_json(const json& j) {
    ReportDocument d;
    d.schema_version = j.at("schema_version").get<int>();
    if (d.schema_version != kSchemaVersion) {
        throw InputError("unsupported report schema_version " + std::to_string(d.schema_version));
    }
    d.tool_version = j.at("tool_version").get<std::string>();
    d.command = j.at("command").get<std::vector<std::string>>();
    const auto& c = j.at("config");
    d.config = {c.at("alpha").get<double>(),         c.at("bootstrap_reps").get<std::size_t>(),
                c.at("cv_sims").get<std::size_t>(),  c.at("seed").get<std::uint64_t>(),
                optional_from_json(c.at("bin_width")), c.at("bin_origin").get<double>(),
                c.at("zero_bin").get<bool>(),        c.at("min_se_floor").get<double>(),
                c.at("drop_empty_bins").get<bool>()};
    for (const auto& b : j.at("bins")) {
        d.bins.push_back({number_from_json(b.at("support")), number_from_json(b.at("implied_pmf")),
                          number_from_json(b.at("se")), optional_from_json(b.at("studentized")),
                          b.at("negative").get<bool>(), b.at("zero_se").get<bool>()});
    }
    const auto& s = j.at("summary");
    d.summary.status = s.at("status").get<std::string>();
    if (!s.at("error").is_null()) d.summary.error = s.at("error").get<std::string>();
    d.summary.statistic = optional_from_json(s.at("statistic"));
    d.summary.argmin_support = optional_from_json(s.at("argmin_support"));
    d.summary.critical_value = optional_from_json(s.at("critical_value"));
    d.summary.p_value = optional_from_json(s.at("p_value"));
    d.summary.decision = s.at("decision").get<std::string>();
    d.summary.redrawn_replicates = s.at("redrawn_replicates").get<std::size_t>();
    const auto& k = j.at("correlation");
    d.correlation = {k.at("dimension").get<std::size_t>(), k.at("min_off_diagonal").get<double>(),
                     k.at("max_off_diagonal").get<double>(), k.at("min_eigenvalue").get<double>(),
                     k.at("projected").get<bool>()};
    if (const auto& m = j.at("decomposition"); !m.is_null()) {
        d.decomposition = ReportDecomposition{m.at("theta_treated").get<double>(), m.at("theta_comparison").get<double>(),
                                              m.at("cdf_parallel_deviation").get<double>()};
    }
    if (const auto& m = j.at("cic"); !m.is_null()) {
        d.cic = ReportCic{m.at("divergence").get<double>(), m.at("used_positive_part").get<bool>()};
    }
    d.warnings = j.at("warnings").get<std::vector<std::string>>();
    return d;
}

inline std::string serialize_report(const ReportDocument& d) { return to_json(d).dump(2) + "\n"; }

inline ReportDocument parse_report(const std::string& text) { return report_from_json(json::parse(text)); }

/// Plot series in ascending support order: support,implied_pmf,se,flag.
inline void write_plot_csv(std::ostream& out, const ReportDocument& d) {
    out << "support,implied_pmf,se,flag\n";
    for (const auto& b : d.bins) {
        std::string flag = "ok";
        if (b.negative && b.zero_se) {
            flag = "negative_zero_se";
        } else if (b.negative) {
            flag = "negative";
        } else if (b.zero_se) {
            flag = "zero_se";
        }
        out << detail::format_double(b.support) << ',' << detail::format_double(b.implied_pmf) << ','
            << detail::format_double(b.se) << ',' << flag << '\n';
    }
}

// ---------------------------------------------------------------------------
// Quadruple / pair JSON input

namespace detail {
inline std::vector<double> number_array(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) {
        throw InputError(std::string("expected an array field '") + key + "'");
    }
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) throw InputError(std::string("non-numeric entry in '") + key + "'");
        out.push_back(v.get<double>());
    }
    return out;
}

inline DiscreteDistribution distribution_on(const std::vector<double>& support, const json& j, const char* key) {
    auto masses = number_array(j, key);
    if (masses.size() != support.size()) {
        throw InputError(std::string("'") + key + "' must have one mass per support point");
    }
    return DiscreteDistribution(support, std::move(masses));
}
} // namespace detail

/// `{ "support": [...], "cells": { "d0t0": [...], "d0t1": [...], "d1t0": [...], "d1t1": [...] } }`
inline FourCells parse_quadruple_json(const json& j) {
    if (!j.is_object()) throw InputError("quadruple JSON must be an object");
    const auto support = detail::number_array(j, "support");
    if (!j.contains("cells") || !j.at("cells").is_object()) throw InputError("expected an object field 'cells'");
    const auto& c = j.at("cells");
    return FourCells(detail::distribution_on(support, c, "d0t0"), detail::distribution_on(support, c, "d0t1"),
                     detail::distribution_on(support, c, "d1t0"), detail::distribution_on(support, c, "d1t1"));
}

inline json quadruple_to_json(const FourCells& cells) {
    json j;
    j["support"] = std::vector<double>(cells.support().begin(), cells.support().end());
    json c;
    for (int d = 0; d < 2; ++d) {
        for (int t = 0; t < 2; ++t) {
            const auto m = cells.masses(d, t);
            c["d" + std::to_string(d) + "t" + std::to_string(t)] = std::vector<double>(m.begin(), m.end());
        }
    }
    j["cells"] = std::move(c);
    return j;
}

/// `{ "support": [...], "f1": [...], "f2": [...] }`
inline std::pair<DiscreteDistribution, DiscreteDistribution> parse_pair_json(const json& j) {
    if (!j.is_object()) throw InputError("pair JSON must be an object");
    const auto support = detail::number_array(j, "support");
    return {detail::distribution_on(support, j, "f1"), detail::distribution_on(support, j, "f2")};
}

} // namespace didinv
