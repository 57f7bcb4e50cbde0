#pragma once

// Subcommands of the `didinv` tool. Each takes its arguments (without the
// program and subcommand names) and returns the process exit code:
//   0  completed (for `test`, either decision)
//   2  invalid input or usage
//   3  numerical failure (for `test`, the report is still written)

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "didinv/counterfactual.hpp"
#include "didinv/errors.hpp"
#include "didinv/inference.hpp"
#include "didinv/mixture.hpp"
#include "didinv/panel.hpp"
#include "didinv/report.hpp"
#include "didinv/simulate.hpp"

namespace didinv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

namespace detail {

/// Runs CLI11 on `args`; returns an exit code when parsing ends the command.
inline std::optional<int> parse(CLI::App& app, const std::vector<std::string>& args, std::ostream& out,
                                std::ostream& err) {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }
    return std::nullopt;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << text;
    if (!out) throw InputError("failed writing " + path);
}

inline bool looks_like_json(const std::string& text) {
    const auto pos = text.find_first_not_of(" \t\r\n");
    return pos != std::string::npos && text[pos] == '{';
}

inline PanelDataset parse_panel_text(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    return parse_panel_csv(in, {}, source);
}

inline std::optional<Binning> binning_from(double width, double origin, bool zero_bin) {
    if (width <= 0.0) return std::nullopt;
    return Binning{width, origin, zero_bin};
}

inline json distribution_json(const DiscreteDistribution& d) {
    return std::vector<double>(d.masses().begin(), d.masses().end());
}

inline const char* degenerate_name(DegenerateCase c) {
    switch (c) {
    case DegenerateCase::theta_zero:
        return "theta_zero";
    case DegenerateCase::theta_one:
        return "theta_one";
    case DegenerateCase::none:
        break;
    }
    return "none";
}

inline json decomposition_json(const DiscreteDistribution& f1, const DiscreteDistribution& f2) {
    const auto dec = decompose(f1, f2);
    const auto [r1, r2] = reconstruct(dec);
    const std::array pair{f1, f2};
    const auto aligned = align_supports(pair);
    double err = 0.0;
    for (std::size_t i = 0; i < r1.size(); ++i) {
        err = std::max(err, std::abs(r1.masses()[i] - aligned[0].masses()[i]));
        err = std::max(err, std::abs(r2.masses()[i] - aligned[1].masses()[i]));
    }
    return {{"theta", dec.theta},
            {"degenerate_case", degenerate_name(dec.degenerate_case)},
            {"support", std::vector<double>(dec.f_min.support().begin(), dec.f_min.support().end())},
            {"f_min", distribution_json(dec.f_min)},
            {"f_tilde_1", distribution_json(dec.f_tilde_1)},
            {"f_tilde_2", distribution_json(dec.f_tilde_2)},
            {"reconstruction_error", err}};
}

/// Quadruple from JSON text or a panel CSV (binned when `binning` is set).
inline FourCells load_cells(const std::string& path, const std::optional<Binning>& binning) {
    const auto text = read_file(path);
    if (looks_like_json(text)) {
        try {
            return parse_quadruple_json(json::parse(text));
        } catch (const json::exception& e) {
            throw InputError(std::string("malformed JSON: ") + e.what());
        }
    }
    return cell_distributions(parse_panel_text(text, path), binning);
}

} // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_test(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Falsification test for parallel trends of CDFs", "didinv test"};
    std::string input;
    std::string output;
    std::string plot_csv;
    TestConfig config;
    double bin_width = 0.0;
    double bin_origin = 0.0;
    bool zero_bin = false;
    bool keep_empty = false;
    app.add_option("--input", input, "panel CSV (cluster_id,group,period,outcome[,weight])")->required();
    app.add_option("--alpha", config.alpha, "significance level")->capture_default_str();
    app.add_option("--bootstrap", config.bootstrap_reps, "cluster bootstrap replications")->capture_default_str();
    app.add_option("--sims", config.cv_sims, "critical-value simulations")->capture_default_str();
    app.add_option("--seed", config.seed, "random seed")->capture_default_str();
    app.add_option("--bin-width", bin_width, "bin outcomes into bins of this width");
    app.add_option("--bin-origin", bin_origin, "left edge of bin 0")->capture_default_str();
    app.add_flag("--zero-bin", zero_bin, "give outcomes equal to 0 their own bin");
    app.add_option("--min-se-floor", config.min_se_floor, "lower bound on standard errors")->capture_default_str();
    app.add_flag("--keep-empty-bins", keep_empty, "keep support points where the three cells used have no mass");
    app.add_option("--workers", config.workers, "threads for the bootstrap")->capture_default_str();
    app.add_option("--output", output, "report JSON path (stdout when omitted)");
    app.add_option("--plot-csv", plot_csv, "write support,implied_pmf,se,flag series here");
    if (auto code = detail::parse(app, args, out, err)) return *code;

    try {
        config.binning = detail::binning_from(bin_width, bin_origin, zero_bin);
        config.drop_empty_bins = !keep_empty;
        config.validate();
        const auto panel = detail::parse_panel_text(detail::read_file(input), input);
        const auto result = falsification_test(panel, config);

        auto doc = make_report(result, args);
        const auto cells = cell_distributions(panel, config.binning);
        doc.decomposition = ReportDecomposition{total_variation(cells.dist(1, 1), cells.dist(1, 0)),
                                                total_variation(cells.dist(0, 1), cells.dist(0, 0)),
                                                check_cdf_parallel(cells, 0.0).max_abs_deviation};
        const auto div = counterfactual_divergence(cells);
        doc.cic = ReportCic{div.sup_distance, div.used_positive_part};

        const auto text = serialize_report(doc);
        if (output.empty()) {
            out << text;
        } else {
            detail::write_file(output, text);
        }
        if (!plot_csv.empty()) {
            std::ostringstream csv;
            write_plot_csv(csv, doc);
            detail::write_file(plot_csv, csv.str());
        }
        if (result.status == TestStatus::numerical_error) {
            err << "numerical failure: " << result.error << '\n';
            return kExitNumerical;
        }
        return kExitOk;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
}

inline int cmd_simulate(const std::vector<std::string>& args, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
    CLI::App app{"Simulate a two-group / two-period panel", "didinv simulate"};
    std::string dgp;
    std::string path;
    SimulationOptions opt;
    long long n = 1000;
    double theta = 0.5;
    double bin_width = 0.0;
    BinaryDgp binary;
    NormalDgp normal;
    app.add_option("--dgp", dgp, "case1 | case2 | case3 | example3 | binary | normal-violation")
        ->required()
        ->check(CLI::IsMember({"case1", "case2", "case3", "example3", "binary", "normal-violation"}));
    app.add_option("--n", n, "units per group (each observed in both periods)")->capture_default_str();
    app.add_option("--seed", opt.seed, "random seed")->capture_default_str();
    app.add_option("--clusters", opt.clusters, "total clusters, split between groups")->capture_default_str();
    app.add_option("--out", path, "output panel CSV")->required();
    app.add_option("--theta", theta, "time-component share for case3")->capture_default_str();
    app.add_option("--bin-width", bin_width, "write binned outcomes");
    app.add_option("--p00", binary.p[0][0], "binary: P(Y=1) comparison, pre")->capture_default_str();
    app.add_option("--p01", binary.p[0][1], "binary: P(Y=1) comparison, post")->capture_default_str();
    app.add_option("--p10", binary.p[1][0], "binary: P(Y=1) treated, pre")->capture_default_str();
    app.add_option("--p11", binary.p[1][1], "binary: P(Y=1) treated, post")->capture_default_str();
    app.add_option("--sd-pre", normal.sd[0][0], "normal-violation: comparison sd, pre")->capture_default_str();
    app.add_option("--sd-post", normal.sd[0][1], "normal-violation: comparison sd, post")->capture_default_str();
    if (auto code = detail::parse(app, args, out, err)) return *code;

    try {
        if (n < 1) throw InputError("--n must be at least 1");
        opt.n_per_cell = static_cast<std::size_t>(n);
        opt.binning = detail::binning_from(bin_width, 0.0, false);

        PanelDataset panel;
        std::ostringstream summary;
        summary << std::fixed << std::setprecision(2);
        if (dgp == "binary") {
            panel = simulate_binary(binary, opt);
            summary << "population means (P(Y=1))\n";
            for (int d = 0; d < 2; ++d) {
                summary << (d == 0 ? "comparison" : "treated") << ": pre " << binary.p[d][0] << "  post "
                        << binary.p[d][1] << '\n';
            }
            summary << "DiD of means: " << (binary.p[1][1] - binary.p[1][0]) - (binary.p[0][1] - binary.p[0][0])
                    << '\n';
        } else if (dgp == "normal-violation") {
            panel = simulate_normal(normal, opt);
            summary << "population cells: comparison N(0," << normal.sd[0][0] << "^2) -> N(0," << normal.sd[0][1]
                    << "^2); treated N(0,1) in both periods\n";
        } else {
            LognormalMixture m;
            m.theta = dgp == "case1" ? 1.0 : dgp == "case2" ? 0.0 : dgp == "case3" ? theta : 0.5;
            if (!(m.theta >= 0.0 && m.theta <= 1.0)) throw InputError("--theta must lie in [0,1]");
            panel = simulate_lognormal_mixture(m, opt);
            summary << "theta = " << m.theta << ", G_t = lognormal(2+t,1), H_d = lognormal(3+d,1)\n";
            summary << "mean of g(Y(0)) by group\n";
            summary << "g       group        pre     post   change\n";
            for (auto scale : {MeanScale::levels, MeanScale::log}) {
                for (int d = 0; d < 2; ++d) {
                    const double pre = example3_oracle_mean(m, d, 0, scale);
                    const double post = example3_oracle_mean(m, d, 1, scale);
                    summary << std::left << std::setw(8) << (scale == MeanScale::levels ? "levels" : "log")
                            << std::setw(11) << (d == 0 ? "comparison" : "treated") << std::right << std::setw(7)
                            << pre << std::setw(9) << post << std::setw(9) << post - pre << '\n';
                }
            }
        }
        std::ostringstream csv;
        write_panel_csv(csv, panel);
        detail::write_file(path, csv.str());
        out << summary.str();
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
}

inline int cmd_decompose(const std::vector<std::string>& args, std::ostream& out = std::cout,
                         std::ostream& err = std::cerr) {
    CLI::App app{"Mixture decomposition of a PMF pair or of a quadruple's time pairs", "didinv decompose"};
    std::string input;
    double bin_width = 0.0;
    app.add_option("--input", input, "pair JSON, quadruple JSON, or panel CSV")->required();
    app.add_option("--bin-width", bin_width, "bin width for panel CSV input");
    if (auto code = detail::parse(app, args, out, err)) return *code;

    try {
        const auto text = detail::read_file(input);
        json result;
        if (detail::looks_like_json(text)) {
            json j;
            try {
                j = json::parse(text);
            } catch (const json::exception& e) {
                throw InputError(std::string("malformed JSON: ") + e.what());
            }
            if (j.is_object() && j.contains("f1")) {
                const auto [f1, f2] = parse_pair_json(j);
                result = detail::decomposition_json(f1, f2);
                result["input"] = "pair";
                out << result.dump(2) << '\n';
                return kExitOk;
            }
        }
        const auto cells = detail::load_cells(input, detail::binning_from(bin_width, 0.0, false));
        const auto check = check_cdf_parallel(cells, 0.0);
        result["input"] = "quadruple";
        result["treated_time_pair"] = detail::decomposition_json(cells.dist(1, 1), cells.dist(1, 0));
        result["comparison_time_pair"] = detail::decomposition_json(cells.dist(0, 1), cells.dist(0, 0));
        result["cdf_parallel_deviation"] = check.max_abs_deviation;
        result["cdf_parallel_argmax"] = check.argmax;
        result["mixture_representation"] = find_mixture_representation(cells, 1e-10).has_value();
        out << result.dump(2) << '\n';
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
}

inline int cmd_cic_compare(const std::vector<std::string>& args, std::ostream& out = std::cout,
                           std::ostream& err = std::cerr) {
    CLI::App app{"Compare changes-in-changes with the parallel-trends-of-CDFs counterfactual", "didinv cic-compare"};
    std::string input;
    std::string plot_csv;
    double bin_width = 0.0;
    app.add_option("--input", input, "quadruple JSON or panel CSV")->required();
    app.add_option("--bin-width", bin_width, "bin width for panel CSV input");
    app.add_option("--plot-csv", plot_csv, "write support,cic_cdf,implied_cdf series here");
    if (auto code = detail::parse(app, args, out, err)) return *code;

    try {
        const auto cells = detail::load_cells(input, detail::binning_from(bin_width, 0.0, false));
        const auto div = counterfactual_divergence(cells);
        const auto implied = implied_counterfactual(cells);
        const auto cic = cdf(cic_counterfactual(cells));
        json result{{"divergence", div.sup_distance},
                    {"used_positive_part", div.used_positive_part},
                    {"implied_is_proper", implied.is_proper},
                    {"implied_min_mass", implied.min_mass}};
        out << result.dump(2) << '\n';
        if (!plot_csv.empty()) {
            std::ostringstream csv;
            csv << "support,cic_cdf,implied_cdf\n";
            for (std::size_t i = 0; i < cic.support.size(); ++i) {
                csv << didinv::detail::format_double(cic.support[i]) << ','
                    << didinv::detail::format_double(cic.values[i]) << ','
                    << didinv::detail::format_double(implied.cdf.values[i]) << '\n';
            }
            detail::write_file(plot_csv, csv.str());
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
}

inline void usage(std::ostream& out) {
    out << "usage: didinv <command> [options]\n\n"
           "commands:\n"
           "  test         falsification test on a panel CSV, writes a JSON report\n"
           "  simulate     write a simulated panel CSV and print population means\n"
           "  decompose    mixture decomposition of a PMF pair or quadruple\n"
           "  cic-compare  changes-in-changes vs. implied counterfactual CDF\n\n"
           "run `didinv <command> --help` for options\n";
}

inline int run(const std::vector<std::string>& argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    if (argv.empty()) {
        usage(err);
        return kExitInput;
    }
    const std::string& command = argv.front();
    const std::vector<std::string> rest(argv.begin() + 1, argv.end());
    if (command == "test") return cmd_test(rest, out, err);
    if (command == "simulate") return cmd_simulate(rest, out, err);
    if (command == "decompose") return cmd_decompose(rest, out, err);
    if (command == "cic-compare") return cmd_cic_compare(rest, out, err);
    if (command == "--help" || command == "-h" || command == "help") {
        usage(out);
        return kExitOk;
    }
    err << "unknown command: " << command << '\n';
    usage(err);
    return kExitInput;
}

} // namespace didinv::cli
