#include "freeconv/additive.hpp"
#include "freeconv/circle.hpp"
#include "freeconv/errors.hpp"
#include "freeconv/khintchine.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/multiplicative.hpp"
#include "freeconv/oracle.hpp"
#include "freeconv/parallel.hpp"
#include "freeconv/transforms.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using nlohmann::json;
using namespace freeconv;

namespace {

// "lo:hi:count" with inclusive endpoints.
Eigen::ArrayXd parse_grid_spec(const std::string& spec) {
    double lo, hi;
    int count;
    char extra;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%d%c", &lo, &hi, &count, &extra) != 3 ||
        count < 2 || !(hi > lo))
        throw ArgumentError("bad grid spec '" + spec + "' (want lo:hi:count)");
    return Eigen::ArrayXd::LinSpaced(count, lo, hi);
}

std::vector<double> parse_eps_schedule(const std::string& spec) {
    std::vector<double> eps;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const double v = std::stod(item);
        if (!(v > 0.0)) throw ArgumentError("epsilon values must be positive");
        eps.push_back(v);
    }
    if (eps.size() < 2) throw ArgumentError("epsilon schedule needs at least two values");
    return eps;
}

std::string report_path_for(const std::string& primary) {
    const auto dot = primary.find_last_of('.');
    const auto slash = primary.find_last_of("/\\");
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return primary + ".report.json";
    return primary.substr(0, dot) + ".report.json";
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path);
    out << text;
}

void write_measure_csv(const Measure& m, const std::string& path) {
    std::vector<double> xs;
    for (const Atom& a : m.atoms()) xs.push_back(a.x);
    const Eigen::ArrayXd& g = m.ac_grid();
    for (Eigen::Index i = 0; i < g.size(); ++i) xs.push_back(g(i));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ArgumentError("cannot write " + path);
    std::fputs("x,density,cdf\n", f);
    for (double x : xs)
        std::fprintf(f, "%.17g,%.17g,%.17g\n", x, m.density(x), cdf(m, x));
    std::fclose(f);
}

void write_raw_csv(const std::vector<double>& values, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ArgumentError("cannot write " + path);
    std::fputs("eigenvalue\n", f);
    for (double v : values) std::fprintf(f, "%.17g\n", v);
    std::fclose(f);
}

json grid_json(const Eigen::ArrayXd& grid) {
    return {{"lo", grid(0)}, {"hi", grid(grid.size() - 1)}, {"count", grid.size()}};
}

json report_json(const char* command, const ConvolutionReport& rep) {
    json atoms = json::array();
    for (const AtomCandidate& c : rep.atom_candidates)
        atoms.push_back({{"location", c.location},
                         {"mass", c.mass},
                         {"source", c.source == AtomCandidate::Source::Predicted ? "predicted"
                                                                                 : "detected"}});
    return {{"command", command},
            {"grid", grid_json(rep.grid)},
            {"eps_schedule", rep.epsilon_schedule},
            {"atom_candidates", atoms},
            {"max_residual", rep.max_residual},
            {"mass_defect", rep.mass_defect},
            {"min_density_seen", rep.min_density_seen},
            {"trimmed_mass", rep.trimmed_mass},
            {"negative_density_warning", rep.negative_density_warning},
            {"threads", max_threads()}};
}

json verdict_json(const DecompositionVerdict& v, const std::string& mode) {
    json checks = json::array();
    for (const auto* list : {&v.metric_checks, &v.atom_checks, &v.support_checks})
        for (const CheckResult& c : *list)
            checks.push_back({{"check", c.check},
                              {"measured", c.measured},
                              {"bound", c.bound},
                              {"pass", c.pass}});
    json out = {{"verdict", v.accepted ? "accepted" : "rejected"},
                {"mode", mode},
                {"trivial", v.trivial},
                {"reconstruction_distance", v.reconstruction_distance},
                {"lambda_total", v.lambda_total},
                {"lambda_parts_sum", v.lambda_parts_sum},
                {"checks", checks}};
    if (!v.cause.empty()) out["cause"] = v.cause;
    return out;
}

struct ConvCommon {
    std::string file1, file2, out, csv;
    std::string grid_spec, eps_spec;
};

void add_conv_options(CLI::App* cmd, ConvCommon& c, const char* second_label) {
    cmd->add_option("input1", c.file1, "measure JSON")->required();
    cmd->add_option("input2", c.file2, second_label)->required();
    cmd->add_option("-o,--out", c.out, "output measure JSON")->required();
    cmd->add_option("--csv", c.csv, "write x,density,cdf CSV");
    cmd->add_option("--grid", c.grid_spec, "grid spec lo:hi:count");
    cmd->add_option("--eps-schedule", c.eps_spec, "comma-separated epsilon schedule");
}

int run_conv(const ConvCommon& c, bool multiplicative) {
    const Measure m1 = load_measure_json(c.file1);
    const Measure m2 = load_measure_json(c.file2);
    Eigen::ArrayXd grid;
    if (!c.grid_spec.empty()) grid = parse_grid_spec(c.grid_spec);
    std::vector<double> eps = default_epsilon_schedule();
    if (!c.eps_spec.empty()) eps = parse_eps_schedule(c.eps_spec);

    const ConvolutionResult res = multiplicative ? free_mult(m1, m2, grid, eps)
                                                 : free_add(m1, m2, grid, eps);
    save_measure_json(res.measure, c.out);
    if (!c.csv.empty()) write_measure_csv(res.measure, c.csv);
    json rep = report_json(multiplicative ? "mul" : "add", res.report);
    rep["inputs"] = {c.file1, c.file2};
    write_text(report_path_for(c.out), rep.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"free convolution engine"};
    app.require_subcommand(1);

    ConvCommon add_c, mul_c;
    CLI::App* add_cmd = app.add_subcommand("add", "free additive convolution");
    add_conv_options(add_cmd, add_c, "measure JSON");
    CLI::App* mul_cmd = app.add_subcommand("mul", "free multiplicative convolution");
    add_conv_options(mul_cmd, mul_c, "measure JSON (positive halfline)");

    std::string pw_file, pw_out, pw_csv, pw_grid, pw_eps;
    double pw_t = 1.0;
    CLI::App* pw_cmd = app.add_subcommand("power", "free additive convolution power");
    pw_cmd->add_option("input", pw_file, "measure JSON")->required();
    pw_cmd->add_option("-t,--t", pw_t, "power t >= 1")->required();
    pw_cmd->add_option("-o,--out", pw_out, "output measure JSON")->required();
    pw_cmd->add_option("--csv", pw_csv, "write x,density,cdf CSV");
    pw_cmd->add_option("--grid", pw_grid, "grid spec lo:hi:count");
    pw_cmd->add_option("--eps-schedule", pw_eps, "comma-separated epsilon schedule");

    std::string lam_file, lam_out;
    double lam_alpha = 0.0, lam_beta = 0.0, lam_band = 1.0;
    double lam_beta_norm = 0.0, lam_gamma = 0.0;
    int lam_nx = 128, lam_ny = 64;
    CLI::App* lam_cmd = app.add_subcommand("lambda", "Khintchine Lambda functional");
    lam_cmd->add_option("input", lam_file, "measure JSON")->required();
    lam_cmd->add_option("--alpha", lam_alpha, "region floor (0 = fit automatically)");
    lam_cmd->add_option("--beta", lam_beta, "cone slope (0 = fit automatically)");
    lam_cmd->add_option("--band", lam_band, "band height")->check(CLI::PositiveNumber);
    lam_cmd->add_option("--nx", lam_nx, "x panels");
    lam_cmd->add_option("--ny", lam_ny, "y panels");
    lam_cmd->add_option("--beta-norm", lam_beta_norm, "multiplicative: S(-beta)=1 point");
    lam_cmd->add_option("--gamma", lam_gamma, "multiplicative: evaluation point");
    lam_cmd->add_option("-o,--out", lam_out, "output JSON (default stdout)");

    std::string vf_target, vf_mode = "additive", vf_out;
    std::vector<std::string> vf_parts;
    double vf_alpha = 0.0, vf_beta = 0.0, vf_band = 1.0;
    double vf_beta_norm = 0.5, vf_gamma = 0.25;
    double vf_levy_tol = 0.02, vf_lambda_tol = 5e-3, vf_slack = 5e-3;
    CLI::App* vf_cmd = app.add_subcommand("verify", "verify a decomposition");
    vf_cmd->add_option("target", vf_target, "target measure JSON")->required();
    vf_cmd->add_option("parts", vf_parts, "part measure JSONs")->expected(2, -1);
    vf_cmd->add_option("--mode", vf_mode, "additive|multiplicative")
        ->check(CLI::IsMember({"additive", "multiplicative"}));
    vf_cmd->add_option("--alpha", vf_alpha, "Lambda region floor (0 = fit)");
    vf_cmd->add_option("--beta", vf_beta, "Lambda cone slope (0 = fit)");
    vf_cmd->add_option("--band", vf_band, "Lambda band height");
    vf_cmd->add_option("--beta-norm", vf_beta_norm, "multiplicative Lambda: S(-beta)=1");
    vf_cmd->add_option("--gamma", vf_gamma, "multiplicative Lambda: evaluation point");
    vf_cmd->add_option("--levy-tol", vf_levy_tol, "reconstruction Levy tolerance");
    vf_cmd->add_option("--lambda-tol", vf_lambda_tol, "Lambda additivity tolerance");
    vf_cmd->add_option("--slack", vf_slack, "grid slack for support checks");
    vf_cmd->add_option("-o,--out", vf_out, "verdict JSON (default stdout)");

    std::string or_mode, or_file1, or_file2, or_out, or_csv, or_raw_csv;
    int or_n = 256, or_trials = 10, or_bins = 0;
    std::uint64_t or_seed = 1;
    CLI::App* or_cmd = app.add_subcommand("oracle", "random-matrix Monte Carlo oracle");
    or_cmd->add_option("mode", or_mode, "add|mul")->required()
        ->check(CLI::IsMember({"add", "mul"}));
    or_cmd->add_option("input1", or_file1, "measure JSON")->required();
    or_cmd->add_option("input2", or_file2, "measure JSON")->required();
    or_cmd->add_option("-n,--n", or_n, "matrix size >= 64");
    or_cmd->add_option("--trials", or_trials, "number of trials");
    or_cmd->add_option("--seed", or_seed, "random seed");
    or_cmd->add_option("--bins", or_bins, "histogram bins (0 = sqrt rule)");
    or_cmd->add_option("-o,--out", or_out, "output histogram measure JSON")->required();
    or_cmd->add_option("--csv", or_csv, "write x,density,cdf CSV");
    or_cmd->add_option("--raw-csv", or_raw_csv, "write raw eigenvalue CSV");

    std::string ct_file, ct_out;
    CLI::App* ct_cmd = app.add_subcommand("certify", "indecomposability certificate");
    ct_cmd->add_option("input", ct_file, "measure JSON")->required();
    ct_cmd->add_option("-o,--out", ct_out, "certificate JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*add_cmd) return run_conv(add_c, false);
        if (*mul_cmd) return run_conv(mul_c, true);

        if (*pw_cmd) {
            const Measure m = load_measure_json(pw_file);
            Eigen::ArrayXd grid;
            if (!pw_grid.empty()) grid = parse_grid_spec(pw_grid);
            std::vector<double> eps = default_epsilon_schedule();
            if (!pw_eps.empty()) eps = parse_eps_schedule(pw_eps);
            const ConvolutionResult res = free_power(m, pw_t, grid, eps);
            save_measure_json(res.measure, pw_out);
            if (!pw_csv.empty()) write_measure_csv(res.measure, pw_csv);
            json rep = report_json("power", res.report);
            rep["inputs"] = {pw_file};
            rep["t"] = pw_t;
            write_text(report_path_for(pw_out), rep.dump(2) + "\n");
            return 0;
        }

        if (*lam_cmd) {
            const Measure m = load_measure_json(lam_file);
            json out;
            if (lam_cmd->count("--beta-norm") || lam_cmd->count("--gamma")) {
                if (!(lam_beta_norm > 0.0) || !(lam_gamma > 0.0))
                    throw ArgumentError("multiplicative lambda needs --beta-norm and --gamma");
                const double value = lambda_mult(m, lam_beta_norm, lam_gamma);
                out = {{"command", "lambda"},
                       {"mode", "multiplicative"},
                       {"value", value},
                       {"beta_norm", lam_beta_norm},
                       {"gamma", lam_gamma}};
            } else {
                LambdaConfig cfg;
                if (lam_alpha > 0.0 && lam_beta > 0.0) {
                    cfg.region = StolzRegion{lam_alpha, lam_beta, lam_band};
                } else {
                    cfg.region = stolz_fit({m});
                    cfg.region.band_height = lam_band;
                }
                cfg.nx = lam_nx;
                cfg.ny = lam_ny;
                const LambdaResult r = lambda_additive_full(m, cfg);
                out = {{"command", "lambda"},
                       {"mode", "additive"},
                       {"value", r.value},
                       {"quadrature_error", r.error_estimate},
                       {"region",
                        {{"alpha", cfg.region.alpha},
                         {"beta", cfg.region.beta},
                         {"band", cfg.region.band_height}}},
                       {"panels", {{"nx", cfg.nx}, {"ny", cfg.ny}}},
                       {"threads", max_threads()}};
            }
            const std::string text = out.dump(2) + "\n";
            if (lam_out.empty()) {
                std::cout << text;
            } else {
                write_text(lam_out, text);
                write_text(report_path_for(lam_out), text);
            }
            return 0;
        }

        if (*vf_cmd) {
            const Measure target = load_measure_json(vf_target);
            std::vector<Measure> parts;
            for (const std::string& p : vf_parts) parts.push_back(load_measure_json(p));
            const Mode mode = vf_mode == "additive" ? Mode::Additive : Mode::Multiplicative;

            VerifyConfig cfg;
            cfg.beta_norm = vf_beta_norm;
            cfg.gamma = vf_gamma;
            cfg.levy_tolerance = vf_levy_tol;
            cfg.lambda_tolerance = vf_lambda_tol;
            cfg.grid_slack = vf_slack;
            if (mode == Mode::Additive) {
                if (vf_alpha > 0.0 && vf_beta > 0.0) {
                    cfg.lambda.region = StolzRegion{vf_alpha, vf_beta, vf_band};
                } else {
                    std::vector<Measure> family = parts;
                    family.push_back(target);
                    cfg.lambda.region = stolz_fit(std::span<const Measure>(family));
                    cfg.lambda.region.band_height = vf_band;
                }
            }

            const DecompositionVerdict v = verify_decomposition(target, parts, mode, cfg);
            json out = verdict_json(v, vf_mode);
            out["config"] = {{"levy_tolerance", cfg.levy_tolerance},
                             {"lambda_tolerance", cfg.lambda_tolerance},
                             {"grid_slack", cfg.grid_slack}};
            if (mode == Mode::Additive)
                out["config"]["lambda_region"] = {{"alpha", cfg.lambda.region.alpha},
                                                  {"beta", cfg.lambda.region.beta},
                                                  {"band", cfg.lambda.region.band_height}};
            else
                out["config"]["normalization"] = {{"beta_norm", cfg.beta_norm},
                                                  {"gamma", cfg.gamma}};
            const std::string text = out.dump(2) + "\n";
            if (vf_out.empty()) {
                std::cout << text;
            } else {
                write_text(vf_out, text);
                write_text(report_path_for(vf_out), text);
            }
            return v.accepted ? 0 : 2;
        }

        if (*or_cmd) {
            const Measure m1 = load_measure_json(or_file1);
            const Measure m2 = load_measure_json(or_file2);
            OracleConfig cfg;
            cfg.matrix_size = or_n;
            cfg.trials = or_trials;
            cfg.seed = or_seed;
            cfg.bin_count = or_bins;
            const bool mult = or_mode == "mul";
            const std::vector<double> eigs = mult ? raw_multiplicative_eigenvalues(m1, m2, cfg)
                                                  : raw_additive_eigenvalues(m1, m2, cfg);
            const Measure hist = bin_eigenvalues(eigs, m1, m2, cfg, mult);
            save_measure_json(hist, or_out);
            if (!or_csv.empty()) write_measure_csv(hist, or_csv);
            if (!or_raw_csv.empty()) write_raw_csv(eigs, or_raw_csv);
            json rep = {{"command", "oracle"},
                        {"mode", or_mode},
                        {"inputs", {or_file1, or_file2}},
                        {"matrix_size", cfg.matrix_size},
                        {"trials", cfg.trials},
                        {"seed", cfg.seed},
                        {"bins", cfg.bin_count},
                        {"samples", eigs.size()},
                        {"threads", max_threads()}};
            write_text(report_path_for(or_out), rep.dump(2) + "\n");
            return 0;
        }

        if (*ct_cmd) {
            const Measure m = load_measure_json(ct_file);
            const Certificate cert = indecomposable_certificate(m);
            const Interval s = support_interval(m);
            json atoms = json::array();
            for (const Atom& a : m.atoms()) atoms.push_back({{"x", a.x}, {"mass", a.mass}});
            json out = {{"command", "certify"},
                        {"verdict", cert == Certificate::Certified ? "certified" : "inconclusive"},
                        {"support", {{"lo", s.lo}, {"hi", s.hi}}},
                        {"atoms", atoms}};
            const std::string text = out.dump(2) + "\n";
            if (ct_out.empty()) {
                std::cout << text;
            } else {
                write_text(ct_out, text);
                write_text(report_path_for(ct_out), text);
            }
            return cert == Certificate::Certified ? 0 : 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
