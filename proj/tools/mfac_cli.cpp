// Command-line front end for the mfac library: run scenarios, analyze frozen
// gain vectors, sweep the penalty weight, and emit plotting scripts.
//
// Exit codes: 0 success, 2 configuration problem, 3 run diverged or the law
// broke down mid-run, 4 file I/O failure.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "mfac/mfac.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitIo = 4;

std::string default_scenario_dir() {
    if (const char* env = std::getenv("MFAC_SCENARIO_DIR")) return env;
    return "scenarios";
}

// Accepts either a path to a scenario file or a bare name looked up in dir.
std::string resolve_scenario(const std::string& arg, const std::string& dir) {
    namespace fs = std::filesystem;
    if (fs::exists(arg)) return arg;
    const fs::path named = fs::path(dir) / (arg + ".json");
    if (fs::exists(named)) return named.string();
    throw mfac::io_error("no scenario file '" + arg + "' and no '" + named.string() + "'");
}

mfac::PGVector parse_pg(const std::vector<double>& values, int ly) {
    if (values.size() < 2) throw mfac::config_error("gain vector needs at least 2 entries");
    if (ly < 0 || ly >= static_cast<int>(values.size()))
        throw mfac::config_error("ly must be in [0, " + std::to_string(values.size() - 1) + "]");
    mfac::PGVector pg;
    pg.orders = {ly, static_cast<int>(values.size()) - ly};
    pg.phi = values;
    mfac::validate(pg);
    return pg;
}

// "start:step:stop" (inclusive) or a comma list of values.
std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> grid;
    if (spec.find(':') != std::string::npos) {
        double start = 0.0, step = 0.0, stop = 0.0;
        const auto first = spec.find(':');
        const auto second = spec.find(':', first + 1);
        if (second == std::string::npos) throw mfac::config_error("grid must be start:step:stop or v1,v2,...");
        try {
            start = std::stod(spec.substr(0, first));
            step = std::stod(spec.substr(first + 1, second - first - 1));
            stop = std::stod(spec.substr(second + 1));
        } catch (const std::exception&) {
            throw mfac::config_error("grid '" + spec + "' is not numeric");
        }
        if (!(step > 0.0)) throw mfac::config_error("grid step must be > 0");
        for (double v = start; v <= stop + 0.5 * step; v += step) grid.push_back(std::min(v, stop));
        if (!grid.empty()) grid.back() = stop;  // land exactly on the endpoint
    } else {
        std::size_t pos = 0;
        while (pos <= spec.size()) {
            const auto comma = spec.find(',', pos);
            const std::string tok = spec.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            try {
                grid.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw mfac::config_error("grid value '" + tok + "' is not numeric");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    if (grid.empty()) throw mfac::config_error("grid is empty");
    return grid;
}

void print_summary(const mfac::harness::SimTrace& trace, const mfac::harness::Metrics& metrics) {
    std::cout << "mfac-summary/1"
              << " scenario=" << trace.scenario_name
              << " status=" << (trace.status == mfac::harness::RunStatus::completed ? "completed" : "diverged")
              << " steps=" << trace.rows()
              << " diverged_at=" << trace.diverged_at
              << " rms=" << mfac::csv::format(metrics.rms)
              << " static_error=" << mfac::csv::format(metrics.static_error)
              << " max_abs_u=" << mfac::csv::format(metrics.max_abs_u)
              << " violations=" << metrics.violations << "\n";
}

int cmd_simulate(const std::string& scenario_arg, const std::string& dir, const std::string& out_path, int window) {
    const mfac::scenario::Scenario s = mfac::scenario::load(resolve_scenario(scenario_arg, dir));
    const mfac::harness::SimTrace trace = mfac::harness::run(s);
    for (const auto& w : trace.warnings) std::cerr << "warning: " << w << "\n";

    std::optional<std::pair<double, double>> box;
    if (s.mode == mfac::scenario::ControlMode::constrained) box = {s.u_min, s.u_max};
    const int usable = std::min<int>(window, static_cast<int>(trace.rows()));
    const auto metrics = mfac::harness::compute_metrics(trace, usable, -1, box);

    if (!out_path.empty()) mfac::harness::export_csv(trace, out_path);
    print_summary(trace, metrics);
    return trace.status == mfac::harness::RunStatus::completed ? kExitOk : kExitDiverged;
}

int cmd_analyze_poles(const std::vector<double>& pg_values, int ly, double lambda, double band) {
    const mfac::PGVector pg = parse_pg(pg_values, ly);
    const auto T = mfac::analysis::build_T(pg, lambda);
    const auto report = mfac::analysis::poles(T, band);

    std::cout << "characteristic polynomial (ascending powers of z^-1):";
    for (double c : T.c) std::cout << ' ' << mfac::csv::format(c);
    std::cout << "\nroots:";
    if (report.roots.empty()) std::cout << " none";
    for (const auto& z : report.roots)
        std::cout << ' ' << mfac::csv::format(z.real()) << (z.imag() < 0 ? "-" : "+") << mfac::csv::format(std::abs(z.imag()))
                  << "i";
    std::cout << "\nspectral_radius=" << mfac::csv::format(report.spectral_radius)
              << " verdict=" << mfac::analysis::to_string(report.verdict) << "\n";
    return kExitOk;
}

int cmd_analyze_static_error(const std::vector<double>& pg_values, int ly, double lambda, double ts, int power) {
    const mfac::PGVector pg = parse_pg(pg_values, ly);
    if (power == 1) {
        std::cout << "ramp_error=" << mfac::csv::format(mfac::analysis::static_error_ramp(pg, lambda, ts)) << "\n";
        return kExitOk;
    }
    const auto r = mfac::analysis::static_error_power(pg, power, lambda);
    switch (r.kind) {
        case mfac::analysis::PowerErrorResult::Kind::zero:
            std::cout << "power=" << power << " error=0 (zero penalty tracks exactly)\n";
            break;
        case mfac::analysis::PowerErrorResult::Kind::finite:
            std::cout << "power=" << power << " error=" << mfac::csv::format(r.value) << "\n";
            break;
        case mfac::analysis::PowerErrorResult::Kind::divergent:
            std::cout << "power=" << power << " error=divergent (no finite limit with a positive penalty)\n";
            break;
    }
    return kExitOk;
}

int cmd_sweep(const std::vector<double>& pg_values, int ly, const std::string& grid_spec, double ts,
              const std::string& out_path) {
    const mfac::PGVector pg = parse_pg(pg_values, ly);
    const auto rows = mfac::analysis::lambda_sweep(pg, parse_grid(grid_spec), ts);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw mfac::io_error("cannot open '" + out_path + "' for writing");
        out = &file;
    }
    mfac::csv::write_row(*out, {"lambda", "spectral_radius", "verdict", "ramp_error", "ramp_error_defined"});
    for (const auto& row : rows)
        mfac::csv::write_row(*out, {mfac::csv::format(row.lambda), mfac::csv::format(row.spectral_radius),
                                    mfac::analysis::to_string(row.verdict), mfac::csv::format(row.ramp_error),
                                    row.ramp_error_defined ? "1" : "0"});
    if (out == &file) {
        file.flush();
        if (!file) throw mfac::io_error("write to '" + out_path + "' failed");
    }
    return kExitOk;
}

int cmd_emit_plot(const std::string& trace_path, const std::string& out_path, bool pg_only) {
    const mfac::harness::SimTrace trace = mfac::harness::import_csv(trace_path);  // validates the schema up front

    std::ofstream out(out_path);
    if (!out) throw mfac::io_error("cannot open '" + out_path + "' for writing");

    out << "#!/usr/bin/env python3\n"
        << "# Plots the simulation trace '" << trace_path << "' (" << trace.rows() << " rows).\n"
        << "import csv\n"
        << "import matplotlib.pyplot as plt\n\n"
        << "path = " << std::quoted(trace_path) << "\n"
        << "with open(path, newline='') as f:\n"
        << "    rows = list(csv.DictReader(f))\n"
        << "k = [int(r['k']) for r in rows]\n"
        << "cols = {name: [float(r[name]) for r in rows] for name in rows[0] if name != 'k'}\n"
        << "phi_names = sorted((n for n in cols if n.startswith('phi_')), key=lambda n: int(n[4:]))\n\n";
    if (pg_only) {
        out << "fig, ax_phi = plt.subplots(1, 1, figsize=(8, 4), sharex=True)\n";
    } else {
        out << "fig, (ax_y, ax_u, ax_phi) = plt.subplots(3, 1, figsize=(8, 9), sharex=True)\n"
            << "ax_y.plot(k, cols['y_star'], label='reference', linestyle='--')\n"
            << "ax_y.plot(k, cols['y'], label='output')\n"
            << "ax_y.set_ylabel('y')\n"
            << "ax_y.legend()\n"
            << "ax_u.plot(k, cols['u'])\n"
            << "ax_u.set_ylabel('u')\n";
    }
    out << "for name in phi_names:\n"
        << "    ax_phi.plot(k, cols[name], label=name)\n"
        << "ax_phi.set_ylabel('gains')\n"
        << "ax_phi.set_xlabel('k')\n"
        << "ax_phi.legend()\n"
        << "fig.tight_layout()\n"
        << "plt.show()\n";
    out.flush();
    if (!out) throw mfac::io_error("write to '" + out_path + "' failed");
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_list(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw mfac::io_error("'" + dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        try {
            const auto s = mfac::scenario::load(path.string());
            std::cout << s.name << "  plant=" << s.plant.kind << " horizon=" << s.horizon << "  (" << path.string()
                      << ")\n";
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << path.string() << ": " << e.what() << "\n";
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"model-free adaptive control: simulation and closed-loop analysis"};
    app.require_subcommand(1);

    std::string scenario_arg, out_path, dir = default_scenario_dir(), grid_spec = "0:0.1:1", trace_path;
    std::vector<double> pg_values;
    int ly = 1, window = 100, power = 1;
    double lambda = 0.0, ts = 1.0, band = 1e-3;
    bool pg_only = false;

    auto* simulate = app.add_subcommand("simulate", "run a scenario and print a summary line");
    simulate->add_option("scenario", scenario_arg, "scenario file path or built-in name")->required();
    simulate->add_option("-o,--out", out_path, "write the trace CSV here");
    simulate->add_option("--scenario-dir", dir, "directory for built-in scenario names");
    simulate->add_option("--window", window, "static-error window (final steps)");

    auto* poles = app.add_subcommand("analyze-poles", "characteristic roots of a frozen gain vector");
    poles->add_option("--pg", pg_values, "gain vector phi_1..phi_n")->required()->delimiter(',');
    poles->add_option("--ly", ly, "output tap count (splits the vector)")->required();
    poles->add_option("--lambda", lambda, "penalty weight")->required();
    poles->add_option("--band", band, "marginal band around the unit circle");

    auto* serr = app.add_subcommand("analyze-static-error", "steady-state error limits of a frozen gain vector");
    serr->add_option("--pg", pg_values, "gain vector phi_1..phi_n")->required()->delimiter(',');
    serr->add_option("--ly", ly, "output tap count (splits the vector)")->required();
    serr->add_option("--lambda", lambda, "penalty weight")->required();
    serr->add_option("--ts", ts, "sample time for the ramp limit");
    serr->add_option("--power", power, "reference power n for y* ~ k^n");

    auto* sweep = app.add_subcommand("sweep-lambda", "stability and ramp error across a penalty grid");
    sweep->add_option("--pg", pg_values, "gain vector phi_1..phi_n")->required()->delimiter(',');
    sweep->add_option("--ly", ly, "output tap count (splits the vector)")->required();
    sweep->add_option("--grid", grid_spec, "start:step:stop or comma list");
    sweep->add_option("--ts", ts, "sample time for the ramp limit");
    sweep->add_option("-o,--out", out_path, "write the sweep CSV here (default stdout)");

    auto* plot = app.add_subcommand("emit-plot", "write a python plotting script for a trace CSV");
    plot->add_option("trace", trace_path, "trace CSV produced by simulate")->required();
    plot->add_option("-o,--out", out_path, "script path")->required();
    plot->add_flag("--pg-only", pg_only, "only the gain panel");

    auto* list = app.add_subcommand("list-scenarios", "list scenario files in a directory");
    list->add_option("--dir", dir, "scenario directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(scenario_arg, dir, out_path, window);
        if (poles->parsed()) return cmd_analyze_poles(pg_values, ly, lambda, band);
        if (serr->parsed()) return cmd_analyze_static_error(pg_values, ly, lambda, ts, power);
        if (sweep->parsed()) return cmd_sweep(pg_values, ly, grid_spec, ts, out_path);
        if (plot->parsed()) return cmd_emit_plot(trace_path, out_path, pg_only);
        if (list->parsed()) return cmd_list(dir);
    } catch (const mfac::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const mfac::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const mfac::divergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const std::exception& e) {
        // config_error, numeric_error, degenerate cases: the setup is unusable
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
