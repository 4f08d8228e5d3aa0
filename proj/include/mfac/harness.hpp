#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfac/controller.hpp"
#include "mfac/csv.hpp"
#include "mfac/edlm.hpp"
#include "mfac/errors.hpp"
#include "mfac/estimator.hpp"
#include "mfac/plants.hpp"
#include "mfac/scenario.hpp"

namespace mfac::harness {

enum class RunStatus { completed, diverged };

// Row-per-step record of one closed-loop run. Row r holds step k = k[r]:
// the reference and output at k, the input chosen at k, the tracking error
// e(k) = y_star(k) - y(k), and the gain vector the law used at k.
struct SimTrace {
    std::string scenario_name;
    RunStatus status = RunStatus::completed;
    int diverged_at = -1;  // step that tripped the guard, -1 if none
    int pg_size = 0;
    std::vector<int> k;
    std::vector<double> y_star, y, u, e;
    std::vector<std::vector<double>> pg;
    std::vector<std::string> warnings;

    std::size_t rows() const { return k.size(); }
};

namespace detail {

// Time-indexed buffer over t = -pad .. horizon with zero fill, so early steps
// can read lagged values without branching.
class Series {
public:
    Series(int pad, int horizon) : pad_(pad), data_(static_cast<std::size_t>(pad + horizon + 1), 0.0) {}

    double& at(int t) { return data_[static_cast<std::size_t>(t + pad_)]; }
    double at(int t) const { return data_[static_cast<std::size_t>(t + pad_)]; }

    // Newest-first view [value(t), value(t-1), ..., value(-pad)].
    std::vector<double> history(int t, int count) const {
        std::vector<double> out(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = at(t - i);
        return out;
    }

private:
    int pad_;
    std::vector<double> data_;
};

struct GainPieces {
    PGVector pg;                      // scalar gain vector as recorded in the trace
    std::vector<double> gain_poly;    // gain-slot polynomial in du(k), for the cost laws
};

}  // namespace detail

// Runs a scenario start to finish. The loop per step k = 1..horizon:
// the plant produces y(k) from the step-(k-1) histories, the divergence guard
// checks it, the gain source delivers phi(k), the control law picks u(k)
// against the reference for k+1, and the row is recorded. A tripped guard
// ends the run with the partial trace retained.
inline SimTrace run(const scenario::Scenario& s) {
    scenario::validate(s);
    const plants::Plant plant = scenario::build_plant(s.plant);
    plants::validate(plant);

    const int ly = s.orders.ly;
    const int lu = s.orders.lu;
    const int pad = std::max({static_cast<int>(s.y_init.size()), static_cast<int>(s.u_init.size()), ly + 2, lu + 2,
                              plant.true_orders.ly + 2, plant.true_orders.lu + 2, 4});

    detail::Series ys(pad, s.horizon), us(pad, s.horizon);
    for (std::size_t i = 0; i < s.y_init.size(); ++i)
        ys.at(-static_cast<int>(i)) = s.y_init[s.y_init.size() - 1 - i];
    for (std::size_t i = 0; i < s.u_init.size(); ++i)
        us.at(-static_cast<int>(i)) = s.u_init[s.u_init.size() - 1 - i];

    SimTrace trace;
    trace.scenario_name = s.name;
    trace.pg_size = s.orders.total();

    estimator::Config est_cfg;
    estimator::State est_state;
    if (s.pg_source == scenario::PGSource::estimated) {
        est_cfg.eta = s.eta;
        est_cfg.mu = s.mu;
        est_cfg.reset = s.reset;
        est_cfg.reset_window_eps = s.reset_window_eps;
        est_cfg.reset_estimate_eps = s.reset_estimate_eps;
        est_cfg.initial = PGVector{s.orders, s.initial_pg};
        trace.warnings = estimator::validate(est_cfg);
        est_state = estimator::initial_state(est_cfg);
    }
    const PGVector initial_pg{s.orders, s.initial_pg};

    controller::Config ctrl_cfg;
    ctrl_cfg.lambda = s.lambda;
    ctrl_cfg.denominator_guard = s.denominator_guard;
    ctrl_cfg.n_iter = s.n_iter;
    ctrl_cfg.iteration_guard = s.divergence_guard;

    auto record = [&](int k, double y_star_now, double y_now, double u_now, const PGVector& pg) {
        trace.k.push_back(k);
        trace.y_star.push_back(y_star_now);
        trace.y.push_back(y_now);
        trace.u.push_back(u_now);
        trace.e.push_back(y_star_now - y_now);
        trace.pg.push_back(pg.phi);
    };

    // Gains for one step: a scalar vector for the trace and the laws that
    // need one, plus the gain-slot polynomial when the model supplies it.
    auto gains_at = [&](int k) -> detail::GainPieces {
        detail::GainPieces g;
        switch (s.pg_source) {
            case scenario::PGSource::known:
                g.pg = initial_pg;
                g.gain_poly = {g.pg.gain()};
                return g;
            case scenario::PGSource::estimated: {
                IncrementWindow prev;  // dH(k-1), the regressor behind dy(k)
                prev.dy.resize(static_cast<std::size_t>(ly));
                prev.du.resize(static_cast<std::size_t>(lu));
                for (int i = 0; i < ly; ++i) prev.dy[static_cast<std::size_t>(i)] = ys.at(k - 1 - i) - ys.at(k - 2 - i);
                for (int j = 0; j < lu; ++j) prev.du[static_cast<std::size_t>(j)] = us.at(k - 1 - j) - us.at(k - 2 - j);
                est_state = estimator::update(est_state, ys.at(k) - ys.at(k - 1), prev, est_cfg);
                g.pg = est_state.estimate;
                g.gain_poly = {g.pg.gain()};
                return g;
            }
            case scenario::PGSource::taylor: {
                if (k <= s.hold_steps) {
                    g.pg = initial_pg;
                    g.gain_poly = {g.pg.gain()};
                    return g;
                }
                OperatingPoint at;
                at.y.resize(static_cast<std::size_t>(ly));
                at.u.resize(static_cast<std::size_t>(lu));
                for (int i = 0; i < ly; ++i) at.y[static_cast<std::size_t>(i)] = ys.at(k - 1 - i);
                for (int j = 0; j < lu; ++j) at.u[static_cast<std::size_t>(j)] = us.at(k - 1 - j);
                g.pg.orders = s.orders;
                g.pg.phi.resize(static_cast<std::size_t>(s.orders.total()), 0.0);
                for (int i = 0; i < ly; ++i) {
                    const auto c = argument_taylor_coeffs(plant.partials.y[static_cast<std::size_t>(i)], at, k - 1,
                                                          plant.truncation_y[static_cast<std::size_t>(i)]);
                    double acc = 0.0;
                    const double dy_i = ys.at(k - i) - ys.at(k - 1 - i);
                    for (std::size_t m = c.size(); m-- > 0;) acc = acc * dy_i + c[m];
                    g.pg.phi[static_cast<std::size_t>(i)] = acc;
                }
                for (int j = 1; j < lu; ++j) {
                    const auto c = argument_taylor_coeffs(plant.partials.u[static_cast<std::size_t>(j)], at, k - 1,
                                                          plant.truncation_u[static_cast<std::size_t>(j)]);
                    double acc = 0.0;
                    const double du_j = us.at(k - j) - us.at(k - 1 - j);
                    for (std::size_t m = c.size(); m-- > 0;) acc = acc * du_j + c[m];
                    g.pg.phi[static_cast<std::size_t>(ly + j)] = acc;
                }
                g.gain_poly = argument_taylor_coeffs(plant.partials.u[0], at, k - 1, plant.truncation_u[0]);
                // The scalar stand-in for the du(k)-dependent gain slot:
                // evaluate the polynomial at the previous increment. The cost
                // laws ignore it and use the polynomial exactly; after their
                // decision the realized value replaces it in the trace.
                g.pg.gain() = controller::approximate_gain(g.gain_poly, us.at(k - 1) - us.at(k - 2));
                return g;
            }
        }
        throw config_error("unknown gain source");
    };

    for (int k = 1; k <= s.horizon; ++k) {
        const double y_now = plant.step(ys.history(k - 1, plant.true_orders.ly), us.history(k - 1, plant.true_orders.lu), k - 1);
        const double y_star_now = plants::trajectory_eval(s.trajectory, k - 1);
        if (!std::isfinite(y_now) || std::abs(y_now) > s.divergence_guard) {
            trace.status = RunStatus::diverged;
            trace.diverged_at = k;
            const PGVector last = trace.pg.empty() ? initial_pg : PGVector{s.orders, trace.pg.back()};
            record(k, y_star_now, y_now, us.at(k - 1), last);
            return trace;
        }
        ys.at(k) = y_now;

        detail::GainPieces gains = gains_at(k);

        controller::Context ctx;
        ctx.y = y_now;
        ctx.y_star = plants::trajectory_eval(s.trajectory, k);
        ctx.u_prev = us.at(k - 1);
        ctx.dy.resize(static_cast<std::size_t>(ly));
        ctx.du.resize(static_cast<std::size_t>(lu - 1));
        for (int i = 0; i < ly; ++i) ctx.dy[static_cast<std::size_t>(i)] = ys.at(k - i) - ys.at(k - 1 - i);
        for (int j = 1; j < lu; ++j) ctx.du[static_cast<std::size_t>(j - 1)] = us.at(k - j) - us.at(k - 1 - j);

        double u_now = ctx.u_prev;
        try {
            switch (s.mode) {
                case scenario::ControlMode::one_step:
                    u_now = controller::one_step_law(gains.pg, ctx, ctrl_cfg).u;
                    break;
                case scenario::ControlMode::iterative: {
                    if (k <= s.hold_steps) {
                        u_now = controller::one_step_law(gains.pg, ctx, ctrl_cfg).u;
                        break;
                    }
                    const auto d = controller::iterative_law(plant.partials, ys.history(k, plant.true_orders.ly + 1),
                                                             us.history(k - 1, plant.true_orders.lu + 1), k, ctx.y_star,
                                                             ctrl_cfg);
                    u_now = d.u;
                    break;
                }
                case scenario::ControlMode::polynomial_cost: {
                    const double bracket = controller::tracking_bracket(gains.pg, ctx);
                    const auto d = controller::minimize_polynomial_cost(gains.gain_poly, bracket, ctx.y_star, s.lambda,
                                                                        ctx.u_prev);
                    u_now = d.u;
                    gains.pg.gain() = controller::approximate_gain(gains.gain_poly, d.delta_u);
                    break;
                }
                case scenario::ControlMode::constrained: {
                    const double bracket = controller::tracking_bracket(gains.pg, ctx);
                    const auto d = controller::minimize_constrained(gains.gain_poly, bracket, ctx.y_star, s.lambda,
                                                                    ctx.u_prev, s.u_min, s.u_max);
                    u_now = d.u;
                    gains.pg.gain() = controller::approximate_gain(gains.gain_poly, d.delta_u);
                    break;
                }
            }
        } catch (const degenerate_gain_error&) {
            if (s.fallback == scenario::DegenerateFallback::fail) throw;
            u_now = ctx.u_prev;  // hold the previous input through the flat spot
        } catch (const divergence_error&) {
            trace.status = RunStatus::diverged;
            trace.diverged_at = k;
            record(k, y_star_now, y_now, ctx.u_prev, gains.pg);
            return trace;
        }

        if (!std::isfinite(u_now)) {
            trace.status = RunStatus::diverged;
            trace.diverged_at = k;
            record(k, y_star_now, y_now, ctx.u_prev, gains.pg);
            return trace;
        }
        us.at(k) = u_now;
        record(k, y_star_now, y_now, u_now, gains.pg);
    }
    return trace;
}

struct Metrics {
    double rms = 0.0;           // tracking error RMS after the transient cut
    double static_error = 0.0;  // mean error over the final window
    double max_abs_u = 0.0;
    int violations = 0;   // steps with u outside the box, when a box is given
    bool partial = false;  // true when computed from a diverged (truncated) run
    int rms_from = 0;
    int window = 0;
};

// Scores a trace. `window` is the tail length for the static error;
// `rms_from` the first step included in the RMS (pass -1 to discard the
// default 10% transient). Box bounds, when given, count violations.
inline Metrics compute_metrics(const SimTrace& trace, int window = 100, int rms_from = -1,
                               std::optional<std::pair<double, double>> box = std::nullopt) {
    const int n = static_cast<int>(trace.rows());
    if (n == 0) throw window_error("trace is empty");
    if (window < 1 || window > n)
        throw window_error("window " + std::to_string(window) + " does not fit a " + std::to_string(n) + "-row trace");
    if (rms_from < 0) rms_from = n / 10 + 1;

    Metrics m;
    m.partial = trace.status == RunStatus::diverged;
    m.window = window;
    m.rms_from = rms_from;

    double sq = 0.0;
    int count = 0;
    for (int r = 0; r < n; ++r) {
        if (trace.k[static_cast<std::size_t>(r)] < rms_from) continue;
        sq += trace.e[static_cast<std::size_t>(r)] * trace.e[static_cast<std::size_t>(r)];
        ++count;
    }
    m.rms = count > 0 ? std::sqrt(sq / count) : std::numeric_limits<double>::quiet_NaN();

    double tail = 0.0;
    for (int r = n - window; r < n; ++r) tail += trace.e[static_cast<std::size_t>(r)];
    m.static_error = tail / window;

    for (int r = 0; r < n; ++r) {
        const double u = trace.u[static_cast<std::size_t>(r)];
        m.max_abs_u = std::max(m.max_abs_u, std::abs(u));
        if (box && (u < box->first || u > box->second)) ++m.violations;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Trace CSV: header k,y_star,y,u,e,phi_1..phi_m; one row per step; numbers at
// 17 significant digits so export -> import -> export is byte-identical.
// ---------------------------------------------------------------------------

inline void export_csv(const SimTrace& trace, std::ostream& out) {
    std::vector<std::string> header{"k", "y_star", "y", "u", "e"};
    for (int i = 1; i <= trace.pg_size; ++i) header.push_back("phi_" + std::to_string(i));
    csv::write_row(out, header);
    for (std::size_t r = 0; r < trace.rows(); ++r) {
        std::vector<std::string> cells{std::to_string(trace.k[r]), csv::format(trace.y_star[r]), csv::format(trace.y[r]),
                                       csv::format(trace.u[r]), csv::format(trace.e[r])};
        for (double v : trace.pg[r]) cells.push_back(csv::format(v));
        csv::write_row(out, cells);
    }
}

inline void export_csv(const SimTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    export_csv(trace, out);
    out.flush();
    if (!out) throw io_error("write to '" + path + "' failed");
}

inline SimTrace import_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw parse_error("missing header row", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = csv::split(line);
    if (header.size() < 6 || header[0] != "k" || header[1] != "y_star" || header[2] != "y" || header[3] != "u" ||
        header[4] != "e")
        throw parse_error("header must be k,y_star,y,u,e,phi_1..phi_m", 1);
    const int pg_size = static_cast<int>(header.size()) - 5;
    for (int i = 0; i < pg_size; ++i)
        if (header[static_cast<std::size_t>(5 + i)] != "phi_" + std::to_string(i + 1))
            throw parse_error("gain columns must be phi_1..phi_m in order", 1);

    SimTrace trace;
    trace.pg_size = pg_size;
    int line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = csv::split(line);
        if (cells.size() != header.size())
            throw parse_error("expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()),
                              line_number);
        trace.k.push_back(static_cast<int>(csv::parse_long(cells[0], line_number)));
        trace.y_star.push_back(csv::parse_double(cells[1], line_number));
        trace.y.push_back(csv::parse_double(cells[2], line_number));
        trace.u.push_back(csv::parse_double(cells[3], line_number));
        trace.e.push_back(csv::parse_double(cells[4], line_number));
        std::vector<double> pg(static_cast<std::size_t>(pg_size));
        for (int i = 0; i < pg_size; ++i) pg[static_cast<std::size_t>(i)] = csv::parse_double(cells[static_cast<std::size_t>(5 + i)], line_number);
        trace.pg.push_back(std::move(pg));
    }
    return trace;
}

inline SimTrace import_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    return import_csv(in);
}

}  // namespace mfac::harness
