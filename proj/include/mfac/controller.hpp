#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mfac/edlm.hpp"
#include "mfac/errors.hpp"
#include "mfac/polynomial.hpp"

namespace mfac::controller {

struct Config {
    double lambda = 0.0;             // input-increment penalty weight, >= 0
    double denominator_guard = 1e-10;  // |gain| below this with lambda = 0 is degenerate
    int n_iter = 3;                  // inner passes of the iterative law
    double iteration_guard = 1e12;   // |predicted y| bound inside the iterative law
};

inline void validate(const Config& cfg) {
    if (!(cfg.lambda >= 0.0)) throw config_error("penalty weight must be >= 0");
    if (!(cfg.denominator_guard > 0.0)) throw config_error("denominator guard must be > 0");
    if (cfg.n_iter < 1) throw config_error("iteration count must be >= 1");
}

// Everything the one-step law reads at decision time k. Increment blocks are
// newest first, and exclude the unknown du(k): dy carries dy(k)..dy(k-Ly+1),
// du carries du(k-1)..du(k-Lu+1).
struct Context {
    double y = 0.0;       // y(k)
    double y_star = 0.0;  // reference for k+1
    double u_prev = 0.0;  // u(k-1)
    std::vector<double> dy;
    std::vector<double> du;
};

inline void check_context(const Context& ctx, const PseudoOrders& o) {
    if (ctx.dy.size() != static_cast<std::size_t>(o.ly) || ctx.du.size() != static_cast<std::size_t>(o.lu - 1))
        throw config_error("decision context is (" + std::to_string(ctx.dy.size()) + ", " + std::to_string(ctx.du.size()) +
                           ") taps, orders require (" + std::to_string(o.ly) + ", " + std::to_string(o.lu - 1) + ")");
    for (double v : ctx.dy)
        if (!std::isfinite(v)) throw numeric_error("output increment is not finite");
    for (double v : ctx.du)
        if (!std::isfinite(v)) throw numeric_error("input increment is not finite");
    if (!std::isfinite(ctx.y) || !std::isfinite(ctx.y_star) || !std::isfinite(ctx.u_prev))
        throw numeric_error("decision context value is not finite");
}

struct Decision {
    double delta_u = 0.0;
    double u = 0.0;
    double predicted_next_y = 0.0;
    struct Diagnostics {
        double bracket = 0.0;
        double denominator = std::numeric_limits<double>::quiet_NaN();
        double cost = 0.0;
        int iterations = 1;
        std::vector<double> iteration_errors;  // |y_star - rolled prediction| per inner pass
    } diagnostics;
};

// The feedback content of the law: the reference step minus what the lagged
// increments already contribute through the model. The du(k) gain slot is
// deliberately absent; each law supplies its own handling of that term.
inline double tracking_bracket(const PGVector& pg, const Context& ctx) {
    double acc = ctx.y_star - ctx.y;
    for (std::size_t i = 0; i < ctx.dy.size(); ++i) acc -= pg.phi[i] * ctx.dy[i];
    for (std::size_t j = 0; j < ctx.du.size(); ++j) acc -= pg.phi[static_cast<std::size_t>(pg.orders.ly) + 1 + j] * ctx.du[j];
    return acc;
}

// Closed-form minimizer of (y_star - predicted y)^2 + lambda du^2 for a
// du-independent gain:
//
//     du(k) = gain / (lambda + gain^2) * bracket.
//
// lambda = 0 inverts the model exactly and therefore requires a usable gain.
inline Decision one_step_law(const PGVector& pg, const Context& ctx, const Config& cfg) {
    mfac::validate(pg);
    validate(cfg);
    check_context(ctx, pg.orders);

    const double gain = pg.gain();
    if (cfg.lambda == 0.0 && std::abs(gain) < cfg.denominator_guard)
        throw degenerate_gain_error("input gain " + std::to_string(gain) + " is too small to invert with zero penalty");

    Decision d;
    d.diagnostics.bracket = tracking_bracket(pg, ctx);
    d.diagnostics.denominator = cfg.lambda + gain * gain;
    d.delta_u = gain / d.diagnostics.denominator * d.diagnostics.bracket;
    d.u = ctx.u_prev + d.delta_u;
    d.predicted_next_y = ctx.y_star - d.diagnostics.bracket + gain * d.delta_u;
    const double residual = d.diagnostics.bracket - gain * d.delta_u;
    d.diagnostics.cost = residual * residual + cfg.lambda * d.delta_u * d.delta_u;
    if (!std::isfinite(d.u)) throw numeric_error("one-step law produced a non-finite input");
    return d;
}

// Gain of a nonlinear input slot with the unknown du(k) replaced by the
// previous increment: evaluate the slot's Taylor gain polynomial at du(k-1).
// With a quiet input history this collapses to the first partial alone.
inline double approximate_gain(std::span<const double> gain_coeffs, double du_prev) {
    if (gain_coeffs.empty()) throw config_error("gain polynomial needs at least one coefficient");
    if (!std::isfinite(du_prev)) throw numeric_error("previous input increment is not finite");
    double acc = 0.0;
    for (std::size_t i = gain_coeffs.size(); i-- > 0;) acc = acc * du_prev + gain_coeffs[i];
    return acc;
}

namespace detail {

// J(x) = (bracket - sum_m c[m] x^{m+1})^2 + lambda x^2 as ascending coefficients.
inline std::vector<double> cost_polynomial(std::span<const double> gain_coeffs, double bracket, double lambda) {
    std::vector<double> residual(gain_coeffs.size() + 1);
    residual[0] = bracket;
    for (std::size_t m = 0; m < gain_coeffs.size(); ++m) residual[m + 1] = -gain_coeffs[m];
    std::vector<double> J = poly::multiply(residual, residual);
    if (J.size() < 3) J.resize(3, 0.0);
    J[2] += lambda;
    return J;
}

// Real stationary points of the cost, through the companion-matrix solver.
inline std::vector<double> stationary_points(std::span<const double> J) {
    const std::vector<double> dJ = poly::trimmed(poly::derivative(J));
    if (dJ.empty()) throw degenerate_gain_error("cost is constant in the input increment; nothing to minimize");
    std::vector<double> real_roots;
    for (const auto& z : poly::roots(dJ))
        if (std::abs(z.imag()) <= 1e-8 * (1.0 + std::abs(z.real()))) real_roots.push_back(z.real());
    return real_roots;
}

inline Decision pick_minimum(std::span<const double> J, std::span<const double> candidates,
                             std::span<const double> gain_coeffs, double bracket, double y_star, double u_prev) {
    double best_x = 0.0;
    double best_cost = std::numeric_limits<double>::infinity();
    bool found = false;
    for (double x : candidates) {
        if (!std::isfinite(x)) continue;
        const double cost = poly::evaluate(J, x);
        const bool better = cost < best_cost - 1e-12 * (1.0 + std::abs(best_cost));
        const bool tied = std::abs(cost - best_cost) <= 1e-12 * (1.0 + std::abs(best_cost));
        if (!found || better || (tied && std::abs(x) < std::abs(best_x))) {
            best_x = x;
            best_cost = cost;
            found = true;
        }
    }
    if (!found) throw numeric_error("no finite stationary point for the cost polynomial");

    double gain_times_du = 0.0;  // sum_m c[m] x^{m+1} at the minimizer
    for (std::size_t i = gain_coeffs.size(); i-- > 0;) gain_times_du = (gain_times_du + gain_coeffs[i]) * best_x;

    Decision d;
    d.delta_u = best_x;
    d.u = u_prev + best_x;
    d.diagnostics.bracket = bracket;
    d.diagnostics.cost = best_cost;
    d.predicted_next_y = y_star - bracket + gain_times_du;
    return d;
}

}  // namespace detail

// Exact handling of an input gain that itself depends on du(k): minimize
//
//     J(du) = (bracket - phi_gain(du) du)^2 + lambda du^2,
//     phi_gain(du) = gain_coeffs[0] + gain_coeffs[1] du + ...
//
// over all real du. J is an even-degree polynomial with positive leading
// coefficient, so a global minimum exists; all stationary points are found
// through the companion matrix and the cheapest is returned, preferring the
// smallest |du| on ties. A single-coefficient gain reproduces one_step_law.
inline Decision minimize_polynomial_cost(std::span<const double> gain_coeffs, double bracket, double y_star,
                                         double lambda, double u_prev) {
    if (gain_coeffs.empty()) throw config_error("gain polynomial needs at least one coefficient");
    if (!(lambda >= 0.0)) throw config_error("penalty weight must be >= 0");
    if (!std::isfinite(bracket) || !std::isfinite(u_prev) || !std::isfinite(y_star))
        throw numeric_error("cost minimization input is not finite");
    for (double c : gain_coeffs)
        if (!std::isfinite(c)) throw numeric_error("gain coefficient is not finite");

    const std::vector<double> J = detail::cost_polynomial(gain_coeffs, bracket, lambda);
    const std::vector<double> candidates = detail::stationary_points(J);
    return detail::pick_minimum(J, candidates, gain_coeffs, bracket, y_star, u_prev);
}

// Same cost restricted to u(k) in [u_min, u_max]: interior stationary points
// plus both endpoints are compared, and the returned input is clamped so the
// box holds exactly even after rounding.
inline Decision minimize_constrained(std::span<const double> gain_coeffs, double bracket, double y_star, double lambda,
                                     double u_prev, double u_min, double u_max) {
    if (!(u_min < u_max)) throw config_error("input box is empty: min " + std::to_string(u_min) + ", max " + std::to_string(u_max));
    if (gain_coeffs.empty()) throw config_error("gain polynomial needs at least one coefficient");
    if (!(lambda >= 0.0)) throw config_error("penalty weight must be >= 0");
    if (!std::isfinite(bracket) || !std::isfinite(u_prev) || !std::isfinite(y_star))
        throw numeric_error("cost minimization input is not finite");

    const double lo = u_min - u_prev;
    const double hi = u_max - u_prev;
    const std::vector<double> J = detail::cost_polynomial(gain_coeffs, bracket, lambda);
    std::vector<double> candidates{lo, hi};
    try {
        for (double x : detail::stationary_points(J))
            if (x > lo && x < hi) candidates.push_back(x);
    } catch (const degenerate_gain_error&) {
        // Constant cost: every feasible input ties, and the endpoint pass
        // below resolves the tie toward the smaller |du|.
    }
    Decision d = detail::pick_minimum(J, candidates, gain_coeffs, bracket, y_star, u_prev);
    d.u = std::clamp(u_prev + d.delta_u, u_min, u_max);
    return d;
}

// Multi-pass law for a known model: each pass re-linearizes at the operating
// point the previous pass predicted, recomputes the one-step update there,
// and rolls the first-order model one step. Every pass keeps chasing the same
// reference value y_star (the target for k+1); the last virtual input is what
// gets applied. One pass is exactly one_step_law with the plain gradient at
// the time-(k-1) arguments.
//
// y_hist is newest-first starting at y(k) with at least n_y + 2 values;
// u_hist is newest-first starting at u(k-1) with at least n_u + 2 values.
inline Decision iterative_law(const PartialDerivativeTable& table, std::span<const double> y_hist,
                              std::span<const double> u_hist, int k, double y_star, const Config& cfg) {
    mfac::validate(table);
    validate(cfg);
    const std::size_t ny_slots = table.y.size();
    const std::size_t nu_slots = table.u.size();
    if (nu_slots == 0) throw config_error("iterative law needs at least one input slot");
    if (y_hist.size() < ny_slots + 1 || u_hist.size() < nu_slots + 1)
        throw window_error("history too short: need " + std::to_string(ny_slots + 1) + " outputs and " +
                           std::to_string(nu_slots + 1) + " inputs");

    // Virtual trajectory, oldest first; seeded with the real tail and grown
    // one element per pass.
    std::vector<double> ys(y_hist.rbegin() + static_cast<std::ptrdiff_t>(y_hist.size() - (ny_slots + 1)), y_hist.rend());
    std::vector<double> us(u_hist.rbegin() + static_cast<std::ptrdiff_t>(u_hist.size() - (nu_slots + 1)), u_hist.rend());

    Decision d;
    d.diagnostics.iterations = cfg.n_iter;
    double first_pass_gain = 0.0;
    double first_pass_bracket = 0.0;

    for (int pass = 1; pass <= cfg.n_iter; ++pass) {
        const int t = k + pass - 1;  // virtual decision time
        OperatingPoint at;
        at.y.resize(ny_slots);
        at.u.resize(nu_slots);
        for (std::size_t i = 0; i < ny_slots; ++i) at.y[i] = ys[ys.size() - 2 - i];
        for (std::size_t j = 0; j < nu_slots; ++j) at.u[j] = us[us.size() - 1 - j];

        std::vector<double> gy(ny_slots), gu(nu_slots);
        for (std::size_t i = 0; i < ny_slots; ++i) gy[i] = table.y[i](1, at, t - 1);
        for (std::size_t j = 0; j < nu_slots; ++j) gu[j] = table.u[j](1, at, t - 1);

        double bracket = y_star - ys.back();
        for (std::size_t i = 0; i < ny_slots; ++i) bracket -= gy[i] * (ys[ys.size() - 1 - i] - ys[ys.size() - 2 - i]);
        for (std::size_t j = 1; j < nu_slots; ++j) bracket -= gu[j] * (us[us.size() - j] - us[us.size() - 1 - j]);

        const double gain = gu[0];
        if (cfg.lambda == 0.0 && std::abs(gain) < cfg.denominator_guard)
            throw degenerate_gain_error("input gain is too small to invert with zero penalty (pass " +
                                        std::to_string(pass) + ")");
        const double du = gain / (cfg.lambda + gain * gain) * bracket;
        us.push_back(us.back() + du);

        const double rolled = y_star - bracket + gain * du;  // first-order model one step ahead
        if (!std::isfinite(rolled) || std::abs(rolled) > cfg.iteration_guard)
            throw divergence_error("iterative law prediction left the guard band at pass " + std::to_string(pass));
        ys.push_back(rolled);
        d.diagnostics.iteration_errors.push_back(std::abs(y_star - rolled));
        if (pass == 1) {
            first_pass_gain = gain;
            first_pass_bracket = bracket;
        }
    }

    d.u = us.back();
    d.delta_u = d.u - u_hist[0];
    d.diagnostics.bracket = first_pass_bracket;
    d.diagnostics.denominator = cfg.lambda + first_pass_gain * first_pass_gain;
    // Prediction of the real next output: pass-1 gradient applied to the real
    // increments plus the net input change actually delivered.
    d.predicted_next_y = y_star - first_pass_bracket + first_pass_gain * d.delta_u;
    const double residual = first_pass_bracket - first_pass_gain * d.delta_u;
    d.diagnostics.cost = residual * residual + cfg.lambda * d.delta_u * d.delta_u;
    return d;
}

}  // namespace mfac::controller
