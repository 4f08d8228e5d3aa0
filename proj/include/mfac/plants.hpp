#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfac/edlm.hpp"
#include "mfac/errors.hpp"

namespace mfac::plants {

// A SISO lagged-difference map y(k+1) = f(y(k..k-n_y), u(k..k-n_u), k) with
// optional closed-form partials. Histories passed to step are newest-first:
// y_hist[0] = y(k), u_hist[0] = u(k); spans may be longer than the map needs.
struct Plant {
    std::string name;
    PseudoOrders true_orders;  // (n_y + 1, n_u + 1): argument counts, not a tuning choice
    std::function<double(std::span<const double> y_hist, std::span<const double> u_hist, int k)> step;
    PartialDerivativeTable partials;
    std::vector<int> truncation_y;  // Taylor order that reproduces each slot exactly
    std::vector<int> truncation_u;  // (the cosine slot is order 5, a documented approximation)
};

inline void validate(const Plant& p) {
    mfac::validate(p.true_orders);
    if (!p.step) throw config_error("plant has no step function");
    if (!p.partials.empty()) {
        mfac::validate(p.partials);
        if (p.partials.y.size() != static_cast<std::size_t>(p.true_orders.ly) ||
            p.partials.u.size() != static_cast<std::size_t>(p.true_orders.lu))
            throw config_error("partial table slots do not match the plant's argument counts");
        if (p.truncation_y.size() != p.partials.y.size() || p.truncation_u.size() != p.partials.u.size())
            throw config_error("truncation orders do not match the plant's argument counts");
    }
}

inline void check_history(const Plant& p, std::span<const double> y_hist, std::span<const double> u_hist) {
    if (y_hist.size() < static_cast<std::size_t>(p.true_orders.ly) ||
        u_hist.size() < static_cast<std::size_t>(p.true_orders.lu))
        throw window_error("plant history too short: need " + std::to_string(p.true_orders.ly) + " outputs and " +
                           std::to_string(p.true_orders.lu) + " inputs");
}

// First-order linear map whose homogeneous part flips sign at the switch
// step, with a different constant load on each side:
//
//     y(k+1) = -0.4 y(k) - 0.5 u(k) - 0.6 u(k-1) + d_before   (k <= switch)
//     y(k+1) = +0.4 y(k) + 0.5 u(k) + 0.6 u(k-1) + d_after    (k >  switch)
//
// The sign flip inverts the true input gain, which is what makes this the
// stress case for a gain estimator that is never reset.
inline Plant make_switching_linear(double d_before, double d_after, int switch_step = 350) {
    Plant p;
    p.name = "switching_linear";
    p.true_orders = {1, 2};
    p.step = [d_before, d_after, switch_step](std::span<const double> y, std::span<const double> u, int k) {
        const double s = (k <= switch_step) ? -1.0 : 1.0;
        const double d = (k <= switch_step) ? d_before : d_after;
        return s * (0.4 * y[0] + 0.5 * u[0] + 0.6 * u[1]) + d;
    };
    auto constant = [switch_step](double magnitude) {
        return [magnitude, switch_step](int order, const OperatingPoint&, int k) {
            if (order > 1) return 0.0;
            return (k <= switch_step) ? -magnitude : magnitude;
        };
    };
    p.partials.y = {constant(0.4)};
    p.partials.u = {constant(0.5), constant(0.6)};
    p.truncation_y = {1};
    p.truncation_u = {1, 1};
    return p;
}

// Fixed linear map y(k+1) = -0.8 y(k) - 0.5 u(k) - 0.2 u(k-1). Its incremental
// model is exact with the constant gains [-0.8, -0.5, -0.2], so it is the
// reference plant for every formula-versus-simulation cross-check. An optional
// constant load tests disturbance rejection without changing the gains.
inline Plant make_fixed_linear(double load = 0.0) {
    Plant p;
    p.name = "fixed_linear";
    p.true_orders = {1, 2};
    p.step = [load](std::span<const double> y, std::span<const double> u, int) {
        return -0.8 * y[0] - 0.5 * u[0] - 0.2 * u[1] + load;
    };
    auto constant = [](double value) {
        return [value](int order, const OperatingPoint&, int) { return order == 1 ? value : 0.0; };
    };
    p.partials.y = {constant(-0.8)};
    p.partials.u = {constant(-0.5), constant(-0.2)};
    p.truncation_y = {1};
    p.truncation_u = {1, 1};
    return p;
}

inline PGVector fixed_linear_pg() {
    return PGVector{{1, 2}, {-0.8, -0.5, -0.2}};
}

namespace detail {

// d^order/du^order of a u^p monomial at u: p!/(p-order)! u^(p-order).
inline double monomial_derivative(int p, double coeff, int order, double u) {
    if (order > p) return 0.0;
    double fall = coeff;
    for (int i = 0; i < order; ++i) fall *= static_cast<double>(p - i);
    return fall * std::pow(u, p - order);
}

// d^order/du^order of cos u: cycles through -sin, -cos, sin, cos.
inline double cosine_derivative(int order, double u) {
    switch (order % 4) {
        case 0: return std::cos(u);
        case 1: return -std::sin(u);
        case 2: return -std::cos(u);
        default: return std::sin(u);
    }
}

}  // namespace detail

// Polynomial map with one transcendental term:
//
//     y(k+1) = 0.2 y(k)^2 + 2 u(k) + u(k)^2 + 2 u(k-1)^5 + cos(u(k-1)) + u(k-2)^6.
//
// Every slot's Taylor series terminates except the cosine, whose order-5
// truncation carries a remainder below |du|^6 / 720. The u(k) slot's gain
// polynomial is 2 + 2 u(k-1) + du(k), the quartic-cost demo case.
inline Plant make_polynomial_cosine() {
    Plant p;
    p.name = "polynomial_cosine";
    p.true_orders = {1, 3};
    p.step = [](std::span<const double> y, std::span<const double> u, int) {
        return 0.2 * y[0] * y[0] + 2.0 * u[0] + u[0] * u[0] + 2.0 * std::pow(u[1], 5) + std::cos(u[1]) +
               std::pow(u[2], 6);
    };
    p.partials.y = {[](int order, const OperatingPoint& at, int) { return detail::monomial_derivative(2, 0.2, order, at.y[0]); }};
    p.partials.u = {
        [](int order, const OperatingPoint& at, int) {
            return detail::monomial_derivative(1, 2.0, order, at.u[0]) + detail::monomial_derivative(2, 1.0, order, at.u[0]);
        },
        [](int order, const OperatingPoint& at, int) {
            return detail::monomial_derivative(5, 2.0, order, at.u[1]) + detail::cosine_derivative(order, at.u[1]);
        },
        [](int order, const OperatingPoint& at, int) { return detail::monomial_derivative(6, 1.0, order, at.u[2]); },
    };
    p.truncation_y = {2};
    p.truncation_u = {2, 5, 6};
    return p;
}

// ---------------------------------------------------------------------------
// Reference trajectories. eval(t) returns the reference for step t+1, exactly
// as the piecewise definitions below are indexed; the harness asks for
// eval(k) when deciding u(k) and eval(k-1) when scoring y(k). Half-integers
// round away from zero (std::round), which decides where each stair switches.
// ---------------------------------------------------------------------------

struct Trajectory {
    enum class Kind { staircase, staircase_alternating, composite, power, square_wave };
    Kind kind = Kind::power;
    int exponent = 1;        // power
    double scale = 1.0;      // power
    double amplitude = 0.0;  // square_wave
    double offset = 0.0;     // square_wave
    int half_period = 50;    // square_wave
};

namespace detail {

inline double parity(int n) { return (n % 2 == 0) ? 1.0 : -1.0; }
inline int round_half_away(double x) { return static_cast<int>(std::round(x)); }

}  // namespace detail

inline double trajectory_eval(const Trajectory& t, int k) {
    switch (t.kind) {
        // Geometric staircase decaying toward zero, then a small square wave.
        case Trajectory::Kind::staircase:
            if (k <= 490) return std::pow(0.4, detail::round_half_away(k / 50.0));
            return 0.1 + 0.1 * detail::parity(detail::round_half_away(k / 50.0));
        // Same stair clock, but the first phase alternates +-0.4 instead of
        // decaying; kept for comparison runs, no shipped scenario uses it.
        case Trajectory::Kind::staircase_alternating:
            if (k <= 490) return 0.4 * detail::parity(detail::round_half_away(k / 50.0));
            return 0.1 + 0.1 * detail::parity(detail::round_half_away(k / 50.0));
        // Three superposed oscillations, then a square wave.
        case Trajectory::Kind::composite:
            if (k <= 350) return 0.5 * std::sin(k / 50.0) + 0.5 * std::cos(k / 3.0) + 0.5 * std::sin(k / 10.0);
            return 0.3 + 0.3 * detail::parity(detail::round_half_away(k / 50.0));
        // scale * k^n; n = 0 is a constant step, n = 1 a ramp of slope scale.
        case Trajectory::Kind::power:
            return t.scale * std::pow(static_cast<double>(k), static_cast<double>(t.exponent));
        case Trajectory::Kind::square_wave:
            return t.offset + t.amplitude * detail::parity(detail::round_half_away(static_cast<double>(k) / t.half_period));
    }
    throw config_error("unknown trajectory kind");
}

inline void validate(const Trajectory& t) {
    if (t.kind == Trajectory::Kind::power && t.exponent < 0) throw config_error("reference power must be >= 0");
    if (t.kind == Trajectory::Kind::square_wave && t.half_period < 1) throw config_error("half period must be >= 1");
}

inline Trajectory make_trajectory(const std::string& kind) {
    Trajectory t;
    if (kind == "staircase") t.kind = Trajectory::Kind::staircase;
    else if (kind == "staircase_alternating") t.kind = Trajectory::Kind::staircase_alternating;
    else if (kind == "composite") t.kind = Trajectory::Kind::composite;
    else if (kind == "power") t.kind = Trajectory::Kind::power;
    else if (kind == "square_wave") t.kind = Trajectory::Kind::square_wave;
    else throw config_error("unknown trajectory kind '" + kind + "'");
    return t;
}

}  // namespace mfac::plants
