#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfac/errors.hpp"

namespace mfac {

// Tap counts of the incremental model
//
//     dy(k+1) = phi_L(k)' * dH(k),
//     dH(k)   = [dy(k) .. dy(k-Ly+1), du(k) .. du(k-Lu+1)]'.
//
// Ly may be zero (no output taps); at least one input tap is required, since
// the law inverts the du(k) entry.
struct PseudoOrders {
    int ly = 0;
    int lu = 1;

    int total() const { return ly + lu; }
    bool operator==(const PseudoOrders&) const = default;
};

inline void validate(const PseudoOrders& o) {
    if (o.ly < 0) throw config_error("output tap count must be >= 0, got " + std::to_string(o.ly));
    if (o.lu < 1) throw config_error("input tap count must be >= 1, got " + std::to_string(o.lu));
}

// Pseudo-gradient vector phi_L = [phi_1 .. phi_{Ly} | phi_{Ly+1} .. phi_{Ly+Lu}].
// The first block multiplies output increments, the second input increments;
// phi[ly] (that is phi_{Ly+1}) is the direct gain from du(k) to dy(k+1).
struct PGVector {
    PseudoOrders orders;
    std::vector<double> phi;

    double gain() const { return phi[static_cast<std::size_t>(orders.ly)]; }
    double& gain() { return phi[static_cast<std::size_t>(orders.ly)]; }
};

inline void validate(const PGVector& pg) {
    validate(pg.orders);
    if (pg.phi.size() != static_cast<std::size_t>(pg.orders.total()))
        throw config_error("pseudo-gradient has " + std::to_string(pg.phi.size()) + " entries, orders require " +
                           std::to_string(pg.orders.total()));
    for (double v : pg.phi)
        if (!std::isfinite(v)) throw numeric_error("pseudo-gradient entry is not finite");
}

// One measurement window dH(k), newest increment first in both blocks.
struct IncrementWindow {
    std::vector<double> dy;  // dy(k), dy(k-1), ..., dy(k-Ly+1)
    std::vector<double> du;  // du(k), du(k-1), ..., du(k-Lu+1)

    double squared_norm() const {
        double s = 0.0;
        for (double v : dy) s += v * v;
        for (double v : du) s += v * v;
        return s;
    }
};

inline void check_window(const IncrementWindow& w, const PseudoOrders& o) {
    if (w.dy.size() != static_cast<std::size_t>(o.ly) || w.du.size() != static_cast<std::size_t>(o.lu))
        throw config_error("increment window is (" + std::to_string(w.dy.size()) + ", " + std::to_string(w.du.size()) +
                           ") taps, orders require (" + std::to_string(o.ly) + ", " + std::to_string(o.lu) + ")");
    for (double v : w.dy)
        if (!std::isfinite(v)) throw numeric_error("output increment is not finite");
    for (double v : w.du)
        if (!std::isfinite(v)) throw numeric_error("input increment is not finite");
}

// phi_L(k)' * dH(k): the model's one-step output increment.
inline double predict_increment(const PGVector& pg, const IncrementWindow& w) {
    validate(pg);
    check_window(w, pg.orders);
    double acc = 0.0;
    for (std::size_t i = 0; i < w.dy.size(); ++i) acc += pg.phi[i] * w.dy[i];
    for (std::size_t j = 0; j < w.du.size(); ++j) acc += pg.phi[static_cast<std::size_t>(pg.orders.ly) + j] * w.du[j];
    return acc;
}

// Argument values of a lagged-difference map y(k+1) = f(y(k..k-n_y), u(k..k-n_u))
// at one instant: y[i] holds the y(k-i) slot, u[j] the u(k-j) slot.
struct OperatingPoint {
    std::vector<double> y;
    std::vector<double> u;
};

// Closed-form partial derivatives of f, one evaluator per argument slot.
// eval(order, at, k) returns d^order f / d slot^order with every argument
// frozen at `at`; k is the time index, for plants whose coefficients switch
// over time. max_order 0 means any order is available.
struct PartialDerivativeTable {
    using Partial = std::function<double(int order, const OperatingPoint& at, int k)>;

    std::vector<Partial> y;
    std::vector<Partial> u;
    std::vector<int> max_order_y;
    std::vector<int> max_order_u;

    bool empty() const { return y.empty() && u.empty(); }
};

inline void validate(const PartialDerivativeTable& t) {
    if (!t.max_order_y.empty() && t.max_order_y.size() != t.y.size())
        throw config_error("per-slot order limits do not match the output slot count");
    if (!t.max_order_u.empty() && t.max_order_u.size() != t.u.size())
        throw config_error("per-slot order limits do not match the input slot count");
}

namespace detail {

inline int slot_max_order(const std::vector<int>& limits, std::size_t slot) {
    if (limits.empty()) return 0;
    return limits[slot];
}

}  // namespace detail

// Taylor coefficients of one argument slot around the operating point:
// c[m] = (1/(m+1)!) d^{m+1} f / d slot^{m+1}, m = 0 .. truncation-1.
// The slot's gain at increment d is then evaluate(c, d) = sum c[m] d^m, and
// gain * d is the slot's contribution to the predicted output increment.
inline std::vector<double> argument_taylor_coeffs(const PartialDerivativeTable::Partial& slot, const OperatingPoint& at,
                                                  int k, int truncation, int max_order = 0) {
    if (truncation < 1) throw config_error("Taylor truncation must be >= 1, got " + std::to_string(truncation));
    if (max_order > 0 && truncation > max_order)
        throw config_error("Taylor truncation " + std::to_string(truncation) + " exceeds the declared derivative order " +
                           std::to_string(max_order));
    std::vector<double> c(static_cast<std::size_t>(truncation));
    double factorial = 1.0;
    for (int m = 1; m <= truncation; ++m) {
        factorial *= m;
        const double d = slot(m, at, k);
        if (!std::isfinite(d)) throw numeric_error("partial derivative of order " + std::to_string(m) + " is not finite");
        c[static_cast<std::size_t>(m - 1)] = d / factorial;
    }
    return c;
}

namespace detail {

inline double eval_ascending(std::span<const double> c, double x) {
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
    return acc;
}

}  // namespace detail

// Pseudo-gradient of a known model, built slot by slot from truncated Taylor
// series at the operating point one step back:
//
//     phi_slot = sum_{m=1..N} (1/m!) d^m f / d slot^m * d_slot^{m-1}.
//
// With every increment zero this reduces to the plain gradient. `increments`
// pairs slot i of the y block with dy(k-i) and slot j of the u block with
// du(k-j); `at` is the argument vector at time k-1.
inline PGVector taylor_pg(const PartialDerivativeTable& table, const OperatingPoint& at, int k,
                          const IncrementWindow& increments, std::span<const int> truncation_y,
                          std::span<const int> truncation_u) {
    validate(table);
    if (table.y.size() != increments.dy.size() || table.u.size() != increments.du.size())
        throw config_error("increment window does not match the partial table's slot counts");
    if (truncation_y.size() != table.y.size() || truncation_u.size() != table.u.size())
        throw config_error("truncation orders do not match the partial table's slot counts");

    PGVector pg;
    pg.orders = {static_cast<int>(table.y.size()), static_cast<int>(table.u.size())};
    validate(pg.orders);
    pg.phi.reserve(static_cast<std::size_t>(pg.orders.total()));
    for (std::size_t i = 0; i < table.y.size(); ++i) {
        const auto c = argument_taylor_coeffs(table.y[i], at, k, truncation_y[i], detail::slot_max_order(table.max_order_y, i));
        pg.phi.push_back(detail::eval_ascending(c, increments.dy[i]));
    }
    for (std::size_t j = 0; j < table.u.size(); ++j) {
        const auto c = argument_taylor_coeffs(table.u[j], at, k, truncation_u[j], detail::slot_max_order(table.max_order_u, j));
        pg.phi.push_back(detail::eval_ascending(c, increments.du[j]));
    }
    validate(pg);
    return pg;
}

// Residual between the next output and the first-order reconstruction
//
//     v(k) = y(k+1) - sum_i df/dy_i * y(k-i) - sum_j df/du_j * u(k-j) - gamma(k),
//
// with all partials frozen at the argument vector of time k-1 and gamma(k)
// collecting the above-first-order Taylor remainder weighted by the current
// increments. Strictly linear maps reconstruct exactly, so v vanishes there;
// elsewhere v tracks the affine offset the through-origin model cannot carry.
//
// Histories are newest-first: y_hist[0] = y(k), u_hist[0] = u(k). The y block
// must reach back n_y + 2 values and the u block n_u + 2 so that both the
// time-k and the time-(k-1) argument vectors exist.
template <class PlantLike>
double unmodeled_dynamics(const PlantLike& plant, std::span<const double> y_hist, std::span<const double> u_hist, int k) {
    const std::size_t ny_slots = plant.partials.y.size();
    const std::size_t nu_slots = plant.partials.u.size();
    if (ny_slots == 0 && nu_slots == 0) throw config_error("plant has no partial derivative table");
    if (y_hist.size() < ny_slots + 1 || u_hist.size() < nu_slots + 1)
        throw window_error("history too short: need " + std::to_string(ny_slots + 1) + " outputs and " +
                           std::to_string(nu_slots + 1) + " inputs");

    OperatingPoint prev;
    prev.y.assign(y_hist.begin() + 1, y_hist.begin() + static_cast<std::ptrdiff_t>(ny_slots + 1));
    prev.u.assign(u_hist.begin() + 1, u_hist.begin() + static_cast<std::ptrdiff_t>(nu_slots + 1));

    IncrementWindow inc;
    inc.dy.resize(ny_slots);
    inc.du.resize(nu_slots);
    for (std::size_t i = 0; i < ny_slots; ++i) inc.dy[i] = y_hist[i] - y_hist[i + 1];
    for (std::size_t j = 0; j < nu_slots; ++j) inc.du[j] = u_hist[j] - u_hist[j + 1];

    const double y_next = plant.step(y_hist, u_hist, k);

    double reconstruction = 0.0;
    double gamma = 0.0;
    for (std::size_t i = 0; i < ny_slots; ++i) {
        const auto c = argument_taylor_coeffs(plant.partials.y[i], prev, k - 1, plant.truncation_y[i],
                                              detail::slot_max_order(plant.partials.max_order_y, i));
        reconstruction += c[0] * y_hist[i];
        gamma += (detail::eval_ascending(c, inc.dy[i]) - c[0]) * inc.dy[i];
    }
    for (std::size_t j = 0; j < nu_slots; ++j) {
        const auto c = argument_taylor_coeffs(plant.partials.u[j], prev, k - 1, plant.truncation_u[j],
                                              detail::slot_max_order(plant.partials.max_order_u, j));
        reconstruction += c[0] * u_hist[j];
        gamma += (detail::eval_ascending(c, inc.du[j]) - c[0]) * inc.du[j];
    }
    return y_next - reconstruction - gamma;
}

}  // namespace mfac
