#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mfac/edlm.hpp"
#include "mfac/errors.hpp"

namespace mfac::estimator {

// What to do when the regressor carries no information. `none` is the
// default on purpose: the estimate keeps whatever sign and magnitude it has
// learned, and the update simply stalls while the window norm is zero.
// `norm_threshold` restores the initial estimate whenever the window norm or
// the estimate norm falls below its threshold. There is deliberately no
// sign-based reset of the input gain; the closed loop is expected to cope
// with a gain estimate whose sign tracks the plant, including sign flips.
enum class ResetPolicy { none, norm_threshold };

struct Config {
    double eta = 1.0;  // step gain; (0, 2] guarantees the error norm cannot grow
    double mu = 1.0;   // denominator regularizer, > 0
    ResetPolicy reset = ResetPolicy::none;
    double reset_window_eps = 1e-6;    // ||dH|| threshold, norm_threshold only
    double reset_estimate_eps = 1e-6;  // ||phi_hat|| threshold, norm_threshold only
    PGVector initial;
};

// Throws on hard violations, returns human-readable warnings for settings
// that are accepted but forfeit a guarantee (the caller decides where to log).
inline std::vector<std::string> validate(const Config& cfg) {
    mfac::validate(cfg.initial);
    if (!(cfg.eta > 0.0)) throw config_error("estimator step gain must be > 0");
    if (!(cfg.mu > 0.0)) throw config_error("estimator regularizer must be > 0");
    if (cfg.reset == ResetPolicy::norm_threshold) {
        if (!(cfg.reset_window_eps >= 0.0) || !(cfg.reset_estimate_eps >= 0.0))
            throw config_error("reset thresholds must be >= 0");
    }
    std::vector<std::string> warnings;
    if (cfg.eta > 2.0)
        warnings.push_back("estimator step gain " + std::to_string(cfg.eta) +
                           " exceeds 2; the parameter-error norm may grow between steps");
    return warnings;
}

struct State {
    PGVector estimate;
    double last_error = 0.0;  // a-priori prediction error of the latest update
    bool last_reset = false;  // true when the latest update triggered a reset
};

inline State initial_state(const Config& cfg) {
    State s;
    s.estimate = cfg.initial;
    return s;
}

namespace detail {

inline double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace detail

// Projection update. `window` is the regressor dH(k-1) that produced the
// observed increment dy(k):
//
//     phi(k) = phi(k-1) + eta * dH(k-1) * (dy(k) - phi(k-1)' dH(k-1))
//                          / (mu + ||dH(k-1)||^2).
//
// Pure: returns the successor state, never mutates the argument.
inline State update(const State& state, double observed_dy, const IncrementWindow& window, const Config& cfg) {
    if (!std::isfinite(observed_dy)) throw numeric_error("observed output increment is not finite");
    check_window(window, state.estimate.orders);

    const double error = observed_dy - predict_increment(state.estimate, window);
    const double scale = cfg.eta * error / (cfg.mu + window.squared_norm());

    State next;
    next.estimate = state.estimate;
    next.last_error = error;
    const int ly = state.estimate.orders.ly;
    for (std::size_t i = 0; i < window.dy.size(); ++i) next.estimate.phi[i] += scale * window.dy[i];
    for (std::size_t j = 0; j < window.du.size(); ++j) next.estimate.phi[static_cast<std::size_t>(ly) + j] += scale * window.du[j];

    if (cfg.reset == ResetPolicy::norm_threshold) {
        const double window_norm = std::sqrt(window.squared_norm());
        if (window_norm <= cfg.reset_window_eps || detail::norm(next.estimate.phi) <= cfg.reset_estimate_eps) {
            next.estimate = cfg.initial;
            next.last_reset = true;
        }
    }
    return next;
}

}  // namespace mfac::estimator
