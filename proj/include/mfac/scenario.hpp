#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfac/controller.hpp"
#include "mfac/edlm.hpp"
#include "mfac/errors.hpp"
#include "mfac/estimator.hpp"
#include "mfac/plants.hpp"

// A scenario is the complete, serializable description of one closed-loop
// run: plant, reference, horizon, control law, gain source and initial
// histories. The file format is JSON with the top-level marker
// "schema": "mfac.scenario/1"; see the README for the field reference.
namespace mfac::scenario {

enum class ControlMode { one_step, iterative, polynomial_cost, constrained };
enum class PGSource { estimated, known, taylor };
enum class DegenerateFallback { hold, fail };

struct PlantSpec {
    std::string kind;  // switching_linear | fixed_linear | polynomial_cosine
    double d_before = 0.0;
    double d_after = 0.0;
    double load = 0.0;
    int switch_step = 350;
};

struct Scenario {
    std::string name;
    PlantSpec plant;
    plants::Trajectory trajectory;
    int horizon = 0;
    PseudoOrders orders;

    ControlMode mode = ControlMode::one_step;
    double lambda = 0.0;
    double denominator_guard = 1e-10;
    DegenerateFallback fallback = DegenerateFallback::hold;
    int n_iter = 3;
    double u_min = 0.0, u_max = 0.0;  // constrained mode only

    PGSource pg_source = PGSource::known;
    std::vector<double> initial_pg;
    double eta = 1.0, mu = 1.0;
    estimator::ResetPolicy reset = estimator::ResetPolicy::none;
    double reset_window_eps = 1e-6, reset_estimate_eps = 1e-6;
    int hold_steps = 0;  // taylor source: steps that keep the initial gains

    std::vector<double> y_init;  // values at and before k = 0, oldest first
    std::vector<double> u_init;
    double divergence_guard = 1e12;
};

inline plants::Plant build_plant(const PlantSpec& spec) {
    if (spec.kind == "switching_linear") return plants::make_switching_linear(spec.d_before, spec.d_after, spec.switch_step);
    if (spec.kind == "fixed_linear") return plants::make_fixed_linear(spec.load);
    if (spec.kind == "polynomial_cosine") return plants::make_polynomial_cosine();
    throw config_error("unknown plant kind '" + spec.kind + "'");
}

inline void validate(const Scenario& s) {
    if (s.horizon < 1) throw config_error("horizon must be >= 1");
    mfac::validate(s.orders);
    plants::validate(s.trajectory);
    if (!(s.lambda >= 0.0)) throw config_error("penalty weight must be >= 0");
    if (!(s.divergence_guard > 0.0)) throw config_error("divergence guard must be > 0");
    if (s.initial_pg.size() != static_cast<std::size_t>(s.orders.total()))
        throw config_error("initial gain vector has " + std::to_string(s.initial_pg.size()) + " entries, orders require " +
                           std::to_string(s.orders.total()));
    if (s.mode == ControlMode::constrained && !(s.u_min < s.u_max)) throw config_error("input box is empty");
    if (s.mode == ControlMode::iterative && s.n_iter < 1) throw config_error("iteration count must be >= 1");
    if ((s.mode == ControlMode::iterative || s.pg_source == PGSource::taylor) && s.plant.kind.empty())
        throw config_error("model-based gain source needs a plant kind");
    if (s.pg_source == PGSource::estimated) {
        estimator::Config cfg;
        cfg.eta = s.eta;
        cfg.mu = s.mu;
        cfg.initial = PGVector{s.orders, s.initial_pg};
        estimator::validate(cfg);  // warnings surface at run time, hard errors here
    }
    const plants::Plant plant = build_plant(s.plant);
    if (s.pg_source == PGSource::taylor || s.mode == ControlMode::iterative) {
        if (plant.partials.empty()) throw config_error("plant '" + s.plant.kind + "' has no partial derivative table");
        if (plant.true_orders != s.orders)
            throw config_error("model-based gains need orders matching the plant's argument counts (" +
                               std::to_string(plant.true_orders.ly) + ", " + std::to_string(plant.true_orders.lu) + ")");
    }
}

namespace detail {

using nlohmann::json;

inline const json& require(const json& j, const char* key, int /*unused*/ = 0) {
    auto it = j.find(key);
    if (it == j.end()) throw config_error(std::string("scenario is missing required field '") + key + "'");
    return *it;
}

template <class T>
inline T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    return it->get<T>();
}

inline ControlMode parse_mode(const std::string& s) {
    if (s == "one_step") return ControlMode::one_step;
    if (s == "iterative") return ControlMode::iterative;
    if (s == "polynomial_cost") return ControlMode::polynomial_cost;
    if (s == "constrained") return ControlMode::constrained;
    throw config_error("unknown control mode '" + s + "'");
}

inline PGSource parse_source(const std::string& s) {
    if (s == "estimated") return PGSource::estimated;
    if (s == "known") return PGSource::known;
    if (s == "taylor") return PGSource::taylor;
    throw config_error("unknown gain source '" + s + "'");
}

}  // namespace detail

inline Scenario from_json(const nlohmann::json& j) {
    using detail::get_or;
    using detail::require;

    if (get_or<std::string>(j, "schema", "") != "mfac.scenario/1")
        throw config_error("scenario schema marker must be \"mfac.scenario/1\"");

    Scenario s;
    s.name = get_or<std::string>(j, "name", "unnamed");

    const auto& plant = require(j, "plant");
    s.plant.kind = require(plant, "kind").get<std::string>();
    s.plant.d_before = get_or(plant, "d_before", 0.0);
    s.plant.d_after = get_or(plant, "d_after", 0.0);
    s.plant.load = get_or(plant, "load", 0.0);
    s.plant.switch_step = get_or(plant, "switch_step", 350);

    const auto& traj = require(j, "trajectory");
    s.trajectory = plants::make_trajectory(require(traj, "kind").get<std::string>());
    s.trajectory.exponent = get_or(traj, "exponent", 1);
    s.trajectory.scale = get_or(traj, "scale", 1.0);
    s.trajectory.amplitude = get_or(traj, "amplitude", 0.0);
    s.trajectory.offset = get_or(traj, "offset", 0.0);
    s.trajectory.half_period = get_or(traj, "half_period", 50);

    s.horizon = require(j, "horizon").get<int>();

    const auto& ctrl = require(j, "controller");
    s.mode = detail::parse_mode(require(ctrl, "mode").get<std::string>());
    s.lambda = require(ctrl, "lambda").get<double>();
    const auto& orders = require(ctrl, "orders");
    s.orders.ly = require(orders, "ly").get<int>();
    s.orders.lu = require(orders, "lu").get<int>();
    s.denominator_guard = get_or(ctrl, "denominator_guard", 1e-10);
    s.n_iter = get_or(ctrl, "n_iter", 3);
    s.u_min = get_or(ctrl, "u_min", 0.0);
    s.u_max = get_or(ctrl, "u_max", 0.0);
    const std::string fb = get_or<std::string>(ctrl, "fallback", "hold");
    if (fb == "hold") s.fallback = DegenerateFallback::hold;
    else if (fb == "fail") s.fallback = DegenerateFallback::fail;
    else throw config_error("unknown degenerate-gain fallback '" + fb + "'");

    const auto& pg = require(j, "pg_source");
    s.pg_source = detail::parse_source(require(pg, "kind").get<std::string>());
    s.initial_pg = require(pg, "initial").get<std::vector<double>>();
    s.eta = get_or(pg, "eta", 1.0);
    s.mu = get_or(pg, "mu", 1.0);
    const std::string reset = get_or<std::string>(pg, "reset", "none");
    if (reset == "none") s.reset = estimator::ResetPolicy::none;
    else if (reset == "norm_threshold") s.reset = estimator::ResetPolicy::norm_threshold;
    else throw config_error("unknown reset policy '" + reset + "'");
    s.reset_window_eps = get_or(pg, "reset_window_eps", 1e-6);
    s.reset_estimate_eps = get_or(pg, "reset_estimate_eps", 1e-6);
    s.hold_steps = get_or(pg, "hold_steps", 0);

    if (auto it = j.find("init"); it != j.end()) {
        s.y_init = get_or(*it, "y", std::vector<double>{});
        s.u_init = get_or(*it, "u", std::vector<double>{});
    }
    s.divergence_guard = get_or(j, "divergence_guard", 1e12);

    validate(s);
    return s;
}

inline Scenario load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open scenario file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("scenario file '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        return from_json(j);
    } catch (const config_error& e) {
        throw config_error("scenario file '" + path + "': " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw config_error("scenario file '" + path + "' has a mistyped field: " + e.what());
    }
}

}  // namespace mfac::scenario
