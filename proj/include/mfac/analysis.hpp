#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mfac/edlm.hpp"
#include "mfac/errors.hpp"
#include "mfac/polynomial.hpp"

// Frozen-gain closed-loop analysis: treat the pseudo-gradient as constant,
// close the loop formed by the incremental model and the one-step law, and
// study the characteristic polynomial and steady-state error limits.
namespace mfac::analysis {

// T(q) with q = z^{-1}, stored ascending in q with exact trailing zeros
// trimmed (a zero penalty weight drops the highest terms). The constant
// coefficient is always lambda + gain^2.
struct ClosedLoopPolynomial {
    std::vector<double> c;
    double lambda = 0.0;
    PseudoOrders orders;

    int degree() const { return static_cast<int>(c.size()) - 1; }
};

// Characteristic polynomial of the loop with frozen gains:
//
//     T(q) = lambda (1 - q) (1 - q P_y(q)) + gain * P_u(q),
//     P_y(q) = phi_1 + phi_2 q + ... + phi_Ly q^{Ly-1},
//     P_u(q) = phi_{Ly+1} + ... + phi_{Ly+Lu} q^{Lu-1}.
inline ClosedLoopPolynomial build_T(const PGVector& pg, double lambda) {
    mfac::validate(pg);
    if (!(lambda >= 0.0)) throw config_error("penalty weight must be >= 0");

    const std::size_t ly = static_cast<std::size_t>(pg.orders.ly);
    const std::size_t lu = static_cast<std::size_t>(pg.orders.lu);

    // a(q) = 1 - q P_y(q)
    std::vector<double> a(ly + 1, 0.0);
    a[0] = 1.0;
    for (std::size_t i = 0; i < ly; ++i) a[i + 1] = -pg.phi[i];
    // b(q) = (1 - q) a(q)
    std::vector<double> b(a.size() + 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        b[i] += a[i];
        b[i + 1] -= a[i];
    }

    std::vector<double> t(std::max(b.size(), lu), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) t[i] = lambda * b[i];
    const double gain = pg.gain();
    for (std::size_t j = 0; j < lu; ++j) t[j] += gain * pg.phi[ly + j];

    ClosedLoopPolynomial T;
    T.c = poly::trimmed(std::move(t));
    T.lambda = lambda;
    T.orders = pg.orders;
    return T;
}

enum class StabilityVerdict { stable, marginal, unstable };

inline const char* to_string(StabilityVerdict v) {
    switch (v) {
        case StabilityVerdict::stable: return "stable";
        case StabilityVerdict::marginal: return "marginal";
        case StabilityVerdict::unstable: return "unstable";
    }
    return "unknown";
}

struct StabilityReport {
    std::vector<std::complex<double>> roots;  // in the z plane
    double spectral_radius = 0.0;
    StabilityVerdict verdict = StabilityVerdict::stable;
    double max_residual = 0.0;  // max |T(root)|, sanity measure of the solve
};

// Roots of z^d T(z^{-1}) through the companion matrix. A degree-0 polynomial
// has no poles and is reported stable. Verdicts use a +-band around the unit
// circle so a radius within floating noise of 1 is not misclassified.
inline StabilityReport poles(const ClosedLoopPolynomial& T, double marginal_band = 1e-3) {
    if (T.c.empty()) throw config_error("characteristic polynomial is identically zero");
    if (!(marginal_band >= 0.0)) throw config_error("marginal band must be >= 0");

    // Ascending in z: z^d T(z^{-1}) = c[d] + c[d-1] z + ... + c[0] z^d.
    std::vector<double> in_z(T.c.rbegin(), T.c.rend());

    StabilityReport report;
    report.roots = poly::roots(in_z);
    for (const auto& z : report.roots) {
        report.spectral_radius = std::max(report.spectral_radius, std::abs(z));
        report.max_residual = std::max(report.max_residual, std::abs(poly::evaluate(in_z, z)));
    }
    if (report.spectral_radius < 1.0 - marginal_band)
        report.verdict = StabilityVerdict::stable;
    else if (report.spectral_radius > 1.0 + marginal_band)
        report.verdict = StabilityVerdict::unstable;
    else
        report.verdict = StabilityVerdict::marginal;
    return report;
}

// Steady-state tracking error of the frozen-gain loop on a ramp reference
// with sample time ts:
//
//     e_inf = lambda ts (1 - sum_{i<=Ly} phi_i) / (gain * sum_{i>Ly} phi_i).
//
// Zero penalty gives exact ramp tracking; otherwise the offset scales
// linearly with lambda.
inline double static_error_ramp(const PGVector& pg, double lambda, double ts) {
    mfac::validate(pg);
    if (!(lambda >= 0.0)) throw config_error("penalty weight must be >= 0");
    if (!(ts > 0.0)) throw config_error("sample time must be > 0");
    if (lambda == 0.0) return 0.0;

    const std::size_t ly = static_cast<std::size_t>(pg.orders.ly);
    double y_sum = 0.0;
    for (std::size_t i = 0; i < ly; ++i) y_sum += pg.phi[i];
    double u_sum = 0.0;
    for (std::size_t j = ly; j < pg.phi.size(); ++j) u_sum += pg.phi[j];

    const double denom = pg.gain() * u_sum;
    if (denom == 0.0) throw degenerate_plant_error("input-gain sum vanishes; ramp error limit is undefined");
    return lambda * ts * (1.0 - y_sum) / denom;
}

struct PowerErrorResult {
    enum class Kind { zero, finite, divergent };
    Kind kind = Kind::zero;
    double value = 0.0;  // meaningful only when kind == finite (or zero)
};

// Steady-state error against a k^n reference. Zero penalty tracks any power
// exactly; with a positive penalty only the ramp (n = 1) settles to a finite
// offset (the unit-sample-time ramp limit) and every higher power runs away.
inline PowerErrorResult static_error_power(const PGVector& pg, int n, double lambda) {
    mfac::validate(pg);
    if (n < 1) throw config_error("reference power must be >= 1, got " + std::to_string(n));
    if (!(lambda >= 0.0)) throw config_error("penalty weight must be >= 0");

    PowerErrorResult r;
    if (lambda == 0.0) {
        r.kind = PowerErrorResult::Kind::zero;
        r.value = 0.0;
    } else if (n == 1) {
        r.kind = PowerErrorResult::Kind::finite;
        r.value = static_error_ramp(pg, lambda, 1.0);
    } else {
        r.kind = PowerErrorResult::Kind::divergent;
        r.value = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

struct SweepRow {
    double lambda = 0.0;
    double spectral_radius = 0.0;
    StabilityVerdict verdict = StabilityVerdict::stable;
    double ramp_error = 0.0;
    bool ramp_error_defined = true;
};

// Pole radius, verdict and predicted ramp offset across a penalty grid. A
// degenerate ramp denominator flags the row instead of aborting the sweep.
inline std::vector<SweepRow> lambda_sweep(const PGVector& pg, std::span<const double> grid, double ts = 1.0) {
    mfac::validate(pg);
    if (grid.empty()) throw config_error("penalty grid is empty");
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (double lambda : grid) {
        SweepRow row;
        row.lambda = lambda;
        const StabilityReport report = poles(build_T(pg, lambda));
        row.spectral_radius = report.spectral_radius;
        row.verdict = report.verdict;
        try {
            row.ramp_error = static_error_ramp(pg, lambda, ts);
        } catch (const degenerate_plant_error&) {
            row.ramp_error = std::numeric_limits<double>::quiet_NaN();
            row.ramp_error_defined = false;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mfac::analysis
