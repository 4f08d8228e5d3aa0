#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mfac/errors.hpp"

// Small real-coefficient polynomial kit. Coefficients are stored ascending:
// c[0] + c[1] x + ... + c[n] x^n. Only what the control laws and the pole
// analysis need lives here; this is not a general polynomial class.
namespace mfac::poly {

inline double evaluate(std::span<const double> c, double x) {
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
    return acc;
}

inline std::complex<double> evaluate(std::span<const double> c, std::complex<double> x) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
    return acc;
}

inline std::vector<double> derivative(std::span<const double> c) {
    if (c.size() <= 1) return {};
    std::vector<double> d(c.size() - 1);
    for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = static_cast<double>(i) * c[i];
    return d;
}

inline std::vector<double> multiply(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return {};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

// Drops exact trailing zeros so the stored degree is the true degree.
inline std::vector<double> trimmed(std::vector<double> c) {
    while (!c.empty() && c.back() == 0.0) c.pop_back();
    return c;
}

// Roots via the Frobenius companion matrix of the monic normalization.
// Degree 0 (or empty) input has no roots. The leading coefficient must be
// nonzero; trim first.
inline std::vector<std::complex<double>> roots(std::span<const double> c) {
    for (double v : c)
        if (!std::isfinite(v)) throw numeric_error("polynomial coefficient is not finite");
    if (c.size() <= 1) return {};
    const std::size_t n = c.size() - 1;
    const double lead = c[n];
    if (lead == 0.0) throw config_error("leading polynomial coefficient is zero; trim before solving");

    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 1; i < n; ++i) companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) = -c[i] / lead;

    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw numeric_error("companion eigenvalue iteration failed");

    std::vector<std::complex<double>> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
    return out;
}

}  // namespace mfac::poly
