// oracles.hpp: Independent reference implementations used by the tests
//
// Nothing in here goes through the library's rate or generator code paths;
// the formulas are re-coded from SI constants and operator algebra.

#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "wqed/coupling.hpp"
#include "wqed/liouvillian.hpp"
#include "wqed/transmon.hpp"

namespace wqed::testing {

inline constexpr double kE = 1.602176634e-19;
inline constexpr double kH = 6.62607015e-34;
inline constexpr double kPi = 3.14159265358979323846;

// Velocity calibrated from the first node (m/s) and the qubit separation (mm).
inline constexpr double kVelocity = 0.8948e8;
inline constexpr double kLength_mm = 33.0;

// Zero-flux frequency used to derive EJmax for the fixtures; any value above
// the operating points works since rates only depend on omega_10 and EC.
inline constexpr double kMaxFrequency_GHz = 9.0;

inline WaveguideSpec line() { return WaveguideSpec{50.0, kVelocity * 1e-6}; }

inline TransmonSpec make_atom(const char* label, double EC, double beta, double x_mm, double gphi_MHz)
{
    TransmonSpec s;
    s.label = label;
    s.EC_GHz = EC;
    s.EJmax_GHz = ej_for_frequency(kMaxFrequency_GHz, EC);
    s.beta = beta;
    s.x_mm = x_mm;
    s.gamma_phi = 2.0 * kPi * gphi_MHz * 1e-3;
    return s;
}

// Open-line rate in rad/ns from SI constants:
//   alpha = 2 beta^2 e^2 Z0 / (pi h) sqrt(EJ / 8 EC),  gamma = pi alpha omega.
inline double si_bare_rate(double beta, double EC_GHz, double f_GHz, double Z0)
{
    const double EJ = (f_GHz + EC_GHz) * (f_GHz + EC_GHz) / (8.0 * EC_GHz);
    const double alpha = 2.0 * beta * beta * kE * kE * Z0 / (kPi * kH) * std::sqrt(EJ / (8.0 * EC_GHz));
    const double omega_si = 2.0 * kPi * f_GHz * 1e9;
    return kPi * alpha * omega_si * 1e-9;
}

inline double si_cross_alpha(double b1, double EC1, double f1, double b2, double EC2, double f2, double Z0)
{
    const double EJ1 = (f1 + EC1) * (f1 + EC1) / (8.0 * EC1);
    const double EJ2 = (f2 + EC2) * (f2 + EC2) / (8.0 * EC2);
    return 2.0 * b1 * b2 * kE * kE * Z0 / (kPi * kH) * std::pow(EJ1 / (8.0 * EC1), 0.25) *
           std::pow(EJ2 / (8.0 * EC2), 0.25);
}

/// Master-equation right-hand side evaluated directly on a matrix rho:
/// commutators, anticommutators and sandwiches, no vectorization.
inline CMatrix master_equation_rhs(const OperatingPoint& pt, const ProbeSpec& probe, const CouplingMatrices& c,
                                   const CMatrix& rho)
{
    using C = std::complex<double>;
    const C I(0.0, 1.0);
    const std::size_t N = pt.size();
    std::vector<CMatrix> sm(N), sp(N), sx(N);
    for (std::size_t n = 0; n < N; ++n) {
        sm[n] = embed(sigma_minus(), n, N);
        sp[n] = embed(sigma_plus(), n, N);
        sx[n] = sp[n] + sm[n];
    }
    auto comm = [](const CMatrix& a, const CMatrix& b) -> CMatrix { return a * b - b * a; };
    const double kp = probe.omega() / pt.wg.v_mm_per_ns;
    CMatrix out = CMatrix::Zero(rho.rows(), rho.cols());
    for (std::size_t n = 0; n < N; ++n) {
        const auto ni = static_cast<Eigen::Index>(n);
        const double delta = probe.omega() - pt.omega10[n] - c.delta(ni, ni);
        out += I * delta * comm(sp[n] * sm[n], rho);
        const auto& s = pt.specs[n];
        const double EJ = pt.EJ_GHz[n];
        const double omega_si = 2.0 * std::sqrt(2.0) * kE * s.beta * std::pow(EJ / (8.0 * s.EC_GHz), 0.25) *
                                probe.V0() / (kH / (2.0 * kPi));
        out += I * (omega_si * 1e-9) * std::cos(kp * s.x_mm) * comm(sx[n], rho);
    }
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t m = 0; m < N; ++m) {
            const auto ni = static_cast<Eigen::Index>(n);
            const auto mi = static_cast<Eigen::Index>(m);
            const CMatrix A = sp[n] * sm[m];
            if (n != m) {
                out += -I * (c.delta_plus(ni, mi) - I * c.gamma_minus(ni, mi)) * comm(A, rho);
            }
            const C coeff = c.gamma_plus(ni, mi) + I * c.delta_minus(ni, mi);
            out += coeff * (2.0 * sm[m] * rho * sp[n] - A * rho - rho * A);
        }
    }
    for (std::size_t n = 0; n < N; ++n) {
        const CMatrix P = sp[n] * sm[n];
        out += pt.specs[n].gamma_phi * (2.0 * P * rho * P - P * rho - rho * P);
    }
    return out;
}

inline CMatrix random_density_matrix(Eigen::Index dim, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    CMatrix a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = {g(rng), g(rng)};
    CMatrix rho = a * a.adjoint();
    return rho / rho.trace().real();
}

// Randomized two-atom operating point around 4-6 GHz, x in [0, 60] mm.
inline OperatingPoint random_pair(std::mt19937_64& rng, bool equal_frequencies = false, double min_gphi_MHz = 0.0)
{
    std::uniform_real_distribution<double> uf(4.0, 6.0), ub(0.2, 0.9), ux(0.0, 60.0), ug(min_gphi_MHz, 5.0),
        uec(0.25, 0.45);
    auto a = make_atom("A", uec(rng), ub(rng), ux(rng), ug(rng));
    auto b = make_atom("B", uec(rng), ub(rng), ux(rng), ug(rng));
    const double fa = uf(rng);
    const double fb = equal_frequencies ? fa : uf(rng);
    return operating_point_at_frequencies({a, b}, {fa, fb}, line());
}

} // namespace wqed::testing
