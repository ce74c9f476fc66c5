// coupling.hpp: Mirror-modified individual and collective rates
//
// For atoms at positions x_n in front of an open-boundary mirror the line
// mediates decay (gamma_nm) and coherent exchange (delta_nm). The kernel is
// evaluated at the frequency of the *second* index, so the raw matrices are
// not symmetric for detuned atoms; symmetrize() splits them into the
// symmetric/antisymmetric parts that enter the master equation.

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wqed/errors.hpp"
#include "wqed/transmon.hpp"
#include "wqed/units.hpp"

namespace wqed {

// Atoms frozen at given flux biases. Derived quantities are computed once.
struct OperatingPoint {
    std::vector<TransmonSpec> specs;
    std::vector<double> fluxes;
    WaveguideSpec wg;

    std::vector<double> EJ_GHz;    // E_J(flux) / h
    std::vector<double> omega10;   // rad/ns
    std::vector<double> k;         // omega10 / v, 1/mm
    std::vector<double> weight;    // alpha_nm = weight[n] * weight[m]

    std::size_t size() const { return specs.size(); }
};

inline OperatingPoint make_operating_point(std::vector<TransmonSpec> specs, std::vector<double> fluxes,
                                           const WaveguideSpec& wg)
{
    if (specs.size() != fluxes.size()) {
        throw DimensionError("operating point: " + std::to_string(specs.size()) + " atoms but " +
                             std::to_string(fluxes.size()) + " flux values");
    }
    wg.validate();
    OperatingPoint pt;
    pt.specs = std::move(specs);
    pt.fluxes = std::move(fluxes);
    pt.wg = wg;
    const std::size_t n_atoms = pt.specs.size();
    pt.EJ_GHz.resize(n_atoms);
    pt.omega10.resize(n_atoms);
    pt.k.resize(n_atoms);
    pt.weight.resize(n_atoms);
    for (std::size_t n = 0; n < n_atoms; ++n) {
        const auto& s = pt.specs[n];
        s.validate();
        pt.EJ_GHz[n] = josephson_energy(s, pt.fluxes[n]);
        check_transmon_regime(s, pt.EJ_GHz[n]);
        pt.omega10[n] = units::ghz_to_angular(transition_frequency_from_ej(pt.EJ_GHz[n], s.EC_GHz));
        if (!(pt.omega10[n] > 0.0)) throw RegimeError("transmon '" + s.label + "': non-positive transition frequency");
        pt.k[n] = wg.wavenumber(pt.omega10[n]);
        pt.weight[n] = radiative_weight(s.beta, pt.EJ_GHz[n], s.EC_GHz, wg);
    }
    return pt;
}

// Same as make_operating_point but with each atom placed at a target frequency.
inline OperatingPoint operating_point_at_frequencies(std::vector<TransmonSpec> specs,
                                                     const std::vector<double>& freqs_GHz,
                                                     const WaveguideSpec& wg)
{
    if (specs.size() != freqs_GHz.size()) {
        throw DimensionError("operating point: atom/frequency count mismatch");
    }
    std::vector<double> fluxes(specs.size());
    for (std::size_t n = 0; n < specs.size(); ++n) {
        specs[n].validate();
        fluxes[n] = flux_for_frequency(specs[n], freqs_GHz[n]);
    }
    return make_operating_point(std::move(specs), std::move(fluxes), wg);
}

struct CouplingMatrices {
    Eigen::MatrixXd gamma;        // gamma_nm
    Eigen::MatrixXd delta;        // Delta_nm
    Eigen::MatrixXd gamma_plus;   // symmetric
    Eigen::MatrixXd gamma_minus;  // antisymmetric
    Eigen::MatrixXd delta_plus;   // symmetric
    Eigen::MatrixXd delta_minus;  // antisymmetric
    Eigen::VectorXd lamb_shifts;  // Delta_nn

    // M = Gamma+ + i Delta-, the Hermitian coefficient matrix of the dissipator.
    Eigen::MatrixXcd dissipator_matrix() const
    {
        return gamma_plus.cast<std::complex<double>>() + std::complex<double>(0.0, 1.0) * delta_minus;
    }
};

namespace detail {
inline void check_index(const OperatingPoint& pt, std::size_t n)
{
    if (n >= pt.size()) throw DimensionError("atom index " + std::to_string(n) + " out of range");
}
} // namespace detail

/// alpha_nm = (2 beta_n beta_m e^2 Z0 / pi h) (EJ_n/8EC_n)^(1/4) (EJ_m/8EC_m)^(1/4).
inline double alpha(std::size_t n, std::size_t m, const OperatingPoint& pt)
{
    detail::check_index(pt, n);
    detail::check_index(pt, m);
    return pt.weight[n] * pt.weight[m];
}

inline double gamma_nm(std::size_t n, std::size_t m, const OperatingPoint& pt)
{
    const double pre = units::pi * alpha(n, m, pt) * pt.omega10[m] / 2.0;
    const double km = pt.k[m];
    const double xn = pt.specs[n].x_mm;
    const double xm = pt.specs[m].x_mm;
    return pre * (std::cos(km * (xn + xm)) + std::cos(km * std::abs(xn - xm)));
}

inline double delta_nm(std::size_t n, std::size_t m, const OperatingPoint& pt)
{
    const double pre = units::pi * alpha(n, m, pt) * pt.omega10[m] / 2.0;
    const double km = pt.k[m];
    const double xn = pt.specs[n].x_mm;
    const double xm = pt.specs[m].x_mm;
    return pre * (std::sin(km * (xn + xm)) + std::sin(km * std::abs(xn - xm)));
}

inline CouplingMatrices symmetrize(const OperatingPoint& pt)
{
    const auto n_atoms = static_cast<Eigen::Index>(pt.size());
    CouplingMatrices c;
    c.gamma.resize(n_atoms, n_atoms);
    c.delta.resize(n_atoms, n_atoms);
    for (Eigen::Index n = 0; n < n_atoms; ++n) {
        for (Eigen::Index m = 0; m < n_atoms; ++m) {
            c.gamma(n, m) = gamma_nm(static_cast<std::size_t>(n), static_cast<std::size_t>(m), pt);
            c.delta(n, m) = delta_nm(static_cast<std::size_t>(n), static_cast<std::size_t>(m), pt);
        }
    }
    c.gamma_plus = (c.gamma + c.gamma.transpose()) / 2.0;
    c.gamma_minus = (c.gamma - c.gamma.transpose()) / 2.0;
    c.delta_plus = (c.delta + c.delta.transpose()) / 2.0;
    c.delta_minus = (c.delta - c.delta.transpose()) / 2.0;
    c.lamb_shifts = c.delta.diagonal();
    return c;
}

/// Signed collective Lamb shift 2 Delta between atoms n and m, rad/ns:
///   Gamma0 { sin[w/v (x_n + x_m)] + sin[w/v |x_n - x_m|] },
/// with Gamma0 = sqrt(gamma_n(w) gamma_m(w)) built from open-line rates.
/// w is the mean of the two transition frequencies (exact at resonance).
inline double collective_lamb_shift(const OperatingPoint& pt, std::size_t n, std::size_t m)
{
    detail::check_index(pt, n);
    detail::check_index(pt, m);
    if (n == m) throw ConfigError("collective_lamb_shift needs two distinct atoms");
    const double w = 0.5 * (pt.omega10[n] + pt.omega10[m]);
    const double gn = units::pi * alpha(n, n, pt) * w;
    const double gm = units::pi * alpha(m, m, pt) * w;
    const double gamma0 = std::sqrt(gn * gm);
    const double kw = pt.wg.wavenumber(w);
    const double xn = pt.specs[n].x_mm;
    const double xm = pt.specs[m].x_mm;
    return gamma0 * (std::sin(kw * (xn + xm)) + std::sin(kw * std::abs(xn - xm)));
}

/// delta_n = omega_p - omega10_n - Delta_nn.
inline double probe_detuning(std::size_t n, const OperatingPoint& pt, double omega_p)
{
    detail::check_index(pt, n);
    return omega_p - pt.omega10[n] - delta_nm(n, n, pt);
}

inline double probe_detuning(std::size_t n, const OperatingPoint& pt, const ProbeSpec& probe)
{
    return probe_detuning(n, pt, probe.omega());
}

} // namespace wqed
