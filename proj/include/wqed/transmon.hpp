// transmon.hpp: Single-atom circuit parameters and derived quantities
//
// A transmon is described by its charging energy, the maximum Josephson
// energy of its SQUID, the coupling-capacitance ratio beta = Cc / C_sigma and
// its distance from the mirror. Everything else (transition frequency, rates,
// Rabi frequency) is derived here as a pure function of these records.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "wqed/errors.hpp"
#include "wqed/units.hpp"

namespace wqed {

struct TransmonSpec {
    std::string label;
    double EC_GHz{0.0};     // E_C / h
    double EJmax_GHz{0.0};  // max E_J / h at zero flux
    double beta{0.0};       // Cc / C_sigma, in [0, 1]
    double x_mm{0.0};       // distance from the mirror
    double gamma_phi{0.0};  // pure dephasing rate, rad/ns

    void validate() const
    {
        if (!(EC_GHz > 0.0)) throw ConfigError("transmon '" + label + "': EC must be > 0");
        if (!(EJmax_GHz > 0.0)) throw ConfigError("transmon '" + label + "': EJmax must be > 0");
        if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("transmon '" + label + "': beta must lie in [0, 1]");
        if (!(x_mm >= 0.0)) throw ConfigError("transmon '" + label + "': x must be >= 0");
        if (!(gamma_phi >= 0.0)) throw ConfigError("transmon '" + label + "': gamma_phi must be >= 0");
    }
};

// Semi-infinite line with an open (voltage-antinode) mirror at x = 0.
struct WaveguideSpec {
    double Z0_ohm{50.0};
    double v_mm_per_ns{89.48};

    void validate() const
    {
        if (!(Z0_ohm > 0.0)) throw ConfigError("waveguide: Z0 must be > 0");
        if (!(v_mm_per_ns > 0.0)) throw ConfigError("waveguide: v must be > 0");
    }

    double wavenumber(double omega) const { return omega / v_mm_per_ns; }
};

/// Traveling-wave amplitude convention: P = V0^2 / (2 Z0).
inline double power_to_voltage(double P_W, double Z0_ohm)
{
    if (P_W < 0.0) throw ConfigError("probe power must be >= 0");
    return std::sqrt(2.0 * Z0_ohm * P_W);
}

inline double voltage_to_power(double V0, double Z0_ohm) { return V0 * V0 / (2.0 * Z0_ohm); }

// Monochromatic coherent probe. Either the voltage amplitude or the power is
// authoritative; the other one is derived through the line impedance.
class ProbeSpec {
public:
    enum class Source { voltage, power };

    static ProbeSpec from_voltage(double omega, double V0, double Z0_ohm)
    {
        if (V0 < 0.0) throw ConfigError("probe voltage amplitude must be >= 0");
        return ProbeSpec(omega, V0, voltage_to_power(V0, Z0_ohm), Source::voltage);
    }

    static ProbeSpec from_power(double omega, double P_W, double Z0_ohm)
    {
        return ProbeSpec(omega, power_to_voltage(P_W, Z0_ohm), P_W, Source::power);
    }

    double omega() const { return omega_; }
    double V0() const { return V0_; }
    double power_W() const { return P_; }
    Source source() const { return source_; }

    ProbeSpec at_frequency(double omega) const
    {
        ProbeSpec p = *this;
        p.omega_ = omega;
        return p;
    }

private:
    ProbeSpec(double omega, double V0, double P, Source s) : omega_(omega), V0_(V0), P_(P), source_(s) {}

    double omega_;
    double V0_;
    double P_;
    Source source_;
};

// E_J(flux) = E_Jmax |cos(pi flux)|, flux in units of the flux quantum.
inline double josephson_energy(const TransmonSpec& spec, double flux)
{
    return spec.EJmax_GHz * std::abs(std::cos(units::pi * flux));
}

inline void check_transmon_regime(const TransmonSpec& spec, double EJ_GHz)
{
    if (!(EJ_GHz / spec.EC_GHz >= 1.0)) {
        throw RegimeError("transmon '" + spec.label + "': EJ/EC = " + std::to_string(EJ_GHz / spec.EC_GHz) +
                          " < 1, outside the transmon regime");
    }
}

/// omega_10 / 2pi in GHz: sqrt(8 EJ EC) - EC.
inline double transition_frequency_from_ej(double EJ_GHz, double EC_GHz)
{
    return std::sqrt(8.0 * EJ_GHz * EC_GHz) - EC_GHz;
}

/// Inverse of transition_frequency_from_ej.
inline double ej_for_frequency(double f_GHz, double EC_GHz)
{
    return (f_GHz + EC_GHz) * (f_GHz + EC_GHz) / (8.0 * EC_GHz);
}

inline double transition_frequency(const TransmonSpec& spec, double flux)
{
    const double EJ = josephson_energy(spec, flux);
    check_transmon_regime(spec, EJ);
    return transition_frequency_from_ej(EJ, spec.EC_GHz);
}

// EJmax that puts the transition frequency at `f_GHz` when biased at `flux`.
inline double ejmax_from_anchor(double f_GHz, double flux, double EC_GHz)
{
    const double c = std::abs(std::cos(units::pi * flux));
    if (!(c > 0.0)) throw ConfigError("anchor flux sits at a frustration point (|cos(pi flux)| = 0)");
    return ej_for_frequency(f_GHz, EC_GHz) / c;
}

/// Smallest flux in [0, 1/2) at which the atom sits at `target_GHz`.
inline double flux_for_frequency(const TransmonSpec& spec, double target_GHz)
{
    const double f_max = transition_frequency(spec, 0.0);
    if (target_GHz > f_max * (1.0 + 1e-15)) {
        throw UnreachableFrequencyError("transmon '" + spec.label + "': " + std::to_string(target_GHz) +
                                        " GHz exceeds the zero-flux maximum " + std::to_string(f_max) + " GHz");
    }
    if (target_GHz >= f_max) return 0.0;
    const double EJ = ej_for_frequency(target_GHz, spec.EC_GHz);
    check_transmon_regime(spec, EJ);
    const double ratio = std::min(1.0, EJ / spec.EJmax_GHz);
    double flux = std::acos(ratio) / units::pi;
    // polish against the forward map
    for (int it = 0; it < 3 && flux > 0.0; ++it) {
        const double s = std::sin(units::pi * flux);
        const double EJf = josephson_energy(spec, flux);
        const double f = transition_frequency_from_ej(EJf, spec.EC_GHz);
        // d f / d flux = -pi EJmax sin(pi flux) * 4 EC / sqrt(8 EJ EC)
        const double dfd = -units::pi * spec.EJmax_GHz * s * 4.0 * spec.EC_GHz / std::sqrt(8.0 * EJf * spec.EC_GHz);
        if (dfd == 0.0) break;
        flux -= (f - target_GHz) / dfd;
    }
    return std::max(0.0, flux);
}

/// (E_J / 8 E_C)^(1/4), the charge matrix-element factor of the 0-1 transition.
inline double charge_factor(double EJ_GHz, double EC_GHz) { return std::pow(EJ_GHz / (8.0 * EC_GHz), 0.25); }

// Dimensionless line coupling e^2 Z0 / h (= Z0 / R_K).
inline double line_coupling(const WaveguideSpec& wg)
{
    return units::elementary_charge * units::elementary_charge * wg.Z0_ohm / units::planck;
}

// Per-atom weight w with alpha_nm = w_n w_m:
//   w = beta (EJ / 8 EC)^(1/4) sqrt(2 e^2 Z0 / (pi h)).
// The rate scale is fixed so that pi alpha_nn omega_10 equals half of the
// measured antinode relaxation rate.
inline double radiative_weight(double beta, double EJ_GHz, double EC_GHz, const WaveguideSpec& wg)
{
    return beta * charge_factor(EJ_GHz, EC_GHz) * std::sqrt(2.0 * line_coupling(wg) / units::pi);
}

inline double radiative_weight(const TransmonSpec& spec, const WaveguideSpec& wg, double flux)
{
    const double EJ = josephson_energy(spec, flux);
    check_transmon_regime(spec, EJ);
    return radiative_weight(spec.beta, EJ, spec.EC_GHz, wg);
}

/// Mode coupling amplitude g(omega) in sqrt(rad/ns); pi g(omega_10)^2 is the bare decay rate.
inline double coupling_strength(const TransmonSpec& spec, const WaveguideSpec& wg, double omega, double flux)
{
    if (!(omega > 0.0)) throw ConfigError("coupling_strength: omega must be > 0");
    return radiative_weight(spec, wg, flux) * std::sqrt(omega);
}

/// Open-line (mirrorless) decay rate gamma_n = pi alpha_nn omega_10, rad/ns.
/// An atom at a mirror antinode relaxes at 2 gamma_n.
inline double bare_decay_rate(const TransmonSpec& spec, const WaveguideSpec& wg, double flux)
{
    const double w = radiative_weight(spec, wg, flux);
    const double omega10 = units::ghz_to_angular(transition_frequency(spec, flux));
    return units::pi * w * w * omega10;
}

// hbar Omega = 2 sqrt(2) e beta (EJ/8EC)^(1/4) V0, returned in rad/ns.
inline double rabi_frequency(double beta, double EJ_GHz, double EC_GHz, double V0)
{
    const double omega_si = 2.0 * std::sqrt(2.0) * units::elementary_charge * beta * charge_factor(EJ_GHz, EC_GHz) *
                            V0 / units::hbar;
    return units::per_second_to_per_ns(omega_si);
}

inline double rabi_frequency(const TransmonSpec& spec, const ProbeSpec& probe, double flux)
{
    const double EJ = josephson_energy(spec, flux);
    check_transmon_regime(spec, EJ);
    return rabi_frequency(spec.beta, EJ, spec.EC_GHz, probe.V0());
}

} // namespace wqed
