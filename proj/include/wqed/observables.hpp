// observables.hpp: Reflection coefficient, dip analysis and line fitting

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "wqed/coupling.hpp"
#include "wqed/errors.hpp"
#include "wqed/liouvillian.hpp"
#include "wqed/solver.hpp"
#include "wqed/transmon.hpp"
#include "wqed/units.hpp"

namespace wqed {

struct ReflectionPoint {
    double omega_p{0.0}; // rad/ns
    cplx r{1.0, 0.0};
    bool has_phase{true};

    double magnitude() const { return std::abs(r); }
    double phase() const { return std::arg(r); }
    double frequency_GHz() const { return units::angular_to_ghz(omega_p); }
};

/// <sigma-_n> = tr(sigma-_n rho).
inline cplx expectation_lowering(const DensityMatrix& rho, std::size_t n, std::size_t atom_count)
{
    return (embed(sigma_minus(), n, atom_count) * rho).trace();
}

namespace detail {
inline std::size_t resolve_reference(const OperatingPoint& pt, std::optional<std::size_t> reference_atom)
{
    const std::size_t ref = reference_atom.value_or(pt.size() - 1);
    if (ref >= pt.size()) throw DimensionError("reference atom index out of range");
    return ref;
}
} // namespace detail

/// Complex reflection amplitude
///   r = 1 + i sum_m (2 eta_Nm gamma_m / Omega_N) cos(k_p x_m) <sigma-_m>,
/// where N is the reference atom whose Rabi frequency normalizes the input.
/// eta_Nm gamma_m reduces to pi alpha_Nm omega10_m, which stays finite when
/// beta_m = 0.
inline cplx reflection(const OperatingPoint& pt, const ProbeSpec& probe, const DensityMatrix& rho_ss,
                       std::optional<std::size_t> reference_atom = std::nullopt)
{
    const std::size_t ref = detail::resolve_reference(pt, reference_atom);
    const auto& s = pt.specs[ref];
    const double omega_ref = rabi_frequency(s.beta, pt.EJ_GHz[ref], s.EC_GHz, probe.V0());
    if (omega_ref == 0.0) {
        throw ZeroDriveError("reflection: reference atom '" + s.label + "' sees zero Rabi frequency");
    }
    const double kp = pt.wg.wavenumber(probe.omega());
    cplx sum{0.0, 0.0};
    for (std::size_t m = 0; m < pt.size(); ++m) {
        const double eta_gamma = units::pi * alpha(ref, m, pt) * pt.omega10[m];
        sum += 2.0 * eta_gamma / omega_ref * std::cos(kp * pt.specs[m].x_mm) * expectation_lowering(rho_ss, m, pt.size());
    }
    return 1.0 + cplx(0.0, 1.0) * sum;
}

/// Weak-probe limit of `reflection`: the single-excitation amplitudes obey
/// H_eff c = Omega cos(k_p x) with H_eff the non-Hermitian effective
/// Hamiltonian, so no density matrix is needed.
inline cplx linear_response_reflection(const OperatingPoint& pt, double omega_p, const CouplingMatrices& c,
                                       std::optional<std::size_t> reference_atom = std::nullopt)
{
    const std::size_t ref = detail::resolve_reference(pt, reference_atom);
    const auto n_atoms = static_cast<Eigen::Index>(pt.size());
    const double kp = pt.wg.wavenumber(omega_p);
    const CMatrix M = c.dissipator_matrix();
    CMatrix H(n_atoms, n_atoms);
    CVector drive(n_atoms);
    for (Eigen::Index n = 0; n < n_atoms; ++n) {
        const auto& s = pt.specs[static_cast<std::size_t>(n)];
        for (Eigen::Index m = 0; m < n_atoms; ++m) {
            if (n == m) {
                const double det = omega_p - pt.omega10[static_cast<std::size_t>(n)] - c.lamb_shifts(n);
                H(n, n) = cplx(-det, 0.0) - cplx(0.0, 1.0) * (M(n, n) + s.gamma_phi);
            } else {
                H(n, m) = cplx(c.delta_plus(n, m), -c.gamma_minus(n, m)) - cplx(0.0, 1.0) * M(n, m);
            }
        }
        drive(n) = rabi_frequency(s.beta, pt.EJ_GHz[static_cast<std::size_t>(n)], s.EC_GHz, 1.0) *
                   std::cos(kp * s.x_mm);
    }
    const auto& sr = pt.specs[ref];
    const double omega_ref = rabi_frequency(sr.beta, pt.EJ_GHz[ref], sr.EC_GHz, 1.0);
    if (omega_ref == 0.0) throw ZeroDriveError("linear_response_reflection: reference atom has beta = 0");
    const CVector amp = H.fullPivLu().solve(drive);
    cplx sum{0.0, 0.0};
    for (Eigen::Index m = 0; m < n_atoms; ++m) {
        const auto mi = static_cast<std::size_t>(m);
        const double eta_gamma = units::pi * alpha(ref, mi, pt) * pt.omega10[mi];
        sum += 2.0 * eta_gamma / omega_ref * std::cos(kp * pt.specs[mi].x_mm) * amp(m);
    }
    return 1.0 + cplx(0.0, 1.0) * sum;
}

/// Closed-form reflection of one driven two-level atom in front of the mirror.
///   gamma_eff : relaxation rate into the line (2 gamma_n cos^2(k x))
///   gamma_phi : pure dephasing
///   detuning  : omega_p - (shifted) atomic frequency
///   rabi      : drive amplitude seen by the atom (Omega cos(k_p x))
/// All in the same angular unit. With gamma = gamma_eff/2 + gamma_phi,
///   <sigma_z> = -gamma_eff (gamma^2 + d^2) / (gamma_eff (gamma^2 + d^2) + 4 rabi^2 gamma)
///   r = 1 + gamma_eff <sigma_z> / (gamma - i d).
inline cplx analytic_single_atom_reflection(double gamma_eff, double gamma_phi, double detuning, double rabi)
{
    if (gamma_eff < 0.0 || gamma_phi < 0.0) throw ConfigError("analytic reflection: rates must be >= 0");
    if (gamma_eff == 0.0) return {1.0, 0.0};
    const double gamma = 0.5 * gamma_eff + gamma_phi;
    const double lor = gamma * gamma + detuning * detuning;
    const double sz = -gamma_eff * lor / (gamma_eff * lor + 4.0 * rabi * rabi * gamma);
    return 1.0 + gamma_eff * sz / cplx(gamma, -detuning);
}

/// Total decoherence rate gamma = Gamma / 2 + gamma_phi (any consistent unit).
inline double total_decoherence(double gamma_eff, double gamma_phi) { return gamma_eff / 2.0 + gamma_phi; }

// ---------------------------------------------------------------- dips

struct DipReport {
    double center_GHz{0.0};
    double depth{0.0};      // 1 - |r|_min
    double fwhm_MHz{0.0};
    double prominence{0.0}; // height above the dip of the lower flanking maximum
    double min_abs_r{1.0};
    std::size_t index{0};   // grid index of the sampled minimum
};

struct DipOptions {
    double prominence{0.02};
};

namespace detail {
// Vertex of the parabola through three points.
inline std::pair<double, double> parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2)
{
    const double d01 = (y1 - y0) / (x1 - x0);
    const double d12 = (y2 - y1) / (x2 - x1);
    const double a = (d12 - d01) / (x2 - x0);
    if (!(a > 0.0)) return {x1, y1};
    const double b = d01 - a * (x0 + x1);
    const double xv = -b / (2.0 * a);
    if (xv < x0 || xv > x2) return {x1, y1};
    const double yv = y1 + (xv - x1) * (d01 + a * (xv - x0));
    return {xv, std::min(yv, y1)};
}
} // namespace detail

/// Local minima of |r| whose prominence reaches opts.prominence. Centers are
/// refined by a parabola through the minimum and its neighbours; the width is
/// measured at half depth (|r| = (1 + |r|min) / 2) by linear interpolation.
/// A side that never climbs back to half depth is mirrored from the other.
/// Sorted by frequency.
inline std::vector<DipReport> find_dips(const std::vector<ReflectionPoint>& trace, const DipOptions& opts = {})
{
    std::vector<DipReport> out;
    const std::size_t n = trace.size();
    if (n < 5) return out;
    std::vector<double> f(n), a(n);
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = trace[i].frequency_GHz();
        a[i] = trace[i].magnitude();
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(a[i] < a[i - 1] && a[i] <= a[i + 1])) continue;
        double left_max = a[i];
        for (std::size_t j = i; j-- > 0;) {
            if (a[j] < a[i]) break;
            left_max = std::max(left_max, a[j]);
        }
        double right_max = a[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            if (a[j] < a[i]) break;
            right_max = std::max(right_max, a[j]);
        }
        const double prom = std::min(left_max, right_max) - a[i];
        if (prom < opts.prominence) continue;

        DipReport d;
        d.index = i;
        d.prominence = prom;
        const auto [xv, yv] = detail::parabola_vertex(f[i - 1], a[i - 1], f[i], a[i], f[i + 1], a[i + 1]);
        d.center_GHz = xv;
        d.min_abs_r = yv;
        d.depth = std::clamp(1.0 - yv, 0.0, 1.0);

        const double half = 0.5 * (1.0 + yv);
        std::optional<double> lo, hi;
        for (std::size_t j = i; j-- > 0;) {
            if (a[j] >= half) {
                lo = f[j] + (half - a[j]) * (f[j + 1] - f[j]) / (a[j + 1] - a[j]);
                break;
            }
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            if (a[j] >= half) {
                hi = f[j - 1] + (half - a[j - 1]) * (f[j] - f[j - 1]) / (a[j] - a[j - 1]);
                break;
            }
        }
        double width;
        if (lo && hi) width = *hi - *lo;
        else if (lo) width = 2.0 * (xv - *lo);
        else if (hi) width = 2.0 * (*hi - xv);
        else width = f[n - 1] - f[0];
        d.fwhm_MHz = width * 1e3;
        out.push_back(d);
    }
    return out;
}

// Two deepest dips, ties broken towards lower frequency.
inline std::vector<DipReport> deepest_dips(std::vector<DipReport> dips, std::size_t count)
{
    std::stable_sort(dips.begin(), dips.end(), [](const DipReport& a, const DipReport& b) {
        if (a.depth != b.depth) return a.depth > b.depth;
        return a.center_GHz < b.center_GHz;
    });
    if (dips.size() > count) dips.resize(count);
    return dips;
}

struct SplittingReport {
    double splitting_GHz{0.0}; // 2 Delta / 2 pi
    double axis_value{0.0};    // sweep coordinate of the closest approach
    std::size_t column{0};
};

/// Minimum over the sweep axis of the separation between the two deepest dips.
inline SplittingReport extract_splitting(const std::vector<double>& axis,
                                         const std::vector<std::vector<DipReport>>& dips_per_column)
{
    if (axis.size() != dips_per_column.size()) throw DimensionError("extract_splitting: axis/column count mismatch");
    std::optional<SplittingReport> best;
    for (std::size_t c = 0; c < axis.size(); ++c) {
        if (dips_per_column[c].size() < 2) continue;
        const auto two = deepest_dips(dips_per_column[c], 2);
        const double sep = std::abs(two[0].center_GHz - two[1].center_GHz);
        if (!best || sep < best->splitting_GHz) best = SplittingReport{sep, axis[c], c};
    }
    if (!best) throw InsufficientDipsError("extract_splitting: no column shows two resolved dips");
    return *best;
}

// ---------------------------------------------------------------- fitting

struct FitOptions {
    enum class Mode { automatic, complex, magnitude };
    enum class Branch { overcoupled, undercoupled };

    Mode mode{Mode::automatic};
    // |r| alone cannot tell (Gamma, gamma_phi) from (2 gamma_phi, Gamma / 2);
    // pick which of the two equivalent solutions a magnitude fit reports.
    Branch branch{Branch::overcoupled};
    int max_evaluations{4000};
};

struct FitResult {
    double omega10_GHz{0.0};
    double Gamma_MHz{0.0};     // effective relaxation rate / 2 pi
    double gamma_phi_MHz{0.0}; // pure dephasing / 2 pi
    double residual_rms{0.0};
    bool used_phase{true};
    int evaluations{0};
    // magnitude fits only: the other parameter set with identical |r|
    std::optional<std::pair<double, double>> alternate;

    double gamma_MHz() const { return total_decoherence(Gamma_MHz, gamma_phi_MHz); }
};

/// Weak-probe single-atom model in MHz-cycle units: r = 1 - Gamma / (gamma - i d).
inline cplx single_atom_model(double f_GHz, double f0_GHz, double Gamma_MHz, double gamma_phi_MHz)
{
    const double d = (f_GHz - f0_GHz) * 1e3;
    return analytic_single_atom_reflection(std::abs(Gamma_MHz), std::abs(gamma_phi_MHz), d, 0.0);
}

namespace detail {

struct LineFunctor {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const std::vector<ReflectionPoint>* trace;
    double f_ref_GHz;
    bool complex_mode;
    int* evaluations;

    int inputs() const { return 3; }
    int values() const { return static_cast<int>(trace->size() * (complex_mode ? 2 : 1)); }

    // x = (center offset from f_ref in MHz, Gamma in MHz, gamma_phi in MHz)
    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const
    {
        ++*evaluations;
        const double f0 = f_ref_GHz + x(0) * 1e-3;
        const std::size_t n = trace->size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = (*trace)[i];
            const cplx model = single_atom_model(p.frequency_GHz(), f0, x(1), x(2));
            if (complex_mode) {
                fvec(static_cast<Eigen::Index>(2 * i)) = model.real() - p.r.real();
                fvec(static_cast<Eigen::Index>(2 * i + 1)) = model.imag() - p.r.imag();
            } else {
                fvec(static_cast<Eigen::Index>(i)) = std::abs(model) - std::abs(p.r);
            }
        }
        return 0;
    }
};

} // namespace detail

/// Least-squares fit of the single-atom model to a trace with one dip.
inline FitResult fit_single_atom(const std::vector<ReflectionPoint>& trace, const FitOptions& opts = {})
{
    if (trace.size() < 5) throw ConfigError("fit_single_atom: need at least 5 points");
    bool complex_mode = opts.mode == FitOptions::Mode::complex;
    if (opts.mode == FitOptions::Mode::automatic) {
        complex_mode = std::all_of(trace.begin(), trace.end(), [](const auto& p) { return p.has_phase; });
    }
    if (complex_mode && !std::all_of(trace.begin(), trace.end(), [](const auto& p) { return p.has_phase; })) {
        throw ConfigError("fit_single_atom: complex fit requested but the trace has no phase");
    }

    // start from the sampled minimum of |r|
    std::size_t imin = 0;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        if (trace[i].magnitude() < trace[imin].magnitude()) imin = i;
    }
    const double f_ref = trace[imin].frequency_GHz();
    const double amin = trace[imin].magnitude();
    const double half = amin + 0.5 * (1.0 - amin);
    double lo = trace.front().frequency_GHz(), hi = trace.back().frequency_GHz();
    for (std::size_t j = imin; j-- > 0;) {
        if (trace[j].magnitude() >= half) { lo = trace[j].frequency_GHz(); break; }
    }
    for (std::size_t j = imin + 1; j < trace.size(); ++j) {
        if (trace[j].magnitude() >= half) { hi = trace[j].frequency_GHz(); break; }
    }
    const double gamma0 = std::max(0.5 * (hi - lo) * 1e3, 1e-6);
    double Gamma0;
    if (complex_mode) {
        Gamma0 = gamma0 * (1.0 - trace[imin].r.real());
    } else {
        Gamma0 = gamma0 * (opts.branch == FitOptions::Branch::overcoupled ? 1.0 + amin : 1.0 - amin);
    }
    Gamma0 = std::clamp(Gamma0, 1e-6, 2.0 * gamma0);
    const double gphi0 = std::max(gamma0 - 0.5 * Gamma0, 0.05 * gamma0);

    int evaluations = 0;
    detail::LineFunctor functor{&trace, f_ref, complex_mode, &evaluations};
    Eigen::NumericalDiff<detail::LineFunctor> numdiff(functor);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::LineFunctor>> lm(numdiff);
    lm.parameters.maxfev = opts.max_evaluations;
    lm.parameters.xtol = 1e-15;
    lm.parameters.ftol = 1e-15;
    Eigen::VectorXd x(3);
    x << 0.0, Gamma0, gphi0;
    const auto status = lm.minimize(x);
    if (status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation ||
        status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !x.allFinite()) {
        throw ConvergenceError("fit_single_atom: no convergence after " + std::to_string(evaluations) +
                               " evaluations (status " + std::to_string(static_cast<int>(status)) + ")");
    }

    FitResult res;
    res.omega10_GHz = f_ref + x(0) * 1e-3;
    res.Gamma_MHz = std::abs(x(1));
    res.gamma_phi_MHz = std::abs(x(2));
    res.used_phase = complex_mode;
    res.evaluations = evaluations;
    Eigen::VectorXd fvec(functor.values());
    functor(x, fvec);
    res.residual_rms = std::sqrt(fvec.squaredNorm() / static_cast<double>(fvec.size()));

    if (!complex_mode) {
        // (Gamma, gamma_phi) and (2 gamma_phi, Gamma/2) give the same |r|
        std::pair<double, double> mirror{2.0 * res.gamma_phi_MHz, 0.5 * res.Gamma_MHz};
        const bool want_over = opts.branch == FitOptions::Branch::overcoupled;
        const bool is_over = res.Gamma_MHz >= 2.0 * res.gamma_phi_MHz;
        if (want_over != is_over) {
            res.alternate = std::pair{res.Gamma_MHz, res.gamma_phi_MHz};
            res.Gamma_MHz = mirror.first;
            res.gamma_phi_MHz = mirror.second;
        } else {
            res.alternate = mirror;
        }
    }
    return res;
}

} // namespace wqed
