// solver.hpp: Steady state and time evolution of the master equation

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "wqed/errors.hpp"
#include "wqed/liouvillian.hpp"

namespace wqed {

using DensityMatrix = CMatrix;

inline cplx trace(const CMatrix& m) { return m.trace(); }

/// 1/2 sum |eigenvalues| of the Hermitian part of (a - b).
inline double trace_distance(const CMatrix& a, const CMatrix& b)
{
    const CMatrix d = a - b;
    const CMatrix h = 0.5 * (d + d.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double min_eigenvalue(const DensityMatrix& rho)
{
    const CMatrix h = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline DensityMatrix ground_state(std::size_t atom_count)
{
    const Eigen::Index dim = register_dimension(atom_count);
    DensityMatrix rho = DensityMatrix::Zero(dim, dim);
    rho(0, 0) = 1.0;
    return rho;
}

// Row vector r with r . vec(rho) = tr(rho).
inline CVector trace_functional(Eigen::Index dim)
{
    CVector t = CVector::Zero(dim * dim);
    for (Eigen::Index i = 0; i < dim; ++i) t(i * (dim + 1)) = 1.0;
    return t;
}

struct SteadyStateOptions {
    // Pivots below this fraction of the largest one count as a zero
    // eigenvalue of the constrained system.
    double singular_threshold{1e-12};
};

/// Unique steady state of L. The first row of L is replaced by the trace
/// functional and the resulting system L' vec(rho) = e_0 is solved by
/// pivoted LU; a multidimensional kernel shows up as a rank deficiency.
inline DensityMatrix steady_state(const Superoperator& L, const SteadyStateOptions& opts = {})
{
    const Eigen::Index n = L.dimension();
    const auto dim = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
    if (dim * dim != n) throw DimensionError("steady_state: superoperator is not 4^N square");

    CMatrix A = L.matrix;
    A.row(0) = trace_functional(dim).transpose();
    CVector rhs = CVector::Zero(n);
    rhs(0) = 1.0;

    Eigen::FullPivLU<CMatrix> lu(A);
    lu.setThreshold(opts.singular_threshold);
    if (!lu.isInvertible()) {
        throw SingularSystemError("steady_state: the generator has a " + std::to_string(n - lu.rank() + 1) +
                                  "-dimensional kernel; the steady state is not unique");
    }
    const CVector x = lu.solve(rhs);
    DensityMatrix rho = devectorize(x);
    rho = 0.5 * (rho + rho.adjoint());
    rho /= rho.trace().real();
    return rho;
}

struct EvolveOptions {
    double rtol{1e-10};
    double atol{1e-12};
    double initial_step{0.0}; // ns; 0 picks one from ||L||
    double min_step{1e-14};   // ns
    long max_steps{10'000'000};
};

struct EvolveStats {
    long accepted{0};
    long rejected{0};
};

/// Dormand-Prince 5(4) integration of d vec(rho)/dt = L vec(rho) to time t (ns).
inline DensityMatrix time_evolve(const Superoperator& L, const DensityMatrix& rho0, double t,
                                 const EvolveOptions& opts = {}, EvolveStats* stats = nullptr)
{
    if (rho0.rows() * rho0.rows() != L.dimension() || rho0.rows() != rho0.cols()) {
        throw DimensionError("time_evolve: density matrix does not match the generator");
    }
    if (t < 0.0) throw ConfigError("time_evolve: t must be >= 0");
    if (t == 0.0) return rho0;

    // Dormand-Prince coefficients (the node values c_i are not needed for an
    // autonomous right-hand side)
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    const CMatrix& A = L.matrix;
    CVector y = vectorize(rho0);
    CVector k1 = A * y;
    CVector k2, k3, k4, k5, k6, k7, y_new, err;

    const double norm = std::max(A.cwiseAbs().rowwise().sum().maxCoeff(), 1e-300);
    double h = opts.initial_step > 0.0 ? opts.initial_step : std::min(t, 0.1 / norm);
    double time = 0.0;
    long steps = 0;
    EvolveStats local;

    while (time < t) {
        if (++steps > opts.max_steps) throw StepFailureError("time_evolve: step budget exhausted");
        const bool last = time + h >= t;
        if (last) h = t - time;

        k2 = A * (y + h * a21 * k1);
        k3 = A * (y + h * (a31 * k1 + a32 * k2));
        k4 = A * (y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = A * (y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = A * (y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = A * y_new;
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err_norm = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double scale = opts.atol + opts.rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
            err_norm = std::max(err_norm, std::abs(err(i)) / scale);
        }

        if (err_norm <= 1.0) {
            time = last ? t : time + h;
            y = y_new;
            k1 = k7;
            ++local.accepted;
        } else {
            ++local.rejected;
        }
        const double factor = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
        h *= factor;
        if (time < t && h < opts.min_step) {
            throw StepFailureError("time_evolve: step size underflow at t = " + std::to_string(time) + " ns");
        }
    }
    if (stats) *stats = local;
    DensityMatrix rho = devectorize(y);
    return rho;
}

} // namespace wqed
