// liouvillian.hpp: Interaction-picture master-equation generator
//
// Register convention: atom 0 is the leftmost (most significant) tensor
// factor; single-atom basis is {|0> = ground, |1> = excited}, so
// sigma_minus = |0><1|. Density matrices are vectorized by stacking columns,
// which gives vec(A rho B) = (B^T kron A) vec(rho).

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wqed/coupling.hpp"
#include "wqed/errors.hpp"
#include "wqed/transmon.hpp"

namespace wqed {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr std::size_t max_atoms = 8;

inline const Eigen::Matrix2cd& sigma_minus()
{
    static const Eigen::Matrix2cd m = (Eigen::Matrix2cd() << 0.0, 1.0, 0.0, 0.0).finished();
    return m;
}

inline const Eigen::Matrix2cd& sigma_plus()
{
    static const Eigen::Matrix2cd m = (Eigen::Matrix2cd() << 0.0, 0.0, 1.0, 0.0).finished();
    return m;
}

// sigma_plus sigma_minus = |1><1|
inline const Eigen::Matrix2cd& excited_projector()
{
    static const Eigen::Matrix2cd m = (Eigen::Matrix2cd() << 0.0, 0.0, 0.0, 1.0).finished();
    return m;
}

// sigma_x = sigma_plus + sigma_minus
inline const Eigen::Matrix2cd& sigma_x()
{
    static const Eigen::Matrix2cd m = (Eigen::Matrix2cd() << 0.0, 1.0, 1.0, 0.0).finished();
    return m;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b)
{
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline Eigen::Index register_dimension(std::size_t atom_count)
{
    if (atom_count == 0) throw DimensionError("register needs at least one atom");
    if (atom_count > max_atoms) {
        throw DimensionError("register of " + std::to_string(atom_count) + " atoms exceeds the capacity of " +
                             std::to_string(max_atoms));
    }
    return Eigen::Index{1} << atom_count;
}

/// Single-atom operator `op` acting on atom n of an N-atom register.
inline CMatrix embed(const Eigen::Matrix2cd& op, std::size_t n, std::size_t atom_count)
{
    const Eigen::Index dim = register_dimension(atom_count);
    if (n >= atom_count) {
        throw DimensionError("embed: atom index " + std::to_string(n) + " out of range for " +
                             std::to_string(atom_count) + " atoms");
    }
    const Eigen::Index left = Eigen::Index{1} << n;
    const Eigen::Index right = dim / (2 * left);
    CMatrix out = kron(CMatrix::Identity(left, left), CMatrix(op));
    return kron(out, CMatrix::Identity(right, right));
}

inline CVector vectorize(const CMatrix& rho)
{
    if (rho.rows() != rho.cols()) throw DimensionError("vectorize: matrix is not square");
    return Eigen::Map<const CVector>(rho.data(), rho.size());
}

inline CMatrix devectorize(const CVector& v)
{
    const auto dim = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (dim * dim != v.size()) throw DimensionError("devectorize: length is not a perfect square");
    return Eigen::Map<const CMatrix>(v.data(), dim, dim);
}

struct Superoperator {
    enum class Vectorization { column_stacking };

    CMatrix matrix;
    std::size_t atom_count{0};
    Vectorization convention{Vectorization::column_stacking};

    Eigen::Index dimension() const { return matrix.rows(); }
    CVector apply(const CVector& v) const { return matrix * v; }
};

struct GeneratorOptions {
    // Extra individual relaxation (rad/ns) on every atom; lifts degenerate
    // steady states of fully decoupled atoms. Zero means the bare model.
    double extra_relaxation{0.0};
};

// Coherent part of the generator in Hamiltonian form:
//   H = -sum_n delta_n P_n - sum_n Omega_n cos(k_p x_n) sigma^x_n
//       + sum_{n != m} (Delta+_nm - i Gamma-_nm) sigma+_n sigma-_m
inline CMatrix coherent_hamiltonian(const OperatingPoint& pt, const ProbeSpec& probe, const CouplingMatrices& c)
{
    const std::size_t n_atoms = pt.size();
    const Eigen::Index dim = register_dimension(n_atoms);
    if (static_cast<std::size_t>(c.gamma.rows()) != n_atoms) {
        throw DimensionError("coupling matrices do not match the operating point");
    }
    const double kp = pt.wg.wavenumber(probe.omega());
    CMatrix H = CMatrix::Zero(dim, dim);
    std::vector<CMatrix> lower(n_atoms);
    for (std::size_t n = 0; n < n_atoms; ++n) lower[n] = embed(sigma_minus(), n, n_atoms);
    for (std::size_t n = 0; n < n_atoms; ++n) {
        const auto& s = pt.specs[n];
        const double det = probe.omega() - pt.omega10[n] - c.lamb_shifts(static_cast<Eigen::Index>(n));
        const CMatrix raise = lower[n].adjoint();
        H -= det * (raise * lower[n]);
        const double drive = rabi_frequency(s.beta, pt.EJ_GHz[n], s.EC_GHz, probe.V0()) * std::cos(kp * s.x_mm);
        H -= drive * (raise + lower[n]);
        for (std::size_t m = 0; m < n_atoms; ++m) {
            if (m == n) continue;
            const auto ni = static_cast<Eigen::Index>(n);
            const auto mi = static_cast<Eigen::Index>(m);
            const cplx exchange(c.delta_plus(ni, mi), -c.gamma_minus(ni, mi));
            H += exchange * (raise * lower[m]);
        }
    }
    return H;
}

/// Full generator L with d vec(rho)/dt = L vec(rho).
inline Superoperator build_generator(const OperatingPoint& pt, const ProbeSpec& probe, const CouplingMatrices& c,
                                     const GeneratorOptions& opts = {})
{
    const std::size_t n_atoms = pt.size();
    const Eigen::Index dim = register_dimension(n_atoms);
    const CMatrix id = CMatrix::Identity(dim, dim);
    const cplx i1(0.0, 1.0);

    const CMatrix H = coherent_hamiltonian(pt, probe, c);
    Superoperator L;
    L.atom_count = n_atoms;
    // -i [H, rho]
    L.matrix = -i1 * (kron(id, H) - kron(H.transpose(), id));

    std::vector<CMatrix> lower(n_atoms);
    for (std::size_t n = 0; n < n_atoms; ++n) lower[n] = embed(sigma_minus(), n, n_atoms);

    // sum_nm M_nm (2 s-_m rho s+_n - s+_n s-_m rho - rho s+_n s-_m)
    CMatrix M = c.dissipator_matrix();
    if (opts.extra_relaxation > 0.0) M.diagonal().array() += opts.extra_relaxation;
    for (std::size_t n = 0; n < n_atoms; ++n) {
        const CMatrix raise_n = lower[n].adjoint();
        for (std::size_t m = 0; m < n_atoms; ++m) {
            const cplx coeff = M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
            if (coeff == cplx(0.0)) continue;
            const CMatrix A = raise_n * lower[m];
            L.matrix += coeff * (2.0 * kron(raise_n.transpose(), lower[m]) - kron(id, A) - kron(A.transpose(), id));
        }
    }

    // gamma_phi (2 P rho P - P rho - rho P)
    for (std::size_t n = 0; n < n_atoms; ++n) {
        const double gphi = pt.specs[n].gamma_phi;
        if (gphi == 0.0) continue;
        const CMatrix P = embed(excited_projector(), n, n_atoms);
        L.matrix += gphi * (2.0 * kron(P.transpose(), P) - kron(id, P) - kron(P.transpose(), id));
    }
    return L;
}

} // namespace wqed
