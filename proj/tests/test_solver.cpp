#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "wqed/solver.hpp"

using namespace wqed;
using namespace wqed::testing;

namespace {

// Smallest nonzero |Re lambda| of L.
double slowest_rate(const Superoperator& L)
{
    Eigen::ComplexEigenSolver<CMatrix> es(L.matrix, false);
    double best = std::numeric_limits<double>::infinity();
    const double floor = 1e-9 * L.matrix.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double re = std::abs(es.eigenvalues()(i).real());
        if (re > floor) best = std::min(best, re);
    }
    return best;
}

} // namespace

TEST(SteadyState, UndrivenIsGroundState)
{
    std::mt19937_64 rng(2);
    for (int i = 0; i < 10; ++i) {
        auto pt = random_pair(rng, false, 0.5);
        const auto c = symmetrize(pt);
        const auto L = build_generator(pt, ProbeSpec::from_voltage(pt.omega10[0], 0.0, 50.0), c);
        const auto rho = steady_state(L);
        EXPECT_LT((rho - ground_state(2)).norm(), 1e-12);
    }
}

TEST(SteadyState, StrongDriveSaturatesAtHalf)
{
    auto a = make_atom("A", 0.35, 0.6, 0.0, 0.0);
    const auto pt = operating_point_at_frequencies({a}, {5.0}, line());
    const auto c = symmetrize(pt);
    const double g = c.gamma(0, 0);
    const double wp = pt.omega10[0] + c.lamb_shifts(0);
    double prev = 0.0;
    for (double ratio : {0.1, 1.0, 10.0, 100.0}) {
        // choose V0 so that Omega = ratio * gamma
        const double omega1 = rabi_frequency(a.beta, pt.EJ_GHz[0], a.EC_GHz, 1.0);
        const auto probe = ProbeSpec::from_voltage(wp, ratio * g / omega1, 50.0);
        const auto rho = steady_state(build_generator(pt, probe, c));
        const double pe = rho(1, 1).real();
        // resonant Bloch equations, relaxation 2g, coherence decay g, H = -Omega sigma_x
        const double Om = ratio * g;
        const double expected = Om * Om / (g * g + 2.0 * Om * Om);
        EXPECT_NEAR(pe, expected, 1e-10);
        EXPECT_GT(pe, prev);
        prev = pe;
    }
    EXPECT_NEAR(prev, 0.5, 1e-4);
}

TEST(SteadyState, ResidualTraceAndPositivity)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> up(-0.3, 0.3), uv(0.0, 3e-7);
    for (int i = 0; i < 30; ++i) {
        const auto pt = random_pair(rng, false, 0.5);
        const auto c = symmetrize(pt);
        const auto probe = ProbeSpec::from_voltage(pt.omega10[0] + up(rng), uv(rng), 50.0);
        const auto L = build_generator(pt, probe, c);
        const auto rho = steady_state(L);
        EXPECT_LE((L.apply(vectorize(rho))).norm(), 1e-10 * L.matrix.norm());
        EXPECT_NEAR(rho.trace().real(), 1.0, 1e-10);
        EXPECT_NEAR(rho.trace().imag(), 0.0, 1e-10);
        EXPECT_LE((rho - rho.adjoint()).norm(), 1e-10);
        EXPECT_GE(min_eigenvalue(rho), -1e-8);
    }
}

TEST(SteadyState, DegenerateKernelIsReported)
{
    // a fully decoupled atom without dephasing keeps any population
    auto a = make_atom("A", 0.35, 0.0, 0.0, 0.0);
    auto b = make_atom("B", 0.35, 0.6, 0.0, 1.0);
    const auto pt = operating_point_at_frequencies({a, b}, {5.0, 5.2}, line());
    const auto c = symmetrize(pt);
    const auto probe = ProbeSpec::from_voltage(pt.omega10[1], 0.0, 50.0);
    EXPECT_THROW(steady_state(build_generator(pt, probe, c)), SingularSystemError);

    GeneratorOptions opts;
    opts.extra_relaxation = 1e-6 * c.gamma(1, 1);
    const auto rho = steady_state(build_generator(pt, probe, c, opts));
    EXPECT_LT((rho - ground_state(2)).norm(), 1e-10);
}

TEST(TimeEvolve, ZeroTimeIsIdentity)
{
    std::mt19937_64 rng(6);
    const auto pt = random_pair(rng);
    const auto L = build_generator(pt, ProbeSpec::from_voltage(30.0, 1e-7, 50.0), symmetrize(pt));
    const CMatrix rho0 = random_density_matrix(4, rng);
    EXPECT_EQ((time_evolve(L, rho0, 0.0) - rho0).norm(), 0.0);
    EXPECT_THROW(time_evolve(L, rho0, -1.0), ConfigError);
    EXPECT_THROW(time_evolve(L, CMatrix::Identity(2, 2), 1.0), DimensionError);
}

TEST(TimeEvolve, ExponentialDecay)
{
    auto a = make_atom("A", 0.35, 0.6, 0.0, 0.0);
    const auto pt = operating_point_at_frequencies({a}, {5.0}, line());
    const auto c = symmetrize(pt);
    const double g = c.gamma(0, 0);
    const auto L = build_generator(pt, ProbeSpec::from_voltage(pt.omega10[0], 0.0, 50.0), c);
    CMatrix rho0 = CMatrix::Zero(2, 2);
    rho0(1, 1) = 1.0;
    for (int i = 1; i <= 10; ++i) {
        const double t = i * 0.5 / (2.0 * g);
        const auto rho = time_evolve(L, rho0, t);
        EXPECT_NEAR(rho(1, 1).real(), std::exp(-2.0 * g * t), 1e-8);
    }
}

TEST(TimeEvolve, SemigroupAndInvariants)
{
    std::mt19937_64 rng(8);
    EvolveOptions opts;
    opts.rtol = 1e-10;
    opts.atol = 1e-12;
    for (int i = 0; i < 5; ++i) {
        const auto pt = random_pair(rng, false, 0.5);
        const auto c = symmetrize(pt);
        const auto L = build_generator(pt, ProbeSpec::from_voltage(pt.omega10[0], 1e-7, 50.0), c);
        const CMatrix rho0 = random_density_matrix(4, rng);
        const double t1 = 3.0, t2 = 4.5;
        const auto a = time_evolve(L, time_evolve(L, rho0, t1, opts), t2, opts);
        const auto b = time_evolve(L, rho0, t1 + t2, opts);
        EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 2.0 * 1e-8);
        EXPECT_NEAR(b.trace().real(), 1.0, 1e-10);
        EXPECT_LE((b - b.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(TimeEvolve, StepUnderflowRaises)
{
    std::mt19937_64 rng(10);
    const auto pt = random_pair(rng);
    const auto L = build_generator(pt, ProbeSpec::from_voltage(30.0, 1e-7, 50.0), symmetrize(pt));
    EvolveOptions opts;
    opts.rtol = 1e-30;
    opts.atol = 1e-30;
    opts.min_step = 1e-3;
    EXPECT_THROW(time_evolve(L, random_density_matrix(4, rng), 10.0, opts), StepFailureError);
}

TEST(SolverEquivalence, LinearSolveMatchesLongTimeIntegration)
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> up(-0.2, 0.2), uv(0.0, 2e-7);
    for (int i = 0; i < 20; ++i) {
        const auto pt = random_pair(rng, false, 0.5);
        const auto c = symmetrize(pt);
        const auto probe = ProbeSpec::from_voltage(pt.omega10[0] + up(rng), uv(rng), 50.0);
        const auto L = build_generator(pt, probe, c);
        const double t = 50.0 / slowest_rate(L);
        EvolveOptions opts;
        opts.rtol = 1e-12;
        opts.atol = 1e-14;
        const auto rho_t = time_evolve(L, ground_state(2), t, opts);
        const auto rho_ss = steady_state(L);
        EXPECT_LE(trace_distance(rho_t, rho_ss), 1e-8) << "config " << i;
    }
}

TEST(SolverEquivalence, SlowestDecayMatchesSpectrum)
{
    // Configurations whose slowest mode is real and separated from the rest, so
    // the late-time norm decays as a single exponential.
    std::mt19937_64 rng(14);
    int checked = 0;
    for (int i = 0; i < 200 && checked < 4; ++i) {
        const auto pt = random_pair(rng, false, 0.5);
        const auto c = symmetrize(pt);
        const auto L = build_generator(pt, ProbeSpec::from_voltage(pt.omega10[0], 0.0, 50.0), c);
        Eigen::ComplexEigenSolver<CMatrix> es(L.matrix, false);
        const double rate = slowest_rate(L);
        bool real_mode = false;
        double next = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
            const cplx z = es.eigenvalues()(k);
            const double re = std::abs(z.real());
            if (std::abs(re - rate) < 1e-9 * rate) {
                if (std::abs(z.imag()) < 1e-9 * rate) real_mode = true;
            } else if (re > 1e-9 * rate) {
                next = std::min(next, re);
            }
        }
        if (!real_mode || next < 1.3 * rate) continue;

        std::mt19937_64 r2(100 + i);
        const CMatrix deviation = random_density_matrix(4, r2) - steady_state(L);
        EvolveOptions opts;
        opts.rtol = 1e-12;
        opts.atol = 1e-20;
        const double t1 = 20.0 / rate, t2 = 25.0 / rate;
        const CMatrix x1 = time_evolve(L, deviation, t1, opts);
        const CMatrix x2 = time_evolve(L, x1, t2 - t1, opts);
        const double fitted = std::log(x1.norm() / x2.norm()) / (t2 - t1);
        EXPECT_NEAR(fitted, rate, 0.01 * rate) << "config " << i;
        ++checked;
    }
    EXPECT_EQ(checked, 4);
}
