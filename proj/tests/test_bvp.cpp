#include <gtest/gtest.h>

#include "common.hpp"
#include "stokes2p/spectral.hpp"

using namespace stokes2p;
using namespace testing_support;

TEST(FluidParams, Validation) {
    EXPECT_THROW((FluidParams{0.0, 1.0, 1.0}).validate(), ConfigError);
    EXPECT_THROW((FluidParams{1.0, 1.0, -1.0}).validate(), ConfigError);
    const FluidParams p = default_params();
    EXPECT_DOUBLE_EQ(p.a_mu(), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(p.flat_rate(), 1.0 / 6.0);
}

TEST(PhiCoefficients, UnitSlope) {
    GridFunction s(1);
    s << 1.0;
    const PhiCoefficients c = phi_coeffs(s);
    EXPECT_NEAR(c.phi1[0], 1.0 / (std::sqrt(2.0) + 2.0), 1e-15);
    EXPECT_NEAR(c.phi2[0], 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Bvp, FlatStateIsSteady) {
    const InterfaceProfile z = InterfaceProfile::zero(Grid(64.0, 256));
    EXPECT_EQ(g_trace(z, default_params()).stacked().norm(), 0.0);
    EXPECT_EQ(phi_rhs(z, default_params()).norm(), 0.0);
}

TEST(Bvp, KrylovMatchesDense) {
    const InterfaceProfile f = default_profile(512);
    SolverConfig dense;
    dense.method = SolverMethod::dense;
    const DensitySolve k = solve_density(f, default_params());
    const DensitySolve d = solve_density(f, default_params(), dense);
    EXPECT_LT(rel_l2(k.beta.stacked(), d.beta.stacked()), 1e-8);
    EXPECT_LE(k.relative_residual, 1e-10);
}

TEST(Bvp, IterationCountStableUnderRefinement) {
    int prev = 1 << 30;
    for (int N : {256, 512, 1024}) {
        const DensitySolve s = solve_density(default_profile(N), default_params());
        EXPECT_LE(s.iterations, prev) << "N=" << N;
        prev = s.iterations;
    }
}

TEST(Bvp, TraceContinuity) {
    const TraceFields t = trace_fields(default_profile(512), default_params());
    const double scale = std::max(t.v_plus.stacked().norm(), t.beta.stacked().norm());
    EXPECT_LT((t.v_plus - t.v_minus).stacked().norm(), 1e-8 * scale);
}

TEST(Bvp, PhiFormsAgree) {
    const InterfaceProfile f = default_profile(512);
    const FluidParams p = default_params();
    const TraceFields t = trace_fields(f, p);
    EXPECT_LT(rel_l2(phi_from_beta(f, p, t.beta), t.phi), 1e-8);
    EXPECT_LT(rel_l2(phi_from_trace(f, p, t.G, t.beta), t.phi), 1e-8);
}

TEST(Bvp, EqualViscosity) {
    const InterfaceProfile f = default_profile(512);
    const FluidParams p{1.5, 1.5, 1.0};
    const DensitySolve s = solve_density(f, p);
    EXPECT_EQ(s.beta.stacked().norm(), 0.0);
    const GridFunction ref = normal_component(g_trace(f, p), d_dxi(f.grid, f.values)) / 1.5;
    EXPECT_LT(rel_l2(phi_rhs(f, p), ref), 1e-10);
    EXPECT_THROW(phi_from_beta(f, p, s.beta), ConfigError);
}

TEST(Bvp, ContrastContinuity) {
    const InterfaceProfile f = default_profile(512);
    const GridFunction a = phi_rhs(f, {1.0 + 1e-6, 1.0 - 1e-6, 1.0});
    const GridFunction b = phi_rhs(f, {1.0 - 1e-6, 1.0 + 1e-6, 1.0});
    const GridFunction c = phi_rhs(f, {1.0, 1.0, 1.0});
    EXPECT_LT(rel_l2(a, b), 1e-4);
    EXPECT_LT(rel_l2(a, c), 1e-5);
}

TEST(Bvp, SurfaceTensionScalesLinearly) {
    const InterfaceProfile f = default_profile(256);
    const GridFunction one = phi_rhs(f, {2.0, 1.0, 1.0});
    const GridFunction three = phi_rhs(f, {2.0, 1.0, 3.0});
    EXPECT_LT(rel_l2(three, 3.0 * one), 1e-9);
}

TEST(Bvp, MirrorSymmetry) {
    // an even profile gives an even normal velocity; the node at -L has no mirror partner,
    // so the discrete symmetry holds up to its tail contribution
    SolverConfig dense;
    dense.method = SolverMethod::dense;
    const GridFunction phi = phi_rhs(default_profile(512), default_params(), dense);
    const int N = 512;
    for (int i = 1; i < N / 2; ++i) EXPECT_NEAR(phi[i], phi[N - i], 1e-8 * phi.cwiseAbs().maxCoeff());
}

TEST(Bvp, SolverFailureCarriesHistory) {
    SolverConfig cfg;
    cfg.residual_tol = 1e-16;
    cfg.max_iterations = 2;
    cfg.restart = 2;
    try {
        solve_density(default_profile(256), default_params(), cfg);
        FAIL() << "expected SolverFailure";
    } catch (const SolverFailure& e) {
        EXPECT_FALSE(e.residual_history.empty());
    }
}

TEST(Bvp, FlatPhiIsDampingMultiplier) {
    // small amplitude: Phi(eps g) ~ -sigma/(2(mu+ + mu-)) |D| (eps g)
    const Grid g(64.0, 1024);
    const double eps = 1e-6;
    const GridFunction pk = g.sample([](double x) { return std::cos(2.0 * x) * std::exp(-(x / 16.0) * (x / 16.0)); });
    const InterfaceProfile f(g, eps * pk);
    const FluidParams p = default_params();
    const GridFunction phi = phi_rhs(f, p) / eps;
    EXPECT_LT(rel_l2(phi, GridFunction(-p.flat_rate() * abs_derivative(g, pk))), 2e-3);
}
