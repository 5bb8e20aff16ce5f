#include <gtest/gtest.h>

#include "common.hpp"
#include "stokes2p/diagnostics.hpp"
#include "stokes2p/spectral.hpp"

using namespace stokes2p;
using namespace testing_support;

TEST(Resolvent, FlatProfileExact) {
    const ResolventReport r = resolvent_scan([](int n) { return InterfaceProfile::zero(Grid(64.0, n)); },
                                             {-0.6, 0.6, 3.0}, {64, 128});
    for (const auto& row : r.rows) {
        EXPECT_NEAR(row.sigma_min, std::abs(row.lambda), 1e-12);
        EXPECT_NEAR(row.sigma_min_adjoint, std::abs(row.lambda), 1e-12);
    }
}

TEST(Resolvent, StableUnderRefinement) {
    const ResolventReport r = resolvent_scan([](int n) { return default_profile(n); }, {-0.6, 0.6}, {128, 256});
    for (double lam : {-0.6, 0.6}) EXPECT_LE(r.variation(lam), 0.2);
    for (const auto& row : r.rows) {
        EXPECT_GE(row.sigma_min, 0.05);
        EXPECT_NEAR(row.sigma_min, row.sigma_min_adjoint, 1e-12);
    }
    // the second-kind operator 1 + 2 a D is invertible: lambda = -1/(2a) is far from the spectrum
    const double lam = -1.0 / (2.0 * default_params().a_mu());
    const ResolventReport s = resolvent_scan([](int n) { return default_profile(n); }, {lam}, {256});
    EXPECT_GT(s.rows[0].sigma_min, 0.5);
}

TEST(Resolvent, WeightedNormFlatExact) {
    ResolventConfig cfg;
    cfg.norm = NormFlavor::weighted;
    cfg.s_exp = 0.5;
    const ResolventReport r =
        resolvent_scan([](int n) { return InterfaceProfile::zero(Grid(64.0, n)); }, {0.6}, {64}, cfg);
    EXPECT_NEAR(r.rows[0].sigma_min, 0.6, 1e-12);
}

TEST(Derivatives, FlatTraceDerivative) {
    const Grid g(64.0, 1024);
    const InterfaceProfile z = InterfaceProfile::zero(g);
    const FluidParams p = default_params();
    const GridFunction dir = g.sample([](double x) { return std::exp(-x * x); });
    const VectorDensity d = g_trace_derivative(z, p, dir);
    EXPECT_LT(d.c1.norm(), 1e-14);
    const GridFunction ref = -(p.sigma / 4.0) * hilbert(g, d_dxi(g, dir));
    EXPECT_LT(rel_l2(d.c2, ref), 1e-12);
}

TEST(Derivatives, TraceDerivativeMatchesDifferences) {
    const InterfaceProfile f = default_profile(512, 16.0);
    const FluidParams p = default_params();
    const GridFunction dir = f.grid.sample([](double x) { return std::sin(x) * std::exp(-0.5 * x * x); });
    const double e = 1e-5;
    const VectorDensity fd = (g_trace(InterfaceProfile(f.grid, f.values + e * dir), p) -
                              g_trace(InterfaceProfile(f.grid, f.values - e * dir), p)) *
                             (0.5 / e);
    EXPECT_LT(rel_l2(g_trace_derivative(f, p, dir).stacked(), fd.stacked()), 1e-7);
}

TEST(Derivatives, DoubleLayerDerivativeMatchesDifferences) {
    const InterfaceProfile f = default_profile(512, 16.0);
    const GridFunction dir = f.grid.sample([](double x) { return std::sin(x) * std::exp(-0.5 * x * x); });
    const VectorDensity b = smooth_density(f.grid);
    const double e = 1e-5;
    const VectorDensity fd = (double_layer(InterfaceProfile(f.grid, f.values + e * dir))(b) -
                              double_layer(InterfaceProfile(f.grid, f.values - e * dir))(b)) *
                             (0.5 / e);
    EXPECT_LT(rel_l2(double_layer_derivative(f, dir, b).stacked(), fd.stacked()), 1e-7);
}

TEST(Linearization, AnalyticMatchesSecondOrderDifferences) {
    const InterfaceProfile f = default_profile(512);
    const FluidParams p = default_params();
    const GridFunction dir = f.grid.sample([](double x) { return std::exp(-0.5 * x * x) * std::cos(x); });
    const GridFunction an = linearize_analytic(f, p)(dir);
    const double e1 = (linearize_fd(f, p, dir, 1e-2) - an).norm();
    const double e2 = (linearize_fd(f, p, dir, 5e-3) - an).norm();
    EXPECT_GT(std::log2(e1 / e2), 1.8);
    EXPECT_LT(e2, 1e-4 * an.norm());
}

TEST(Linearization, FlatCoefficients) {
    const InterfaceProfile z = InterfaceProfile::zero(Grid(64.0, 512));
    const Linearization L(z, default_params(), 0.5);
    for (int i : {0, 100, 256}) {
        EXPECT_DOUBLE_EQ(L.alpha(i), default_params().flat_rate());
        EXPECT_EQ(L.beta(i), 0.0);
    }
    EXPECT_THROW(Linearization(z, default_params(), 1.5), ConfigError);
}

TEST(Linearization, FlatSymbol) {
    const Grid g(64.0, 1024);
    const InterfaceProfile z = InterfaceProfile::zero(g);
    const FluidParams p = default_params();
    const GridFunction pk = g.sample([](double x) { return std::cos(2.0 * x) * std::exp(-(x / 16.0) * (x / 16.0)); });
    const GridFunction an = linearize_analytic(z, p)(pk);
    EXPECT_LT(rel_l2(an, GridFunction(-p.flat_rate() * abs_derivative(g, pk))), 1e-3);
}

TEST(Localization, PartitionOfUnity) {
    const LocalizationFamily fam = localization_family(Grid(8.0, 1024), 0.5);
    EXPECT_LT(fam.partition_defect(), 1e-12);
    EXPECT_EQ(fam.interior_count(), 17);
    for (const auto& w : fam.windows) EXPECT_GE(w.minCoeff(), 0.0);
}

TEST(Localization, InfeasibleWindows) {
    EXPECT_THROW(localization_family(Grid(8.0, 1024), 1.5), ConfigError);
    EXPECT_THROW(localization_family(Grid(2.0, 1024), 0.5), ConfigError);
    EXPECT_THROW(localization_family(Grid(8.0, 64), 0.5), ConfigError);
}

TEST(Frozen, FlatProfileResidualIsCommutator) {
    // at f0 = 0 the linearization is the multiplier itself, so the residual reduces to
    // the commutator of the window with |D| plus the quadrature error at k h up to 1/2
    const Grid g(8.0, 1024);
    const FluidParams p = default_params();
    FrozenConfig cfg;
    cfg.windows = {4};
    const FrozenReport r = frozen_multiplier_check(InterfaceProfile::zero(g), p, cfg);
    ASSERT_EQ(r.rows.size(), 3u);
    const LocalizationFamily fam = localization_family(g, cfg.eps);
    const GridFunction& w = fam.windows[4];
    const double c = fam.anchors[4];
    for (const auto& row : r.rows) {
        EXPECT_DOUBLE_EQ(row.alpha, p.flat_rate());
        EXPECT_EQ(row.beta, 0.0);
        const GridFunction packet = w.cwiseProduct(g.sample([&](double x) { return std::cos(row.wavenumber * (x - c)); }));
        const GridFunction comm = p.flat_rate() * (GridFunction(abs_derivative(g, GridFunction(w.cwiseProduct(packet)))) -
                                                   w.cwiseProduct(abs_derivative(g, packet)));
        EXPECT_NEAR(row.residual, sobolev_norm(g, comm, cfg.s_exp), 0.2 * row.residual);
    }
    const std::vector<double> q = r.ratios(4);
    EXPECT_GT(q[0], q[1]);
    EXPECT_GT(q[1], q[2]);
}

TEST(Frozen, RatioDecreasesWithFrequency) {
    FrozenConfig cfg;
    cfg.windows = {4};
    const FrozenReport r = frozen_multiplier_check(gaussian_bump(Grid(8.0, 1024), 0.3, 1.0), default_params(), cfg);
    const std::vector<double> q = r.ratios(4);
    ASSERT_EQ(q.size(), 3u);
    EXPECT_GT(q[0], q[1]);
    EXPECT_GT(q[1], q[2]);
}

TEST(Derivatives, FlatTraceRemainderIsQuadratic) {
    const Grid g(64.0, 1024);
    const FluidParams p = default_params();
    const GridFunction dir = g.sample([](double x) { return std::exp(-x * x); });
    const VectorDensity d = g_trace_derivative(InterfaceProfile::zero(g), p, dir);
    std::vector<double> rem;
    for (double e : {1e-2, 5e-3, 2.5e-3})
        rem.push_back((g_trace(InterfaceProfile(g, e * dir), p) - d * e).stacked().norm());
    EXPECT_GT(std::log2(rem[0] / rem[1]), 1.8);
    EXPECT_GT(std::log2(rem[1] / rem[2]), 1.8);
}
