#include <gtest/gtest.h>

#include <functional>

#include "common.hpp"
#include "stokes2p/fields.hpp"

using namespace stokes2p;
using namespace testing_support;

namespace {

InterfaceProfile field_profile() { return gaussian_bump(Grid(8.0, 512), 0.3, 1.0); }

} // namespace

TEST(Fields, ZeroDensityGivesZeroField) {
    const InterfaceProfile f = field_profile();
    const VectorDensity z = VectorDensity::zero(f.size());
    const FieldSample s = double_layer_field(f, z, {0.3, 1.0});
    EXPECT_EQ(s.velocity.norm(), 0.0);
    EXPECT_EQ(s.pressure, 0.0);
    EXPECT_EQ(single_layer_field(f, z, {0.3, -1.0}).velocity.norm(), 0.0);
}

TEST(Fields, NearBoundaryIsRejected) {
    const InterfaceProfile f = field_profile();
    const VectorDensity b = smooth_density(f.grid);
    EXPECT_THROW(double_layer_field(f, b, {0.0, 0.3 + 0.01}), NearBoundaryError);
    EXPECT_THROW(single_layer_field(f, b, {0.0, 0.3 - 0.01}), NearBoundaryError);
    EXPECT_EQ(side_of(f, {0.0, 1.0}), Side::plus);
    EXPECT_EQ(side_of(f, {0.0, 0.0}), Side::minus);
    EXPECT_NEAR(distance_to_interface(f, {5.0, 2.0}), 2.0, 1e-6);
}

TEST(Fields, FlatMirrorSymmetry) {
    const InterfaceProfile z = InterfaceProfile::zero(Grid(8.0, 512));
    VectorDensity b = smooth_density(z.grid);
    b.c1.setZero();
    for (auto fn : {&double_layer_field, &single_layer_field}) {
        const FieldSample a = fn(z, b, {0.7, 0.9}, true, true);
        const FieldSample m = fn(z, b, {-0.7, 0.9}, true, true);
        EXPECT_NEAR(a.velocity[0], -m.velocity[0], 1e-14);
        EXPECT_NEAR(a.velocity[1], m.velocity[1], 1e-14);
        EXPECT_NEAR(a.pressure, m.pressure, 1e-14);
    }
}

TEST(Fields, StokesEquationsHoldOffInterface) {
    const InterfaceProfile f = field_profile();
    const VectorDensity b = smooth_density(f.grid);
    for (auto fn : {&double_layer_field, &single_layer_field}) {
        auto field = [&](const Eigen::Vector2d& x) { return fn(f, b, x, false, true); };
        for (const Eigen::Vector2d x : {Eigen::Vector2d(0.2, 1.2), Eigen::Vector2d(-0.5, -0.8)}) {
            const StencilResidual r = stencil_residual(field, x, 1e-3);
            const double scale = field(x).velocity.norm();
            EXPECT_LT(std::abs(r.divergence), 1e-5 * std::max(1.0, scale));
            EXPECT_LT(r.stokes.norm(), 1e-3 * std::max(1.0, scale));
        }
    }
}

TEST(Fields, GradientMatchesDifferences) {
    const InterfaceProfile f = field_profile();
    const VectorDensity b = smooth_density(f.grid);
    const Eigen::Vector2d x(0.4, 1.1);
    for (auto fn : {&double_layer_field, &single_layer_field}) {
        const FieldSample s = fn(f, b, x, true, true);
        const double h = 1e-5;
        for (int l = 0; l < 2; ++l) {
            Eigen::Vector2d e = Eigen::Vector2d::Zero();
            e[l] = h;
            const Eigen::Vector2d d = (fn(f, b, x + e, false, true).velocity - fn(f, b, x - e, false, true).velocity) / (2 * h);
            for (int j = 0; j < 2; ++j) EXPECT_NEAR((*s.gradient)(l, j), d[j], 1e-7);
        }
    }
}

TEST(Fields, PressureByPartsAgrees) {
    const InterfaceProfile f = field_profile();
    const VectorDensity b = smooth_density(f.grid);
    for (const Eigen::Vector2d x : {Eigen::Vector2d(0.2, 1.5), Eigen::Vector2d(-1.0, -1.0)}) {
        const double q = double_layer_field(f, b, x).pressure;
        EXPECT_NEAR(double_layer_pressure_ibp(f, b, x), q, 1e-6 * std::max(1.0, std::abs(q)));
    }
}

TEST(Fields, FarFieldDecay) {
    // net force zero for the single layer: a Stokeslet with nonzero force grows like log R in 2D
    const InterfaceProfile f = field_profile();
    const VectorDensity b = smooth_density(f.grid);
    const VectorDensity balanced{f.grid.sample([](double x) { return x * std::exp(-x * x); }),
                                 f.grid.sample([](double x) { return (1.0 - 2.0 * x * x) * std::exp(-x * x); })};
    const Eigen::Vector2d dir = Eigen::Vector2d(1.0, 1.0).normalized();
    std::vector<std::function<double(double)>> magnitude{
        [&](double R) { return double_layer_field(f, b, R * dir, false, true).velocity.norm(); },
        [&](double R) { return single_layer_field(f, balanced, R * dir, false, true).velocity.norm(); }};
    for (const auto& m : magnitude) {
        double prev = std::numeric_limits<double>::infinity();
        for (double R : {5.0, 10.0, 20.0, 40.0}) {
            EXPECT_LT(m(R), prev) << "R=" << R;
            prev = m(R);
        }
        // algebraic decay, roughly 1/R
        EXPECT_LT(m(40.0) / m(20.0), 0.6);
    }
}

TEST(BoundaryLimit, ExactForCubicApproach) {
    const InterfaceProfile f = field_profile();
    const int i = 256;
    const Eigen::Vector2d base(f.grid.node(i), f.values[i]);
    auto fn = [&](const Eigen::Vector2d& x) {
        const double d = (x - base).norm();
        Eigen::VectorXd v(1);
        v[0] = 2.0 + d - 3.0 * d * d + 0.5 * d * d * d;
        return v;
    };
    const LimitResult r = boundary_limit(fn, f, i, Side::plus);
    EXPECT_NEAR(r.value[0], 2.0, 1e-12);
    EXPECT_THROW(boundary_limit(fn, f, -1, Side::plus), ConfigError);
}

TEST(Jumps, DoubleLayerRelations) {
    const InterfaceProfile f = gaussian_bump(Grid(8.0, 1024), 0.3, 1.0);
    const JumpReport r = jump_check_double(f, smooth_density(f.grid));
    EXPECT_LT(r.relative("w_jump"), 1e-2);
    EXPECT_LT(r.relative("w_plus"), 1e-2);
    EXPECT_LT(r.relative("w_minus"), 1e-2);
    EXPECT_LT(r.relative("stress_jump"), 1e-2);
}

TEST(Jumps, SingleLayerRelations) {
    const InterfaceProfile f = gaussian_bump(Grid(8.0, 1024), 0.3, 1.0);
    const JumpReport r = jump_check_single(f, smooth_density(f.grid));
    EXPECT_LT(r.relative("pi_jump"), 1e-2);
    EXPECT_LT(r.relative("stress_plus"), 1e-2);
    EXPECT_LT(r.relative("stress_minus"), 1e-2);
}
