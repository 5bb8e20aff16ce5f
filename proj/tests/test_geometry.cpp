#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "common.hpp"

using namespace stokes2p;

TEST(Grid, RejectsOddAndTinyCounts) {
    EXPECT_THROW(Grid(8.0, 513), ConfigError);
    EXPECT_THROW(Grid(8.0, 4), ConfigError);
    EXPECT_THROW(Grid(-1.0, 64), ConfigError);
    const Grid g(8.0, 64);
    EXPECT_DOUBLE_EQ(g.spacing(), 0.25);
    EXPECT_DOUBLE_EQ(g.node(0), -8.0);
    EXPECT_DOUBLE_EQ(g.node(32), 0.0);
}

TEST(Grid, NearestNodeClamps) {
    const Grid g(8.0, 64);
    EXPECT_EQ(nearest_node(g, 0.1), 32);
    EXPECT_EQ(nearest_node(g, -100.0), 0);
    EXPECT_EQ(nearest_node(g, 100.0), 63);
}

TEST(Derivatives, FourthOrderOnGaussian) {
    auto err = [](int N) {
        const Grid g(8.0, N);
        const GridFunction f = g.sample([](double x) { return std::exp(-x * x); });
        const GridFunction exact = g.sample([](double x) { return -2.0 * x * std::exp(-x * x); });
        return (d_dxi(g, f) - exact).cwiseAbs().maxCoeff();
    };
    const double order = std::log2(err(256) / err(512));
    EXPECT_GT(order, 3.8);
}

TEST(Geometry, NormalAndTangentAreOrthonormal) {
    const InterfaceProfile p = gaussian_bump(Grid(16.0, 256), 0.5, 1.0);
    const GeometryCache c = geometry(p);
    for (int i = 0; i < p.size(); ++i) {
        EXPECT_NEAR(c.normal1[i] * c.normal1[i] + c.normal2[i] * c.normal2[i], 1.0, 1e-14);
        EXPECT_NEAR(c.normal1[i] * c.tangent1[i] + c.normal2[i] * c.tangent2[i], 0.0, 1e-14);
    }
}

TEST(Profile, DecayGate) {
    const Grid g(4.0, 64);
    EXPECT_NO_THROW(gaussian_bump(Grid(16.0, 256), 0.3, 1.0).validate());
    const InterfaceProfile wide = gaussian_bump(g, 0.3, 3.0);
    EXPECT_FALSE(wide.violation().empty());
    EXPECT_THROW(wide.validate(), ConfigError);
    GridFunction v = GridFunction::Zero(64);
    v[10] = std::nan("");
    EXPECT_THROW(InterfaceProfile(g, v).validate(), ConfigError);
    EXPECT_THROW(InterfaceProfile(g, GridFunction::Zero(10)), ConfigError);
}

TEST(Profile, LoadFromFile) {
    const Grid g(4.0, 8);
    const std::string path = ::testing::TempDir() + "profile.txt";
    {
        std::ofstream out(path);
        out << "# xi f\n";
        for (int i = 0; i < 8; ++i) out << g.node(i) << ' ' << 0.001 * i << '\n';
    }
    const InterfaceProfile p = load_profile(path, g, 1.0);
    EXPECT_DOUBLE_EQ(p.values[7], 0.007);
    EXPECT_THROW(load_profile(path, Grid(4.0, 16)), ConfigError);
    EXPECT_THROW(load_profile(path + ".missing", g), ConfigError);
    std::remove(path.c_str());
}
