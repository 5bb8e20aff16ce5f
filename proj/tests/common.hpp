#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "stokes2p/bvp.hpp"
#include "stokes2p/geometry.hpp"
#include "stokes2p/operators.hpp"

namespace testing_support {

using namespace stokes2p;

inline InterfaceProfile default_profile(int N = 512, double L = 64.0) { return gaussian_bump(Grid(L, N), 0.3, 1.0); }

inline FluidParams default_params() { return {2.0, 1.0, 1.0}; }

inline VectorDensity smooth_density(const Grid& g) {
    return {g.sample([](double x) { return 0.2 * std::exp(-x * x); }),
            g.sample([](double x) { return std::exp(-x * x); })};
}

inline double rel_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

} // namespace testing_support
