#pragma once

// Interface graph f on a truncated uniform grid and the derived geometry
// (slope, metric, normal, tangent, curvature).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stokes2p/errors.hpp"

namespace stokes2p {

using GridFunction = Eigen::VectorXd;

/// Uniform grid xi_i = -L + i*(2L/N), i = 0..N-1, on the truncated line [-L, L).
struct Grid {
    double half_width = 0.0;
    int nodes = 0;

    Grid() = default;
    Grid(double L, int N) : half_width(L), nodes(N) {
        if (!(L > 0.0) || !std::isfinite(L))
            throw ConfigError("grid half-width must be positive and finite");
        if (N < 8 || N % 2 != 0)
            throw ConfigError("grid node count must be an even integer >= 8, got " + std::to_string(N));
    }

    double spacing() const { return 2.0 * half_width / nodes; }
    double node(int i) const { return -half_width + i * spacing(); }
    int size() const { return nodes; }

    GridFunction coordinates() const {
        GridFunction x(nodes);
        for (int i = 0; i < nodes; ++i) x[i] = node(i);
        return x;
    }

    /// Samples a callable at every node.
    template <class F> GridFunction sample(F&& fn) const {
        GridFunction v(nodes);
        for (int i = 0; i < nodes; ++i) v[i] = fn(node(i));
        return v;
    }

    /// Same node layout. Exact comparison: grids are built from the same inputs.
    bool operator==(const Grid& o) const { return half_width == o.half_width && nodes == o.nodes; }
};

/// Index of the node closest to x, clamped to the grid.
inline int nearest_node(const Grid& g, double x) {
    const long i = std::lround((x + g.half_width) / g.spacing());
    return static_cast<int>(std::clamp<long>(i, 0, g.size() - 1));
}

/// Flat discrete L2 inner product h * sum(u_i v_i).
inline double inner(const Grid& g, const GridFunction& u, const GridFunction& v) {
    return g.spacing() * u.dot(v);
}
inline double l2_norm(const Grid& g, const GridFunction& u) { return std::sqrt(inner(g, u, u)); }

/// Fourth-order centered first derivative; values outside [-L, L) are taken as zero.
inline GridFunction d_dxi(const Grid& g, const GridFunction& f) {
    const int n = g.size();
    const double h = g.spacing();
    auto at = [&](int j) { return (j < 0 || j >= n) ? 0.0 : f[j]; };
    GridFunction d(n);
    for (int i = 0; i < n; ++i)
        d[i] = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h);
    return d;
}

/// Fourth-order centered second derivative with zero exterior values.
inline GridFunction d2_dxi2(const Grid& g, const GridFunction& f) {
    const int n = g.size();
    const double h = g.spacing();
    auto at = [&](int j) { return (j < 0 || j >= n) ? 0.0 : f[j]; };
    GridFunction d(n);
    for (int i = 0; i < n; ++i)
        d[i] = (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * f[i] + 16.0 * at(i + 1) - at(i + 2)) / (12.0 * h * h);
    return d;
}

/// Sampled interface graph f with its decay gate.
struct InterfaceProfile {
    Grid grid;
    GridFunction values;
    double decay_tol = 1e-3;

    InterfaceProfile() = default;
    InterfaceProfile(Grid g, GridFunction v, double tol = 1e-3)
        : grid(g), values(std::move(v)), decay_tol(tol) {
        if (values.size() != grid.size()) throw ConfigError("profile values do not match the grid");
        if (!(decay_tol > 0.0)) throw ConfigError("decay_tol must be positive");
    }

    static InterfaceProfile zero(Grid g, double tol = 1e-3) {
        return {g, GridFunction::Zero(g.size()), tol};
    }

    int size() const { return grid.size(); }

    /// Empty when valid, else a description of the first violated invariant.
    std::string violation() const {
        if (!values.allFinite()) return "profile contains non-finite values";
        const GridFunction df = d_dxi(grid, values);
        const double L = grid.half_width;
        for (int i = 0; i < size(); ++i) {
            if (std::abs(grid.node(i)) < 0.5 * L) continue;
            if (std::abs(values[i]) > decay_tol || std::abs(df[i]) > decay_tol) {
                std::ostringstream os;
                os << "decay gate violated at xi=" << grid.node(i) << ": |f|=" << std::abs(values[i])
                   << ", |f'|=" << std::abs(df[i]) << " > decay_tol=" << decay_tol;
                return os.str();
            }
        }
        return {};
    }

    void validate() const {
        if (auto msg = violation(); !msg.empty()) throw ConfigError(msg);
    }
};

/// Derived per-node geometry.
struct GeometryCache {
    GridFunction slope;       // f'
    GridFunction second;      // f''
    GridFunction metric;      // omega = sqrt(1 + f'^2)
    GridFunction normal1, normal2;   // nu = (-f', 1)/omega
    GridFunction tangent1, tangent2; // tau = (1, f')/omega
    GridFunction curvature;   // f''/omega^3
};

/// f' and f'' only.
inline GeometryCache derivatives(const InterfaceProfile& p) {
    GeometryCache c;
    c.slope = d_dxi(p.grid, p.values);
    c.second = d2_dxi2(p.grid, p.values);
    return c;
}

inline GeometryCache geometry(const InterfaceProfile& p) {
    GeometryCache c = derivatives(p);
    const int n = p.size();
    c.metric.resize(n);
    c.normal1.resize(n);
    c.normal2.resize(n);
    c.tangent1.resize(n);
    c.tangent2.resize(n);
    c.curvature.resize(n);
    for (int i = 0; i < n; ++i) {
        const double s = c.slope[i];
        const double w = std::sqrt(1.0 + s * s);
        c.metric[i] = w;
        c.normal1[i] = -s / w;
        c.normal2[i] = 1.0 / w;
        c.tangent1[i] = 1.0 / w;
        c.tangent2[i] = s / w;
        c.curvature[i] = c.second[i] / (w * w * w);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Profile initialization

/// A * exp(-(xi/W)^2)
inline InterfaceProfile gaussian_bump(Grid g, double amplitude, double width, double tol = 1e-3) {
    return {g, g.sample([&](double x) { return amplitude * std::exp(-(x / width) * (x / width)); }), tol};
}

/// A * cos(k xi) * exp(-(xi/W)^2)
inline InterfaceProfile modulated_wave(Grid g, double amplitude, double k, double width, double tol = 1e-3) {
    return {g,
            g.sample([&](double x) { return amplitude * std::cos(k * x) * std::exp(-(x / width) * (x / width)); }),
            tol};
}

/// Reads a two-column (xi, f) text file whose abscissae must match the grid nodes.
inline InterfaceProfile load_profile(const std::string& path, Grid g, double tol = 1e-3) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open profile file '" + path + "'");
    std::vector<double> xs, fs;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        double x = 0, f = 0;
        if (!(ls >> x >> f)) throw ConfigError("malformed line in profile file: '" + line + "'");
        xs.push_back(x);
        fs.push_back(f);
    }
    if (static_cast<int>(xs.size()) != g.size())
        throw ConfigError("profile file has " + std::to_string(xs.size()) + " rows, grid has " +
                          std::to_string(g.size()) + " nodes");
    const double tol_x = 1e-9 * std::max(1.0, g.half_width);
    GridFunction v(g.size());
    for (int i = 0; i < g.size(); ++i) {
        if (std::abs(xs[i] - g.node(i)) > tol_x)
            throw ConfigError("profile abscissa " + std::to_string(xs[i]) + " does not match grid node " +
                              std::to_string(g.node(i)));
        v[i] = fs[i];
    }
    return {g, v, tol};
}

} // namespace stokes2p
