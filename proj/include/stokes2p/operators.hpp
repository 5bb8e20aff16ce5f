#pragma once

// Layer-potential operators on the interface, all discretized with the
// corrected punctured-trapezoid rule of quadrature.hpp. For a target node i
// and a source node k != i we write
//
//   eta = xi_i - xi_k,   p = (f_i - f_k)/eta,   D = 1/(1 + p^2),
//
// so that r = eta (1, p) and every kernel becomes (smooth in eta)/eta.
// Vector densities are stored stacked as [beta_1; beta_2].

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "stokes2p/geometry.hpp"
#include "stokes2p/quadrature.hpp"

namespace stokes2p {

constexpr double pi = std::numbers::pi;

/// Two-component boundary function.
struct VectorDensity {
    GridFunction c1, c2;

    VectorDensity() = default;
    VectorDensity(GridFunction a, GridFunction b) : c1(std::move(a)), c2(std::move(b)) {
        if (c1.size() != c2.size()) throw ConfigError("density components differ in length");
    }
    static VectorDensity zero(int n) { return {GridFunction::Zero(n), GridFunction::Zero(n)}; }
    static VectorDensity unstack(const Eigen::VectorXd& v) {
        const Eigen::Index n = v.size() / 2;
        return {v.head(n), v.tail(n)};
    }

    int size() const { return static_cast<int>(c1.size()); }
    Eigen::VectorXd stacked() const {
        Eigen::VectorXd v(2 * c1.size());
        v << c1, c2;
        return v;
    }
    bool all_finite() const { return c1.allFinite() && c2.allFinite(); }

    VectorDensity operator+(const VectorDensity& o) const { return {c1 + o.c1, c2 + o.c2}; }
    VectorDensity operator-(const VectorDensity& o) const { return {c1 - o.c1, c2 - o.c2}; }
    VectorDensity operator*(double s) const { return {c1 * s, c2 * s}; }
};

inline double inner(const Grid& g, const VectorDensity& u, const VectorDensity& v) {
    return inner(g, u.c1, v.c1) + inner(g, u.c2, v.c2);
}
inline double l2_norm(const Grid& g, const VectorDensity& u) { return std::sqrt(inner(g, u, u)); }

/// A linear map on (stacked) grid functions with an optional dense matrix.
struct LinearBoundaryOp {
    std::string label;
    Grid grid;
    int components = 1; // 1: scalar grid functions, 2: stacked vector densities
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;
    std::function<Eigen::MatrixXd()> assemble_fn;

    int dim() const { return components * grid.size(); }

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
        if (x.size() != dim()) throw ConfigError(label + ": argument has wrong length");
        return apply(x);
    }
    VectorDensity operator()(const VectorDensity& b) const { return VectorDensity::unstack((*this)(b.stacked())); }

    bool has_matrix() const { return static_cast<bool>(assemble_fn); }

    Eigen::MatrixXd matrix(int cap = 4096) const {
        if (!assemble_fn) throw ConfigError(label + ": no dense assembly available");
        if (grid.size() > cap)
            throw SizeError(label + ": dense assembly of " + std::to_string(grid.size()) + " nodes exceeds cap " +
                            std::to_string(cap));
        return assemble_fn();
    }
};

namespace detail {

/// Builds apply/assemble for a 2x2 kernel given as kernel(i, k, p, D) -> Matrix2d
/// (without the pv weight).
template <class Kernel>
LinearBoundaryOp vector_kernel_op(std::string label, const InterfaceProfile& prof, bool corr, Kernel kernel) {
    LinearBoundaryOp op;
    op.label = std::move(label);
    op.grid = prof.grid;
    op.components = 2;
    const GridFunction f = prof.values;
    const Grid g = prof.grid;
    op.apply = [g, f, corr, kernel](const Eigen::VectorXd& x) {
        const int n = g.size();
        const double dx = g.spacing();
        Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * n);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            double s1 = 0.0, s2 = 0.0;
            for (int k = 0; k < n; ++k) {
                if (k == i) continue;
                const double p = (f[i] - f[k]) / ((i - k) * dx);
                const double D = 1.0 / (1.0 + p * p);
                const Eigen::Matrix2d K = pv_weight(i, k, corr) * kernel(i, k, p, D);
                s1 += K(0, 0) * x[k] + K(0, 1) * x[n + k];
                s2 += K(1, 0) * x[k] + K(1, 1) * x[n + k];
            }
            out[i] = s1;
            out[n + i] = s2;
        }
        return out;
    };
    op.assemble_fn = [g, f, corr, kernel]() {
        const int n = g.size();
        const double dx = g.spacing();
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                if (k == i) continue;
                const double p = (f[i] - f[k]) / ((i - k) * dx);
                const double D = 1.0 / (1.0 + p * p);
                const Eigen::Matrix2d K = pv_weight(i, k, corr) * kernel(i, k, p, D);
                M(i, k) = K(0, 0);
                M(i, n + k) = K(0, 1);
                M(n + i, k) = K(1, 0);
                M(n + i, n + k) = K(1, 1);
            }
        return M;
    };
    return op;
}

template <class Kernel>
LinearBoundaryOp scalar_kernel_op(std::string label, const InterfaceProfile& prof, bool corr, Kernel kernel) {
    LinearBoundaryOp op;
    op.label = std::move(label);
    op.grid = prof.grid;
    op.components = 1;
    const GridFunction f = prof.values;
    const Grid g = prof.grid;
    op.apply = [g, f, corr, kernel](const Eigen::VectorXd& x) {
        const int n = g.size();
        const double dx = g.spacing();
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) {
                if (k == i || x[k] == 0.0) continue;
                const double p = (f[i] - f[k]) / ((i - k) * dx);
                const double D = 1.0 / (1.0 + p * p);
                s += pv_weight(i, k, corr) * kernel(i, k, p, D) * x[k];
            }
            out[i] = s;
        }
        return out;
    };
    op.assemble_fn = [g, f, corr, kernel]() {
        const int n = g.size();
        const double dx = g.spacing();
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                if (k == i) continue;
                const double p = (f[i] - f[k]) / ((i - k) * dx);
                const double D = 1.0 / (1.0 + p * p);
                M(i, k) = pv_weight(i, k, corr) * kernel(i, k, p, D);
            }
        return M;
    };
    return op;
}

} // namespace detail

/// Hydrodynamic double-layer operator D(f), applied through the B0_{n,2} block
/// combination
///   D(f)[beta] = (1/pi) [[B0,B1],[B1,B2]] (f' beta) - (1/pi) [[B1,B2],[B2,B3]] beta.
inline LinearBoundaryOp double_layer(const InterfaceProfile& prof, const QuadratureConfig& cfg = {}) {
    const GridFunction slope = d_dxi(prof.grid, prof.values);
    const bool corr = cfg.diagonal_correction;
    LinearBoundaryOp op = detail::vector_kernel_op(
        "D(f)", prof, corr, [slope](int, int k, double p, double D) {
            const double c = (slope[k] - p) * D * D / pi;
            Eigen::Matrix2d K;
            K << c, c * p, c * p, c * p * p;
            return K;
        });
    const Grid g = prof.grid;
    const GridFunction f = prof.values;
    op.apply = [g, f, slope, corr](const Eigen::VectorXd& x) {
        const int n = g.size();
        Eigen::MatrixXd psi(n, 4);
        psi.col(0) = slope.cwiseProduct(x.head(n));
        psi.col(1) = slope.cwiseProduct(x.tail(n));
        psi.col(2) = x.head(n);
        psi.col(3) = x.tail(n);
        const B0Family B = b0_family(g, f, 2, 3, psi, corr);
        Eigen::VectorXd out(2 * n);
        out.head(n) = (B[0].col(0) + B[1].col(1) - B[1].col(2) - B[2].col(3)) / pi;
        out.tail(n) = (B[1].col(0) + B[2].col(1) - B[2].col(2) - B[3].col(3)) / pi;
        return out;
    };
    return op;
}

/// D(f) by literal quadrature of the (r1 f' - r2)/|r|^4 r r^T kernel; used to
/// cross-check the block representation.
inline LinearBoundaryOp double_layer_direct(const InterfaceProfile& prof, const QuadratureConfig& cfg = {}) {
    const GridFunction slope = d_dxi(prof.grid, prof.values);
    const GridFunction f = prof.values;
    const double dx = prof.grid.spacing();
    return detail::vector_kernel_op("D(f) direct", prof, cfg.diagonal_correction,
                                    [slope, f, dx](int i, int k, double, double) {
                                        const double r1 = (i - k) * dx;
                                        const double r2 = f[i] - f[k];
                                        const double rr = r1 * r1 + r2 * r2;
                                        // pv weight carries 1/eta; restore it here
                                        const double c = r1 * (r1 * slope[k] - r2) / (rr * rr) / pi;
                                        Eigen::Matrix2d K;
                                        K << c * r1 * r1, c * r1 * r2, c * r1 * r2, c * r2 * r2;
                                        return K;
                                    });
}

/// Adjoint double-layer operator D(f)*, with the slope taken at the target.
inline LinearBoundaryOp double_layer_adjoint(const InterfaceProfile& prof, const QuadratureConfig& cfg = {}) {
    const GridFunction slope = d_dxi(prof.grid, prof.values);
    return detail::vector_kernel_op("D(f)*", prof, cfg.diagonal_correction,
                                    [slope](int i, int, double p, double D) {
                                        const double c = (p - slope[i]) * D * D / pi;
                                        Eigen::Matrix2d K;
                                        K << c, c * p, c * p, c * p * p;
                                        return K;
                                    });
}

/// B1(f)[theta] = (1/pi) PV int (-r1 f' + r2)/|r|^2 theta ds (Laplace double layer).
inline LinearBoundaryOp b1(const InterfaceProfile& prof, const QuadratureConfig& cfg = {}) {
    const GridFunction slope = d_dxi(prof.grid, prof.values);
    return detail::scalar_kernel_op("B1(f)", prof, cfg.diagonal_correction,
                                    [slope](int, int k, double p, double D) { return (p - slope[k]) * D / pi; });
}

/// B2(f)[theta] = (1/pi) PV int (r1 + r2 f')/|r|^2 theta ds.
inline LinearBoundaryOp b2(const InterfaceProfile& prof, const QuadratureConfig& cfg = {}) {
    const GridFunction slope = d_dxi(prof.grid, prof.values);
    return detail::scalar_kernel_op("B2(f)", prof, cfg.diagonal_correction,
                                    [slope](int, int k, double p, double D) { return (1.0 + p * slope[k]) * D / pi; });
}

/// The skew-adjoint operator T(f) giving the direct value of d_2 u for the single layer.
inline LinearBoundaryOp t_op(const InterfaceProfile& prof, const QuadratureConfig& cfg = {}) {
    return detail::vector_kernel_op("T(f)", prof, cfg.diagonal_correction, [](int, int, double p, double D) {
        const double c = D * D / (4.0 * pi);
        const double p2 = p * p;
        Eigen::Matrix2d K;
        K << c * (-p2 * p - 3.0 * p), c * (1.0 - p2), c * (1.0 - p2), c * (p - p2 * p);
        return K;
    });
}

/// Hilbert transform H = B_{0,0}/pi.
inline GridFunction hilbert(const Grid& g, const GridFunction& theta, const QuadratureConfig& cfg = {}) {
    return bnm_apply(KernelSpec{g, {}, {}}, theta, cfg) / pi;
}

} // namespace stokes2p
