#pragma once

// Principal-value quadrature for the singular integral family
//
//   B_{n,m}(a_1..a_m)[b_1..b_n, h](xi)
//     = PV int h(xi - eta)/eta * prod_i (d b_i / eta) / prod_i (1 + (d a_i / eta)^2) d eta,
//
// with d u = u(xi) - u(xi - eta). The production rule is the punctured
// trapezoid sum over grid nodes; the optional diagonal correction adds
// h * g'(0) for the omitted cell, where g is the regularized numerator.
// With g'(0) taken from a centered difference at +-h this amounts to
// weighting the two neighbouring nodes by 3/2.

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stokes2p/errors.hpp"
#include "stokes2p/geometry.hpp"

namespace stokes2p {

struct QuadratureConfig {
    bool diagonal_correction = true;
    double oracle_tolerance = 1e-8;
    std::vector<double> excision_sequence{0.2, 0.1, 0.05, 0.025, 0.0125};
    int dense_cap = 4096;

    void validate() const {
        if (!(oracle_tolerance > 0.0)) throw ConfigError("oracle_tolerance must be positive");
        if (excision_sequence.size() < 2) throw ConfigError("excision_sequence needs at least two entries");
        for (std::size_t i = 0; i < excision_sequence.size(); ++i) {
            if (!(excision_sequence[i] > 0.0)) throw ConfigError("excision values must be positive");
            if (i > 0 && !(excision_sequence[i] < excision_sequence[i - 1]))
                throw ConfigError("excision_sequence must be strictly decreasing");
        }
        if (dense_cap < 8) throw ConfigError("dense_cap too small");
    }
};

/// Arguments of one B_{n,m} instance, all sampled on the same grid.
struct KernelSpec {
    Grid grid;
    std::vector<GridFunction> a; // nonlinear arguments, m = a.size()
    std::vector<GridFunction> b; // multilinear arguments, n = b.size()

    int m() const { return static_cast<int>(a.size()); }
    int n() const { return static_cast<int>(b.size()); }

    void check(const GridFunction& h) const {
        if (h.size() != grid.size()) throw ConfigError("density does not match the kernel grid");
        for (const auto& v : a)
            if (v.size() != grid.size()) throw ConfigError("nonlinear argument does not match the kernel grid");
        for (const auto& v : b)
            if (v.size() != grid.size()) throw ConfigError("multilinear argument does not match the kernel grid");
    }

    /// B0_{n,m}(f) = B_{n,m}(f..f)[f..f, .]
    static KernelSpec b0(const Grid& g, const GridFunction& f, int n, int m) {
        return {g, std::vector<GridFunction>(m, f), std::vector<GridFunction>(n, f)};
    }
};

/// Quadrature weight divided by eta for source k seen from target i (k != i).
/// Independent of the grid spacing.
inline double pv_weight(int i, int k, bool correction) {
    const int d = i - k;
    const double w = 1.0 / d;
    return (correction && (d == 1 || d == -1)) ? 1.5 * w : w;
}

namespace detail {

inline double kernel_factor(const KernelSpec& s, int i, int k, double eta) {
    double num = 1.0;
    for (const auto& bj : s.b) num *= (bj[i] - bj[k]) / eta;
    double den = 1.0;
    for (const auto& aj : s.a) {
        const double p = (aj[i] - aj[k]) / eta;
        den *= 1.0 + p * p;
    }
    return num / den;
}

} // namespace detail

/// Punctured-trapezoid evaluation at the given target nodes (all nodes when empty).
/// Returns a full grid function; non-target entries are zero.
inline GridFunction bnm_apply(const KernelSpec& spec, const GridFunction& h, const QuadratureConfig& cfg = {},
                              const std::vector<int>& targets = {}) {
    spec.check(h);
    const int n = spec.grid.size();
    const double dx = spec.grid.spacing();
    std::vector<int> tg = targets;
    if (tg.empty()) {
        tg.resize(n);
        for (int i = 0; i < n; ++i) tg[i] = i;
    }
    std::vector<int> support;
    for (int k = 0; k < n; ++k)
        if (h[k] != 0.0) support.push_back(k);

    GridFunction out = GridFunction::Zero(n);
#pragma omp parallel for schedule(static)
    for (std::size_t t = 0; t < tg.size(); ++t) {
        const int i = tg[t];
        if (i < 0 || i >= n) continue;
        double acc = 0.0;
        for (int k : support) {
            if (k == i) continue;
            const double eta = (i - k) * dx;
            acc += pv_weight(i, k, cfg.diagonal_correction) * h[k] * detail::kernel_factor(spec, i, k, eta);
        }
        out[i] = acc;
    }
    return out;
}

/// Dense N x N matrix of h -> B_{n,m}[..., h].
inline Eigen::MatrixXd bnm_assemble(const KernelSpec& spec, const QuadratureConfig& cfg = {}) {
    const int n = spec.grid.size();
    if (n > cfg.dense_cap)
        throw SizeError("dense assembly of " + std::to_string(n) + " nodes exceeds cap " +
                        std::to_string(cfg.dense_cap));
    spec.check(GridFunction::Zero(n));
    const double dx = spec.grid.spacing();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            if (k == i) continue;
            M(i, k) = pv_weight(i, k, cfg.diagonal_correction) * detail::kernel_factor(spec, i, k, (i - k) * dx);
        }
    return M;
}

// ---------------------------------------------------------------------------
// Fused evaluation of the B0 family used by the layer-potential operators.

/// out[n] is an N x r matrix holding B0_{n,m}(f)[psi_j] in column j, n = 0..nmax.
using B0Family = std::vector<Eigen::MatrixXd>;

inline B0Family b0_family(const Grid& g, const GridFunction& f, int m, int nmax, const Eigen::MatrixXd& psi,
                          bool correction = true) {
    const int n = g.size();
    const int r = static_cast<int>(psi.cols());
    if (f.size() != n || psi.rows() != n) throw ConfigError("b0_family: argument does not match the grid");
    const double dx = g.spacing();
    // Row-major copy so the densities at one source are contiguous.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> P = psi;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> acc =
        Eigen::MatrixXd::Zero(n, (nmax + 1) * r);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        std::vector<double> row((nmax + 1) * r, 0.0);
        std::vector<double> pw(nmax + 1);
        for (int k = 0; k < n; ++k) {
            if (k == i) continue;
            const double eta = (i - k) * dx;
            const double p = (f[i] - f[k]) / eta;
            const double d = 1.0 / (1.0 + p * p);
            double base = pv_weight(i, k, correction);
            for (int q = 0; q < m; ++q) base *= d;
            pw[0] = base;
            for (int q = 1; q <= nmax; ++q) pw[q] = pw[q - 1] * p;
            const double* src = P.data() + static_cast<std::ptrdiff_t>(k) * r;
            for (int q = 0; q <= nmax; ++q) {
                double* dst = row.data() + q * r;
                for (int j = 0; j < r; ++j) dst[j] += pw[q] * src[j];
            }
        }
        for (int c = 0; c < (nmax + 1) * r; ++c) acc(i, c) = row[c];
    }
    B0Family out(nmax + 1, Eigen::MatrixXd(n, r));
    for (int q = 0; q <= nmax; ++q) out[q] = acc.middleCols(q * r, r);
    return out;
}

/// Directional derivatives dB0_{n,2}(f)[g][psi_j] for n = 0..nmax, from
///   dB0_{n,2}(f)[g][h] = n B_{n,2}(f,f)[g,f..f,h] - 4 B_{n+2,3}(f,f,f)[g,f..f,h].
inline B0Family b0_family_derivative(const Grid& grid, const GridFunction& f, const GridFunction& g, int nmax,
                                     const Eigen::MatrixXd& psi, bool correction = true) {
    const int n = grid.size();
    const int r = static_cast<int>(psi.cols());
    if (f.size() != n || g.size() != n || psi.rows() != n)
        throw ConfigError("b0_family_derivative: argument does not match the grid");
    const double dx = grid.spacing();
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> P = psi;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> acc =
        Eigen::MatrixXd::Zero(n, (nmax + 1) * r);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        std::vector<double> row((nmax + 1) * r, 0.0);
        std::vector<double> pw(nmax + 2);
        for (int k = 0; k < n; ++k) {
            if (k == i) continue;
            const double eta = (i - k) * dx;
            const double p = (f[i] - f[k]) / eta;
            const double q = (g[i] - g[k]) / eta;
            const double d = 1.0 / (1.0 + p * p);
            const double w = pv_weight(i, k, correction) * q * d * d;
            pw[0] = 1.0;
            for (int s = 1; s <= nmax + 1; ++s) pw[s] = pw[s - 1] * p;
            const double* src = P.data() + static_cast<std::ptrdiff_t>(k) * r;
            for (int s = 0; s <= nmax; ++s) {
                const double lead = s > 0 ? s * pw[s - 1] : 0.0;
                const double coef = w * (lead - 4.0 * pw[s + 1] * d);
                double* dst = row.data() + s * r;
                for (int j = 0; j < r; ++j) dst[j] += coef * src[j];
            }
        }
        for (int c = 0; c < (nmax + 1) * r; ++c) acc(i, c) = row[c];
    }
    B0Family out(nmax + 1, Eigen::MatrixXd(n, r));
    for (int s = 0; s <= nmax; ++s) out[s] = acc.middleCols(s * r, r);
    return out;
}

// ---------------------------------------------------------------------------
// Excision oracle

using RealFn = std::function<double(double)>;

/// Continuous version of a KernelSpec for the oracle. The source variable
/// s = xi - eta is restricted to [support_lo, support_hi], outside of which
/// the density is negligible.
struct ContinuousKernel {
    std::vector<RealFn> a;
    std::vector<RealFn> b;
    RealFn h;
    double support_lo = -1.0;
    double support_hi = 1.0;
};

struct OracleResult {
    double value = 0.0;
    double error_estimate = 0.0;
    std::vector<double> excised;  // I(eps_j) for each excision
    std::vector<double> table;    // last row of the Neville table
};

namespace detail {

/// Neville extrapolation of (x_j, y_j) to x = 0. Returns the successive
/// diagonal estimates, the last being the highest-order one.
inline std::vector<double> neville_to_zero(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> p = y;
    std::vector<double> diag{p[0]};
    for (std::size_t lvl = 1; lvl < n; ++lvl) {
        for (std::size_t i = 0; i + lvl < n; ++i) {
            const double xa = x[i], xb = x[i + lvl];
            p[i] = (xb * p[i] - xa * p[i + 1]) / (xb - xa);
        }
        diag.push_back(p[0]);
    }
    return diag;
}

/// Richardson extrapolation to eps = 0 of values with expansion
/// I(eps) = I0 + c1 eps + c3 eps^3 + c5 eps^5 + ..., as produced by a symmetric
/// excision. Entry k uses the first k + 1 points.
inline std::vector<double> richardson_odd(const std::vector<double>& eps, const std::vector<double>& y) {
    std::vector<double> out;
    for (std::size_t n = 1; n <= eps.size(); ++n) {
        Eigen::MatrixXd A(n, n);
        Eigen::VectorXd b(n);
        for (std::size_t i = 0; i < n; ++i) {
            A(i, 0) = 1.0;
            for (std::size_t m = 1; m < n; ++m) A(i, m) = std::pow(eps[i] / eps[0], 2.0 * m - 1.0);
            b[i] = y[i];
        }
        out.push_back(A.colPivHouseholderQr().solve(b)[0]);
    }
    return out;
}

} // namespace detail

/// Brute-force PV value at xi: adaptive Gauss-Kronrod quadrature with symmetric
/// excision (-eps, eps), extrapolated to eps -> 0 across the excision sequence
/// in odd powers of eps.
inline OracleResult pv_oracle(const ContinuousKernel& ker, double xi, const QuadratureConfig& cfg = {}) {
    cfg.validate();
    auto integrand = [&](double eta) {
        const double s = xi - eta;
        double num = ker.h(s) / eta;
        for (const auto& bj : ker.b) num *= (bj(xi) - bj(s)) / eta;
        double den = 1.0;
        for (const auto& aj : ker.a) {
            const double p = (aj(xi) - aj(s)) / eta;
            den *= 1.0 + p * p;
        }
        return num / den;
    };
    const double eta_lo = xi - ker.support_hi;
    const double eta_hi = xi - ker.support_lo;
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double qtol = std::min(1e-12, 1e-3 * cfg.oracle_tolerance);
    auto integrate = [&](auto&& fn, double a, double b) {
        if (!(b > a)) return 0.0;
        return GK::integrate(fn, a, b, 20, qtol);
    };

    OracleResult res;
    std::vector<double> eps = cfg.excision_sequence;
    for (double e : eps) {
        double total = 0.0;
        if (eta_hi <= e && eta_lo >= -e) {
            total = 0.0;
        } else if (eta_lo >= e || eta_hi <= -e) {
            // target outside the excision-free window: ordinary integral
            total = integrate(integrand, std::max(eta_lo, e), eta_hi) +
                    integrate(integrand, eta_lo, std::min(eta_hi, -e));
        } else {
            // symmetric part paired so that the 1/eta singularity cancels
            const double A = std::min(eta_hi, -eta_lo);
            if (A > e)
                total += integrate([&](double t) { return integrand(t) + integrand(-t); }, e, A);
            if (eta_hi > std::max(A, e)) total += integrate(integrand, std::max(A, e), eta_hi);
            if (eta_lo < -std::max(A, e)) total += integrate(integrand, eta_lo, -std::max(A, e));
        }
        res.excised.push_back(total);
    }
    res.table = detail::richardson_odd(eps, res.excised);
    res.value = res.table.back();
    res.error_estimate = std::abs(res.table.back() - res.table[res.table.size() - 2]);
    const double scale = std::max(1.0, std::abs(res.value));
    if (!std::isfinite(res.value) || res.error_estimate > cfg.oracle_tolerance * scale) {
        throw OracleFailure("pv_oracle: extrapolation did not converge at xi=" + std::to_string(xi) +
                                " (estimate " + std::to_string(res.error_estimate) + ")",
                            res.table);
    }
    return res;
}

/// Smooth interpolant of a sampled grid function (6-point Lagrange, zero outside the grid),
/// for feeding sampled data to the oracle.
inline RealFn interpolant(const Grid& g, GridFunction values) {
    return [g, v = std::move(values)](double x) {
        const double h = g.spacing();
        const double t = (x + g.half_width) / h;
        const int base = static_cast<int>(std::floor(t)) - 2;
        double acc = 0.0;
        for (int j = 0; j < 6; ++j) {
            const int idx = base + j;
            if (idx < 0 || idx >= g.size()) continue;
            double l = 1.0;
            for (int m = 0; m < 6; ++m)
                if (m != j) l *= (t - (base + m)) / static_cast<double>(j - m);
            acc += l * v[idx];
        }
        return acc;
    };
}

} // namespace stokes2p
