#pragma once

// Spectral and linearization diagnostics: resolvent scans of the double-layer
// operator, the exact derivative of Phi, and the frozen-coefficient
// multiplier approximation on a localization family.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "stokes2p/bvp.hpp"
#include "stokes2p/errors.hpp"
#include "stokes2p/fields.hpp"
#include "stokes2p/geometry.hpp"
#include "stokes2p/operators.hpp"
#include "stokes2p/quadrature.hpp"
#include "stokes2p/spectral.hpp"

namespace stokes2p {

// ---------------------------------------------------------------------------
// Resolvent scans

enum class NormFlavor { flat, weighted };

struct ResolventRow {
    int nodes = 0;
    double lambda = 0.0;
    double sigma_min = 0.0;         // lambda - D(f)
    double sigma_min_adjoint = 0.0; // lambda - D(f)*
    double norm_D = 0.0;            // largest singular value of D(f)
};

struct ResolventReport {
    NormFlavor norm = NormFlavor::flat;
    double s_exp = 0.0;
    std::vector<ResolventRow> rows;

    /// max/min - 1 of sigma_min across grids at fixed lambda
    double variation(double lambda) const {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& r : rows)
            if (r.lambda == lambda) {
                lo = std::min(lo, r.sigma_min);
                hi = std::max(hi, r.sigma_min);
            }
        return lo > 0.0 ? hi / lo - 1.0 : std::numeric_limits<double>::infinity();
    }
};

struct ResolventConfig {
    NormFlavor norm = NormFlavor::flat;
    double s_exp = 0.0; // Fourier weight exponent for the weighted flavor
    bool adjoint = true;
    QuadratureConfig quadrature;
};

namespace detail {

inline Eigen::MatrixXd conjugate_weighted(const Grid& g, const Eigen::MatrixXd& A, double s_exp) {
    const int n = g.size();
    const Eigen::MatrixXd W = multiplier_matrix(g, [&](double k) { return std::pow(1.0 + k * k, 0.5 * s_exp); });
    const Eigen::MatrixXd Wi = multiplier_matrix(g, [&](double k) { return std::pow(1.0 + k * k, -0.5 * s_exp); });
    Eigen::MatrixXd out(2 * n, 2 * n);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) out.block(a * n, b * n, n, n) = W * A.block(a * n, b * n, n, n) * Wi;
    return out;
}

inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& A) {
    return Eigen::BDCSVD<Eigen::MatrixXd>(A).singularValues();
}

} // namespace detail

/// Smallest singular values of lambda - D(f) (and lambda - D(f)*) over the given
/// grids; profile_at builds the profile for a node count.
inline ResolventReport resolvent_scan(const std::function<InterfaceProfile(int)>& profile_at,
                                      const std::vector<double>& lambdas, const std::vector<int>& node_counts,
                                      const ResolventConfig& cfg = {}) {
    ResolventReport rep;
    rep.norm = cfg.norm;
    rep.s_exp = cfg.s_exp;
    for (int n : node_counts) {
        const InterfaceProfile f = profile_at(n);
        Eigen::MatrixXd D = double_layer(f, cfg.quadrature).matrix(cfg.quadrature.dense_cap);
        Eigen::MatrixXd Ds;
        if (cfg.adjoint) Ds = double_layer_adjoint(f, cfg.quadrature).matrix(cfg.quadrature.dense_cap);
        if (cfg.norm == NormFlavor::weighted) {
            D = detail::conjugate_weighted(f.grid, D, cfg.s_exp);
            if (cfg.adjoint) Ds = detail::conjugate_weighted(f.grid, Ds, cfg.s_exp);
        }
        const double normD = detail::singular_values(D)[0];
        for (double lam : lambdas) {
            ResolventRow row;
            row.nodes = n;
            row.lambda = lam;
            row.norm_D = normD;
            Eigen::MatrixXd A = -D;
            A.diagonal().array() += lam;
            row.sigma_min = detail::singular_values(A).minCoeff();
            if (cfg.adjoint) {
                Eigen::MatrixXd B = -Ds;
                B.diagonal().array() += lam;
                row.sigma_min_adjoint = detail::singular_values(B).minCoeff();
            }
            rep.rows.push_back(row);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Linearization of Phi

/// a_1 = f'/omega^3 and a_2 = 1/omega^3, the derivatives of phi_1, phi_2 in f'.
struct ACoefficients {
    GridFunction a1, a2;
};

inline ACoefficients a_coeffs(const GridFunction& slope) {
    ACoefficients c{GridFunction(slope.size()), GridFunction(slope.size())};
    for (Eigen::Index i = 0; i < slope.size(); ++i) {
        const double w = std::sqrt(1.0 + slope[i] * slope[i]);
        c.a2[i] = 1.0 / (w * w * w);
        c.a1[i] = slope[i] * c.a2[i];
    }
    return c;
}

/// dG(f)[g] by term-wise differentiation of the B0 representation of G.
inline VectorDensity g_trace_derivative(const InterfaceProfile& f, const FluidParams& params, const GridFunction& g,
                                        const QuadratureConfig& qcfg = {}) {
    const Grid& grid = f.grid;
    const GridFunction slope = d_dxi(grid, f.values);
    const GridFunction dg = d_dxi(grid, g);
    const PhiCoefficients c = phi_coeffs(slope);
    const ACoefficients a = a_coeffs(slope);
    const Eigen::MatrixXd psi = detail::g_densities(slope, c);

    // d psi_i = (...) g'
    const Eigen::Index n = slope.size();
    Eigen::MatrixXd dpsi(n, 4);
    const GridFunction fa1 = slope.cwiseProduct(a.a1);
    dpsi.col(0) = (a.a1 + c.phi2 + slope.cwiseProduct(a.a2)).cwiseProduct(dg);
    dpsi.col(1) = (3.0 * c.phi1 + 3.0 * fa1 - a.a2).cwiseProduct(dg);
    dpsi.col(2) = (c.phi1 + fa1 + a.a2).cwiseProduct(dg);
    dpsi.col(3) = (c.phi1 + fa1 - 3.0 * a.a2).cwiseProduct(dg);

    const bool corr = qcfg.diagonal_correction;
    const B0Family dB = b0_family_derivative(grid, f.values, g, 3, psi, corr);
    const B0Family B = b0_family(grid, f.values, 2, 3, dpsi, corr);
    B0Family sum(4);
    for (int k = 0; k < 4; ++k) sum[k] = dB[k] + B[k];
    return detail::g_combine(sum, params.sigma);
}

/// dD(f)[g] applied to a fixed density gamma.
inline VectorDensity double_layer_derivative(const InterfaceProfile& f, const GridFunction& g,
                                             const VectorDensity& gamma, const QuadratureConfig& qcfg = {}) {
    const Grid& grid = f.grid;
    const GridFunction slope = d_dxi(grid, f.values);
    const GridFunction dg = d_dxi(grid, g);
    const Eigen::Index n = slope.size();
    const bool corr = qcfg.diagonal_correction;

    Eigen::MatrixXd psi(n, 4);
    psi.col(0) = slope.cwiseProduct(gamma.c1);
    psi.col(1) = slope.cwiseProduct(gamma.c2);
    psi.col(2) = gamma.c1;
    psi.col(3) = gamma.c2;
    const B0Family dB = b0_family_derivative(grid, f.values, g, 3, psi, corr);

    Eigen::MatrixXd psi2(n, 2);
    psi2.col(0) = dg.cwiseProduct(gamma.c1);
    psi2.col(1) = dg.cwiseProduct(gamma.c2);
    const B0Family B = b0_family(grid, f.values, 2, 2, psi2, corr);

    return {(dB[0].col(0) + dB[1].col(1) - dB[1].col(2) - dB[2].col(3) + B[0].col(0) + B[1].col(1)) / pi,
            (dB[1].col(0) + dB[2].col(1) - dB[2].col(2) - dB[3].col(3) + B[1].col(0) + B[2].col(1)) / pi};
}

/// The operator Psi(tau) of the homotopy between the flat-state multiplier
/// (tau = 0) and the derivative dPhi(f0) (tau = 1):
///   (1 + 2 a tau D(f0)) C = dG(tau f0)[g] - 2 a tau dD(f0)[g] gamma0,
///   Psi(tau)[g] = (2/(mu+ + mu-)) (<C | (-tau f0', 1)> - tau gamma0_1 g').
class Linearization {
  public:
    Linearization(InterfaceProfile f0, FluidParams params, double tau = 1.0, SolverConfig solver = {},
                  QuadratureConfig quad = {})
        : f0_(std::move(f0)), params_(params), tau_(tau), solver_(solver), quad_(quad) {
        params_.validate();
        if (!(tau_ >= 0.0 && tau_ <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
        slope_ = d_dxi(f0_.grid, f0_.values);
        ftau_ = InterfaceProfile(f0_.grid, tau_ * f0_.values, f0_.decay_tol);
        const DensitySolve d = solve_density(f0_, params_, solver_, quad_);
        gamma0_ = d.gamma;
        beta0_ = d.beta;
        D_ = double_layer(f0_, quad_);
    }

    const VectorDensity& gamma0() const { return gamma0_; }
    const VectorDensity& beta0() const { return beta0_; }
    const InterfaceProfile& base() const { return f0_; }
    int last_iterations() const { return last_iterations_; }

    GridFunction operator()(const GridFunction& g) const {
        if (g.size() != f0_.size()) throw ConfigError("linearization argument does not match the grid");
        const double a = params_.a_mu();
        VectorDensity rhs = g_trace_derivative(ftau_, params_, g, quad_);
        if (a != 0.0 && tau_ != 0.0) rhs = rhs - double_layer_derivative(f0_, g, gamma0_, quad_) * (2.0 * a * tau_);
        VectorDensity C = rhs;
        if (a != 0.0 && tau_ != 0.0) {
            const KrylovResult r = solve_second_kind(D_, a * tau_, rhs.stacked(), solver_);
            last_iterations_ = r.iterations;
            C = VectorDensity::unstack(r.x);
        }
        const GridFunction dg = d_dxi(f0_.grid, g);
        const GridFunction nc = C.c2 - tau_ * slope_.cwiseProduct(C.c1);
        return (2.0 / (params_.mu_plus + params_.mu_minus)) * (nc - tau_ * gamma0_.c1.cwiseProduct(dg));
    }

    /// Frozen coefficients at node i: alpha = sigma/(2(mu+ + mu-)) (a2 + tau f0' a1)(tau f0),
    /// beta = -2 tau gamma0_1 / (mu+ + mu-).
    double alpha(int i) const {
        const double s = tau_ * slope_[i];
        const double w = std::sqrt(1.0 + s * s);
        return params_.flat_rate() / w;
    }
    double beta(int i) const { return -2.0 * tau_ * gamma0_.c1[i] / (params_.mu_plus + params_.mu_minus); }

  private:
    InterfaceProfile f0_;
    FluidParams params_;
    double tau_;
    SolverConfig solver_;
    QuadratureConfig quad_;
    GridFunction slope_;
    InterfaceProfile ftau_;
    VectorDensity gamma0_, beta0_;
    LinearBoundaryOp D_;
    mutable int last_iterations_ = 0;
};

inline Linearization linearize_analytic(const InterfaceProfile& f0, const FluidParams& params,
                                        const SolverConfig& solver = {}, const QuadratureConfig& quad = {}) {
    return Linearization(f0, params, 1.0, solver, quad);
}

/// Central difference (Phi(f0 + eps g) - Phi(f0 - eps g)) / (2 eps).
inline GridFunction linearize_fd(const InterfaceProfile& f0, const FluidParams& params, const GridFunction& g, double eps,
                                 const SolverConfig& solver = {}, const QuadratureConfig& quad = {}) {
    const InterfaceProfile fp(f0.grid, f0.values + eps * g, f0.decay_tol);
    const InterfaceProfile fm(f0.grid, f0.values - eps * g, f0.decay_tol);
    return (phi_rhs(fp, params, solver, quad) - phi_rhs(fm, params, solver, quad)) / (2.0 * eps);
}

// ---------------------------------------------------------------------------
// Localization family and frozen-coefficient multipliers

struct LocalizationFamily {
    double eps = 0.5;
    Grid grid;
    std::vector<GridFunction> windows; // interior windows, then the outer one
    std::vector<double> anchors;       // one per interior window

    int interior_count() const { return static_cast<int>(anchors.size()); }

    /// max |sum pi_j^2 - 1|
    double partition_defect() const {
        GridFunction s = GridFunction::Zero(grid.size());
        for (const auto& w : windows) s += w.cwiseProduct(w);
        return (s.array() - 1.0).abs().maxCoeff();
    }
};

/// Bumps (1 - t^2)^3 of support length eps centred every eps/2 on [-1/eps, 1/eps],
/// plus an outer window equal to one for |xi| >= 1/eps + eps/2, normalized so
/// that the squares sum to one.
inline LocalizationFamily localization_family(const Grid& g, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("localization eps must lie in (0, 1)");
    const double R = 1.0 / eps;
    if (R + eps >= g.half_width) throw ConfigError("localization family does not fit inside the grid");
    if (eps < 8.0 * g.spacing()) throw ConfigError("localization windows are not resolved by the grid");

    auto bump = [](double t) { return std::abs(t) < 1.0 ? std::pow(1.0 - t * t, 3) : 0.0; };
    auto smoothstep = [](double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    };

    LocalizationFamily fam;
    fam.eps = eps;
    fam.grid = g;
    const int J = static_cast<int>(std::floor(R / (0.5 * eps) + 1e-9));
    std::vector<GridFunction> m;
    for (int j = -J; j <= J; ++j) {
        const double c = 0.5 * eps * j;
        fam.anchors.push_back(c);
        m.push_back(g.sample([&](double x) { return bump((x - c) / (0.5 * eps)); }));
    }
    m.push_back(g.sample([&](double x) { return smoothstep((std::abs(x) - R) / (0.5 * eps)); }));

    GridFunction s = GridFunction::Zero(g.size());
    for (const auto& w : m) s += w.cwiseProduct(w);
    if ((s.array() <= 0.0).any()) throw ConfigError("localization windows leave gaps");
    const GridFunction root = s.cwiseSqrt();
    for (auto& w : m) fam.windows.push_back(w.cwiseQuotient(root));
    return fam;
}

struct FrozenRow {
    int window = 0;
    double anchor = 0.0;
    double wavenumber = 0.0;
    double alpha = 0.0, beta = 0.0;
    double residual = 0.0; // ||pi_j Psi[g] - A_j[pi_j g]||_{H^{s-1}}
    double signal = 0.0;   // ||A_j[pi_j g]||_{H^{s-1}}
    double ratio() const { return signal > 0.0 ? residual / signal : 0.0; }
};

struct FrozenReport {
    double tau = 1.0;
    double eps = 0.5;
    double s_exp = 0.75;
    double partition_defect = 0.0;
    std::vector<FrozenRow> rows;

    /// Ratios for one window, ordered as the wavenumber list.
    std::vector<double> ratios(int window) const {
        std::vector<double> r;
        for (const auto& row : rows)
            if (row.window == window) r.push_back(row.ratio());
        return r;
    }
};

struct FrozenConfig {
    double tau = 1.0;
    double eps = 0.5;
    double s_exp = 0.75;               // exponent of the H^{s-1} weight
    std::vector<double> wavenumbers{8.0, 16.0, 32.0};
    std::vector<int> windows;          // interior window indices; empty: all
    SolverConfig solver;
    QuadratureConfig quadrature;
};

/// Applies Psi(tau) to packets pi_j(xi) cos(k (xi - xi_j)) and compares with the
/// frozen multiplier A_j = -alpha_j |D| + beta_j d/dxi acting on pi_j g.
inline FrozenReport frozen_multiplier_check(const InterfaceProfile& f0, const FluidParams& params,
                                            const FrozenConfig& cfg = {}) {
    const LocalizationFamily fam = localization_family(f0.grid, cfg.eps);
    const Linearization L(f0, params, cfg.tau, cfg.solver, cfg.quadrature);
    const Grid& g = f0.grid;

    std::vector<int> idx = cfg.windows;
    if (idx.empty())
        for (int j = 0; j < fam.interior_count(); ++j) idx.push_back(j);

    FrozenReport rep;
    rep.tau = cfg.tau;
    rep.eps = cfg.eps;
    rep.s_exp = cfg.s_exp;
    rep.partition_defect = fam.partition_defect();
    for (int j : idx) {
        if (j < 0 || j >= fam.interior_count()) throw ConfigError("window index out of range");
        const double c = fam.anchors[j];
        const int node = nearest_node(g, c);
        const double al = L.alpha(node), be = L.beta(node);
        const GridFunction& pj = fam.windows[j];
        for (double k : cfg.wavenumbers) {
            const GridFunction packet = pj.cwiseProduct(g.sample([&](double x) { return std::cos(k * (x - c)); }));
            const GridFunction lhs = pj.cwiseProduct(L(packet));
            const GridFunction loc = pj.cwiseProduct(packet);
            const GridFunction rhs = -al * abs_derivative(g, loc) + be * spectral_derivative(g, loc);
            FrozenRow row;
            row.window = j;
            row.anchor = c;
            row.wavenumber = k;
            row.alpha = al;
            row.beta = be;
            row.residual = sobolev_norm(g, lhs - rhs, cfg.s_exp);
            row.signal = sobolev_norm(g, rhs, cfg.s_exp);
            rep.rows.push_back(row);
        }
    }
    return rep;
}

} // namespace stokes2p
