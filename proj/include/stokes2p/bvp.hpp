#pragma once

// Fixed-time transmission problem: the single-layer trace G(f), the density
// beta(f) of the second-kind equation, velocity traces and the normal
// velocity Phi(f).

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "stokes2p/errors.hpp"
#include "stokes2p/geometry.hpp"
#include "stokes2p/krylov.hpp"
#include "stokes2p/operators.hpp"
#include "stokes2p/quadrature.hpp"

namespace stokes2p {

struct FluidParams {
    double mu_plus = 1.0;
    double mu_minus = 1.0;
    double sigma = 1.0;

    void validate() const {
        if (!(mu_plus > 0.0) || !(mu_minus > 0.0) || !(sigma > 0.0) || !std::isfinite(mu_plus) ||
            !std::isfinite(mu_minus) || !std::isfinite(sigma))
            throw ConfigError("viscosities and surface tension must be positive and finite");
    }
    double a_mu() const { return (mu_plus - mu_minus) / (mu_plus + mu_minus); }
    /// sigma / (2 (mu+ + mu-)), the flat-state damping constant.
    double flat_rate() const { return sigma / (2.0 * (mu_plus + mu_minus)); }
};

enum class SolverMethod { krylov, dense };

struct SolverConfig {
    SolverMethod method = SolverMethod::krylov;
    double residual_tol = 1e-10;
    int max_iterations = 500;
    int restart = 60;

    void validate() const {
        if (!(residual_tol > 0.0)) throw ConfigError("residual_tol must be positive");
        if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
        if (restart < 1) throw ConfigError("restart must be at least 1");
    }
};

/// phi_1 = f'^2/(omega + omega^2), phi_2 = f'/omega.
struct PhiCoefficients {
    GridFunction phi1, phi2;
};

inline PhiCoefficients phi_coeffs(const GridFunction& slope) {
    PhiCoefficients c{GridFunction(slope.size()), GridFunction(slope.size())};
    for (Eigen::Index i = 0; i < slope.size(); ++i) {
        const double s = slope[i];
        const double w = std::sqrt(1.0 + s * s);
        c.phi1[i] = s * s / (w + w * w);
        c.phi2[i] = s / w;
    }
    return c;
}

inline PhiCoefficients phi_coeffs(const InterfaceProfile& f) { return phi_coeffs(d_dxi(f.grid, f.values)); }

namespace detail {

/// The four combinations of phi_1, phi_2 entering G.
inline Eigen::MatrixXd g_densities(const GridFunction& slope, const PhiCoefficients& c) {
    const Eigen::Index n = slope.size();
    Eigen::MatrixXd psi(n, 4);
    psi.col(0) = c.phi1 + slope.cwiseProduct(c.phi2);
    psi.col(1) = 3.0 * slope.cwiseProduct(c.phi1) - c.phi2;
    psi.col(2) = slope.cwiseProduct(c.phi1) + c.phi2;
    psi.col(3) = slope.cwiseProduct(c.phi1) - 3.0 * c.phi2;
    return psi;
}

/// G from the B0 blocks of g_densities: columns psi_1..psi_4.
inline VectorDensity g_combine(const B0Family& B, double sigma) {
    const double s = sigma / (4.0 * pi);
    return {s * (B[0].col(0) - B[2].col(0) + B[1].col(1) + B[3].col(2)),
            s * (B[1].col(0) - B[3].col(0) - B[0].col(2) + B[2].col(3))};
}

} // namespace detail

/// Single-layer trace G(f), scaled by sigma/(4 pi).
inline VectorDensity g_trace(const InterfaceProfile& f, const FluidParams& params, const QuadratureConfig& qcfg = {}) {
    const GridFunction slope = d_dxi(f.grid, f.values);
    const PhiCoefficients c = phi_coeffs(slope);
    const B0Family B = b0_family(f.grid, f.values, 2, 3, detail::g_densities(slope, c), qcfg.diagonal_correction);
    return detail::g_combine(B, params.sigma);
}

struct DensitySolve {
    VectorDensity beta;  // 2 a_mu gamma
    VectorDensity gamma; // (1 + 2 a_mu D)^-1 G
    int iterations = 0;
    double relative_residual = 0.0;
    std::vector<double> residual_history;
};

/// Solves (1 + 2a D) x = rhs for a stacked right-hand side.
inline KrylovResult solve_second_kind(const LinearBoundaryOp& D, double a, const Eigen::VectorXd& rhs,
                                      const SolverConfig& cfg, const Eigen::VectorXd& x0 = {}) {
    cfg.validate();
    auto A = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x + 2.0 * a * D(x); };
    if (cfg.method == SolverMethod::dense) {
        Eigen::MatrixXd M = D.matrix();
        M *= 2.0 * a;
        M.diagonal().array() += 1.0;
        KrylovResult r;
        r.x = M.partialPivLu().solve(rhs);
        const double bn = rhs.norm();
        const double rel = bn == 0.0 ? 0.0 : (M * r.x - rhs).norm() / bn;
        r.residual_history = {rel};
        r.converged = std::isfinite(rel) && rel <= cfg.residual_tol;
        if (!r.converged) throw SolverFailure("dense solve residual " + std::to_string(rel) + " above tolerance",
                                              r.residual_history);
        return r;
    }
    KrylovResult r = gmres(A, rhs, cfg.residual_tol, cfg.max_iterations, cfg.restart, x0);
    if (!r.converged)
        throw SolverFailure("GMRES did not reach residual " + std::to_string(cfg.residual_tol) + " in " +
                                std::to_string(r.iterations) + " iterations",
                            r.residual_history);
    return r;
}

/// beta(f) = 2 a_mu (1 + 2 a_mu D(f))^-1 G(f).
inline DensitySolve solve_density(const InterfaceProfile& f, const FluidParams& params, const VectorDensity& G,
                                  const SolverConfig& cfg = {}, const QuadratureConfig& qcfg = {}) {
    params.validate();
    const double a = params.a_mu();
    DensitySolve out;
    const int n = f.size();
    if (a == 0.0) {
        out.gamma = G;
        out.beta = VectorDensity::zero(n);
        out.residual_history = {0.0};
        return out;
    }
    const LinearBoundaryOp D = double_layer(f, qcfg);
    const KrylovResult r = solve_second_kind(D, a, G.stacked(), cfg);
    out.gamma = VectorDensity::unstack(r.x);
    out.beta = out.gamma * (2.0 * a);
    out.iterations = r.iterations;
    out.residual_history = r.residual_history;
    out.relative_residual = r.residual_history.empty() ? 0.0 : r.residual_history.back();
    return out;
}

inline DensitySolve solve_density(const InterfaceProfile& f, const FluidParams& params, const SolverConfig& cfg = {},
                                  const QuadratureConfig& qcfg = {}) {
    return solve_density(f, params, g_trace(f, params, qcfg), cfg, qcfg);
}

/// v^{+-} = G/mu_{+-} + (1/mu_{+-}) (-D(f) +- 1/2) beta.
inline std::pair<VectorDensity, VectorDensity> velocity_traces(const InterfaceProfile& f, const FluidParams& params,
                                                               const VectorDensity& G, const VectorDensity& beta,
                                                               const QuadratureConfig& qcfg = {}) {
    const VectorDensity Db = double_layer(f, qcfg)(beta);
    const VectorDensity plus = (G - Db + beta * 0.5) * (1.0 / params.mu_plus);
    const VectorDensity minus = (G - Db - beta * 0.5) * (1.0 / params.mu_minus);
    return {plus, minus};
}

/// Pointwise <u | (-f', 1)>.
inline GridFunction normal_component(const VectorDensity& u, const GridFunction& slope) {
    return u.c2 - slope.cwiseProduct(u.c1);
}

/// Phi(f) in the viscosity-robust form (2/(mu+ + mu-)) <(1 + 2a D)^-1 G | (-f', 1)>.
inline GridFunction phi_from_gamma(const InterfaceProfile& f, const FluidParams& params, const VectorDensity& gamma) {
    return (2.0 / (params.mu_plus + params.mu_minus)) * normal_component(gamma, d_dxi(f.grid, f.values));
}

struct PhiEvaluation {
    GridFunction phi;
    DensitySolve density;
};

inline PhiEvaluation phi_evaluate(const InterfaceProfile& f, const FluidParams& params, const SolverConfig& cfg = {},
                                  const QuadratureConfig& qcfg = {}) {
    PhiEvaluation e;
    e.density = solve_density(f, params, cfg, qcfg);
    e.phi = phi_from_gamma(f, params, e.density.gamma);
    return e;
}

inline GridFunction phi_rhs(const InterfaceProfile& f, const FluidParams& params, const SolverConfig& cfg = {},
                            const QuadratureConfig& qcfg = {}) {
    return phi_evaluate(f, params, cfg, qcfg).phi;
}

/// (1/(mu+ - mu-)) <beta | (-f', 1)>; requires unequal viscosities.
inline GridFunction phi_from_beta(const InterfaceProfile& f, const FluidParams& params, const VectorDensity& beta) {
    if (params.mu_plus == params.mu_minus) throw ConfigError("beta form of Phi needs unequal viscosities");
    return normal_component(beta, d_dxi(f.grid, f.values)) / (params.mu_plus - params.mu_minus);
}

/// (1/mu+) <G - D beta + beta/2 | (-f', 1)>, the normal component of v^+.
inline GridFunction phi_from_trace(const InterfaceProfile& f, const FluidParams& params, const VectorDensity& G,
                                   const VectorDensity& beta, const QuadratureConfig& qcfg = {}) {
    return normal_component(velocity_traces(f, params, G, beta, qcfg).first, d_dxi(f.grid, f.values));
}

struct TraceFields {
    VectorDensity G;
    VectorDensity beta;
    VectorDensity v_plus, v_minus;
    GridFunction phi;
    int iterations = 0;
    double relative_residual = 0.0;
};

inline TraceFields trace_fields(const InterfaceProfile& f, const FluidParams& params, const SolverConfig& cfg = {},
                                const QuadratureConfig& qcfg = {}) {
    TraceFields t;
    t.G = g_trace(f, params, qcfg);
    const DensitySolve d = solve_density(f, params, t.G, cfg, qcfg);
    t.beta = d.beta;
    std::tie(t.v_plus, t.v_minus) = velocity_traces(f, params, t.G, t.beta, qcfg);
    t.phi = phi_from_gamma(f, params, d.gamma);
    t.iterations = d.iterations;
    t.relative_residual = d.relative_residual;
    return t;
}

} // namespace stokes2p
