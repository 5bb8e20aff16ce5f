#pragma once

// Time integration of df/dt = Phi(f): adaptive RK4 with step-doubling error
// control, and a semi-implicit Euler scheme treating the flat-state
// multiplier -sigma |k| / (2 (mu+ + mu-)) implicitly.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "stokes2p/bvp.hpp"
#include "stokes2p/errors.hpp"
#include "stokes2p/geometry.hpp"
#include "stokes2p/spectral.hpp"

namespace stokes2p {

enum class Scheme { explicit_rk4, imex };

struct StepperConfig {
    Scheme scheme = Scheme::explicit_rk4;
    double dt = 0.05;
    double dt_min = 1e-8;
    double dt_max = 0.5;
    double tolerance = 1e-6;       // relative local error per step (explicit only)
    double horizon = 1.0;
    double snapshot_interval = 0.0; // 0: every accepted step
    double slope_cap = 10.0;
    bool enforce_decay_gate = true;
    int max_steps = 100000;

    void validate() const {
        if (!(dt_min > 0.0) || !(dt_min <= dt) || !(dt <= dt_max))
            throw ConfigError("step sizes must satisfy 0 < dt_min <= dt <= dt_max");
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive");
        if (!(tolerance > 0.0)) throw ConfigError("adaptivity tolerance must be positive");
        if (snapshot_interval < 0.0) throw ConfigError("snapshot_interval must be non-negative");
        if (!(slope_cap > 0.0)) throw ConfigError("slope_cap must be positive");
        if (max_steps < 1) throw ConfigError("max_steps must be at least 1");
    }
};

/// Everything needed to evaluate the right-hand side.
struct EvolutionContext {
    FluidParams params;
    SolverConfig solver;
    QuadratureConfig quadrature;
};

struct StepRecord {
    double t = 0.0;  // time at the end of the step
    double dt = 0.0;
    double error_estimate = 0.0;
    int rhs_evaluations = 0;
    int max_iterations = 0;
    double max_residual = 0.0;
    int rejected = 0;
};

enum class Termination { horizon_reached, step_size_underflow, invariant_breach };

inline const char* to_string(Termination t) {
    switch (t) {
    case Termination::horizon_reached: return "horizon_reached";
    case Termination::step_size_underflow: return "step_size_underflow";
    case Termination::invariant_breach: return "invariant_breach";
    }
    return "unknown";
}

struct Trajectory {
    std::vector<double> times;
    std::vector<InterfaceProfile> profiles;
    std::vector<StepRecord> steps;
    Termination termination = Termination::horizon_reached;
    std::string message;

    const InterfaceProfile& final_profile() const { return profiles.back(); }
};

namespace detail {

struct RhsStats {
    int evaluations = 0;
    int max_iterations = 0;
    double max_residual = 0.0;
};

inline GridFunction rhs_counted(const InterfaceProfile& f, const EvolutionContext& ctx, RhsStats& st) {
    if (!f.values.allFinite()) throw StepFailure("non-finite profile in a stage");
    const PhiEvaluation e = phi_evaluate(f, ctx.params, ctx.solver, ctx.quadrature);
    ++st.evaluations;
    st.max_iterations = std::max(st.max_iterations, e.density.iterations);
    st.max_residual = std::max(st.max_residual, e.density.relative_residual);
    if (!e.phi.allFinite()) throw StepFailure("non-finite right-hand side");
    return e.phi;
}

inline InterfaceProfile with_values(const InterfaceProfile& f, GridFunction v) {
    InterfaceProfile out = f;
    out.values = std::move(v);
    return out;
}

inline InterfaceProfile rk4(const InterfaceProfile& f, double dt, const EvolutionContext& ctx, RhsStats& st) {
    const GridFunction k1 = rhs_counted(f, ctx, st);
    const GridFunction k2 = rhs_counted(with_values(f, f.values + 0.5 * dt * k1), ctx, st);
    const GridFunction k3 = rhs_counted(with_values(f, f.values + 0.5 * dt * k2), ctx, st);
    const GridFunction k4 = rhs_counted(with_values(f, f.values + dt * k3), ctx, st);
    GridFunction next = f.values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) throw StepFailure("non-finite profile after RK4 step");
    return with_values(f, std::move(next));
}

} // namespace detail

inline GridFunction rhs(const InterfaceProfile& f, const EvolutionContext& ctx) {
    detail::RhsStats st;
    return detail::rhs_counted(f, ctx, st);
}

/// One classical RK4 step. Throws StepFailure on non-finite stages.
inline InterfaceProfile step_explicit(const InterfaceProfile& f, double dt, const EvolutionContext& ctx) {
    detail::RhsStats st;
    return detail::rk4(f, dt, ctx, st);
}

/// One semi-implicit Euler step f+ = (I - dt A)^-1 (f + dt (Phi(f) - A f)).
inline InterfaceProfile step_imex(const InterfaceProfile& f, double dt, const EvolutionContext& ctx,
                                  detail::RhsStats* stats = nullptr) {
    detail::RhsStats local;
    detail::RhsStats& st = stats ? *stats : local;
    const double c = ctx.params.flat_rate();
    const GridFunction phi = detail::rhs_counted(f, ctx, st);
    const GridFunction Af = -c * abs_derivative(f.grid, f.values);
    const GridFunction explicit_part = f.values + dt * (phi - Af);
    GridFunction next = apply_multiplier(f.grid, explicit_part, [&](double k) {
        return std::complex<double>(1.0 / (1.0 + dt * c * std::abs(k)));
    });
    if (!next.allFinite()) throw StepFailure("non-finite profile after IMEX step");
    return detail::with_values(f, std::move(next));
}

namespace detail {

/// Empty when f is admissible for continued integration.
inline std::string invariant_violation(const InterfaceProfile& f, const StepperConfig& cfg) {
    if (!f.values.allFinite()) return "non-finite profile";
    const double slope = d_dxi(f.grid, f.values).cwiseAbs().maxCoeff();
    if (slope > cfg.slope_cap)
        return "slope " + std::to_string(slope) + " exceeds cap " + std::to_string(cfg.slope_cap);
    if (cfg.enforce_decay_gate) return f.violation();
    return {};
}

} // namespace detail

inline Trajectory simulate(const InterfaceProfile& f0, const EvolutionContext& ctx, const StepperConfig& cfg) {
    cfg.validate();
    ctx.params.validate();
    ctx.solver.validate();
    f0.validate();

    Trajectory tr;
    tr.times.push_back(0.0);
    tr.profiles.push_back(f0);

    InterfaceProfile f = f0;
    double t = 0.0;
    double dt = cfg.dt;
    double next_snap = cfg.snapshot_interval > 0.0 ? cfg.snapshot_interval : std::numeric_limits<double>::infinity();
    const double t_eps = 1e-12 * cfg.horizon;
    int steps = 0;

    while (t < cfg.horizon - t_eps) {
        if (++steps > cfg.max_steps) {
            tr.termination = Termination::step_size_underflow;
            tr.message = "step limit reached at t=" + std::to_string(t);
            break;
        }
        // land exactly on the horizon and on snapshot times
        double target = std::min(cfg.horizon, next_snap);
        double h = std::min(dt, target - t);
        bool hits_target = h >= target - t - t_eps;

        StepRecord rec;
        detail::RhsStats st;
        InterfaceProfile next;
        bool accepted = false;
        bool underflow = false;
        if (cfg.scheme == Scheme::imex) {
            try {
                next = step_imex(f, h, ctx, &st);
                accepted = true;
            } catch (const StepFailure& e) {
                tr.termination = Termination::invariant_breach;
                tr.message = std::string("IMEX step failed: ") + e.what();
                break;
            }
        } else {
            while (!accepted) {
                double err = std::numeric_limits<double>::infinity();
                InterfaceProfile full, half;
                try {
                    full = detail::rk4(f, h, ctx, st);
                    half = detail::rk4(detail::rk4(f, 0.5 * h, ctx, st), 0.5 * h, ctx, st);
                    const double scale = half.values.cwiseAbs().maxCoeff();
                    const double diff = (half.values - full.values).cwiseAbs().maxCoeff() / 15.0;
                    err = scale > 0.0 ? diff / (cfg.tolerance * scale) : (diff > 0.0 ? err : 0.0);
                } catch (const StepFailure&) {
                    err = std::numeric_limits<double>::infinity();
                }
                const double factor =
                    std::isfinite(err) ? std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 4.0) : 0.25;
                if (err <= 1.0) {
                    accepted = true;
                    next = std::move(half);
                    rec.error_estimate = err;
                    const double proposed = std::clamp(h * factor, cfg.dt_min, cfg.dt_max);
                    // a step shortened to hit a target says nothing about the next one
                    dt = (hits_target && h < dt && rec.rejected == 0) ? std::max(dt, proposed) : proposed;
                } else {
                    ++rec.rejected;
                    const double shrunk = h * factor;
                    if (shrunk < cfg.dt_min) {
                        underflow = true;
                        break;
                    }
                    h = shrunk;
                    hits_target = false;
                }
            }
            if (underflow) {
                tr.termination = Termination::step_size_underflow;
                tr.message = "step size fell below dt_min at t=" + std::to_string(t);
                break;
            }
        }

        t = hits_target ? target : t + h;
        f = std::move(next);
        rec.t = t;
        rec.dt = h;
        rec.rhs_evaluations = st.evaluations;
        rec.max_iterations = st.max_iterations;
        rec.max_residual = st.max_residual;
        tr.steps.push_back(rec);

        if (auto msg = detail::invariant_violation(f, cfg); !msg.empty()) {
            tr.times.push_back(t);
            tr.profiles.push_back(f);
            tr.termination = Termination::invariant_breach;
            tr.message = msg + " at t=" + std::to_string(t);
            return tr;
        }
        const bool at_snap = cfg.snapshot_interval == 0.0 || (hits_target && target == next_snap);
        if (hits_target && target == next_snap) next_snap += cfg.snapshot_interval;
        if (at_snap || t >= cfg.horizon - t_eps) {
            tr.times.push_back(t);
            tr.profiles.push_back(f);
        }
    }
    if (tr.times.back() != t) {
        tr.times.push_back(t);
        tr.profiles.push_back(f);
    }
    return tr;
}

struct ScalingReport {
    double lambda = 1.0;
    double discrepancy = 0.0; // ||lambda^-1 f(T)(lambda .) - f_lambda(T/lambda)|| / ||f0||
    Trajectory original, scaled;
};

/// Compares the run from f0 to T with the run from lambda^-1 f0(lambda .) to
/// T/lambda on the grid of half-width L/lambda. Nodes correspond one to one,
/// so no interpolation is involved.
inline ScalingReport scaling_check(const InterfaceProfile& f0, double lambda, const EvolutionContext& ctx,
                                   const StepperConfig& cfg) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("scaling factor must be positive and finite");
    const Grid scaled_grid(f0.grid.half_width / lambda, f0.grid.size());
    const InterfaceProfile g0(scaled_grid, f0.values / lambda, f0.decay_tol);
    if (auto msg = g0.violation(); !msg.empty()) throw ConfigError("rescaled profile not resolvable: " + msg);

    StepperConfig sc = cfg;
    sc.dt = cfg.dt / lambda;
    sc.dt_min = cfg.dt_min / lambda;
    sc.dt_max = cfg.dt_max / lambda;
    sc.horizon = cfg.horizon / lambda;
    sc.snapshot_interval = cfg.snapshot_interval / lambda;

    ScalingReport rep;
    rep.lambda = lambda;
    rep.original = simulate(f0, ctx, cfg);
    rep.scaled = simulate(g0, ctx, sc);
    const double n0 = l2_norm(f0.grid, f0.values);
    if (n0 == 0.0) return rep;
    const GridFunction mapped = rep.original.final_profile().values / lambda;
    rep.discrepancy = l2_norm(f0.grid, mapped - rep.scaled.final_profile().values) / n0;
    return rep;
}

} // namespace stokes2p
