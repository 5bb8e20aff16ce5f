#pragma once

// Layer potentials off the interface and their one-sided boundary limits.
//
// Double layer (w, q) with density beta and n = (-f', 1) = omega nu:
//   w_j = (1/pi) int (n.r)(beta.r) r_j / |r|^4 ds
//   q   = (1/pi) int (-n.beta/|r|^2 + 2 (n.r)(beta.r)/|r|^4) ds
// Single layer (u, Pi):
//   u_j = (1/4pi) int (-beta_j ln|r| + r_j (beta.r)/|r|^2) ds
//   Pi  = (1/2pi) int (beta.r)/|r|^2 ds
// with r = x - (s, f(s)). All integrals use the plain trapezoid rule.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stokes2p/errors.hpp"
#include "stokes2p/geometry.hpp"
#include "stokes2p/operators.hpp"
#include "stokes2p/quadrature.hpp"

namespace stokes2p {

enum class Side { plus, minus };

inline const char* to_string(Side s) { return s == Side::plus ? "plus" : "minus"; }

struct FieldSample {
    Eigen::Vector2d point = Eigen::Vector2d::Zero();
    Side side = Side::plus;
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
    double pressure = 0.0;
    std::optional<Eigen::Matrix2d> gradient; // (l, j) entry: d_l v_j
};

/// Distance from x to the polyline through the interface nodes.
inline double distance_to_interface(const InterfaceProfile& prof, const Eigen::Vector2d& x) {
    const Grid& g = prof.grid;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < g.size(); ++k) {
        const Eigen::Vector2d a(g.node(k), prof.values[k]);
        const Eigen::Vector2d b(g.node(k + 1), prof.values[k + 1]);
        const Eigen::Vector2d ab = b - a;
        const double t = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        best = std::min(best, (x - a - t * ab).norm());
    }
    return best;
}

inline Side side_of(const InterfaceProfile& prof, const Eigen::Vector2d& x) {
    const double fx = interpolant(prof.grid, prof.values)(x[0]);
    return x[1] > fx ? Side::plus : Side::minus;
}

namespace detail {

inline void check_off_interface(const InterfaceProfile& prof, const Eigen::Vector2d& x) {
    const double d = distance_to_interface(prof, x);
    if (d < 2.0 * prof.grid.spacing())
        throw NearBoundaryError("point (" + std::to_string(x[0]) + ", " + std::to_string(x[1]) +
                                    ") is within 2 grid spacings of the interface; use boundary_limit",
                                d);
}

inline void check_density(const InterfaceProfile& prof, const VectorDensity& beta) {
    if (beta.size() != prof.size()) throw ConfigError("density does not match the profile grid");
}

} // namespace detail

inline FieldSample double_layer_field(const InterfaceProfile& prof, const VectorDensity& beta, const Eigen::Vector2d& x,
                                      bool with_gradient = true, bool check_distance = true) {
    detail::check_density(prof, beta);
    if (check_distance) detail::check_off_interface(prof, x);
    const Grid& g = prof.grid;
    const GridFunction slope = d_dxi(g, prof.values);
    const double h = g.spacing();
    Eigen::Vector2d w = Eigen::Vector2d::Zero();
    double q = 0.0;
    Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
    for (int k = 0; k < g.size(); ++k) {
        const Eigen::Vector2d b(beta.c1[k], beta.c2[k]);
        if (b[0] == 0.0 && b[1] == 0.0) continue;
        const Eigen::Vector2d n(-slope[k], 1.0);
        const Eigen::Vector2d y(x[0] - g.node(k), x[1] - prof.values[k]);
        const double r2 = y.squaredNorm();
        const double r4 = r2 * r2;
        const double a = n.dot(y), c = b.dot(y);
        w += (a * c / r4) * y;
        q += -n.dot(b) / r2 + 2.0 * a * c / r4;
        if (with_gradient) {
            const double r6 = r4 * r2;
            for (int l = 0; l < 2; ++l)
                for (int j = 0; j < 2; ++j) {
                    const double djl = j == l ? 1.0 : 0.0;
                    grad(l, j) += (n[l] * y[j] * c + djl * a * c + b[l] * a * y[j]) / r4 - 4.0 * a * c * y[j] * y[l] / r6;
                }
        }
    }
    FieldSample s;
    s.point = x;
    s.side = side_of(prof, x);
    s.velocity = w * (h / pi);
    s.pressure = q * (h / pi);
    if (with_gradient) s.gradient = grad * (h / pi);
    return s;
}

/// q from the integrated-by-parts form (1/pi) int (-r2 beta_1' + r1 beta_2')/|r|^2 ds.
inline double double_layer_pressure_ibp(const InterfaceProfile& prof, const VectorDensity& beta,
                                        const Eigen::Vector2d& x) {
    detail::check_density(prof, beta);
    const Grid& g = prof.grid;
    const GridFunction d1 = d_dxi(g, beta.c1), d2 = d_dxi(g, beta.c2);
    double q = 0.0;
    for (int k = 0; k < g.size(); ++k) {
        const double y1 = x[0] - g.node(k), y2 = x[1] - prof.values[k];
        q += (-y2 * d1[k] + y1 * d2[k]) / (y1 * y1 + y2 * y2);
    }
    return q * g.spacing() / pi;
}

inline FieldSample single_layer_field(const InterfaceProfile& prof, const VectorDensity& beta, const Eigen::Vector2d& x,
                                      bool with_gradient = true, bool check_distance = true) {
    detail::check_density(prof, beta);
    if (check_distance) detail::check_off_interface(prof, x);
    const Grid& g = prof.grid;
    Eigen::Vector2d u = Eigen::Vector2d::Zero();
    double P = 0.0;
    Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
    for (int k = 0; k < g.size(); ++k) {
        const Eigen::Vector2d b(beta.c1[k], beta.c2[k]);
        if (b[0] == 0.0 && b[1] == 0.0) continue;
        const Eigen::Vector2d y(x[0] - g.node(k), x[1] - prof.values[k]);
        const double r2 = y.squaredNorm();
        const double c = b.dot(y);
        u += -0.5 * std::log(r2) * b + (c / r2) * y;
        P += c / r2;
        if (with_gradient)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    const double dij = i == j ? 1.0 : 0.0;
                    grad(i, j) += (-b[j] * y[i] + dij * c + y[j] * b[i]) / r2 - 2.0 * y[i] * y[j] * c / (r2 * r2);
                }
    }
    const double h = g.spacing();
    FieldSample s;
    s.point = x;
    s.side = side_of(prof, x);
    s.velocity = u * (h / (4.0 * pi));
    s.pressure = P * (h / (2.0 * pi));
    if (with_gradient) s.gradient = grad * (h / (4.0 * pi));
    return s;
}

/// Normal stress T(v, p) nu with T_ij = -p delta_ij + d_i v_j + d_j v_i.
inline Eigen::Vector2d normal_stress(const FieldSample& s, const Eigen::Vector2d& nu) {
    const Eigen::Matrix2d& G = *s.gradient;
    const Eigen::Matrix2d T = -s.pressure * Eigen::Matrix2d::Identity() + G + G.transpose();
    return T * nu;
}

/// Divergence and Stokes residual (Laplace v - grad p) of a field by centered
/// differences with step hs.
struct StencilResidual {
    double divergence = 0.0;
    Eigen::Vector2d stokes = Eigen::Vector2d::Zero();
};

inline StencilResidual stencil_residual(const std::function<FieldSample(const Eigen::Vector2d&)>& field,
                                        const Eigen::Vector2d& x, double hs) {
    const FieldSample c = field(x);
    const Eigen::Vector2d e1(hs, 0.0), e2(0.0, hs);
    const FieldSample xp = field(x + e1), xm = field(x - e1), yp = field(x + e2), ym = field(x - e2);
    StencilResidual r;
    r.divergence = (xp.velocity[0] - xm.velocity[0] + yp.velocity[1] - ym.velocity[1]) / (2.0 * hs);
    const Eigen::Vector2d lap = (xp.velocity + xm.velocity + yp.velocity + ym.velocity - 4.0 * c.velocity) / (hs * hs);
    const Eigen::Vector2d gp((xp.pressure - xm.pressure) / (2.0 * hs), (yp.pressure - ym.pressure) / (2.0 * hs));
    r.stokes = lap - gp;
    return r;
}

// ---------------------------------------------------------------------------
// One-sided limits

struct LimitResult {
    Eigen::VectorXd value;
    Eigen::VectorXd error_estimate;
    bool reliable = true;
    std::string warning;
    std::vector<double> offsets;
    std::vector<Eigen::VectorXd> samples;
};

using VectorFieldFn = std::function<Eigen::VectorXd(const Eigen::Vector2d&)>;

/// Richardson extrapolation of fieldfn along the normal at node i from the given
/// side, offsets delta0 * 2^-j, j = 0..levels-1. delta0 <= 0 selects 20 h.
inline LimitResult boundary_limit(const VectorFieldFn& fieldfn, const InterfaceProfile& prof, int i, Side side,
                                  double delta0 = 0.0, int levels = 4) {
    if (i < 0 || i >= prof.size()) throw ConfigError("boundary_limit: node index out of range");
    if (levels < 2) throw ConfigError("boundary_limit: need at least two offsets");
    if (delta0 <= 0.0) delta0 = 20.0 * prof.grid.spacing();
    const GeometryCache geo = geometry(prof);
    const Eigen::Vector2d base(prof.grid.node(i), prof.values[i]);
    const Eigen::Vector2d nu(geo.normal1[i], geo.normal2[i]);
    const double sgn = side == Side::plus ? 1.0 : -1.0;

    LimitResult res;
    for (int j = 0; j < levels; ++j) {
        const double d = delta0 * std::pow(0.5, j);
        res.offsets.push_back(d);
        res.samples.push_back(fieldfn(base + sgn * d * nu));
    }
    const Eigen::Index m = res.samples[0].size();
    double scale = 0.0;
    for (const auto& s : res.samples) scale = std::max(scale, s.cwiseAbs().maxCoeff());
    // differences below this are evaluation noise, whatever their ordering
    const double floor = 1e-8 * std::max(1.0, scale);
    res.value.resize(m);
    res.error_estimate.resize(m);
    for (Eigen::Index c = 0; c < m; ++c) {
        std::vector<double> ys;
        for (const auto& s : res.samples) ys.push_back(s[c]);
        const std::vector<double> diag = detail::neville_to_zero(res.offsets, ys);
        const std::size_t last = diag.size() - 1;
        res.value[c] = diag[last];
        const double e_last = std::abs(diag[last] - diag[last - 1]);
        res.error_estimate[c] = e_last;
        if (last >= 2) {
            const double e_prev = std::abs(diag[last - 1] - diag[last - 2]);
            if (e_last > e_prev && e_last > floor) {
                res.reliable = false;
                res.warning = "non-monotone extrapolation tail in component " + std::to_string(c);
            }
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Jump-relation checks

/// Per-check residuals at the sample nodes together with the magnitude of the
/// reference quantity, so that relative errors can be formed.
struct JumpReport {
    std::vector<int> nodes;
    std::map<std::string, std::vector<double>> residual;
    std::map<std::string, std::vector<double>> reference;
    bool reliable = true;
    std::vector<std::string> warnings;

    double max_residual(const std::string& key) const {
        double m = 0.0;
        for (double v : residual.at(key)) m = std::max(m, v);
        return m;
    }
    /// max residual over max reference magnitude
    double relative(const std::string& key) const {
        double r = 0.0;
        for (double v : reference.at(key)) r = std::max(r, v);
        return r > 0.0 ? max_residual(key) / r : max_residual(key);
    }
    void add(const std::string& key, double res, double ref) {
        residual[key].push_back(res);
        reference[key].push_back(ref);
    }
};

/// Nearest grid nodes to the given abscissae.
inline std::vector<int> nearest_nodes(const Grid& g, const std::vector<double>& xs) {
    std::vector<int> out;
    for (double x : xs) out.push_back(nearest_node(g, x));
    return out;
}

struct JumpCheckConfig {
    std::vector<double> sample_points{-1.0, -0.5, 0.0, 0.5, 1.0};
    double delta0 = 0.0; // 0: 20 h
    QuadratureConfig quadrature;
};

/// Double layer: w^{+-} = -D beta +- beta/2, [w] = beta, q^{+-} against the direct
/// formula, and continuity of the normal stress.
inline JumpReport jump_check_double(const InterfaceProfile& prof, const VectorDensity& beta,
                                    const JumpCheckConfig& cfg = {}) {
    detail::check_density(prof, beta);
    const Grid& g = prof.grid;
    const GeometryCache geo = geometry(prof);
    const VectorDensity Db = double_layer(prof, cfg.quadrature)(beta);
    const GridFunction db1 = d_dxi(g, beta.c1), db2 = d_dxi(g, beta.c2);
    const bool corr = cfg.quadrature.diagonal_correction;

    JumpReport rep;
    rep.nodes = nearest_nodes(g, cfg.sample_points);
    for (int i : rep.nodes) {
        const Eigen::Vector2d nu(geo.normal1[i], geo.normal2[i]);
        VectorFieldFn fn = [&](const Eigen::Vector2d& x) {
            const FieldSample s = double_layer_field(prof, beta, x, true, false);
            const Eigen::Vector2d t = normal_stress(s, nu);
            Eigen::VectorXd v(5);
            v << s.velocity[0], s.velocity[1], s.pressure, t[0], t[1];
            return v;
        };
        const LimitResult lp = boundary_limit(fn, prof, i, Side::plus, cfg.delta0);
        const LimitResult lm = boundary_limit(fn, prof, i, Side::minus, cfg.delta0);
        if (!lp.reliable || !lm.reliable) {
            rep.reliable = false;
            rep.warnings.push_back("node " + std::to_string(i) + ": " + (lp.reliable ? lm.warning : lp.warning));
        }
        const Eigen::Vector2d b(beta.c1[i], beta.c2[i]);
        const Eigen::Vector2d d(Db.c1[i], Db.c2[i]);
        const Eigen::Vector2d wp = lp.value.head<2>(), wm = lm.value.head<2>();
        rep.add("w_plus", (wp - (-d + 0.5 * b)).norm(), (-d + 0.5 * b).norm());
        rep.add("w_minus", (wm - (-d - 0.5 * b)).norm(), (-d - 0.5 * b).norm());
        rep.add("w_jump", (wp - wm - b).norm(), b.norm());

        // direct pressure: 2 PV int P^k(r) gamma_k ds -+ (beta_1' + f' beta_2')/omega^2
        double pv = 0.0;
        for (int k = 0; k < g.size(); ++k) {
            if (k == i) continue;
            const double p = (prof.values[i] - prof.values[k]) / ((i - k) * g.spacing());
            const double D = 1.0 / (1.0 + p * p);
            pv += pv_weight(i, k, corr) * D * (-db2[k] + p * db1[k]);
        }
        pv *= -1.0 / pi;
        const double jump = (db1[i] + geo.slope[i] * db2[i]) / (geo.metric[i] * geo.metric[i]);
        rep.add("q_plus", std::abs(lp.value[2] - (pv - jump)), std::abs(pv - jump));
        rep.add("q_minus", std::abs(lm.value[2] - (pv + jump)), std::abs(pv + jump));
        const Eigen::Vector2d tp = lp.value.tail<2>(), tm = lm.value.tail<2>();
        rep.add("stress_jump", (tp - tm).norm(), std::max(tp.norm(), tm.norm()));
    }
    return rep;
}

/// Single layer: Pi and grad u one-sided limits against the direct values plus
/// jumps, d_2 u against T(f) beta, and the normal stress against (-+1/2 - D*) beta.
inline JumpReport jump_check_single(const InterfaceProfile& prof, const VectorDensity& beta,
                                    const JumpCheckConfig& cfg = {}) {
    detail::check_density(prof, beta);
    const Grid& g = prof.grid;
    const GeometryCache geo = geometry(prof);
    const VectorDensity Tb = t_op(prof, cfg.quadrature)(beta);
    const VectorDensity Dsb = double_layer_adjoint(prof, cfg.quadrature)(beta);
    const bool corr = cfg.quadrature.diagonal_correction;

    JumpReport rep;
    rep.nodes = nearest_nodes(g, cfg.sample_points);
    for (int i : rep.nodes) {
        const Eigen::Vector2d nu(geo.normal1[i], geo.normal2[i]);
        const Eigen::Vector2d tau(geo.tangent1[i], geo.tangent2[i]);
        const double om = geo.metric[i];
        VectorFieldFn fn = [&](const Eigen::Vector2d& x) {
            const FieldSample s = single_layer_field(prof, beta, x, true, false);
            const Eigen::Vector2d t = normal_stress(s, nu);
            const Eigen::Matrix2d& G = *s.gradient;
            Eigen::VectorXd v(7);
            v << s.pressure, G(0, 0), G(0, 1), G(1, 0), G(1, 1), t[0], t[1];
            return v;
        };
        const LimitResult lp = boundary_limit(fn, prof, i, Side::plus, cfg.delta0);
        const LimitResult lm = boundary_limit(fn, prof, i, Side::minus, cfg.delta0);
        if (!lp.reliable || !lm.reliable) {
            rep.reliable = false;
            rep.warnings.push_back("node " + std::to_string(i) + ": " + (lp.reliable ? lm.warning : lp.warning));
        }

        // direct values by the punctured rule
        double Pd = 0.0;
        Eigen::Matrix2d Gd = Eigen::Matrix2d::Zero();
        for (int k = 0; k < g.size(); ++k) {
            if (k == i) continue;
            const double p = (prof.values[i] - prof.values[k]) / ((i - k) * g.spacing());
            const double D = 1.0 / (1.0 + p * p);
            const double w = pv_weight(i, k, corr);
            const Eigen::Vector2d b(beta.c1[k], beta.c2[k]);
            const Eigen::Vector2d e(1.0, p);
            const double bb = b[0] + p * b[1];
            Pd += w * D * bb;
            for (int a = 0; a < 2; ++a)
                for (int j = 0; j < 2; ++j) {
                    const double daj = a == j ? 1.0 : 0.0;
                    Gd(a, j) += w * ((-b[j] * e[a] + daj * bb + e[j] * b[a]) * D - 2.0 * e[a] * e[j] * bb * D * D);
                }
        }
        Pd /= 2.0 * pi;
        Gd /= 4.0 * pi;

        const Eigen::Vector2d b(beta.c1[i], beta.c2[i]);
        const double bn = b.dot(nu);
        const double pj = bn / (2.0 * om);
        rep.add("pi_plus", std::abs(lp.value[0] - (Pd + pj)), std::abs(Pd + pj));
        rep.add("pi_minus", std::abs(lm.value[0] - (Pd - pj)), std::abs(Pd - pj));
        rep.add("pi_jump", std::abs(lp.value[0] - lm.value[0] - bn / om), std::abs(bn / om));

        Eigen::Matrix2d J; // jump term of grad u
        for (int a = 0; a < 2; ++a)
            for (int j = 0; j < 2; ++j) J(a, j) = (-b[j] * nu[a] + nu[a] * nu[j] * bn) / (2.0 * om);
        Eigen::Matrix2d Gp, Gm;
        Gp << lp.value[1], lp.value[2], lp.value[3], lp.value[4];
        Gm << lm.value[1], lm.value[2], lm.value[3], lm.value[4];
        rep.add("grad_plus", (Gp - (Gd + J)).cwiseAbs().maxCoeff(), (Gd + J).cwiseAbs().maxCoeff());
        rep.add("grad_minus", (Gm - (Gd - J)).cwiseAbs().maxCoeff(), (Gd - J).cwiseAbs().maxCoeff());

        const Eigen::Vector2d T(Tb.c1[i], Tb.c2[i]);
        const Eigen::Vector2d tj = b.dot(tau) * tau / (2.0 * om * om);
        rep.add("d2u_plus", (Gp.row(1).transpose() - (T - tj)).norm(), (T - tj).norm());
        rep.add("d2u_minus", (Gm.row(1).transpose() - (T + tj)).norm(), (T + tj).norm());
        rep.add("d2u_jump", (Gp.row(1).transpose() - Gm.row(1).transpose() + 2.0 * tj).norm(), (2.0 * tj).norm());

        const Eigen::Vector2d ds(Dsb.c1[i], Dsb.c2[i]);
        const Eigen::Vector2d sp = om * lp.value.tail<2>(), sm = om * lm.value.tail<2>();
        rep.add("stress_plus", (sp - (-0.5 * b - ds)).norm(), (-0.5 * b - ds).norm());
        rep.add("stress_minus", (sm - (0.5 * b - ds)).norm(), (0.5 * b - ds).norm());
    }
    return rep;
}

} // namespace stokes2p
