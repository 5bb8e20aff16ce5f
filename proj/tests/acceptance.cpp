// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stokes2p/bvp.hpp"
#include "stokes2p/diagnostics.hpp"
#include "stokes2p/evolution.hpp"
#include "stokes2p/fields.hpp"
#include "stokes2p/spectral.hpp"

using namespace stokes2p;

namespace {

const FluidParams params{2.0, 1.0, 1.0};

InterfaceProfile profile(int N, double L = 64.0) { return gaussian_bump(Grid(L, N), 0.3, 1.0); }

VectorDensity test_density(const Grid& g) {
    return {g.sample([](double x) { return 0.2 * std::exp(-x * x); }),
            g.sample([](double x) { return std::exp(-x * x); })};
}

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

class Detail {
  public:
    Detail& add(const std::string& k, double v) {
        os_ << (os_.tellp() > 0 ? " " : "") << k << "=" << fmt("%.3g", v);
        return *this;
    }
    Detail& add(const std::string& s) {
        os_ << (os_.tellp() > 0 ? " " : "") << s;
        return *this;
    }
    std::string str() const { return os_.str(); }

  private:
    std::ostringstream os_;
};

bool non_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[i - 1]) return false;
    return true;
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

// ---------------------------------------------------------------------------

Outcome flat_steady_state() {
    const Grid g(64.0, 1024);
    const double n = l2_norm(g, phi_rhs(InterfaceProfile::zero(g), params));
    return {n <= 1e-12, Detail().add("norm", n).str()};
}

Outcome kernel_annihilation() {
    const Grid g(64.0, 1024);
    const InterfaceProfile aff(g, g.sample([](double x) { return 0.35 * x - 0.2; }), 1e300);
    const VectorDensity b = test_density(g);
    const GridFunction th = b.c2;
    const double d = l2_norm(g, double_layer(aff)(b)) / l2_norm(g, b);
    const double t = l2_norm(g, GridFunction(b1(aff)(th))) / l2_norm(g, th);
    return {d <= 1e-12 && t <= 1e-12, Detail().add("D", d).add("B1", t).str()};
}

Outcome hilbert_oracle() {
    // B_{0,0} on 1/(1+x^2) against pi x/(1+x^2), away from the truncation edges
    std::vector<double> errs;
    for (int N : {512, 1024, 2048}) {
        const Grid g(64.0, N);
        const GridFunction r = g.sample([](double x) { return 1.0 / (1.0 + x * x); });
        const GridFunction b = bnm_apply(KernelSpec{g, {}, {}}, r);
        double num = 0, den = 0;
        for (int i = 0; i < N; ++i)
            if (std::abs(g.node(i)) <= 16.0) {
                const double x = g.node(i), ref = pi * x / (1.0 + x * x);
                num += (b[i] - ref) * (b[i] - ref);
                den += ref * ref;
            }
        errs.push_back(std::sqrt(num / den));
    }
    const double o1 = std::log2(errs[0] / errs[1]), o2 = std::log2(errs[1] / errs[2]);
    return {errs[2] <= 1e-4 && std::min(o1, o2) >= 2.0,
            Detail().add("err2048", errs[2]).add("order", o1).add("order", o2).str()};
}

Outcome adjointness() {
    std::vector<double> dev;
    for (int N : {256, 512, 1024}) {
        const InterfaceProfile f = profile(N);
        const Eigen::MatrixXd D = double_layer(f).matrix();
        const Eigen::MatrixXd Ds = double_layer_adjoint(f).matrix();
        dev.push_back((D - Ds.transpose()).cwiseAbs().maxCoeff());
    }
    return {dev[1] <= 1e-6 && non_increasing(dev),
            Detail().add("N256", dev[0]).add("N512", dev[1]).add("N1024", dev[2]).str()};
}

Outcome skew_adjointness() {
    const InterfaceProfile f = profile(512);
    const LinearBoundaryOp T = t_op(f);
    std::mt19937_64 rng(20240501);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int trial = 0; trial < 16; ++trial) {
        Eigen::VectorXd b(1024);
        for (auto& v : b) v = nd(rng);
        worst = std::max(worst, std::abs(b.dot(T(b))) / b.squaredNorm());
    }
    return {worst <= 1e-8, Detail().add("max_ratio", worst).str()};
}

Outcome resolvent_bound() {
    ResolventConfig cfg;
    cfg.adjoint = false;
    const ResolventReport r = resolvent_scan([](int n) { return profile(n); }, {-0.6, 0.6}, {256, 512, 1024}, cfg);
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& row : r.rows) lo = std::min(lo, row.sigma_min);
    const double var = std::max(r.variation(-0.6), r.variation(0.6));
    const ResolventReport z =
        resolvent_scan([](int n) { return InterfaceProfile::zero(Grid(64.0, n)); }, {-0.6, 0.6}, {256, 512}, cfg);
    double flat = 0.0;
    for (const auto& row : z.rows) flat = std::max(flat, std::abs(row.sigma_min - std::abs(row.lambda)));
    return {var <= 0.2 && lo >= 0.05 && flat <= 1e-12,
            Detail().add("variation", var).add("min_sigma", lo).add("flat_dev", flat).str()};
}

Outcome second_kind_solve() {
    SolverConfig dense;
    dense.method = SolverMethod::dense;
    const InterfaceProfile f = profile(1024);
    const double d = rel(solve_density(f, params).beta.stacked(), solve_density(f, params, dense).beta.stacked());
    std::vector<double> its;
    Detail det;
    det.add("krylov_vs_dense", d);
    for (int N : {256, 512, 1024, 2048}) {
        its.push_back(solve_density(profile(N), params).iterations);
        det.add("it" + std::to_string(N), its.back());
    }
    return {d <= 1e-8 && non_increasing(its), det.str()};
}

Outcome trace_continuity() {
    const InterfaceProfile f = profile(1024);
    const TraceFields t = trace_fields(f, params);
    const double gap = l2_norm(f.grid, t.v_plus - t.v_minus);
    const double scale = std::max(l2_norm(f.grid, t.v_plus), l2_norm(f.grid, t.beta));
    return {gap <= 1e-8 * scale, Detail().add("relative_gap", gap / scale).str()};
}

Outcome jump_relations() {
    // one-sided limits need the Richardson offsets (20 h) well inside the scale of the profile,
    // so the finest level carries the jump checks
    std::vector<double> sd, ss;
    double wj = 0.0, pj = 0.0;
    for (int N : {2048, 4096, 8192}) {
        const InterfaceProfile p = profile(N);
        const VectorDensity b = test_density(p.grid);
        const JumpReport d = jump_check_double(p, b);
        const JumpReport s = jump_check_single(p, b);
        sd.push_back(d.max_residual("stress_jump"));
        ss.push_back(std::max(s.max_residual("stress_plus"), s.max_residual("stress_minus")));
        wj = d.relative("w_jump");
        pj = s.relative("pi_jump");
    }
    Detail det;
    det.add("w_jump", wj).add("pi_jump", pj);
    for (double v : sd) det.add("dl_stress", v);
    for (double v : ss) det.add("sl_stress", v);
    return {wj <= 1e-2 && pj <= 1e-2 && strictly_decreasing(sd) && strictly_decreasing(ss), det.str()};
}

Outcome linearization_symbol() {
    const Grid g(64.0, 2048);
    const InterfaceProfile z = InterfaceProfile::zero(g);
    const double W = 16.0;
    Detail det;
    double worst = 0.0;
    for (double k : {1.0, 2.0, 4.0}) {
        const GridFunction pk = g.sample([&](double x) { return std::cos(k * x) * std::exp(-(x / W) * (x / W)); });
        const GridFunction fd = linearize_fd(z, params, pk, 1e-4);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < g.size(); ++i)
            if (std::abs(g.node(i)) <= 0.25 * W) {
                const double pred = -params.flat_rate() * k * pk[i];
                num += (fd[i] - pred) * (fd[i] - pred);
                den += pred * pred;
            }
        worst = std::max(worst, std::sqrt(num / den));
        det.add("k" + fmt("%g", k), std::sqrt(num / den));
    }
    const InterfaceProfile f = profile(1024);
    const GridFunction dir = f.grid.sample([](double x) { return std::exp(-0.5 * x * x) * std::cos(x); });
    const GridFunction an = linearize_analytic(f, params)(dir);
    std::vector<double> eps{1e-2, 5e-3, 2.5e-3, 1.25e-3}, err;
    for (double e : eps) err.push_back(l2_norm(f.grid, linearize_fd(f, params, dir, e) - an));
    double slope = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < eps.size(); ++i)
        slope = std::min(slope, std::log(err[i - 1] / err[i]) / std::log(eps[i - 1] / eps[i]));
    det.add("fd_slope", slope);
    return {worst <= 5e-2 && slope >= 1.8, det.str()};
}

Outcome linear_decay() {
    const Grid g(64.0, 1024);
    const double k = 2.0, W = 16.0;
    const GridFunction pk = g.sample([&](double x) { return std::cos(k * x) * std::exp(-(x / W) * (x / W)); });
    StepperConfig cfg;
    cfg.scheme = Scheme::imex;
    cfg.dt = 0.02;
    cfg.dt_min = 0.02;
    cfg.horizon = 1.0;
    cfg.snapshot_interval = 0.1;
    const Trajectory tr = simulate(InterfaceProfile(g, 1e-4 * pk), {params, {}, {}}, cfg);
    // least-squares slope of log amplitude, amplitude = projection on the packet
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(tr.times.size());
    for (std::size_t s = 0; s < tr.times.size(); ++s) {
        const double a = tr.profiles[s].values.dot(pk) / pk.squaredNorm();
        const double x = tr.times[s], y = std::log(a);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double rate = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double expected = params.sigma * k / (2.0 * (params.mu_plus + params.mu_minus));
    const double e = std::abs(rate - expected) / expected;
    return {tr.termination == Termination::horizon_reached && e <= 0.1,
            Detail().add("rate", rate).add("expected", expected).add("rel_err", e).str()};
}

Outcome scaling_invariance() {
    StepperConfig cfg;
    cfg.horizon = 1.0;
    const auto t0 = std::chrono::steady_clock::now();
    const ScalingReport r = scaling_check(profile(1024), 2.0, {params, {}, {}}, cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {r.discrepancy <= 1e-2 && secs <= 300.0, Detail().add("discrepancy", r.discrepancy).add("seconds", secs).str()};
}

Outcome equal_viscosity() {
    const InterfaceProfile f = profile(1024);
    const FluidParams eq{1.5, 1.5, 1.0};
    const GridFunction ref = normal_component(g_trace(f, eq), d_dxi(f.grid, f.values)) / 1.5;
    const double e = rel(phi_rhs(f, eq), ref);
    const GridFunction a = phi_rhs(f, {1.0 + 1e-6, 1.0 - 1e-6, 1.0});
    const GridFunction b = phi_rhs(f, {1.0 - 1e-6, 1.0 + 1e-6, 1.0});
    const double c = rel(a, b);
    return {e <= 1e-10 && c <= 1e-4, Detail().add("equal_mu", e).add("contrast_jump", c).str()};
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"flat_steady_state", flat_steady_state},
        {"kernel_annihilation", kernel_annihilation},
        {"hilbert_oracle", hilbert_oracle},
        {"adjointness", adjointness},
        {"skew_adjointness", skew_adjointness},
        {"resolvent_bound", resolvent_bound},
        {"second_kind_solve", second_kind_solve},
        {"trace_continuity", trace_continuity},
        {"jump_relations", jump_relations},
        {"linearization_symbol", linearization_symbol},
        {"linear_decay", linear_decay},
        {"scaling_invariance", scaling_invariance},
        {"equal_viscosity", equal_viscosity},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failures;
        std::printf("%s %2zu %-22s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
