#pragma once

// Run configuration: one JSON document with a fixed schema. Unknown keys are
// rejected so that typos never silently fall back to defaults.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stokes2p/bvp.hpp"
#include "stokes2p/diagnostics.hpp"
#include "stokes2p/errors.hpp"
#include "stokes2p/evolution.hpp"
#include "stokes2p/geometry.hpp"
#include "stokes2p/quadrature.hpp"

namespace stokes2p::driver {

using nlohmann::json;

struct ProfileSpec {
    std::string preset = "gaussian"; // gaussian | modulated | zero | file
    double amplitude = 0.3;
    double width = 1.0;
    double wavenumber = 2.0;
    std::string path;
};

struct GridSpec {
    double half_width = 64.0;
    int nodes = 1024;
    double decay_tol = 1e-3;
};

struct FieldsSpec {
    std::string potential = "double"; // double | single
    std::string density = "solved";   // solved | gaussian | zero
    double x1_min = -4.0, x1_max = 4.0;
    double x2_min = 1.0, x2_max = 5.0;
    int nx1 = 33, nx2 = 17;
    std::vector<double> far_radii{10.0, 20.0, 40.0, 80.0};
};

struct SpectrumSpec {
    std::vector<double> lambdas{-0.6, 0.6, 10.0};
    std::vector<int> nodes{256, 512};
    std::string norm = "flat"; // flat | weighted
    double s_exp = 0.0;
};

struct LinearizeSpec {
    std::vector<double> wavenumbers{1.0, 2.0, 4.0};
    double packet_width = 16.0;
    double epsilon = 1e-4;
    std::vector<double> fd_epsilons{1e-2, 5e-3, 2.5e-3, 1.25e-3};
    bool frozen = false;
    double frozen_eps = 0.5;
    std::vector<double> frozen_wavenumbers{8.0, 16.0, 32.0};
    std::vector<int> frozen_windows{4, 8, 12};
};

struct VerifySpec {
    int nodes = 512;              // grid for the dense and solver checks
    double jump_half_width = 8.0; // finer grid for the one-sided limits
    int jump_nodes = 1024;
    double scaling_horizon = 0.1;
    double scaling_lambda = 2.0;
};

struct RunConfig {
    ProfileSpec profile;
    GridSpec grid;
    FluidParams fluid{2.0, 1.0, 1.0};
    QuadratureConfig quadrature;
    SolverConfig solver;
    StepperConfig stepper;
    FieldsSpec fields;
    SpectrumSpec spectrum;
    LinearizeSpec linearize;
    VerifySpec verify;
    std::string output = "out";
    std::uint64_t seed = 1;

    RunConfig() {
        stepper.snapshot_interval = 0.1;
    }

    Grid make_grid() const { return Grid(grid.half_width, grid.nodes); }

    /// The configured profile sampled on g (file profiles must match g).
    InterfaceProfile make_profile(const Grid& g) const {
        const double tol = grid.decay_tol;
        if (profile.preset == "gaussian") return gaussian_bump(g, profile.amplitude, profile.width, tol);
        if (profile.preset == "modulated")
            return modulated_wave(g, profile.amplitude, profile.wavenumber, profile.width, tol);
        if (profile.preset == "zero") return InterfaceProfile::zero(g, tol);
        if (profile.preset == "file") return load_profile(profile.path, g, tol);
        throw ConfigError("unknown profile preset '" + profile.preset + "'");
    }
    InterfaceProfile make_profile() const { return make_profile(make_grid()); }

    void validate() const {
        make_grid();
        if (!(grid.decay_tol > 0.0)) throw ConfigError("grid.decay_tol must be positive");
        if (profile.preset != "gaussian" && profile.preset != "modulated" && profile.preset != "zero" &&
            profile.preset != "file")
            throw ConfigError("unknown profile preset '" + profile.preset + "'");
        if (profile.preset == "file" && profile.path.empty()) throw ConfigError("profile.path is required for 'file'");
        if (!(profile.width > 0.0)) throw ConfigError("profile.width must be positive");
        fluid.validate();
        quadrature.validate();
        solver.validate();
        stepper.validate();
        if (fields.potential != "double" && fields.potential != "single")
            throw ConfigError("fields.potential must be 'double' or 'single'");
        if (fields.density != "solved" && fields.density != "gaussian" && fields.density != "zero")
            throw ConfigError("fields.density must be 'solved', 'gaussian' or 'zero'");
        if (fields.nx1 < 1 || fields.nx2 < 1) throw ConfigError("fields scan needs at least one point per axis");
        if (spectrum.norm != "flat" && spectrum.norm != "weighted")
            throw ConfigError("spectrum.norm must be 'flat' or 'weighted'");
        for (int n : spectrum.nodes) Grid(grid.half_width, n);
        if (!(linearize.epsilon > 0.0)) throw ConfigError("linearize.epsilon must be positive");
        if (linearize.fd_epsilons.size() < 2) throw ConfigError("linearize.fd_epsilons needs two or more values");
        if (!(linearize.packet_width > 0.0)) throw ConfigError("linearize.packet_width must be positive");
        Grid(grid.half_width, verify.nodes);
        Grid(verify.jump_half_width, verify.jump_nodes);
        if (!(verify.scaling_horizon > 0.0) || !(verify.scaling_lambda > 0.0))
            throw ConfigError("verify scaling parameters must be positive");
        if (output.empty()) throw ConfigError("output directory must not be empty");
    }
};

namespace detail {

inline const char* to_string(SolverMethod m) { return m == SolverMethod::krylov ? "krylov" : "dense"; }
inline const char* to_string(Scheme s) { return s == Scheme::explicit_rk4 ? "explicit_rk4" : "imex"; }

/// Reads the keys of one section, rejecting any key not in `allowed`.
class Section {
  public:
    Section(const json& j, std::string name, std::set<std::string> allowed) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("section '" + name_ + "' must be an object");
        for (const auto& [k, v] : j_.items())
            if (!allowed.count(k)) throw ConfigError("unknown key '" + name_ + "." + k + "'");
    }

    template <class T> void get(const char* key, T& out) const {
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("bad value for '" + name_ + "." + key + "': " + e.what());
        }
    }

  private:
    const json& j_;
    std::string name_;
};

} // namespace detail

inline json to_json(const RunConfig& c) {
    json j;
    j["profile"] = {{"preset", c.profile.preset},
                    {"amplitude", c.profile.amplitude},
                    {"width", c.profile.width},
                    {"wavenumber", c.profile.wavenumber},
                    {"path", c.profile.path}};
    j["grid"] = {{"half_width", c.grid.half_width}, {"nodes", c.grid.nodes}, {"decay_tol", c.grid.decay_tol}};
    j["fluid"] = {{"mu_plus", c.fluid.mu_plus}, {"mu_minus", c.fluid.mu_minus}, {"sigma", c.fluid.sigma}};
    j["quadrature"] = {{"diagonal_correction", c.quadrature.diagonal_correction},
                       {"oracle_tolerance", c.quadrature.oracle_tolerance},
                       {"excision_sequence", c.quadrature.excision_sequence},
                       {"dense_cap", c.quadrature.dense_cap}};
    j["solver"] = {{"method", detail::to_string(c.solver.method)},
                   {"residual_tol", c.solver.residual_tol},
                   {"max_iterations", c.solver.max_iterations},
                   {"restart", c.solver.restart}};
    j["stepper"] = {{"scheme", detail::to_string(c.stepper.scheme)},
                    {"dt", c.stepper.dt},
                    {"dt_min", c.stepper.dt_min},
                    {"dt_max", c.stepper.dt_max},
                    {"tolerance", c.stepper.tolerance},
                    {"horizon", c.stepper.horizon},
                    {"snapshot_interval", c.stepper.snapshot_interval},
                    {"slope_cap", c.stepper.slope_cap},
                    {"enforce_decay_gate", c.stepper.enforce_decay_gate},
                    {"max_steps", c.stepper.max_steps}};
    j["fields"] = {{"potential", c.fields.potential}, {"density", c.fields.density}, {"x1_min", c.fields.x1_min},
                   {"x1_max", c.fields.x1_max},       {"x2_min", c.fields.x2_min},   {"x2_max", c.fields.x2_max},
                   {"nx1", c.fields.nx1},             {"nx2", c.fields.nx2},         {"far_radii", c.fields.far_radii}};
    j["spectrum"] = {{"lambdas", c.spectrum.lambdas},
                     {"nodes", c.spectrum.nodes},
                     {"norm", c.spectrum.norm},
                     {"s_exp", c.spectrum.s_exp}};
    j["linearize"] = {{"wavenumbers", c.linearize.wavenumbers},
                      {"packet_width", c.linearize.packet_width},
                      {"epsilon", c.linearize.epsilon},
                      {"fd_epsilons", c.linearize.fd_epsilons},
                      {"frozen", c.linearize.frozen},
                      {"frozen_eps", c.linearize.frozen_eps},
                      {"frozen_wavenumbers", c.linearize.frozen_wavenumbers},
                      {"frozen_windows", c.linearize.frozen_windows}};
    j["verify"] = {{"nodes", c.verify.nodes},
                   {"jump_half_width", c.verify.jump_half_width},
                   {"jump_nodes", c.verify.jump_nodes},
                   {"scaling_horizon", c.verify.scaling_horizon},
                   {"scaling_lambda", c.verify.scaling_lambda}};
    j["output"] = c.output;
    j["seed"] = c.seed;
    return j;
}

inline RunConfig from_json(const json& j) {
    using detail::Section;
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    static const std::set<std::string> top{"profile", "grid",     "fluid",     "quadrature", "solver", "stepper",
                                           "fields",  "spectrum", "linearize", "verify",     "output", "seed"};
    for (const auto& [k, v] : j.items())
        if (!top.count(k)) throw ConfigError("unknown key '" + k + "'");

    RunConfig c;
    if (j.contains("profile")) {
        Section s(j["profile"], "profile", {"preset", "amplitude", "width", "wavenumber", "path"});
        s.get("preset", c.profile.preset);
        s.get("amplitude", c.profile.amplitude);
        s.get("width", c.profile.width);
        s.get("wavenumber", c.profile.wavenumber);
        s.get("path", c.profile.path);
    }
    if (j.contains("grid")) {
        Section s(j["grid"], "grid", {"half_width", "nodes", "decay_tol"});
        s.get("half_width", c.grid.half_width);
        s.get("nodes", c.grid.nodes);
        s.get("decay_tol", c.grid.decay_tol);
    }
    if (j.contains("fluid")) {
        Section s(j["fluid"], "fluid", {"mu_plus", "mu_minus", "sigma"});
        s.get("mu_plus", c.fluid.mu_plus);
        s.get("mu_minus", c.fluid.mu_minus);
        s.get("sigma", c.fluid.sigma);
    }
    if (j.contains("quadrature")) {
        Section s(j["quadrature"], "quadrature",
                  {"diagonal_correction", "oracle_tolerance", "excision_sequence", "dense_cap"});
        s.get("diagonal_correction", c.quadrature.diagonal_correction);
        s.get("oracle_tolerance", c.quadrature.oracle_tolerance);
        s.get("excision_sequence", c.quadrature.excision_sequence);
        s.get("dense_cap", c.quadrature.dense_cap);
    }
    if (j.contains("solver")) {
        Section s(j["solver"], "solver", {"method", "residual_tol", "max_iterations", "restart"});
        std::string m = detail::to_string(c.solver.method);
        s.get("method", m);
        if (m == "krylov") c.solver.method = SolverMethod::krylov;
        else if (m == "dense") c.solver.method = SolverMethod::dense;
        else throw ConfigError("solver.method must be 'krylov' or 'dense'");
        s.get("residual_tol", c.solver.residual_tol);
        s.get("max_iterations", c.solver.max_iterations);
        s.get("restart", c.solver.restart);
    }
    if (j.contains("stepper")) {
        Section s(j["stepper"], "stepper",
                  {"scheme", "dt", "dt_min", "dt_max", "tolerance", "horizon", "snapshot_interval", "slope_cap",
                   "enforce_decay_gate", "max_steps"});
        std::string m = detail::to_string(c.stepper.scheme);
        s.get("scheme", m);
        if (m == "explicit_rk4") c.stepper.scheme = Scheme::explicit_rk4;
        else if (m == "imex") c.stepper.scheme = Scheme::imex;
        else throw ConfigError("stepper.scheme must be 'explicit_rk4' or 'imex'");
        s.get("dt", c.stepper.dt);
        s.get("dt_min", c.stepper.dt_min);
        s.get("dt_max", c.stepper.dt_max);
        s.get("tolerance", c.stepper.tolerance);
        s.get("horizon", c.stepper.horizon);
        s.get("snapshot_interval", c.stepper.snapshot_interval);
        s.get("slope_cap", c.stepper.slope_cap);
        s.get("enforce_decay_gate", c.stepper.enforce_decay_gate);
        s.get("max_steps", c.stepper.max_steps);
    }
    if (j.contains("fields")) {
        Section s(j["fields"], "fields",
                  {"potential", "density", "x1_min", "x1_max", "x2_min", "x2_max", "nx1", "nx2", "far_radii"});
        s.get("potential", c.fields.potential);
        s.get("density", c.fields.density);
        s.get("x1_min", c.fields.x1_min);
        s.get("x1_max", c.fields.x1_max);
        s.get("x2_min", c.fields.x2_min);
        s.get("x2_max", c.fields.x2_max);
        s.get("nx1", c.fields.nx1);
        s.get("nx2", c.fields.nx2);
        s.get("far_radii", c.fields.far_radii);
    }
    if (j.contains("spectrum")) {
        Section s(j["spectrum"], "spectrum", {"lambdas", "nodes", "norm", "s_exp"});
        s.get("lambdas", c.spectrum.lambdas);
        s.get("nodes", c.spectrum.nodes);
        s.get("norm", c.spectrum.norm);
        s.get("s_exp", c.spectrum.s_exp);
    }
    if (j.contains("linearize")) {
        Section s(j["linearize"], "linearize",
                  {"wavenumbers", "packet_width", "epsilon", "fd_epsilons", "frozen", "frozen_eps",
                   "frozen_wavenumbers", "frozen_windows"});
        s.get("wavenumbers", c.linearize.wavenumbers);
        s.get("packet_width", c.linearize.packet_width);
        s.get("epsilon", c.linearize.epsilon);
        s.get("fd_epsilons", c.linearize.fd_epsilons);
        s.get("frozen", c.linearize.frozen);
        s.get("frozen_eps", c.linearize.frozen_eps);
        s.get("frozen_wavenumbers", c.linearize.frozen_wavenumbers);
        s.get("frozen_windows", c.linearize.frozen_windows);
    }
    if (j.contains("verify")) {
        Section s(j["verify"], "verify", {"nodes", "jump_half_width", "jump_nodes", "scaling_horizon", "scaling_lambda"});
        s.get("nodes", c.verify.nodes);
        s.get("jump_half_width", c.verify.jump_half_width);
        s.get("jump_nodes", c.verify.jump_nodes);
        s.get("scaling_horizon", c.verify.scaling_horizon);
        s.get("scaling_lambda", c.verify.scaling_lambda);
    }
    if (j.contains("output")) {
        if (!j["output"].is_string()) throw ConfigError("'output' must be a string");
        c.output = j["output"].get<std::string>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    c.validate();
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
    return from_json(j);
}

/// FNV-1a over the canonical dump of the configuration.
inline std::string config_hash(const RunConfig& c) {
    const std::string s = to_json(c).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

} // namespace stokes2p::driver
