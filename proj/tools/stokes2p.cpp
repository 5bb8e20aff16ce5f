#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "stokes2p/driver/commands.hpp"

using namespace stokes2p;
using namespace stokes2p::driver;

int main(int argc, char** argv) {
    CLI::App app{"Two-phase Stokes interface solver"};
    app.require_subcommand(0, 1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    double tolerance_scale = 1.0;
    bool print_defaults = false;

    app.add_flag("--print-defaults", print_defaults, "Print the default configuration as JSON and exit");

    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const RunConfig&, const CommandOptions&, std::ostream&);
    };
    const Sub subs[] = {
        {"simulate", "Evolve the interface and write the trajectory", cmd_simulate},
        {"verify", "Run the built-in consistency checks", cmd_verify},
        {"fields", "Evaluate layer-potential velocity and pressure fields", cmd_fields},
        {"spectrum", "Resolvent scan of the double-layer operator", cmd_spectrum},
        {"linearize", "Linearization and symbol diagnostics", cmd_linearize},
    };
    std::vector<CLI::App*> cmds;
    for (const auto& s : subs) {
        CLI::App* c = app.add_subcommand(s.name, s.help);
        c->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
        c->add_option("--out", out_dir, "Output directory");
        c->add_option("--seed", seed, "Seed for randomized checks");
        if (std::string(s.name) == "verify")
            c->add_option("--tolerance-scale", tolerance_scale, "Multiply every check tolerance")
                ->check(CLI::NonNegativeNumber);
        cmds.push_back(c);
    }

    CLI11_PARSE(app, argc, argv);

    if (print_defaults) {
        std::cout << to_json(RunConfig{}).dump(2) << '\n';
        return 0;
    }
    for (std::size_t i = 0; i < cmds.size(); ++i) {
        if (!cmds[i]->parsed()) continue;
        try {
            RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
            if (!out_dir.empty()) cfg.output = out_dir;
            if (seed) cfg.seed = *seed;
            cfg.validate();
            return subs[i].run(cfg, CommandOptions{tolerance_scale}, std::cout);
        } catch (const std::exception& e) {
            std::cerr << "stokes2p " << subs[i].name << ": " << e.what() << '\n';
            return 2;
        }
    }
    std::cerr << app.help();
    return 1;
}
