#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "impactkam/commands.hpp"
#include "impactkam/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"impactkam: invariant curves and confinement for the non-smooth forced "
                 "oscillator x'' + sign(x) = eps p(t)"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    int workers = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;

    const std::vector<std::string> names = {"simulate",     "impact-map", "find-curve",
                                            "sweep-ladder", "certify",    "audit"};
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--workers", workers, "worker pool size for sweep/trial fan-out");
        sub->add_option("--seed", seed, "override the config seed")
            ->each([&seed_set](const std::string&) { seed_set = true; });
    }

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    impactkam::CommandContext ctx;
    try {
        ctx.config = impactkam::RunConfig::parse_file(config_path);
    } catch (const impactkam::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    ctx.out_dir = out_dir;
    ctx.workers = workers;
    if (seed_set) ctx.seed_override = seed;
    return impactkam::run_command(command, ctx);
}
