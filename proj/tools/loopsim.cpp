#include <iostream>

#include <CLI11.hpp>

#include "loopsim/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"loopsim: time-bin photonic processor simulator"};
    app.set_version_flag("--version", std::string("loopsim ") + LOOPSIM_VERSION);
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run the experiment described by a JSON manifest");
    std::string manifest;
    std::uint64_t seed = 0;
    std::string out_dir;
    run->add_option("manifest", manifest, "Manifest file")->required();
    auto* seed_opt = run->add_option("--seed", seed, "Override the manifest seed");
    auto* out_opt = run->add_option("--out", out_dir, "Override the output directory");

    auto* sched = app.add_subcommand("schedule", "Compile a JSON circuit program onto a loop machine");
    std::string program, machine;
    bool timeline = false;
    sched->add_option("program", program, "Program file {mode_count, ops}")->required();
    sched->add_option("--machine", machine, "Machine file {n_cores, delay_bins, modules, n_bins}");
    sched->add_flag("--timeline", timeline, "Print a per-bin text timeline instead of JSON");

    app.add_subcommand("list", "List experiment kinds and their defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        // Usage errors share the manifest-error code; --help/--version exit 0.
        return code == 0 ? 0 : loopsim::cli::kExitManifest;
    }

    if (app.got_subcommand("list")) {
        loopsim::cli::list_experiments(std::cout);
        return 0;
    }
    if (app.got_subcommand("schedule"))
        return loopsim::cli::schedule(program, machine.empty() ? std::nullopt : std::optional<std::string>(machine),
                                      timeline, std::cout, std::cerr);
    loopsim::cli::RunOptions opt;
    if (*seed_opt) opt.seed = seed;
    if (*out_opt) opt.output_dir = out_dir;
    return loopsim::cli::run(manifest, opt, std::cout, std::cerr);
}
