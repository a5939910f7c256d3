#include "commands.hpp"
#include "config.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Periodic solutions, degrees and branches for periodically perturbed delay systems"};
    app.require_subcommand(1);
    std::string config_path;
    tperiodic::cli::CommandOptions options;
    app.add_flag("--quiet", options.quiet, "Suppress the summary on stdout");

    const std::pair<const char*, const char*> commands[] = {
        {"integrate", "Integrate the delay system and write trajectory.csv"},
        {"degree", "Brouwer degree of a field on a box, written to degree.json"},
        {"sigma", "sigma-transformation of a periodic coefficient (sigma.csv, sigma.json)"},
        {"verify-index", "Compare the fixed-point index sum with the degree formula (index.json)"},
        {"branch", "Continue a branch of periodic solutions in lambda (branch.csv, branch.json)"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", options.out_dir, "Output directory")->capture_default_str();
        if (std::string(name) == "degree" || std::string(name) == "verify-index") {
            sub->add_option("--seed-grid", options.seed_grid, "Grid points per axis for the seed lattice")
                ->check(CLI::PositiveNumber);
        }
        sub->add_flag("--quiet", options.quiet, "Suppress the summary on stdout");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const auto config = tperiodic::cli::load_config_file(config_path);
        const auto summary = tperiodic::cli::run_command(command, config, options);
        if (!options.quiet) {
            std::cout << summary.dump() << '\n';
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << tperiodic::cli::error_json(e).dump() << '\n';
        return tperiodic::cli::exit_code_for(e);
    }
}
