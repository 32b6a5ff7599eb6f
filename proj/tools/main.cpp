#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "beltsync/runner.hpp"

// Exit codes: 0 success, 2 configuration error, 3 numerical error.
int main(int argc, char** argv) {
    CLI::App app{"conveyor-belt clock synchronization toolkit"};
    app.set_version_flag("--version", std::string("beltsync ") + beltsync::cli::kToolVersion);

    auto* run = app.add_subcommand("run", "run a scenario config and write artifacts");
    std::string config_path;
    std::string out_dir;
    std::string mode_override;
    std::optional<std::uint64_t> seed_override;
    run->add_option("--config", config_path, "scenario config file")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--mode-override", mode_override,
                    "run this mode instead of the config's");
    run->add_option("--seed", seed_override, "override the estimator seed");
    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const auto doc = beltsync::cli::ConfigDoc::load(config_path);
        beltsync::cli::RunOptions opts;
        opts.mode_override = mode_override;
        opts.seed_override = seed_override;
        const auto result = beltsync::cli::run_scenario(doc, out_dir, opts);
        for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
        for (const auto& f : result.files) std::cout << f << "\n";
        return 0;
    } catch (const beltsync::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const beltsync::numeric_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
