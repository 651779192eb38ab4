#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "aepkit/errors.hpp"
#include "aepkit/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Build and verify chained typical sets for ergodic sources"};
    app.set_version_flag("--version", "aepkit 0.1.0");

    std::string config_path;
    std::optional<std::string> mode_name;
    std::optional<std::string> out_dir;
    bool quiet = false;
    app.add_option("-c,--config", config_path, "Experiment description (JSON)")
        ->required();
    app.add_option("-m,--mode", mode_name,
                   "Override the configured mode: classical-verify, quantum-verify or code-demo");
    app.add_option("-o,--out", out_dir, "Directory for report files (default: config out_dir, then .)");
    app.add_flag("-q,--quiet", quiet, "Suppress the summary line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        aep::ExperimentConfig cfg = aep::parse_config_file(config_path);
        if (mode_name) cfg.mode = aep::mode_from_name(*mode_name);
        const std::string dir = out_dir ? *out_dir : cfg.out_dir.value_or(".");
        return aep::run_experiment(cfg, dir, quiet, std::cout);
    } catch (const aep::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const aep::ResourceLimitError& e) {
        std::cerr << "resource limit: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
