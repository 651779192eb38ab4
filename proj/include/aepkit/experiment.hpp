#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "aepkit/lattice.hpp"
#include "aepkit/process.hpp"

namespace aep {

// One experiment: a source declaration plus the construction window. Parsed
// from a single JSON document; unknown or mode-inapplicable fields are
// rejected so typos fail loudly.
struct ExperimentConfig {
    enum class Mode { classical_verify, quantum_verify, code_demo };

    Mode mode = Mode::classical_verify;
    std::optional<ProcessModel> model;  // classical-verify and code-demo
    std::optional<LatticeState> state;  // quantum-verify
    double eps = 0.0;
    int n_max = 0;
    std::optional<int> band_m;          // fixed band offset; absent means selected
    std::optional<double> mass_target;  // selection target, defaults to 1 - eps
    bool tighten = false;               // classical-verify: two-sided band pipeline
    std::optional<int> block_length;    // quantum-verify: fixed block length
    int l_max = 64;                     // quantum-verify: block length search cap
    std::uint64_t seed = 1;             // code-demo
    int trials = 10000;                 // code-demo
    std::optional<std::string> out_dir;
};

const char* mode_name(ExperimentConfig::Mode mode);
ExperimentConfig::Mode mode_from_name(const std::string& name);  // throws ConfigError

// source_name prefixes every diagnostic; syntax errors carry line and column,
// semantic errors the JSON pointer of the offending field.
ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name);
ExperimentConfig parse_config_file(const std::string& path);

// Executes the configured pipeline and writes the mode's CSV + JSON reports
// into out_dir. Returns 0 when every verified condition passes, 1 otherwise.
// Inadmissible parameter combinations surface as ConfigError, size caps as
// ResourceLimitError.
int run_experiment(const ExperimentConfig& config, const std::string& out_dir, bool quiet,
                   std::ostream& log);

}  // namespace aep
