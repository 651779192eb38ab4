#pragma once

#include <stdexcept>
#include <string>

namespace aep {

// Thrown when an operation would exceed a hard size cap (dense dimension,
// alphabet materialization). CLI maps this to exit code 3.
struct ResourceLimitError : std::runtime_error {
    explicit ResourceLimitError(const std::string& msg) : std::runtime_error(msg) {}
};

// Band construction produced an empty family. first_empty_depth is the depth
// at which the last live branch died (signals M too small or eps too tight
// for the horizon).
struct BandConstructionError : std::runtime_error {
    int first_empty_depth;
    BandConstructionError(const std::string& msg, int depth)
        : std::runtime_error(msg), first_empty_depth(depth) {}
};

// Tightening removed every surviving word.
struct TighteningError : std::runtime_error {
    explicit TighteningError(const std::string& msg) : std::runtime_error(msg) {}
};

// A parameter search (band offset M, block length l) found no admissible value.
struct SelectionError : std::runtime_error {
    explicit SelectionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Encoded bit stream is truncated or inconsistent with the codebook.
struct CorruptionError : std::runtime_error {
    explicit CorruptionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Experiment configuration is syntactically or semantically invalid. CLI maps
// this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace aep
