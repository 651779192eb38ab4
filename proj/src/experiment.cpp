#include "aepkit/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "aepkit/chained_family.hpp"
#include "aepkit/chained_projectors.hpp"
#include "aepkit/coder.hpp"
#include "aepkit/errors.hpp"
#include "aepkit/reports.hpp"

namespace aep {

namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string json_text(const nlohmann::ordered_json& j) { return j.dump(1) + "\n"; }

const char* verdict(bool ok) { return ok ? "ok" : "FAIL"; }

struct ClassicalBuild {
    ChainedFamily family;
    std::optional<bool> mass_target_met;  // present when band_m was selected
};

ClassicalBuild build_classical(const ExperimentConfig& cfg) {
    const ProcessModel& model = *cfg.model;
    const EntropyRate h = model.entropy_rate();
    // the tightened pipeline builds at half width so the lower cut lands at eps
    const double build_eps = cfg.tighten ? cfg.eps / 2.0 : cfg.eps;
    int band_m = 0;
    std::optional<bool> met;
    if (cfg.band_m) {
        band_m = *cfg.band_m;
    } else {
        const double target = cfg.mass_target.value_or(1.0 - cfg.eps);
        const BandOffsetChoice choice =
            select_band_offset(model, h, build_eps, cfg.n_max, target);
        band_m = choice.band_m;
        met = choice.met_target;
    }
    ChainedFamily fam = build_chained_family(model, h, build_eps, band_m, cfg.n_max);
    if (cfg.tighten) fam = tighten_family(fam, model, cfg.eps);
    return {std::move(fam), met};
}

int run_classical(const ExperimentConfig& cfg, const fs::path& dir, bool quiet,
                  std::ostream& log) {
    ClassicalBuild built = build_classical(cfg);
    const ProcessModel& model = *cfg.model;
    const VerificationReport report =
        verify_classical(built.family, model, model.entropy_rate(), cfg.eps, built.family.n_eps);

    nlohmann::ordered_json j = classical_report_json(report, built.family);
    if (built.mass_target_met) j["mass_target_met"] = *built.mass_target_met;
    std::ostringstream csv;
    write_classical_report_csv(csv, report);
    write_text(dir / "classical_report.csv", csv.str());
    write_text(dir / "classical_report.json", json_text(j));

    if (!quiet)
        log << "classical-verify: n_max=" << report.n_max() << " M=" << built.family.band_m
            << " chain=" << verdict(report.chain_holds())
            << " cardinality=" << verdict(report.cardinality_in_bounds())
            << " member_bound=" << verdict(report.member_bound_holds())
            << " mass=" << verdict(report.mass_holds()) << '\n';
    return report.all_pass() ? 0 : 1;
}

int run_quantum(const ExperimentConfig& cfg, const fs::path& dir, bool quiet, std::ostream& log) {
    QuantumBuildOptions opts;
    opts.block_length = cfg.block_length;
    opts.band_m = cfg.band_m;
    opts.l_max = cfg.l_max;
    const ChainedProjectorFamily fam =
        build_chained_projectors(*cfg.state, cfg.eps, cfg.n_max, opts);
    const QuantumVerificationReport report = verify_quantum(fam, cfg.eps, fam.n_eps());

    std::ostringstream csv;
    write_quantum_report_csv(csv, report);
    write_text(dir / "quantum_report.csv", csv.str());
    write_text(dir / "quantum_report.json", json_text(quantum_report_json(report, fam)));

    if (!quiet)
        log << "quantum-verify: n_max=" << report.n_max() << " l=" << fam.block_length()
            << " orthonormal=" << verdict(report.members_orthonormal())
            << " marginals=" << verdict(report.marginals_consistent())
            << " trace=" << verdict(report.trace_in_bounds())
            << " member_bound=" << verdict(report.member_bound_holds())
            << " mass=" << verdict(report.mass_holds()) << '\n';
    return report.all_pass() ? 0 : 1;
}

int run_code_demo(const ExperimentConfig& cfg, const fs::path& dir, bool quiet,
                  std::ostream& log) {
    ClassicalBuild built = build_classical(cfg);
    const Codebook book(std::move(built.family));
    const RateReport rep = rate_report(book, *cfg.model, cfg.n_max, cfg.trials, cfg.seed);

    // lossless spot check over a prefix of the trial set
    const int spot = std::min(cfg.trials, 256);
    bool lossless = true;
    for (int t = 0; t < spot && lossless; ++t) {
        const Word w = cfg.model->sample_trajectory(static_cast<std::size_t>(cfg.n_max),
                                                    cfg.seed + static_cast<std::uint64_t>(t));
        lossless = decode(book, encode(book, w), cfg.n_max) == w;
    }

    nlohmann::ordered_json j = rate_report_json(rep);
    if (built.mass_target_met) j["mass_target_met"] = *built.mass_target_met;
    j["round_trip_trials"] = spot;
    j["round_trip_ok"] = lossless;
    std::ostringstream csv;
    write_rate_report_csv(csv, rep);
    write_text(dir / "rate_report.csv", csv.str());
    write_text(dir / "rate_report.json", json_text(j));

    if (!quiet)
        log << "code-demo: " << rep.mean_bits_per_symbol << " bits/symbol (entropy "
            << rep.entropy_bits_per_symbol << ", lz78 " << rep.lz78_bits_per_symbol
            << "), escape " << rep.escape_frequency << ", round trip "
            << verdict(lossless) << '\n';
    return lossless ? 0 : 1;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, bool quiet,
                   std::ostream& log) {
    if (cfg.mode == ExperimentConfig::Mode::quantum_verify) {
        if (!cfg.state) throw ConfigError("quantum-verify: missing state");
    } else if (!cfg.model) {
        throw ConfigError(std::string(mode_name(cfg.mode)) + ": missing model");
    }

    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create output directory " + dir.string() + ": " +
                                 ec.message());
    try {
        switch (cfg.mode) {
            case ExperimentConfig::Mode::classical_verify:
                return run_classical(cfg, dir, quiet, log);
            case ExperimentConfig::Mode::quantum_verify:
                return run_quantum(cfg, dir, quiet, log);
            case ExperimentConfig::Mode::code_demo:
                return run_code_demo(cfg, dir, quiet, log);
        }
    } catch (const std::invalid_argument& e) {
        // parameter combinations the library rejects are configuration faults
        throw ConfigError(std::string("parameters: ") + e.what());
    }
    throw std::logic_error("run_experiment: unreachable");
}

}  // namespace aep
