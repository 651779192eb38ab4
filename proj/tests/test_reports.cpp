#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aepkit/chained_family.hpp"
#include "aepkit/chained_projectors.hpp"
#include "aepkit/coder.hpp"
#include "aepkit/errors.hpp"
#include "aepkit/experiment.hpp"
#include "aepkit/lattice.hpp"
#include "aepkit/reports.hpp"
#include "oracles.hpp"

using aep::ChainedFamily;
using aep::ChainedProjectorFamily;
using aep::Codebook;
using aep::ConfigError;
using aep::EntropyRate;
using aep::ExperimentConfig;
using aep::LatticeState;
using aep::ProcessModel;
using aep::QuantumVerificationReport;
using aep::RateReport;
using aep::ResourceLimitError;
using aep::VerificationReport;
using aep::Word;
using nlohmann::ordered_json;

namespace fs = std::filesystem;

namespace {

const std::vector<std::vector<double>> kChain{{0.9, 0.1}, {0.5, 0.5}};

// Scratch directories live under the test working directory so concurrent
// build trees cannot collide.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) : path("report_scratch_" + tag) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::string line;
    std::istringstream is(text);
    while (std::getline(is, line)) out.push_back(line);
    return out;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

ChainedFamily uniform_family(int n_max) {
    const ProcessModel model = ProcessModel::iid({0.5, 0.5});
    return aep::build_chained_family(model, model.entropy_rate(), 0.1, 1, n_max);
}

// The single shared quantum build; everything here reuses the regime whose
// numbers the projector suite already pins.
struct QuantumFixture {
    ChainedProjectorFamily family;
    QuantumVerificationReport report;
};

const QuantumFixture& quantum_fixture() {
    static const QuantumFixture fx = [] {
        const LatticeState state = LatticeState::classical_markov(ProcessModel::markov(kChain));
        ChainedProjectorFamily fam = aep::build_chained_projectors(state, 0.8, 6);
        QuantumVerificationReport rep = aep::verify_quantum(fam, 0.8, fam.n_eps());
        return QuantumFixture{std::move(fam), std::move(rep)};
    }();
    return fx;
}

int run_from_text(const std::string& text, const fs::path& dir, std::ostream& log,
                  bool quiet = true) {
    return aep::run_experiment(aep::parse_config_text(text, "cfg"), dir.string(), quiet, log);
}

std::string config_error(const std::string& text) {
    try {
        aep::parse_config_text(text, "cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    FAIL("expected a ConfigError");
    return {};
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("classical csv pins its header and round trips every column") {
    const ProcessModel model = ProcessModel::iid({0.5, 0.5});
    const ChainedFamily fam = uniform_family(4);
    const VerificationReport report =
        aep::verify_classical(fam, model, model.entropy_rate(), 0.1, fam.n_eps);

    std::ostringstream os;
    aep::write_classical_report_csv(os, report);
    const auto lines = split_lines(os.str());
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "n,cardinality_or_trace,lower_bound,upper_bound,max_member_prob,mass");
    for (int n = 1; n <= 4; ++n) {
        const auto f = split_fields(lines[static_cast<std::size_t>(n)]);
        REQUIRE(f.size() == 6);
        CHECK(std::stoi(f[0]) == n);
        CHECK(std::stoull(f[1]) == fam.cardinality(n));
        CHECK(std::stod(f[2]) == doctest::Approx(report.cardinality_lower(n)).epsilon(1e-10));
        CHECK(std::stod(f[3]) == doctest::Approx(report.cardinality_upper(n)).epsilon(1e-10));
        CHECK(std::stod(f[4]) == doctest::Approx(std::exp2(-n)).epsilon(1e-10));
        CHECK(std::stod(f[5]) == doctest::Approx(1.0).epsilon(1e-10));
    }

    std::ostringstream again;
    aep::write_classical_report_csv(again, report);
    CHECK(again.str() == os.str());
}

TEST_CASE("quantum csv blanks the residual where the dense check stops") {
    const auto& fx = quantum_fixture();
    std::ostringstream os;
    aep::write_quantum_report_csv(os, fx.report);
    const auto lines = split_lines(os.str());
    REQUIRE(lines.size() == 7);
    CHECK(lines[0] ==
          "n,cardinality_or_trace,lower_bound,upper_bound,max_member_prob,mass,q1_residual");
    for (int n = 1; n <= 6; ++n) {
        const auto f = split_fields(lines[static_cast<std::size_t>(n)]);
        REQUIRE(f.size() == 7);
        const auto& rec = fx.report.records()[static_cast<std::size_t>(n - 1)];
        CHECK(std::stoi(f[0]) == n);
        CHECK(std::stoull(f[1]) == rec.trace);
        CHECK(std::stod(f[2]) == doctest::Approx(fx.report.trace_lower(n)).epsilon(1e-10));
        CHECK(std::stod(f[3]) == doctest::Approx(fx.report.trace_upper(n)).epsilon(1e-10));
        CHECK(std::stod(f[4]) == doctest::Approx(rec.max_member_expectation).epsilon(1e-10));
        CHECK(std::stod(f[5]) == doctest::Approx(rec.mass).epsilon(1e-10));
        // the residual column carries a value exactly where a deeper marginal
        // existed to compare against
        CHECK(f[6].empty() == !rec.marginal_checked);
    }
    CHECK(lines[6].back() == ',');
}

TEST_CASE("json reports survive a serialize parse cycle") {
    const ProcessModel model = ProcessModel::iid({0.5, 0.5});
    const ChainedFamily fam = uniform_family(8);
    const VerificationReport report =
        aep::verify_classical(fam, model, model.entropy_rate(), 0.1, fam.n_eps);

    const ordered_json jc = aep::classical_report_json(report, fam);
    CHECK(jc["kind"] == "classical_verification");
    CHECK(jc["entropy_rate_bits"].get<double>() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(jc["all_pass"] == true);
    CHECK(jc["depths"].size() == 8);
    CHECK(ordered_json::parse(jc.dump()) == jc);

    const auto& fx = quantum_fixture();
    const ordered_json jq = aep::quantum_report_json(fx.report, fx.family);
    CHECK(jq["kind"] == "quantum_verification");
    CHECK(jq["block_length"] == 1);
    CHECK(jq["mass_target_met"] == true);
    CHECK(jq["all_pass"] == true);
    CHECK(jq["eps_trace_bounds_from"] == 1);
    CHECK(jq["depths"].size() == 6);
    CHECK(jq["depths"][0].contains("q1_residual"));
    CHECK(!jq["depths"][5].contains("q1_residual"));
    CHECK(ordered_json::parse(jq.dump()) == jq);

    const Codebook book{uniform_family(8)};
    const RateReport rate = aep::rate_report(book, model, 8, 50, 5);
    const ordered_json jr = aep::rate_report_json(rate);
    CHECK(jr["kind"] == "code_demo");
    CHECK(jr["mean_bits_per_symbol"].get<double>() == 1.125);
    CHECK(jr["escape_frequency"].get<double>() == 0.0);
    CHECK(ordered_json::parse(jr.dump()) == jr);
}

TEST_CASE("verification against an inflated rate names the violating words") {
    const ProcessModel model = ProcessModel::iid({0.5, 0.5});

    SUBCASE("a dropped slice word turns up as the chain violator") {
        ChainedFamily fam = uniform_family(4);
        // C(1) loses the word 1 while C(2) keeps both extensions
        fam.slices[0].erase(fam.slices[0].begin() + 1);
        const VerificationReport report =
            aep::verify_classical(fam, model, model.entropy_rate(), 0.1, fam.n_eps);
        CHECK(!report.chain_holds());
        const ordered_json j = aep::classical_report_json(report, fam);
        CHECK(j["conditions"]["chain"] == false);
        CHECK(j["all_pass"] == false);
        CHECK(j["depths"][0]["chain_ok"] == false);
        CHECK(j["depths"][0]["chain_violator"] == "1");
        CHECK(!j["depths"][1].contains("chain_violator"));
    }

    SUBCASE("an inflated rate claim names the smallest overweight word") {
        const ChainedFamily fam = uniform_family(4);
        // bound e^{-n(h'-eps)} with h' = h + 0.3 sits below every uniform prob
        const EntropyRate inflated{std::log(2.0) + 0.3, false};
        const VerificationReport report = aep::verify_classical(fam, model, inflated, 0.1, 1);
        CHECK(!report.member_bound_holds());
        const ordered_json j = aep::classical_report_json(report, fam);
        CHECK(j["conditions"]["member_bound"] == false);
        CHECK(j["depths"][0]["member_violator"] == "0");
        CHECK(j["depths"][1]["member_violator"] == "0 0");
    }
}

TEST_CASE("classical experiment writes reports and reruns byte for byte") {
    const std::string text = R"({
        "mode": "classical-verify",
        "model": {"kind": "iid", "probs": [0.5, 0.5]},
        "eps": 0.1,
        "n_max": 8,
        "band_m": 1
    })";
    TempDir a("classical_a"), b("classical_b");
    std::ostringstream log;
    CHECK(run_from_text(text, a.path, log, false) == 0);
    CHECK(contains(log.str(), "classical-verify: n_max=8 M=1"));
    CHECK(contains(log.str(), "mass=ok"));
    CHECK(run_from_text(text, b.path, log) == 0);

    const std::string csv = slurp(a.path / "classical_report.csv");
    const std::string json_text = slurp(a.path / "classical_report.json");
    CHECK(csv == slurp(b.path / "classical_report.csv"));
    CHECK(json_text == slurp(b.path / "classical_report.json"));
    CHECK(json_text.back() == '\n');

    const ordered_json j = ordered_json::parse(json_text);
    CHECK(j["kind"] == "classical_verification");
    CHECK(j["band_m"] == 1);
    CHECK(j["all_pass"] == true);
    // a fixed band offset means no selection ran, so no target verdict
    CHECK(!j.contains("mass_target_met"));
}

TEST_CASE("experiment falls back to the mass maximizer and reports the miss") {
    const std::string text = R"({
        "mode": "classical-verify",
        "model": {"kind": "markov", "transition": [[0.9, 0.1], [0.5, 0.5]]},
        "eps": 0.3,
        "n_max": 12
    })";
    TempDir dir("fallback");
    std::ostringstream log;
    CHECK(run_from_text(text, dir.path, log, false) == 1);
    CHECK(contains(log.str(), "mass=FAIL"));

    const ordered_json j = ordered_json::parse(slurp(dir.path / "classical_report.json"));
    CHECK(j["band_m"] == 12);
    CHECK(j["mass_target_met"] == false);
    CHECK(j["conditions"]["chain"] == true);
    CHECK(j["conditions"]["cardinality_in_bounds"] == true);
    CHECK(j["conditions"]["member_bound"] == true);
    CHECK(j["conditions"]["mass"] == false);
    CHECK(j["all_pass"] == false);
}

TEST_CASE("quantum experiment passes end to end on the markov chain state") {
    const std::string text = R"({
        "mode": "quantum-verify",
        "state": {"kind": "classical_markov", "transition": [[0.9, 0.1], [0.5, 0.5]]},
        "eps": 0.8,
        "n_max": 6
    })";
    TempDir dir("quantum");
    std::ostringstream log;
    CHECK(run_from_text(text, dir.path, log, false) == 0);
    CHECK(contains(log.str(), "quantum-verify: n_max=6 l=1"));

    const ordered_json j = ordered_json::parse(slurp(dir.path / "quantum_report.json"));
    CHECK(j["kind"] == "quantum_verification");
    CHECK(j["block_length"] == 1);
    CHECK(j["mass_target_met"] == true);
    CHECK(j["all_pass"] == true);
    CHECK(j["depths"].size() == 6);
    CHECK(j["depths"][5]["marginal_checked"] == false);

    const auto lines = split_lines(slurp(dir.path / "quantum_report.csv"));
    REQUIRE(lines.size() == 7);
    CHECK(lines[6].back() == ',');
}

TEST_CASE("code demo experiment reports rate and losslessness") {
    const std::string text = R"({
        "mode": "code-demo",
        "model": {"kind": "iid", "probs": [0.5, 0.5]},
        "eps": 0.1,
        "n_max": 8,
        "band_m": 1,
        "trials": 100,
        "seed": 5
    })";
    TempDir dir("demo");
    std::ostringstream log;
    CHECK(run_from_text(text, dir.path, log, false) == 0);
    CHECK(contains(log.str(), "round trip ok"));

    const ordered_json j = ordered_json::parse(slurp(dir.path / "rate_report.json"));
    CHECK(j["kind"] == "code_demo");
    CHECK(j["round_trip_trials"] == 100);
    CHECK(j["round_trip_ok"] == true);
    // the uniform codebook spends flag + 8 rank bits on every 8-symbol word
    CHECK(j["mean_bits_per_symbol"].get<double>() == 1.125);
    CHECK(j["escape_frequency"].get<double>() == 0.0);

    const auto lines = split_lines(slurp(dir.path / "rate_report.csv"));
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] ==
          "n,trials,seed,mean_bits_per_symbol,escape_frequency,entropy_bits_per_symbol,"
          "lz78_bits_per_symbol");
    CHECK(lines[1].rfind("8,100,5,1.125,0,1,", 0) == 0);
}

TEST_CASE("experiment surfaces caps and inadmissible parameters") {
    std::ostringstream log;

    SUBCASE("the dense dimension cap stops oversized quantum runs") {
        const std::string text = R"({
            "mode": "quantum-verify",
            "state": {"kind": "classical_markov", "transition": [[0.9, 0.1], [0.5, 0.5]]},
            "eps": 0.8,
            "n_max": 13
        })";
        TempDir dir("cap");
        CHECK_THROWS_AS(run_from_text(text, dir.path, log), ResourceLimitError);
    }

    SUBCASE("a block level band wider than one is a parameter fault") {
        // block length 2 at eps 0.6 would tighten with width 1.2
        const std::string text = R"({
            "mode": "quantum-verify",
            "state": {"kind": "classical_markov", "transition": [[0.9, 0.1], [0.5, 0.5]]},
            "eps": 0.6,
            "n_max": 8,
            "block_length": 2
        })";
        TempDir dir("block");
        try {
            run_from_text(text, dir.path, log);
            FAIL("expected a ConfigError");
        } catch (const ConfigError& e) {
            CHECK(contains(e.what(), "parameters:"));
        }
    }

    SUBCASE("a hand built config without a source is rejected") {
        ExperimentConfig cfg;
        cfg.mode = ExperimentConfig::Mode::classical_verify;
        cfg.eps = 0.1;
        cfg.n_max = 4;
        TempDir dir("nomodel");
        CHECK_THROWS_AS(aep::run_experiment(cfg, dir.path.string(), true, log), ConfigError);
    }
}

TEST_CASE("config parsing pins defaults and reports precise locations") {
    SUBCASE("a full classical document lands in the config fields") {
        const ExperimentConfig cfg = aep::parse_config_text(R"({
            "mode": "classical-verify",
            "model": {"kind": "markov", "transition": [[0.9, 0.1], [0.5, 0.5]]},
            "eps": 0.3,
            "n_max": 12,
            "tighten": true,
            "mass_target": 0.5,
            "out_dir": "reports"
        })", "cfg");
        CHECK(cfg.mode == ExperimentConfig::Mode::classical_verify);
        REQUIRE(cfg.model.has_value());
        CHECK(cfg.eps == 0.3);
        CHECK(cfg.n_max == 12);
        CHECK(cfg.tighten);
        CHECK(cfg.mass_target == 0.5);
        CHECK(cfg.out_dir == "reports");
        CHECK(!cfg.band_m.has_value());
    }

    SUBCASE("absent fields keep their defaults") {
        const ExperimentConfig cfg = aep::parse_config_text(R"({
            "mode": "code-demo",
            "model": {"kind": "iid", "probs": [0.9, 0.1]},
            "eps": 0.2,
            "n_max": 16
        })", "cfg");
        CHECK(cfg.seed == 1);
        CHECK(cfg.trials == 10000);
        CHECK(!cfg.tighten);
        CHECK(cfg.l_max == 64);
        CHECK(!cfg.mass_target.has_value());
        CHECK(!cfg.out_dir.has_value());
    }

    SUBCASE("a rotated state document builds the lattice state") {
        const ExperimentConfig cfg = aep::parse_config_text(R"({
            "mode": "quantum-verify",
            "state": {
                "kind": "rotated_classical",
                "probs": [0.9, 0.1],
                "unitary": [[[0.8253356149096783, 0.0], [-0.5646424733950354, 0.0]],
                            [[0.5646424733950354, 0.0], [0.8253356149096783, 0.0]]]
            },
            "eps": 0.15,
            "n_max": 12,
            "l_max": 8
        })", "cfg");
        REQUIRE(cfg.state.has_value());
        CHECK(cfg.l_max == 8);
        CHECK(cfg.state->site_dim() == 2);
    }

    SUBCASE("syntax errors carry line and column") {
        const std::string msg = config_error("{\n  \"mode\": }");
        CHECK(contains(msg, "cfg:2:"));
        CHECK(contains(msg, "syntax error"));
        CHECK(!contains(msg, "[json"));
    }

    SUBCASE("semantic errors carry the field pointer") {
        CHECK(config_error("[1]") == "cfg: /: expected a JSON object");
        CHECK(config_error(R"({"eps": 0.1})") == "cfg: /: missing required field 'mode'");
        CHECK(config_error(R"({"mode": "banana", "eps": 0.1, "n_max": 4})") ==
              "cfg: /mode: unknown mode 'banana' (expected classical-verify, quantum-verify or "
              "code-demo)");
        CHECK(config_error(R"({"mode": "classical-verify",
                               "model": {"kind": "iid", "probs": [0.5, 0.5]}, "n_max": 4})") ==
              "cfg: /: missing required field 'eps'");
        CHECK(config_error(R"({"mode": "classical-verify", "bogus": 1,
                               "model": {"kind": "iid", "probs": [0.5, 0.5]},
                               "eps": 0.1, "n_max": 4})") == "cfg: /: unknown field 'bogus'");
        CHECK(config_error(R"({"mode": "classical-verify", "trials": 7,
                               "model": {"kind": "iid", "probs": [0.5, 0.5]},
                               "eps": 0.1, "n_max": 4})") ==
              "cfg: /: field 'trials' does not apply to 'classical-verify'");
        CHECK(config_error(R"({"mode": "classical-verify", "eps": 0.1, "n_max": 4})") ==
              "cfg: /: missing required field 'model'");
    }

    SUBCASE("range checks name the offending value") {
        const std::string base = R"("model": {"kind": "iid", "probs": [0.5, 0.5]})";
        CHECK(config_error(R"({"mode": "classical-verify", )" + base +
                           R"(, "eps": 1.5, "n_max": 4})") == "cfg: /eps: must lie in (0, 1)");
        CHECK(config_error(R"({"mode": "classical-verify", )" + base +
                           R"(, "eps": 0.1, "n_max": 0})") == "cfg: /n_max: must be positive");
        CHECK(config_error(R"({"mode": "classical-verify", )" + base +
                           R"(, "eps": 0.1, "n_max": 4, "band_m": 0})") ==
              "cfg: /band_m: must lie in [1, n_max]");
        CHECK(config_error(R"({"mode": "classical-verify", )" + base +
                           R"(, "eps": 0.1, "n_max": 4, "band_m": 5})") ==
              "cfg: /band_m: must lie in [1, n_max]");
        CHECK(config_error(R"({"mode": "code-demo", )" + base +
                           R"(, "eps": 0.1, "n_max": 4, "seed": -1})") ==
              "cfg: /seed: expected a nonnegative integer");
        CHECK(config_error(R"({"mode": "classical-verify", )" + base +
                           R"(, "eps": 0.1, "n_max": 4, "tighten": 1})") ==
              "cfg: /tighten: expected a boolean");
    }

    SUBCASE("model faults are wrapped with their location") {
        const std::string msg = config_error(R"({
            "mode": "classical-verify",
            "model": {"kind": "markov", "transition": [[0.9, 0.2], [0.5, 0.5]]},
            "eps": 0.1, "n_max": 4})");
        CHECK(contains(msg, "cfg: /model: "));
        CHECK(contains(msg, "sum to 1"));
        CHECK(config_error(R"({
            "mode": "classical-verify",
            "model": {"kind": "iid", "probs": "x"},
            "eps": 0.1, "n_max": 4})") ==
              "cfg: /model/probs: expected a nonempty array of numbers");
        CHECK(config_error(R"({
            "mode": "classical-verify",
            "model": {"kind": "iid", "probs": [0.5, 0.5], "transition": [[1.0]]},
            "eps": 0.1, "n_max": 4})") ==
              "cfg: /model: field 'transition' does not apply to 'iid'");
    }

    SUBCASE("state faults are wrapped with their location") {
        CHECK(config_error(R"({
            "mode": "quantum-verify",
            "state": {"kind": "rotated_classical", "probs": [0.9, 0.1],
                      "unitary": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [2.0, 0.0]]]},
            "eps": 0.15, "n_max": 4})") == "cfg: /state/unitary: matrix is not unitary");
        CHECK(config_error(R"({
            "mode": "quantum-verify",
            "state": {"kind": "iid_product", "diag": [0.9, 0.1],
                      "unitary": [[1.0, 0.0], [0.0, 1.0]]},
            "eps": 0.15, "n_max": 4})") ==
              "cfg: /state/unitary[0][0]: expected an [re, im] pair");
        CHECK(config_error(R"({
            "mode": "quantum-verify",
            "state": {"kind": "classical_markov", "probs": [0.9, 0.1],
                      "transition": [[0.9, 0.1], [0.5, 0.5]]},
            "eps": 0.15, "n_max": 4})") ==
              "cfg: /state: expected exactly one of 'probs' or 'transition'");
    }

    SUBCASE("a missing file is a config error") {
        CHECK_THROWS_AS(aep::parse_config_file("no_such_config.json"), ConfigError);
    }

    SUBCASE("mode names round trip") {
        using Mode = ExperimentConfig::Mode;
        for (Mode m : {Mode::classical_verify, Mode::quantum_verify, Mode::code_demo})
            CHECK(aep::mode_from_name(aep::mode_name(m)) == m);
        CHECK_THROWS_AS(aep::mode_from_name("classical"), ConfigError);
    }
}
