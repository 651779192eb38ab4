#include "aepkit/experiment.hpp"

#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aepkit/errors.hpp"
#include "aepkit/kernels.hpp"
#include "aepkit/operators.hpp"

namespace aep {

namespace {

using nlohmann::json;
using Mode = ExperimentConfig::Mode;

struct Ctx {
    std::string src;
};

[[noreturn]] void fail(const Ctx& c, const std::string& where, const std::string& msg) {
    throw ConfigError(c.src + ": " + where + ": " + msg);
}

const json& need(const Ctx& c, const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(c, where, std::string("missing required field '") + key + "'");
    return *it;
}

double as_number(const Ctx& c, const json& v, const std::string& where) {
    if (!v.is_number()) fail(c, where, "expected a number");
    return v.get<double>();
}

int as_int(const Ctx& c, const json& v, const std::string& where) {
    if (!v.is_number_integer()) fail(c, where, "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        fail(c, where, "integer out of range");
    return static_cast<int>(x);
}

std::uint64_t as_seed(const Ctx& c, const json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    fail(c, where, "expected a nonnegative integer");
}

bool as_bool(const Ctx& c, const json& v, const std::string& where) {
    if (!v.is_boolean()) fail(c, where, "expected a boolean");
    return v.get<bool>();
}

std::string as_string(const Ctx& c, const json& v, const std::string& where) {
    if (!v.is_string()) fail(c, where, "expected a string");
    return v.get<std::string>();
}

std::vector<double> as_real_vector(const Ctx& c, const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) fail(c, where, "expected a nonempty array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_number(c, v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::vector<double>> as_real_matrix(const Ctx& c, const json& v,
                                                const std::string& where) {
    if (!v.is_array() || v.empty()) fail(c, where, "expected a nonempty array of rows");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_real_vector(c, v[i], where + "[" + std::to_string(i) + "]"));
    for (const auto& row : out)
        if (row.size() != out.size()) fail(c, where, "matrix must be square");
    return out;
}

// Complex entries are [re, im] pairs, matching the operator JSON layout.
MatC as_complex_matrix(const Ctx& c, const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) fail(c, where, "expected a nonempty array of rows");
    const std::size_t n = v.size();
    MatC out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const std::string wrow = where + "[" + std::to_string(i) + "]";
        if (!v[i].is_array() || v[i].size() != n) fail(c, wrow, "matrix must be square");
        for (std::size_t j = 0; j < n; ++j) {
            const json& e = v[i][j];
            const std::string wcell = wrow + "[" + std::to_string(j) + "]";
            if (!e.is_array() || e.size() != 2) fail(c, wcell, "expected an [re, im] pair");
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                Cplx(as_number(c, e[0], wcell), as_number(c, e[1], wcell));
        }
    }
    return out;
}

void check_keys(const Ctx& c, const json& obj, const std::string& where,
                const std::map<std::string, std::set<std::string>>& table,
                const std::string& variant) {
    for (const auto& item : obj.items()) {
        auto it = table.find(item.key());
        if (it == table.end()) fail(c, where, "unknown field '" + item.key() + "'");
        if (!it->second.empty() && it->second.count(variant) == 0)
            fail(c, where,
                 "field '" + item.key() + "' does not apply to '" + variant + "'");
    }
}

MatC checked_unitary(const Ctx& c, const json& v, const std::string& where) {
    MatC u = as_complex_matrix(c, v, where);
    const MatC gram = u.adjoint() * u;
    if (kernels::max_abs_diff(gram, MatC::Identity(u.rows(), u.cols())) > 1e-10)
        fail(c, where, "matrix is not unitary");
    return u;
}

ProcessModel parse_model(const Ctx& c, const json& v, const std::string& where) {
    if (!v.is_object()) fail(c, where, "expected an object");
    static const std::map<std::string, std::set<std::string>> keys{
        {"kind", {}},
        {"probs", {"iid"}},
        {"transition", {"markov"}},
        {"initial", {"markov"}},
    };
    const std::string kind = as_string(c, need(c, v, where, "kind"), where + "/kind");
    if (kind != "iid" && kind != "markov")
        fail(c, where + "/kind", "expected 'iid' or 'markov'");
    check_keys(c, v, where, keys, kind);
    try {
        if (kind == "iid")
            return ProcessModel::iid(as_real_vector(c, need(c, v, where, "probs"), where + "/probs"));
        auto t = as_real_matrix(c, need(c, v, where, "transition"), where + "/transition");
        std::optional<std::vector<double>> initial;
        if (v.contains("initial"))
            initial = as_real_vector(c, v["initial"], where + "/initial");
        return ProcessModel::markov(std::move(t), std::move(initial));
    } catch (const std::invalid_argument& e) {
        fail(c, where, e.what());
    }
}

// A chain declaration inside a state: exactly one of probs (iid) or
// transition (markov).
ProcessModel parse_chain(const Ctx& c, const json& v, const std::string& where) {
    const bool has_probs = v.contains("probs");
    const bool has_transition = v.contains("transition");
    if (has_probs == has_transition)
        fail(c, where, "expected exactly one of 'probs' or 'transition'");
    try {
        if (has_probs)
            return ProcessModel::iid(as_real_vector(c, v["probs"], where + "/probs"));
        return ProcessModel::markov(as_real_matrix(c, v["transition"], where + "/transition"));
    } catch (const std::invalid_argument& e) {
        fail(c, where, e.what());
    }
}

LatticeState parse_state(const Ctx& c, const json& v, const std::string& where) {
    if (!v.is_object()) fail(c, where, "expected an object");
    static const std::map<std::string, std::set<std::string>> keys{
        {"kind", {}},
        {"diag", {"iid_product"}},
        {"unitary", {"iid_product", "rotated_classical"}},
        {"probs", {"classical_markov", "rotated_classical"}},
        {"transition", {"classical_markov", "rotated_classical"}},
    };
    const std::string kind = as_string(c, need(c, v, where, "kind"), where + "/kind");
    if (kind != "iid_product" && kind != "classical_markov" && kind != "rotated_classical")
        fail(c, where + "/kind",
             "expected 'iid_product', 'classical_markov' or 'rotated_classical'");
    check_keys(c, v, where, keys, kind);
    try {
        if (kind == "iid_product") {
            const auto diag =
                as_real_vector(c, need(c, v, where, "diag"), where + "/diag");
            MatC m = MatC::Zero(static_cast<Eigen::Index>(diag.size()),
                                static_cast<Eigen::Index>(diag.size()));
            for (std::size_t i = 0; i < diag.size(); ++i)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag[i];
            if (v.contains("unitary")) {
                const MatC u = checked_unitary(c, v["unitary"], where + "/unitary");
                if (u.rows() != m.rows())
                    fail(c, where + "/unitary", "dimension does not match 'diag'");
                m = u * m * u.adjoint();
            }
            return LatticeState::iid_product(DensityOperator::checked(std::move(m)));
        }
        ProcessModel chain = parse_chain(c, v, where);
        if (kind == "classical_markov") return LatticeState::classical_markov(std::move(chain));
        const MatC u = checked_unitary(c, need(c, v, where, "unitary"), where + "/unitary");
        return LatticeState::rotated_classical(std::move(chain), u);
    } catch (const std::invalid_argument& e) {
        fail(c, where, e.what());
    }
}

}  // namespace

const char* mode_name(Mode mode) {
    switch (mode) {
        case Mode::classical_verify: return "classical-verify";
        case Mode::quantum_verify: return "quantum-verify";
        case Mode::code_demo: return "code-demo";
    }
    throw std::logic_error("mode_name: unreachable");
}

ExperimentConfig::Mode mode_from_name(const std::string& name) {
    if (name == "classical-verify") return Mode::classical_verify;
    if (name == "quantum-verify") return Mode::quantum_verify;
    if (name == "code-demo") return Mode::code_demo;
    throw ConfigError("unknown mode '" + name +
                      "' (expected classical-verify, quantum-verify or code-demo)");
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name) {
    const Ctx c{source_name};
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t stop = e.byte > 0 ? e.byte - 1 : 0;
        for (std::size_t i = 0; i < stop && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        // the library prefixes its exception id; our location header replaces it
        if (!what.empty() && what.front() == '[') {
            const auto close = what.find("] ");
            if (close != std::string::npos) what.erase(0, close + 2);
        }
        throw ConfigError(source_name + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": " + what);
    }
    if (!doc.is_object()) fail(c, "/", "expected a JSON object");

    ExperimentConfig cfg;
    const std::string mode_str = as_string(c, need(c, doc, "/", "mode"), "/mode");
    try {
        cfg.mode = mode_from_name(mode_str);
    } catch (const ConfigError& e) {
        fail(c, "/mode", e.what());
    }
    const std::string variant = mode_name(cfg.mode);

    static const std::map<std::string, std::set<std::string>> keys{
        {"mode", {}},
        {"out_dir", {}},
        {"eps", {}},
        {"n_max", {}},
        {"model", {"classical-verify", "code-demo"}},
        {"state", {"quantum-verify"}},
        {"band_m", {}},
        {"mass_target", {"classical-verify", "code-demo"}},
        {"tighten", {"classical-verify"}},
        {"block_length", {"quantum-verify"}},
        {"l_max", {"quantum-verify"}},
        {"seed", {"code-demo"}},
        {"trials", {"code-demo"}},
    };
    check_keys(c, doc, "/", keys, variant);

    cfg.eps = as_number(c, need(c, doc, "/", "eps"), "/eps");
    if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) fail(c, "/eps", "must lie in (0, 1)");
    cfg.n_max = as_int(c, need(c, doc, "/", "n_max"), "/n_max");
    if (cfg.n_max < 1) fail(c, "/n_max", "must be positive");

    if (doc.contains("band_m")) {
        cfg.band_m = as_int(c, doc["band_m"], "/band_m");
        if (*cfg.band_m < 1 || *cfg.band_m > cfg.n_max)
            fail(c, "/band_m", "must lie in [1, n_max]");
    }
    if (doc.contains("mass_target")) {
        cfg.mass_target = as_number(c, doc["mass_target"], "/mass_target");
        if (!(*cfg.mass_target > 0.0 && *cfg.mass_target < 1.0))
            fail(c, "/mass_target", "must lie in (0, 1)");
    }
    if (doc.contains("tighten")) cfg.tighten = as_bool(c, doc["tighten"], "/tighten");
    if (doc.contains("block_length")) {
        cfg.block_length = as_int(c, doc["block_length"], "/block_length");
        if (*cfg.block_length < 1) fail(c, "/block_length", "must be positive");
    }
    if (doc.contains("l_max")) {
        cfg.l_max = as_int(c, doc["l_max"], "/l_max");
        if (cfg.l_max < 1) fail(c, "/l_max", "must be positive");
    }
    if (doc.contains("seed")) cfg.seed = as_seed(c, doc["seed"], "/seed");
    if (doc.contains("trials")) {
        cfg.trials = as_int(c, doc["trials"], "/trials");
        if (cfg.trials < 1) fail(c, "/trials", "must be positive");
    }
    if (doc.contains("out_dir")) cfg.out_dir = as_string(c, doc["out_dir"], "/out_dir");

    if (cfg.mode == Mode::quantum_verify)
        cfg.state = parse_state(c, need(c, doc, "/", "state"), "/state");
    else
        cfg.model = parse_model(c, need(c, doc, "/", "model"), "/model");
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

}  // namespace aep
