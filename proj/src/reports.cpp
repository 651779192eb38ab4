#include "aepkit/reports.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "aepkit/operators.hpp"

namespace aep {

namespace {

std::string g12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

constexpr char kCsvColumns[] = "n,cardinality_or_trace,lower_bound,upper_bound,max_member_prob,mass";

}  // namespace

void write_classical_report_csv(std::ostream& os, const VerificationReport& report) {
    os << kCsvColumns << '\n';
    for (const DepthRecord& r : report.records()) {
        os << r.n << ',' << r.cardinality << ',' << g12(report.cardinality_lower(r.n)) << ','
           << g12(report.cardinality_upper(r.n)) << ',' << g12(std::exp(r.log_max_member_prob))
           << ',' << g12(r.mass) << '\n';
    }
}

void write_quantum_report_csv(std::ostream& os, const QuantumVerificationReport& report) {
    os << kCsvColumns << ",q1_residual\n";
    for (const QuantumDepthRecord& r : report.records()) {
        os << r.n << ',' << r.trace << ',' << g12(report.trace_lower(r.n)) << ','
           << g12(report.trace_upper(r.n)) << ',' << g12(r.max_member_expectation) << ','
           << g12(r.mass) << ',';
        if (r.marginal_checked) os << g12(r.marginal_residual);
        os << '\n';
    }
}

nlohmann::ordered_json classical_report_json(const VerificationReport& report,
                                             const ChainedFamily& family) {
    nlohmann::ordered_json j;
    j["kind"] = "classical_verification";
    j["entropy_rate_nats"] = report.h();
    j["entropy_rate_bits"] = report.h() / std::log(2.0);
    j["eps"] = report.eps();
    j["band_m"] = family.band_m;
    j["n_eps"] = report.n_eps();
    j["n_max"] = report.n_max();
    j["comparison_slack"] = report.slack();
    nlohmann::ordered_json cond;
    cond["chain"] = report.chain_holds();
    cond["cardinality_in_bounds"] = report.cardinality_in_bounds();
    cond["member_bound"] = report.member_bound_holds();
    cond["mass"] = report.mass_holds();
    j["conditions"] = std::move(cond);
    j["all_pass"] = report.all_pass();
    nlohmann::ordered_json depths = nlohmann::ordered_json::array();
    for (const DepthRecord& r : report.records()) {
        nlohmann::ordered_json row;
        row["n"] = r.n;
        row["cardinality"] = r.cardinality;
        row["lower_bound"] = report.cardinality_lower(r.n);
        row["upper_bound"] = report.cardinality_upper(r.n);
        row["max_member_prob"] = std::exp(r.log_max_member_prob);
        row["mass"] = r.mass;
        row["chain_ok"] = r.chain_ok;
        if (r.chain_violator) row["chain_violator"] = format_word(*r.chain_violator, family.alphabet);
        if (r.member_violator)
            row["member_violator"] = format_word(*r.member_violator, family.alphabet);
        depths.push_back(std::move(row));
    }
    j["depths"] = std::move(depths);
    return j;
}

nlohmann::ordered_json quantum_report_json(const QuantumVerificationReport& report,
                                           const ChainedProjectorFamily& family) {
    nlohmann::ordered_json j;
    j["kind"] = "quantum_verification";
    j["entropy_density_nats"] = report.s();
    j["entropy_density_bits"] = report.s() / std::log(2.0);
    j["eps"] = report.eps();
    j["block_length"] = report.block_length();
    j["n_eps"] = report.n_eps();
    j["n_max"] = report.n_max();
    j["mass_target_met"] = family.mass_target_met();
    j["comparison_slack"] = kBandSlack;
    j["marginal_tolerance"] = kMarginalTol;
    j["projector_tolerance"] = kProjTol;
    nlohmann::ordered_json cond;
    cond["members_orthonormal"] = report.members_orthonormal();
    cond["marginals_consistent"] = report.marginals_consistent();
    cond["trace_in_bounds"] = report.trace_in_bounds();
    cond["member_bound"] = report.member_bound_holds();
    cond["mass"] = report.mass_holds();
    j["conditions"] = std::move(cond);
    j["all_pass"] = report.all_pass();
    // depth from which the one-eps trace bounds already hold, n_max + 1 if never
    j["eps_trace_bounds_from"] = report.eps_trace_bounds_from();
    nlohmann::ordered_json depths = nlohmann::ordered_json::array();
    for (const QuantumDepthRecord& r : report.records()) {
        nlohmann::ordered_json row;
        row["n"] = r.n;
        row["trace"] = r.trace;
        row["lower_bound"] = report.trace_lower(r.n);
        row["upper_bound"] = report.trace_upper(r.n);
        row["max_member_expectation"] = r.max_member_expectation;
        row["mass"] = r.mass;
        row["member_gram_residual"] = r.member_gram_residual;
        row["marginal_checked"] = r.marginal_checked;
        if (r.marginal_checked) {
            row["marginal_rank_equal"] = r.marginal_rank_equal;
            row["q1_residual"] = r.marginal_residual;
        }
        depths.push_back(std::move(row));
    }
    j["depths"] = std::move(depths);
    return j;
}

nlohmann::ordered_json rate_report_json(const RateReport& report) {
    nlohmann::ordered_json j;
    j["kind"] = "code_demo";
    j["n"] = report.n;
    j["trials"] = report.trials;
    j["seed"] = report.seed;
    j["mean_bits_per_symbol"] = report.mean_bits_per_symbol;
    j["escape_frequency"] = report.escape_frequency;
    j["entropy_bits_per_symbol"] = report.entropy_bits_per_symbol;
    j["lz78_bits_per_symbol"] = report.lz78_bits_per_symbol;
    return j;
}

}  // namespace aep
