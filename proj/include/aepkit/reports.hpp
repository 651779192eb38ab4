#pragma once

#include <iosfwd>

#include <json.hpp>

#include "aepkit/chained_family.hpp"
#include "aepkit/chained_projectors.hpp"
#include "aepkit/coder.hpp"

namespace aep {

// Fixed-column CSV, one row per depth, 12 significant digits. The quantum
// variant appends the consistency residual column, left empty at depths the
// dense check does not cover.
void write_classical_report_csv(std::ostream& os, const VerificationReport& report);
void write_quantum_report_csv(std::ostream& os, const QuantumVerificationReport& report);

// JSON twins carrying the condition verdicts, tolerances and per-depth rows;
// violating words are spelled out with the family alphabet.
nlohmann::ordered_json classical_report_json(const VerificationReport& report,
                                             const ChainedFamily& family);
nlohmann::ordered_json quantum_report_json(const QuantumVerificationReport& report,
                                           const ChainedProjectorFamily& family);
nlohmann::ordered_json rate_report_json(const RateReport& report);

}  // namespace aep
