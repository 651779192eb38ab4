#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "aepkit/alphabet.hpp"
#include "aepkit/process.hpp"

namespace aep {

// Comparison slack for strict band inequalities evaluated in log space.
inline constexpr double kBandSlack = 1e-12;

// Depth-indexed family of word sets C(1), ..., C(N_max) with the chain
// property: C(n) is exactly the set of one-symbol truncations of C(n+1).
// Every slice is stored sorted lexicographically.
struct ChainedFamily {
    Alphabet alphabet;
    int n_max = 0;
    double h = 0.0;      // entropy center of the construction band (nats/symbol)
    double eps = 0.0;    // family parameter; the build band has half-width eps/2
    int band_m = 1;      // depth from which the band constraint applies
    int n_eps = 1;       // threshold N(eps) = max(k(eps), M) for the counting bound
    std::vector<std::vector<Word>> slices;  // slices[n-1] holds C(n)

    const std::vector<Word>& slice(int n) const;
    std::uint64_t cardinality(int n) const;
    const std::vector<Word>& leaves() const { return slice(n_max); }

    // Rebuilds all slices as the prefix closure of the given depth-N_max words.
    static ChainedFamily from_leaves(Alphabet alphabet, std::vector<Word> leaves, int n_max,
                                     double h, double eps, int band_m, int n_eps);
};

// Smallest k with (1-eps) e^{k eps/2} > 1, by direct search.
int minimal_k(double eps);

// Depth-first construction: keeps every depth-N_max word whose length-n
// prefixes, band_m <= n <= N_max, have marginal probability strictly inside
// (e^{-n(h+eps/2)}, e^{-n(h-eps/2)}). Throws BandConstructionError when no
// word survives.
ChainedFamily build_chained_family(const ProcessModel& model, EntropyRate h, double eps,
                                   int band_m, int n_max);

// Keeps the leaves whose prefixes also satisfy the lower bound
// P(k-prefix) > e^{-k(h+eps)} for every k >= max(family.n_eps, minimal_k(eps)),
// giving a two-sided band. Expects a family built with parameter eps/2.
// Throws TighteningError when nothing survives.
ChainedFamily tighten_family(const ChainedFamily& family, const ProcessModel& model, double eps);

// Total marginal probability of slice n, summed in lexicographic order.
double family_mass(const ChainedFamily& family, const ProcessModel& model, int n);

// Smallest band offset M whose family reaches mass_target at depth n_max.
// Throws SelectionError when no M in [1, n_max] qualifies.
int find_min_band_offset(const ProcessModel& model, EntropyRate h, double eps, int n_max,
                         double mass_target);

struct BandOffsetChoice {
    int band_m = 0;
    double mass = 0.0;     // depth-N_max mass of the chosen family
    bool met_target = false;
};
// Like find_min_band_offset but falls back to the mass-maximizing M (smallest
// on ties) instead of throwing when the target is unreachable. Throws
// SelectionError only if every M yields an empty family.
BandOffsetChoice select_band_offset(const ProcessModel& model, EntropyRate h, double eps,
                                    int n_max, double mass_target);

// Raw per-depth observations; pass/fail is always recomputed from these.
struct DepthRecord {
    int n = 0;
    std::uint64_t cardinality = 0;
    double log_max_member_prob = 0.0;
    double mass = 0.0;
    bool chain_ok = true;                  // vacuous at n = N_max
    std::optional<Word> chain_violator;    // smallest word breaking the chain
    std::optional<Word> member_violator;   // smallest word breaking the member bound
};

class VerificationReport {
  public:
    VerificationReport(double h, double eps, int n_eps, int n_max,
                       std::vector<DepthRecord> records);

    double h() const { return h_; }
    double eps() const { return eps_; }
    int n_eps() const { return n_eps_; }
    int n_max() const { return n_max_; }
    double slack() const { return kBandSlack; }
    const std::vector<DepthRecord>& records() const { return records_; }

    // Condition outcomes, recomputed from the records on every call.
    bool chain_holds() const;               // truncation consistency, n < N_max
    bool cardinality_in_bounds() const;     // counts vs e^{n(h -+ eps)}, n >= N_eps
    bool member_bound_holds() const;        // member probability < e^{-n(h-eps)}, n >= N_eps
    bool mass_holds() const;                // slice mass > 1-eps, all n
    bool all_pass() const;

    double cardinality_lower(int n) const;  // e^{n(h-eps)}
    double cardinality_upper(int n) const;  // e^{n(h+eps)}

  private:
    double h_, eps_;
    int n_eps_, n_max_;
    std::vector<DepthRecord> records_;
};

// Checks the four defining conditions of the family against the model.
VerificationReport verify_classical(const ChainedFamily& family, const ProcessModel& model,
                                EntropyRate h, double eps, int n_eps);

// Text round-trip: header with (h, eps, M, N_max, N_eps) and alphabet size,
// then one depth-N_max word per line in lexicographic order.
void write_family_text(std::ostream& os, const ChainedFamily& family);
ChainedFamily read_family_text(std::istream& is);

}  // namespace aep
