#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aepkit/chained_family.hpp"
#include "aepkit/lattice.hpp"
#include "aepkit/operators.hpp"

namespace aep {

// Residual tolerance for the marginal-consistency check between depths.
inline constexpr double kMarginalTol = 1e-8;

// One range vector of the depth-n projector, n = m*l + r, kept factored:
// a block-basis label per completed block plus a remainder factor of
// dimension site_dim^r when r > 0.
struct RankOneMember {
    std::vector<Symbol> core_labels;
    std::optional<VecC> tail;

    VecC dense(const SpectralSet& basis) const;
};

struct QuantumBuildOptions {
    std::optional<int> block_length;  // overrides the block length search
    std::optional<int> band_m;        // overrides the band offset search
    int l_max = 64;                   // block length search limit
};

// Depth-indexed projector family p(1), ..., p(N_max) over a lattice state,
// assembled from a chained word family on the block spectral basis. The
// projectors are stored as lists of factored rank-one members; dense forms
// are materialized on demand and respect the dimension cap.
class ChainedProjectorFamily {
  public:
    ChainedProjectorFamily(LatticeState state, double eps, int l, int n_eps,
                           bool mass_target_met, ChainedFamily core, ProcessModel induced,
                           SpectralSet basis, std::vector<std::vector<RankOneMember>> members);

    const LatticeState& state() const { return state_; }
    double eps() const { return eps_; }
    int block_length() const { return l_; }
    int n_max() const { return static_cast<int>(members_.size()); }
    int n_eps() const { return n_eps_; }
    bool mass_target_met() const { return mass_target_met_; }
    int site_dim() const { return state_.site_dim(); }

    const ChainedFamily& core() const { return core_; }
    const ProcessModel& induced_model() const { return induced_; }
    const SpectralSet& basis() const { return basis_; }

    const std::vector<RankOneMember>& members(int n) const;
    std::int64_t trace(int n) const;   // projector rank, an exact member count
    MatC member_columns(int n) const;  // dense members as orthonormal columns
    ProjectorOp dense_projector(int n) const;

  private:
    LatticeState state_;
    double eps_;
    int l_;
    int n_eps_;
    bool mass_target_met_;
    ChainedFamily core_;
    ProcessModel induced_;
    SpectralSet basis_;
    std::vector<std::vector<RankOneMember>> members_;
};

// Full pipeline: pick a block length l with S_l / l < s + eps^2, diagonalize
// the block marginal, run the band construction plus tightening on the
// induced label process (parameters l*s, l*eps), then assemble projectors at
// every depth. The band offset is the smallest M whose tightened family keeps
// mass above 1 - eps at full block depth; when no M reaches the target the
// mass-maximizing M is used and mass_target_met() reports false.
ChainedProjectorFamily build_chained_projectors(const LatticeState& state, double eps, int n_max,
                                                const QuantumBuildOptions& opts = {});

// Projector on the range of the partial trace of p_next over the last l - r
// sites, taking a depth (m+1)*l projector down to depth m*l + r. Requires
// 0 < r < l.
ProjectorOp interpolate_projector(const ProjectorOp& p_next, int site_dim, int l, int r);

// The depth-n projector split into rank-one orthogonal projectors, one per
// stored member.
std::vector<ProjectorOp> minimal_decomposition(const ChainedProjectorFamily& family, int n);

// Raw per-depth observations; pass/fail is always recomputed from these.
struct QuantumDepthRecord {
    int n = 0;
    std::int64_t trace = 0;
    double mass = 0.0;                       // tr(D^(n) p^(n)), ordered member sum
    double max_member_expectation = 0.0;     // largest <v, D^(n) v> over members
    double member_gram_residual = 0.0;       // orthonormality defect of the members
    bool marginal_checked = false;           // dense consistency check ran (n < N_max)
    bool marginal_rank_equal = true;         // rank p^(n) == rank of the reduced operator
    double marginal_residual = 0.0;          // max-abs gap to the reduced-range projector
};

class QuantumVerificationReport {
  public:
    QuantumVerificationReport(double s, double eps, int n_eps, int n_max, int l,
                              std::vector<QuantumDepthRecord> records);

    double s() const { return s_; }
    double eps() const { return eps_; }
    int n_eps() const { return n_eps_; }
    int n_max() const { return n_max_; }
    int block_length() const { return l_; }
    const std::vector<QuantumDepthRecord>& records() const { return records_; }

    // Condition outcomes, recomputed from the records on every call.
    bool members_orthonormal() const;   // gram defect below the projector tolerance, all n
    bool marginals_consistent() const;  // every checked depth: ranks equal, residual small
    bool trace_in_bounds() const;       // rank vs e^{n(s -+ 2 eps)}, n >= N_eps
    bool member_bound_holds() const;    // expectations < e^{-n(s - 2 eps)}, n >= N_eps
    bool mass_holds() const;            // mass > 1 - eps, all n
    bool all_pass() const;

    double trace_lower(int n) const;    // e^{n(s - 2 eps)}
    double trace_upper(int n) const;    // e^{n(s + 2 eps)}
    double member_bound(int n) const;   // e^{-n(s - 2 eps)}

    // Smallest depth from which the tighter one-eps trace bounds hold through
    // N_max; n_max + 1 when they never do. Informational only.
    int eps_trace_bounds_from() const;

  private:
    double s_, eps_;
    int n_eps_, n_max_, l_;
    std::vector<QuantumDepthRecord> records_;
};

// Checks the four defining conditions of the projector family against the
// state it was built from.
QuantumVerificationReport verify_quantum(const ChainedProjectorFamily& family, double eps,
                                         int n_eps);

// Directory round-trip: family.json (parameters), core.txt (the word family),
// basis.json (block eigenbasis), members.json (per-depth label lists and
// remainder factors). Reading revalidates against the given state.
void write_projector_family(const std::string& dir, const ChainedProjectorFamily& family);
ChainedProjectorFamily read_projector_family(const std::string& dir, const LatticeState& state);

}  // namespace aep
