#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aepkit/operators.hpp"
#include "aepkit/process.hpp"

namespace aep {

struct MeanEntropy {
    double nats = 0.0;              // per-site entropy s
    std::string source = "closed_form";
};

// Translation invariant state of a one dimensional quantum spin lattice.
// Three shapes are supported: a product of identical site densities, a
// classical (diagonal) state driven by a stationary chain, and the same
// conjugated sitewise by a fixed unitary. All block quantities have closed
// forms, so entropies never require materializing a large density.
class LatticeState {
  public:
    enum class Kind { product, classical, rotated };

    static LatticeState iid_product(DensityOperator site);
    // chain must be iid or stationary markov (no nonstationary start, which
    // would break shift invariance)
    static LatticeState classical_markov(ProcessModel chain);
    static LatticeState rotated_classical(ProcessModel chain, MatC site_unitary);

    Kind kind() const { return kind_; }
    int site_dim() const { return site_dim_; }
    bool is_classical_diagonal() const { return kind_ == Kind::classical; }

    MeanEntropy mean_entropy() const;
    double block_entropy(int l) const;        // S of the length-l marginal, nats
    DensityOperator block_density(int l) const;  // dense; obeys the dimension cap

    // D^(n) v without materializing D^(n); v has length site_dim^n.
    VecC apply_block_density(int n, const VecC& v) const;
    double member_expectation(int n, const VecC& v) const;  // re v^H D^(n) v

    const ProcessModel& chain() const;   // classical and rotated
    const MatC& site_unitary() const;    // rotated (identity for classical)
    const DensityOperator& site() const; // product

  private:
    Kind kind_ = Kind::product;
    int site_dim_ = 0;
    std::optional<DensityOperator> site_;
    std::optional<ProcessModel> chain_;
    MatC unitary_;

    std::vector<double> diagonal_weights(int n) const;
};

// Smallest l with block_entropy(l)/l < mean + eps^2; throws SelectionError
// if no l up to l_max qualifies.
int choose_block_length(const LatticeState& state, double eps, int l_max);

// (l, S_l / l) for l = 1..l_max.
std::vector<std::pair<int, double>> entropy_density_curve(const LatticeState& state, int l_max);

// Eigenbasis of the length-l marginal together with the process of outcome
// labels: label i carries the i-th spectral component. For classical and
// rotated states this is the blocked chain relabeled by the eigenvalue order;
// for product states the blocks are independent.
struct InducedProcess {
    ProcessModel model;
    SpectralSet basis;
};
InducedProcess induced_process(const LatticeState& state, int l);

}  // namespace aep
