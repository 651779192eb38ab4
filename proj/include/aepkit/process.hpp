#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "aepkit/alphabet.hpp"

namespace aep {

// Entropy rate in nats. nonstationary_initial is set when a markov model was
// given an initial distribution that differs from the stationary one; the
// rate is then still the stationary rate.
struct EntropyRate {
    double nats = 0.0;
    bool nonstationary_initial = false;
};

// Stationary finite-alphabet process: iid, first-order markov, or a blocked
// view of another model (non-overlapping length-l blocks as single symbols).
// Marginal arithmetic switches to log space beyond 64 factor terms.
class ProcessModel {
  public:
    static ProcessModel iid(std::vector<double> probs, Alphabet alpha = {});
    static ProcessModel markov(std::vector<std::vector<double>> transition,
                               std::optional<std::vector<double>> initial = std::nullopt,
                               Alphabet alpha = {});
    // Blocked view; label_to_word maps a block symbol to the index of its
    // base word in lexicographic enumeration (identity when omitted).
    static ProcessModel blocked(ProcessModel base, int block_len,
                                std::vector<std::uint32_t> label_to_word = {});

    const Alphabet& alphabet() const { return alpha_; }
    std::uint32_t alphabet_size() const { return alpha_.size; }

    double marginal_prob(const Word& w) const;
    double log_marginal_prob(const Word& w) const;  // -inf for zero probability
    double empirical_entropy(const Word& w) const;  // -(1/n) log marginal
    EntropyRate entropy_rate() const;
    Word sample_trajectory(std::size_t n, std::uint64_t seed) const;
    ProcessModel block(int block_len) const { return blocked(*this, block_len); }

    bool is_markov() const { return kind_ == Kind::markov; }
    bool is_iid() const { return kind_ == Kind::iid; }
    bool is_blocked() const { return kind_ == Kind::blocked; }
    // Stationary distribution (markov: left eigenvector of the transition
    // matrix; iid: the symbol distribution).
    std::vector<double> stationary() const;
    const std::vector<std::vector<double>>& transition() const;
    int block_len() const { return block_len_; }
    const ProcessModel& base() const { return *base_; }

  private:
    enum class Kind { iid, markov, blocked };
    ProcessModel() = default;

    // Expands a blocked word into base symbols; identity for other kinds.
    void expand(const Word& w, std::vector<Symbol>& out) const;
    std::size_t factor_count(std::size_t n) const;
    double log_term(Symbol prev, Symbol cur, bool first) const;

    Kind kind_ = Kind::iid;
    Alphabet alpha_;
    std::vector<double> probs_;                    // iid
    std::vector<std::vector<double>> transition_;  // markov
    std::vector<double> initial_;                  // markov
    std::vector<double> stationary_;               // markov, cached
    bool nonstationary_initial_ = false;
    std::shared_ptr<const ProcessModel> base_;     // blocked
    int block_len_ = 1;
    std::vector<std::uint32_t> label_to_word_;     // blocked, may be empty
    std::vector<std::uint32_t> word_to_label_;     // inverse, may be empty
};

}  // namespace aep
