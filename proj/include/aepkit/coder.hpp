#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "aepkit/chained_family.hpp"
#include "aepkit/process.hpp"

namespace aep {

// Bit sequence packed most-significant-bit-first. The serialized form is an
// 8-byte little-endian bit count followed by the packed payload; padding bits
// in the final byte must be zero.
class BitString {
  public:
    void push_back(bool bit);
    // Appends the low `bits` bits of value, highest first.
    void append_uint(std::uint64_t value, int bits);

    std::size_t size() const { return nbits_; }
    bool empty() const { return nbits_ == 0; }
    bool bit(std::size_t i) const;

    std::vector<std::uint8_t> to_bytes() const;
    static BitString from_bytes(const std::vector<std::uint8_t>& bytes);

    bool operator==(const BitString&) const = default;

  private:
    std::vector<std::uint8_t> packed_;
    std::size_t nbits_ = 0;
};

// Sequential cursor over a BitString; reading past the end throws
// CorruptionError.
class BitReader {
  public:
    explicit BitReader(const BitString& bits) : bits_(&bits) {}
    bool read_bit();
    std::uint64_t read_uint(int bits);
    std::size_t position() const { return pos_; }
    bool exhausted() const { return pos_ == bits_->size(); }

  private:
    const BitString* bits_;
    std::size_t pos_ = 0;
};

// Enumerative index over a chained family: the codeword of a member word of
// length n is its lexicographic rank within slice n. Because consecutive
// slices are linked by truncation, the ranks of all prefixes fall out of one
// forward walk, so a growing word can be re-ranked without rescanning
// earlier depths.
class Codebook {
  public:
    explicit Codebook(ChainedFamily family);

    const ChainedFamily& family() const { return family_; }
    int n_max() const { return family_.n_max; }
    std::uint32_t alphabet_size() const { return family_.alphabet.size; }

    // Lexicographic rank of w within slice |w|; nullopt when w is not a
    // member.
    std::optional<std::uint64_t> rank(const Word& w) const;
    // Inverse of rank at depth n. Throws std::out_of_range for a bad rank.
    const Word& unrank(int n, std::uint64_t r) const;

    // Ranks of every prefix of w in one forward walk: entry k-1 holds the
    // rank of w.prefix(k), nullopt from the first non-member prefix on.
    std::vector<std::optional<std::uint64_t>> prefix_ranks(const Word& w) const;

    int typical_bits(int n) const;  // bits needed for a rank at depth n
    int escape_bits(int n) const;   // bits needed for a raw word of length n

  private:
    ChainedFamily family_;
    // child_start_[k-1][i] is the slice-(k+1) index of the first extension of
    // slice(k)[i]; one extra entry closes the last range.
    std::vector<std::vector<std::uint64_t>> child_start_;
};

// Codeword layout: flag bit 0 + typical_bits(n) rank bits for members, flag
// bit 1 + escape_bits(n) raw bits for everything else.
BitString encode(const Codebook& book, const Word& w);
// Exact inverse of encode; bits must hold exactly one depth-n codeword.
Word decode(const Codebook& book, const BitString& bits, int n);

// LZ78 dictionary coder, kept as a rate baseline only. Phrase index widths
// grow with the dictionary; decoding needs the original length to stop.
BitString lz78_encode(const Word& w, std::uint32_t alphabet_size);
Word lz78_decode(const BitString& bits, int n, std::uint32_t alphabet_size);

struct RateReport {
    int n = 0;
    int trials = 0;
    std::uint64_t seed = 0;
    double mean_bits_per_symbol = 0.0;   // enumerative coder, escapes included
    double escape_frequency = 0.0;
    double entropy_bits_per_symbol = 0.0;  // model entropy rate over log 2
    double lz78_bits_per_symbol = 0.0;

    bool operator==(const RateReport&) const = default;
};

// Codes `trials` sampled length-n trajectories (trial t uses seed + t) and
// averages the bit cost; the same samples feed the LZ78 baseline.
RateReport rate_report(const Codebook& book, const ProcessModel& model, int n, int trials,
                       std::uint64_t seed);
void write_rate_report_csv(std::ostream& os, const RateReport& report);

}  // namespace aep
