#include "aepkit/coder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "aepkit/errors.hpp"

namespace aep {

namespace {

// |A|^n as an exact 64-bit count of raw words; the escape path indexes into
// this range, so it is capped rather than approximated.
std::uint64_t raw_word_count(std::uint32_t alphabet, int n) {
    std::uint64_t total = 1;
    for (int i = 0; i < n; ++i) {
        if (total > std::numeric_limits<std::uint64_t>::max() / alphabet)
            throw ResourceLimitError("escape path: alphabet^n exceeds 64-bit indexing");
        total *= alphabet;
    }
    return total;
}

void check_word(const Word& w, std::uint32_t alphabet, int n_max, const char* what) {
    if (w.empty() || static_cast<int>(w.size()) > n_max)
        throw std::invalid_argument(std::string(what) + ": word length must lie in [1, " +
                                    std::to_string(n_max) + "]");
    for (Symbol a : w.symbols)
        if (a >= alphabet)
            throw std::invalid_argument(std::string(what) + ": symbol outside the alphabet");
}

}  // namespace

void BitString::push_back(bool bit) {
    if (nbits_ % 8 == 0) packed_.push_back(0);
    if (bit) packed_[nbits_ / 8] |= static_cast<std::uint8_t>(0x80u >> (nbits_ % 8));
    ++nbits_;
}

void BitString::append_uint(std::uint64_t value, int bits) {
    if (bits < 0 || bits > 64)
        throw std::invalid_argument("BitString::append_uint: bit count must lie in [0, 64]");
    if (bits < 64 && (value >> bits) != 0)
        throw std::invalid_argument("BitString::append_uint: value does not fit the bit count");
    for (int i = bits - 1; i >= 0; --i) push_back((value >> i) & 1u);
}

bool BitString::bit(std::size_t i) const {
    if (i >= nbits_) throw std::out_of_range("BitString::bit: index out of range");
    return (packed_[i / 8] >> (7 - i % 8)) & 1u;
}

std::vector<std::uint8_t> BitString::to_bytes() const {
    std::vector<std::uint8_t> out;
    out.reserve(8 + packed_.size());
    std::uint64_t count = nbits_;
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(count >> (8 * i)));
    out.insert(out.end(), packed_.begin(), packed_.end());
    return out;
}

BitString BitString::from_bytes(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8) throw CorruptionError("bit stream: header truncated");
    std::uint64_t count = 0;
    for (int i = 0; i < 8; ++i) count |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    const std::uint64_t payload = (count + 7) / 8;
    if (bytes.size() != 8 + payload)
        throw CorruptionError("bit stream: payload length does not match the header");
    BitString out;
    out.nbits_ = static_cast<std::size_t>(count);
    out.packed_.assign(bytes.begin() + 8, bytes.end());
    if (count % 8 != 0) {
        const std::uint8_t pad = static_cast<std::uint8_t>(0xFFu >> (count % 8));
        if ((out.packed_.back() & pad) != 0)
            throw CorruptionError("bit stream: padding bits are not zero");
    }
    return out;
}

bool BitReader::read_bit() {
    if (pos_ >= bits_->size()) throw CorruptionError("bit stream: truncated read");
    return bits_->bit(pos_++);
}

std::uint64_t BitReader::read_uint(int bits) {
    if (bits < 0 || bits > 64)
        throw std::invalid_argument("BitReader::read_uint: bit count must lie in [0, 64]");
    std::uint64_t v = 0;
    for (int i = 0; i < bits; ++i) v = (v << 1) | (read_bit() ? 1u : 0u);
    return v;
}

Codebook::Codebook(ChainedFamily family) : family_(std::move(family)) {
    if (family_.n_max < 1 ||
        family_.slices.size() != static_cast<std::size_t>(family_.n_max))
        throw std::invalid_argument("Codebook: family has no usable slices");
    for (const auto& s : family_.slices)
        if (s.empty()) throw std::invalid_argument("Codebook: empty slice");

    // One merge scan per depth pair: child ranges must tile the next slice in
    // order, which is exactly the truncation link between slices.
    child_start_.resize(static_cast<std::size_t>(family_.n_max - 1));
    for (int k = 1; k < family_.n_max; ++k) {
        const auto& cur = family_.slices[static_cast<std::size_t>(k - 1)];
        const auto& next = family_.slices[static_cast<std::size_t>(k)];
        auto& starts = child_start_[static_cast<std::size_t>(k - 1)];
        starts.resize(cur.size() + 1);
        std::size_t j = 0;
        for (std::size_t i = 0; i < cur.size(); ++i) {
            starts[i] = j;
            while (j < next.size() && std::equal(cur[i].symbols.begin(), cur[i].symbols.end(),
                                                 next[j].symbols.begin()))
                ++j;
            if (starts[i] == j)
                throw std::invalid_argument("Codebook: family is not chain consistent");
        }
        starts[cur.size()] = j;
        if (j != next.size())
            throw std::invalid_argument("Codebook: family is not chain consistent");
    }
}

std::optional<std::uint64_t> Codebook::rank(const Word& w) const {
    check_word(w, alphabet_size(), family_.n_max, "Codebook::rank");
    const auto& s = family_.slice(static_cast<int>(w.size()));
    auto it = std::lower_bound(s.begin(), s.end(), w);
    if (it == s.end() || *it != w) return std::nullopt;
    return static_cast<std::uint64_t>(it - s.begin());
}

const Word& Codebook::unrank(int n, std::uint64_t r) const {
    const auto& s = family_.slice(n);
    if (r >= s.size()) throw std::out_of_range("Codebook::unrank: rank out of range");
    return s[static_cast<std::size_t>(r)];
}

std::vector<std::optional<std::uint64_t>> Codebook::prefix_ranks(const Word& w) const {
    check_word(w, alphabet_size(), family_.n_max, "Codebook::prefix_ranks");
    const int n = static_cast<int>(w.size());
    std::vector<std::optional<std::uint64_t>> out(static_cast<std::size_t>(n));

    const auto& first = family_.slices[0];
    Word p = w.prefix(1);
    auto it = std::lower_bound(first.begin(), first.end(), p);
    if (it == first.end() || *it != p) return out;
    std::uint64_t r = static_cast<std::uint64_t>(it - first.begin());
    out[0] = r;

    // Every deeper prefix lives inside the child range of the previous one,
    // which holds at most |A| words differing only in the last symbol.
    for (int k = 1; k < n; ++k) {
        const auto& starts = child_start_[static_cast<std::size_t>(k - 1)];
        const auto& next = family_.slices[static_cast<std::size_t>(k)];
        const std::uint64_t lo = starts[static_cast<std::size_t>(r)];
        const std::uint64_t hi = starts[static_cast<std::size_t>(r) + 1];
        std::optional<std::uint64_t> found;
        for (std::uint64_t j = lo; j < hi; ++j)
            if (next[static_cast<std::size_t>(j)].symbols[static_cast<std::size_t>(k)] ==
                w[static_cast<std::size_t>(k)]) {
                found = j;
                break;
            }
        if (!found) break;
        r = *found;
        out[static_cast<std::size_t>(k)] = r;
    }
    return out;
}

int Codebook::typical_bits(int n) const {
    const std::uint64_t count = family_.cardinality(n);
    return std::bit_width(count - 1);
}

int Codebook::escape_bits(int n) const {
    if (n < 1 || n > family_.n_max)
        throw std::out_of_range("Codebook::escape_bits: depth out of range");
    return std::bit_width(raw_word_count(alphabet_size(), n) - 1);
}

BitString encode(const Codebook& book, const Word& w) {
    check_word(w, book.alphabet_size(), book.n_max(), "encode");
    const int n = static_cast<int>(w.size());
    BitString out;
    if (auto r = book.rank(w)) {
        out.push_back(false);
        out.append_uint(*r, book.typical_bits(n));
        return out;
    }
    out.push_back(true);
    std::uint64_t value = 0;
    for (Symbol a : w.symbols) value = value * book.alphabet_size() + a;
    out.append_uint(value, book.escape_bits(n));
    return out;
}

Word decode(const Codebook& book, const BitString& bits, int n) {
    if (n < 1 || n > book.n_max())
        throw std::invalid_argument("decode: depth out of range for the codebook");
    BitReader rd(bits);
    Word w;
    if (!rd.read_bit()) {
        const std::uint64_t r = rd.read_uint(book.typical_bits(n));
        if (r >= book.family().cardinality(n))
            throw CorruptionError("decode: codeword rank out of range");
        w = book.unrank(n, r);
    } else {
        std::uint64_t value = rd.read_uint(book.escape_bits(n));
        if (value >= raw_word_count(book.alphabet_size(), n))
            throw CorruptionError("decode: escape payload out of range");
        w.symbols.assign(static_cast<std::size_t>(n), 0);
        for (int i = n - 1; i >= 0; --i) {
            w.symbols[static_cast<std::size_t>(i)] =
                static_cast<Symbol>(value % book.alphabet_size());
            value /= book.alphabet_size();
        }
    }
    if (!rd.exhausted()) throw CorruptionError("decode: trailing bits after the codeword");
    return w;
}

BitString lz78_encode(const Word& w, std::uint32_t alphabet_size) {
    if (alphabet_size < 2)
        throw std::invalid_argument("lz78_encode: alphabet must have at least two symbols");
    for (Symbol a : w.symbols)
        if (a >= alphabet_size)
            throw std::invalid_argument("lz78_encode: symbol outside the alphabet");
    const int sym_bits = std::bit_width(alphabet_size - 1);

    // Trie edges keyed by (node id, symbol); node 0 is the empty phrase.
    std::unordered_map<std::uint64_t, std::uint64_t> edge;
    auto key = [](std::uint64_t node, Symbol a) {
        return (node << 32) | static_cast<std::uint64_t>(a);
    };
    BitString out;
    std::uint64_t phrases = 0;
    std::uint64_t cur = 0;
    for (Symbol a : w.symbols) {
        auto it = edge.find(key(cur, a));
        if (it != edge.end()) {
            cur = it->second;
            continue;
        }
        out.append_uint(cur, std::bit_width(phrases));
        out.append_uint(a, sym_bits);
        edge.emplace(key(cur, a), phrases + 1);
        ++phrases;
        cur = 0;
    }
    // A trailing dictionary hit becomes a final phrase without a new symbol.
    if (cur != 0) out.append_uint(cur, std::bit_width(phrases));
    return out;
}

Word lz78_decode(const BitString& bits, int n, std::uint32_t alphabet_size) {
    if (alphabet_size < 2)
        throw std::invalid_argument("lz78_decode: alphabet must have at least two symbols");
    if (n < 0) throw std::invalid_argument("lz78_decode: length must be nonnegative");
    const int sym_bits = std::bit_width(alphabet_size - 1);

    std::vector<std::vector<Symbol>> dict{{}};
    std::vector<Symbol> out;
    out.reserve(static_cast<std::size_t>(n));
    BitReader rd(bits);
    while (out.size() < static_cast<std::size_t>(n)) {
        const std::uint64_t idx = rd.read_uint(std::bit_width(dict.size() - 1));
        if (idx >= dict.size()) throw CorruptionError("lz78: phrase index out of range");
        const std::vector<Symbol>& phrase = dict[static_cast<std::size_t>(idx)];
        if (out.size() + phrase.size() > static_cast<std::size_t>(n))
            throw CorruptionError("lz78: phrase overruns the declared length");
        out.insert(out.end(), phrase.begin(), phrase.end());
        if (out.size() == static_cast<std::size_t>(n)) break;
        const std::uint64_t sym = rd.read_uint(sym_bits);
        if (sym >= alphabet_size) throw CorruptionError("lz78: symbol out of range");
        out.push_back(static_cast<Symbol>(sym));
        std::vector<Symbol> grown = phrase;
        grown.push_back(static_cast<Symbol>(sym));
        dict.push_back(std::move(grown));
    }
    if (!rd.exhausted()) throw CorruptionError("lz78: trailing bits after the final phrase");
    return Word(std::move(out));
}

RateReport rate_report(const Codebook& book, const ProcessModel& model, int n, int trials,
                       std::uint64_t seed) {
    if (n < 1 || n > book.n_max())
        throw std::invalid_argument("rate_report: depth out of range for the codebook");
    if (trials < 1) throw std::invalid_argument("rate_report: trials must be positive");
    if (model.alphabet_size() != book.alphabet_size())
        throw std::invalid_argument("rate_report: model alphabet does not match the codebook");
    if (book.alphabet_size() < 2)
        throw std::invalid_argument("rate_report: alphabet must have at least two symbols");
    book.escape_bits(n);  // surface the 64-bit escape cap before sampling

    std::vector<std::int64_t> code_bits(static_cast<std::size_t>(trials));
    std::vector<std::int64_t> lz_bits(static_cast<std::size_t>(trials));
    std::vector<std::uint8_t> escaped(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic, 64)
    for (int t = 0; t < trials; ++t) {
        const Word w =
            model.sample_trajectory(static_cast<std::size_t>(n),
                                    seed + static_cast<std::uint64_t>(t));
        const BitString enc = encode(book, w);
        code_bits[static_cast<std::size_t>(t)] = static_cast<std::int64_t>(enc.size());
        escaped[static_cast<std::size_t>(t)] = enc.bit(0) ? 1 : 0;
        lz_bits[static_cast<std::size_t>(t)] =
            static_cast<std::int64_t>(lz78_encode(w, book.alphabet_size()).size());
    }

    std::int64_t code_total = 0, lz_total = 0, escapes = 0;
    for (int t = 0; t < trials; ++t) {
        code_total += code_bits[static_cast<std::size_t>(t)];
        lz_total += lz_bits[static_cast<std::size_t>(t)];
        escapes += escaped[static_cast<std::size_t>(t)];
    }

    RateReport rep;
    rep.n = n;
    rep.trials = trials;
    rep.seed = seed;
    const double denom = static_cast<double>(trials) * static_cast<double>(n);
    rep.mean_bits_per_symbol = static_cast<double>(code_total) / denom;
    rep.escape_frequency = static_cast<double>(escapes) / static_cast<double>(trials);
    rep.entropy_bits_per_symbol = model.entropy_rate().nats / std::log(2.0);
    rep.lz78_bits_per_symbol = static_cast<double>(lz_total) / denom;
    return rep;
}

void write_rate_report_csv(std::ostream& os, const RateReport& report) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%d,%d,%llu,%.12g,%.12g,%.12g,%.12g\n", report.n,
                  report.trials, static_cast<unsigned long long>(report.seed),
                  report.mean_bits_per_symbol, report.escape_frequency,
                  report.entropy_bits_per_symbol, report.lz78_bits_per_symbol);
    os << "n,trials,seed,mean_bits_per_symbol,escape_frequency,entropy_bits_per_symbol,"
          "lz78_bits_per_symbol\n"
       << buf;
}

}  // namespace aep
