#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace aep {

using Symbol = std::uint32_t;

// Finite ordered alphabet. Symbol i refers to labels[i]; when labels is empty
// the alphabet is "indexed" and label(i) is the decimal string of i (used for
// large blocked alphabets where materializing labels would be wasteful).
struct Alphabet {
    std::uint32_t size = 0;
    std::vector<std::string> labels;

    static Alphabet binary() { return {2, {"0", "1"}}; }
    static Alphabet indexed(std::uint32_t n) { return {n, {}}; }
    static Alphabet with_labels(std::vector<std::string> ls) {
        Alphabet a;
        a.size = static_cast<std::uint32_t>(ls.size());
        a.labels = std::move(ls);
        return a;
    }

    std::string label(Symbol i) const {
        return labels.empty() ? std::to_string(i) : labels[i];
    }
    bool operator==(const Alphabet& o) const { return size == o.size; }
};

// Finite word over an alphabet. Ordering is lexicographic on symbol indices;
// this fixed order defines slice layouts and codebook indices downstream.
struct Word {
    std::vector<Symbol> symbols;

    Word() = default;
    explicit Word(std::vector<Symbol> s) : symbols(std::move(s)) {}

    std::size_t size() const { return symbols.size(); }
    bool empty() const { return symbols.empty(); }
    Symbol operator[](std::size_t i) const { return symbols[i]; }

    Word prefix(std::size_t n) const {
        return Word(std::vector<Symbol>(symbols.begin(), symbols.begin() + n));
    }
    // Drops the last symbol: the flattening map between consecutive depths.
    Word flat() const { return prefix(symbols.size() - 1); }

    void push_back(Symbol a) { symbols.push_back(a); }
    void pop_back() { symbols.pop_back(); }

    auto operator<=>(const Word&) const = default;
};

inline bool is_prefix_of(const Word& p, const Word& w) {
    if (p.size() > w.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] != w[i]) return false;
    return true;
}

std::string format_word(const Word& w, const Alphabet& a);

}  // namespace aep
