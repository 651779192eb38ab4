// Independent reference computations used to pin expected values in tests.
// These deliberately avoid the library code paths they are checking.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "aepkit/alphabet.hpp"

namespace oracle {

inline double shannon_entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

// Stationary distribution via a dense linear solve (not power iteration).
inline std::vector<double> stationary(const std::vector<std::vector<double>>& t) {
    const int d = static_cast<int>(t.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d - 1; ++i) {
        for (int j = 0; j < d; ++j) a(i, j) = t[j][i] - (i == j ? 1.0 : 0.0);
    }
    for (int j = 0; j < d; ++j) a(d - 1, j) = 1.0;
    b(d - 1) = 1.0;
    Eigen::VectorXd pi = a.fullPivLu().solve(b);
    return std::vector<double>(pi.data(), pi.data() + d);
}

inline double markov_entropy_rate(const std::vector<std::vector<double>>& t) {
    std::vector<double> pi = stationary(t);
    double h = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) h += pi[i] * shannon_entropy(t[i]);
    return h;
}

// Direct product-form word probability for a stationary markov chain.
inline double markov_word_prob(const std::vector<std::vector<double>>& t,
                               const std::vector<double>& pi, const aep::Word& w) {
    if (w.empty()) return 1.0;
    double p = pi[w[0]];
    for (std::size_t i = 1; i < w.size(); ++i) p *= t[w[i - 1]][w[i]];
    return p;
}

inline double iid_word_prob(const std::vector<double>& probs, const aep::Word& w) {
    double p = 1.0;
    for (aep::Symbol a : w.symbols) p *= probs[a];
    return p;
}

// All words of the given length in lexicographic order.
inline std::vector<aep::Word> all_words(std::uint32_t alphabet, int n) {
    std::vector<aep::Word> out;
    aep::Word w;
    auto rec = [&](auto&& self, int depth) -> void {
        if (depth == n) {
            out.push_back(w);
            return;
        }
        for (aep::Symbol a = 0; a < alphabet; ++a) {
            w.push_back(a);
            self(self, depth + 1);
            w.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

}  // namespace oracle
