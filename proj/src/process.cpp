#include "aepkit/process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>

#include "aepkit/errors.hpp"

namespace aep {

namespace {

constexpr double kStochasticTol = 1e-12;
constexpr double kStationaryResidual = 1e-14;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_distribution(const std::vector<double>& p, const char* what) {
    if (p.empty()) throw std::invalid_argument(std::string(what) + ": empty distribution");
    double sum = 0.0;
    for (double x : p) {
        if (!(x >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative entry");
        sum += x;
    }
    if (std::abs(sum - 1.0) > kStochasticTol)
        throw std::invalid_argument(std::string(what) + ": entries do not sum to 1");
}

// Strong connectivity of the positive-entry digraph plus period 1.
void check_irreducible_aperiodic(const std::vector<std::vector<double>>& t) {
    const std::size_t d = t.size();
    std::vector<char> seen(d, 0);
    std::vector<int> depth(d, -1);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = 1;
    depth[0] = 0;
    std::size_t count = 1;
    long long g = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    while (!q.empty()) {
        std::size_t u = q.front();
        q.pop();
        for (std::size_t v = 0; v < d; ++v) {
            if (t[u][v] <= 0.0) continue;
            edges.emplace_back(u, v);
            if (!seen[v]) {
                seen[v] = 1;
                depth[v] = depth[u] + 1;
                ++count;
                q.push(v);
            }
        }
    }
    if (count != d) throw std::invalid_argument("markov: transition matrix is not irreducible");
    // reverse reachability from state 0
    std::fill(seen.begin(), seen.end(), 0);
    seen[0] = 1;
    count = 1;
    q.push(0);
    while (!q.empty()) {
        std::size_t u = q.front();
        q.pop();
        for (std::size_t v = 0; v < d; ++v) {
            if (t[v][u] > 0.0 && !seen[v]) {
                seen[v] = 1;
                ++count;
                q.push(v);
            }
        }
    }
    if (count != d) throw std::invalid_argument("markov: transition matrix is not irreducible");
    for (auto [u, v] : edges) g = std::gcd(g, static_cast<long long>(depth[u] + 1 - depth[v]));
    if (g != 1) throw std::invalid_argument("markov: transition matrix is periodic");
}

std::vector<double> solve_stationary(const std::vector<std::vector<double>>& t) {
    const std::size_t d = t.size();
    std::vector<double> pi(d, 1.0 / static_cast<double>(d)), next(d);
    for (int iter = 0; iter < 1000000; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) next[j] += pi[i] * t[i][j];
        double norm = std::accumulate(next.begin(), next.end(), 0.0);
        for (double& x : next) x /= norm;
        double resid = 0.0;
        for (std::size_t j = 0; j < d; ++j) resid = std::max(resid, std::abs(next[j] - pi[j]));
        pi.swap(next);
        if (resid < kStationaryResidual) return pi;
    }
    throw std::runtime_error("markov: stationary distribution iteration did not converge");
}

double uniform_unit(std::mt19937_64& g) {
    // 53-bit mantissa draw; stable across standard libraries.
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

Symbol draw(const std::vector<double>& p, std::mt19937_64& g) {
    double u = uniform_unit(g);
    double acc = 0.0;
    for (std::size_t a = 0; a + 1 < p.size(); ++a) {
        acc += p[a];
        if (u < acc) return static_cast<Symbol>(a);
    }
    return static_cast<Symbol>(p.size() - 1);
}

}  // namespace

ProcessModel ProcessModel::iid(std::vector<double> probs, Alphabet alpha) {
    check_distribution(probs, "iid");
    ProcessModel m;
    m.kind_ = Kind::iid;
    m.probs_ = std::move(probs);
    if (alpha.size == 0) alpha = Alphabet::indexed(static_cast<std::uint32_t>(m.probs_.size()));
    if (alpha.size != m.probs_.size())
        throw std::invalid_argument("iid: alphabet size does not match distribution");
    m.alpha_ = std::move(alpha);
    return m;
}

ProcessModel ProcessModel::markov(std::vector<std::vector<double>> transition,
                                  std::optional<std::vector<double>> initial, Alphabet alpha) {
    const std::size_t d = transition.size();
    if (d == 0) throw std::invalid_argument("markov: empty transition matrix");
    for (const auto& row : transition) {
        if (row.size() != d) throw std::invalid_argument("markov: transition matrix is not square");
        check_distribution(row, "markov row");
    }
    check_irreducible_aperiodic(transition);
    ProcessModel m;
    m.kind_ = Kind::markov;
    m.transition_ = std::move(transition);
    m.stationary_ = solve_stationary(m.transition_);
    if (initial) {
        check_distribution(*initial, "markov initial");
        if (initial->size() != d)
            throw std::invalid_argument("markov: initial distribution size mismatch");
        m.initial_ = std::move(*initial);
        for (std::size_t i = 0; i < d; ++i)
            if (std::abs(m.initial_[i] - m.stationary_[i]) > 1e-12) m.nonstationary_initial_ = true;
    } else {
        m.initial_ = m.stationary_;
    }
    if (alpha.size == 0) alpha = Alphabet::indexed(static_cast<std::uint32_t>(d));
    if (alpha.size != d) throw std::invalid_argument("markov: alphabet size mismatch");
    m.alpha_ = std::move(alpha);
    return m;
}

ProcessModel ProcessModel::blocked(ProcessModel base, int block_len,
                                   std::vector<std::uint32_t> label_to_word) {
    if (block_len < 1) throw std::invalid_argument("blocked: block length must be >= 1");
    const double log_size = block_len * std::log(static_cast<double>(base.alphabet_size()));
    if (log_size > 31.0 * std::log(2.0))
        throw ResourceLimitError("blocked: alphabet size exceeds 2^31");
    std::uint64_t size = 1;
    for (int i = 0; i < block_len; ++i) size *= base.alphabet_size();
    ProcessModel m;
    m.kind_ = Kind::blocked;
    m.block_len_ = block_len;
    if (!label_to_word.empty()) {
        if (label_to_word.size() != size)
            throw std::invalid_argument("blocked: label map size mismatch");
        m.word_to_label_.assign(size, 0);
        std::vector<char> hit(size, 0);
        for (std::uint32_t lab = 0; lab < size; ++lab) {
            std::uint32_t w = label_to_word[lab];
            if (w >= size || hit[w]) throw std::invalid_argument("blocked: label map is not a permutation");
            hit[w] = 1;
            m.word_to_label_[w] = lab;
        }
        m.label_to_word_ = std::move(label_to_word);
    }
    // Materialize concatenated labels only at small sizes.
    if (size <= 4096) {
        std::vector<std::string> labels(size);
        for (std::uint32_t lab = 0; lab < size; ++lab) {
            std::uint32_t idx = m.label_to_word_.empty() ? lab : m.label_to_word_[lab];
            std::string s;
            std::vector<Symbol> digits(block_len);
            for (int k = block_len - 1; k >= 0; --k) {
                digits[k] = idx % base.alphabet_size();
                idx /= base.alphabet_size();
            }
            for (Symbol dsym : digits) s += base.alphabet().label(dsym);
            labels[lab] = std::move(s);
        }
        m.alpha_ = Alphabet::with_labels(std::move(labels));
    } else {
        m.alpha_ = Alphabet::indexed(static_cast<std::uint32_t>(size));
    }
    m.base_ = std::make_shared<ProcessModel>(std::move(base));
    return m;
}

void ProcessModel::expand(const Word& w, std::vector<Symbol>& out) const {
    if (kind_ != Kind::blocked) {
        out = w.symbols;
        return;
    }
    std::vector<Symbol> inner;
    inner.reserve(w.size() * static_cast<std::size_t>(block_len_));
    const std::uint32_t d = base_->alphabet_size();
    for (Symbol s : w.symbols) {
        if (s >= alpha_.size) throw std::invalid_argument("word symbol out of range");
        std::uint32_t idx = label_to_word_.empty() ? s : label_to_word_[s];
        std::vector<Symbol> digits(block_len_);
        for (int k = block_len_ - 1; k >= 0; --k) {
            digits[k] = idx % d;
            idx /= d;
        }
        inner.insert(inner.end(), digits.begin(), digits.end());
    }
    Word base_word(std::move(inner));
    base_->expand(base_word, out);
}

std::size_t ProcessModel::factor_count(std::size_t n) const {
    if (kind_ != Kind::blocked) return n;
    return base_->factor_count(n * static_cast<std::size_t>(block_len_));
}

double ProcessModel::log_term(Symbol prev, Symbol cur, bool first) const {
    if (kind_ == Kind::iid) {
        double p = probs_[cur];
        return p > 0.0 ? std::log(p) : kNegInf;
    }
    double p = first ? initial_[cur] : transition_[prev][cur];
    return p > 0.0 ? std::log(p) : kNegInf;
}

double ProcessModel::log_marginal_prob(const Word& w) const {
    if (w.empty()) return 0.0;
    std::vector<Symbol> flat;
    expand(w, flat);
    const ProcessModel* leaf = this;
    while (leaf->kind_ == Kind::blocked) leaf = leaf->base_.get();
    double acc = 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        if (flat[i] >= leaf->alphabet_size())
            throw std::invalid_argument("word symbol out of range");
        double t = leaf->log_term(i > 0 ? flat[i - 1] : 0, flat[i], i == 0);
        if (t == kNegInf) return kNegInf;
        acc += t;
    }
    return acc;
}

double ProcessModel::marginal_prob(const Word& w) const {
    if (w.empty()) return 1.0;
    if (factor_count(w.size()) > 64) {
        double lp = log_marginal_prob(w);
        return lp == kNegInf ? 0.0 : std::exp(lp);
    }
    std::vector<Symbol> flat;
    expand(w, flat);
    const ProcessModel* leaf = this;
    while (leaf->kind_ == Kind::blocked) leaf = leaf->base_.get();
    double acc = 1.0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        if (flat[i] >= leaf->alphabet_size())
            throw std::invalid_argument("word symbol out of range");
        if (leaf->kind_ == Kind::iid)
            acc *= leaf->probs_[flat[i]];
        else
            acc *= (i == 0) ? leaf->initial_[flat[i]] : leaf->transition_[flat[i - 1]][flat[i]];
    }
    return acc;
}

double ProcessModel::empirical_entropy(const Word& w) const {
    if (w.empty()) throw std::invalid_argument("empirical_entropy: empty word");
    double lp = factor_count(w.size()) > 64 ? log_marginal_prob(w)
                                            : std::log(marginal_prob(w));
    if (lp == kNegInf || std::isnan(lp))
        throw std::invalid_argument("empirical_entropy: word has zero probability");
    return -lp / static_cast<double>(w.size());
}

EntropyRate ProcessModel::entropy_rate() const {
    EntropyRate r;
    switch (kind_) {
        case Kind::iid: {
            double h = 0.0;
            for (double p : probs_)
                if (p > 0.0) h -= p * std::log(p);
            r.nats = h;
            break;
        }
        case Kind::markov: {
            double h = 0.0;
            for (std::size_t i = 0; i < transition_.size(); ++i) {
                double row = 0.0;
                for (double p : transition_[i])
                    if (p > 0.0) row -= p * std::log(p);
                h += stationary_[i] * row;
            }
            r.nats = h;
            r.nonstationary_initial = nonstationary_initial_;
            break;
        }
        case Kind::blocked: {
            r = base_->entropy_rate();
            r.nats *= static_cast<double>(block_len_);
            break;
        }
    }
    return r;
}

Word ProcessModel::sample_trajectory(std::size_t n, std::uint64_t seed) const {
    std::mt19937_64 gen(seed);
    switch (kind_) {
        case Kind::iid: {
            Word w;
            w.symbols.reserve(n);
            for (std::size_t i = 0; i < n; ++i) w.push_back(draw(probs_, gen));
            return w;
        }
        case Kind::markov: {
            Word w;
            w.symbols.reserve(n);
            Symbol prev = 0;
            for (std::size_t i = 0; i < n; ++i) {
                Symbol s = (i == 0) ? draw(initial_, gen) : draw(transition_[prev], gen);
                w.push_back(s);
                prev = s;
            }
            return w;
        }
        case Kind::blocked: {
            Word base_w = base_->sample_trajectory(n * static_cast<std::size_t>(block_len_), seed);
            Word w;
            w.symbols.reserve(n);
            const std::uint32_t d = base_->alphabet_size();
            for (std::size_t b = 0; b < n; ++b) {
                std::uint32_t idx = 0;
                for (int k = 0; k < block_len_; ++k)
                    idx = idx * d + base_w[b * static_cast<std::size_t>(block_len_) + k];
                w.push_back(word_to_label_.empty() ? idx : word_to_label_[idx]);
            }
            return w;
        }
    }
    return {};
}

std::vector<double> ProcessModel::stationary() const {
    switch (kind_) {
        case Kind::iid: return probs_;
        case Kind::markov: return stationary_;
        case Kind::blocked: throw std::invalid_argument("stationary: not defined for blocked view");
    }
    return {};
}

const std::vector<std::vector<double>>& ProcessModel::transition() const {
    if (kind_ != Kind::markov) throw std::invalid_argument("transition: not a markov model");
    return transition_;
}

std::string format_word(const Word& w, const Alphabet& a) {
    std::string out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) out += ' ';
        out += a.label(w[i]);
    }
    return out;
}

}  // namespace aep
