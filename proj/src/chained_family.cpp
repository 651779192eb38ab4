#include "aepkit/chained_family.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "aepkit/errors.hpp"

namespace aep {

namespace {

void format_double(char* buf, std::size_t len, double v) {
    std::snprintf(buf, len, "%.17g", v);
}

struct BandDfs {
    const ProcessModel& model;
    double h;
    double half_eps;
    int band_m;
    int n_max;
    std::vector<Word> leaves;
    int deepest_alive = 0;
    Word scratch;

    void run() {
        scratch.symbols.reserve(static_cast<std::size_t>(n_max));
        descend(0);
    }

    void descend(int depth) {
        if (depth >= band_m) {
            const double lp = model.log_marginal_prob(scratch);
            const double lo = -static_cast<double>(depth) * (h + half_eps);
            const double hi = -static_cast<double>(depth) * (h - half_eps);
            if (!(lp > lo - kBandSlack && lp < hi + kBandSlack)) return;
        }
        deepest_alive = std::max(deepest_alive, depth);
        if (depth == n_max) {
            leaves.push_back(scratch);
            return;
        }
        for (Symbol a = 0; a < model.alphabet_size(); ++a) {
            scratch.push_back(a);
            descend(depth + 1);
            scratch.pop_back();
        }
    }
};

}  // namespace

const std::vector<Word>& ChainedFamily::slice(int n) const {
    if (n < 1 || n > n_max) throw std::out_of_range("ChainedFamily::slice: depth out of range");
    return slices[static_cast<std::size_t>(n - 1)];
}

std::uint64_t ChainedFamily::cardinality(int n) const {
    return static_cast<std::uint64_t>(slice(n).size());
}

ChainedFamily ChainedFamily::from_leaves(Alphabet alphabet, std::vector<Word> leaves, int n_max,
                                         double h, double eps, int band_m, int n_eps) {
    if (n_max < 1) throw std::invalid_argument("ChainedFamily: n_max must be positive");
    if (leaves.empty()) throw std::invalid_argument("ChainedFamily: empty leaf set");
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        const Word& w = leaves[i];
        if (static_cast<int>(w.size()) != n_max)
            throw std::invalid_argument("ChainedFamily: leaf length differs from n_max");
        for (Symbol a : w.symbols)
            if (a >= alphabet.size)
                throw std::invalid_argument("ChainedFamily: leaf symbol outside alphabet");
        if (i > 0 && !(leaves[i - 1] < w))
            throw std::invalid_argument("ChainedFamily: leaves must be strictly increasing");
    }

    ChainedFamily fam;
    fam.alphabet = std::move(alphabet);
    fam.n_max = n_max;
    fam.h = h;
    fam.eps = eps;
    fam.band_m = band_m;
    fam.n_eps = n_eps;
    fam.slices.resize(static_cast<std::size_t>(n_max));
    fam.slices.back() = std::move(leaves);
    // Prefixes of a sorted word list come out sorted; duplicates are adjacent.
    for (int n = n_max - 1; n >= 1; --n) {
        auto& dst = fam.slices[static_cast<std::size_t>(n - 1)];
        for (const Word& w : fam.slices[static_cast<std::size_t>(n)]) {
            Word p = w.prefix(static_cast<std::size_t>(n));
            if (dst.empty() || dst.back() != p) dst.push_back(std::move(p));
        }
    }
    return fam;
}

int minimal_k(double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("minimal_k: eps must lie in (0, 1)");
    const double log_tail = std::log1p(-eps);
    for (int k = 1; k < (1 << 30); ++k)
        if (log_tail + 0.5 * static_cast<double>(k) * eps > 0.0) return k;
    throw std::logic_error("minimal_k: search did not terminate");
}

ChainedFamily build_chained_family(const ProcessModel& model, EntropyRate h, double eps,
                                   int band_m, int n_max) {
    if (!(eps > 0.0)) throw std::invalid_argument("build_chained_family: eps must be positive");
    if (n_max < 1) throw std::invalid_argument("build_chained_family: n_max must be positive");
    if (band_m < 1 || band_m > n_max)
        throw std::invalid_argument("build_chained_family: band_m must lie in [1, n_max]");
    if (!std::isfinite(h.nats) || h.nats < 0.0)
        throw std::invalid_argument("build_chained_family: entropy rate must be finite and nonnegative");

    BandDfs dfs{model, h.nats, eps / 2.0, band_m, n_max};
    dfs.run();
    if (dfs.leaves.empty())
        throw BandConstructionError("band construction: no word of depth " +
                                        std::to_string(n_max) + " stays inside the band; first empty depth " +
                                        std::to_string(dfs.deepest_alive + 1),
                                    dfs.deepest_alive + 1);

    const int n_eps = std::max(minimal_k(eps), band_m);
    return ChainedFamily::from_leaves(model.alphabet(), std::move(dfs.leaves), n_max, h.nats, eps,
                                      band_m, n_eps);
}

ChainedFamily tighten_family(const ChainedFamily& family, const ProcessModel& model, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("tighten_family: eps must be positive");
    if (!(family.eps <= eps / 2.0 + kBandSlack))
        throw std::invalid_argument(
            "tighten_family: input family parameter must not exceed eps/2");
    if (model.alphabet_size() != family.alphabet.size)
        throw std::invalid_argument("tighten_family: alphabet mismatch");

    const int n_low = std::max(family.n_eps, minimal_k(eps));
    std::vector<Word> kept;
    for (const Word& w : family.leaves()) {
        bool ok = true;
        for (int k = n_low; k <= family.n_max && ok; ++k) {
            const double lp = model.log_marginal_prob(w.prefix(static_cast<std::size_t>(k)));
            const double lo = -static_cast<double>(k) * (family.h + eps);
            if (!(lp > lo - kBandSlack)) ok = false;
        }
        if (ok) kept.push_back(w);
    }
    if (kept.empty())
        throw TighteningError("tighten_family: no word survives the lower probability bound");
    return ChainedFamily::from_leaves(family.alphabet, std::move(kept), family.n_max, family.h,
                                      eps, family.band_m, n_low);
}

double family_mass(const ChainedFamily& family, const ProcessModel& model, int n) {
    double mass = 0.0;
    for (const Word& w : family.slice(n)) mass += std::exp(model.log_marginal_prob(w));
    return mass;
}

int find_min_band_offset(const ProcessModel& model, EntropyRate h, double eps, int n_max,
                         double mass_target) {
    for (int m = 1; m <= n_max; ++m) {
        try {
            ChainedFamily fam = build_chained_family(model, h, eps, m, n_max);
            if (family_mass(fam, model, n_max) > mass_target) return m;
        } catch (const BandConstructionError&) {
        }
    }
    throw SelectionError("find_min_band_offset: no band offset reaches mass target " +
                         std::to_string(mass_target) + " at depth " + std::to_string(n_max));
}

BandOffsetChoice select_band_offset(const ProcessModel& model, EntropyRate h, double eps,
                                    int n_max, double mass_target) {
    BandOffsetChoice best;
    bool any = false;
    for (int m = 1; m <= n_max; ++m) {
        double mass;
        try {
            ChainedFamily fam = build_chained_family(model, h, eps, m, n_max);
            mass = family_mass(fam, model, n_max);
        } catch (const BandConstructionError&) {
            continue;
        }
        if (mass > mass_target) return BandOffsetChoice{m, mass, true};
        if (!any || mass > best.mass) best = BandOffsetChoice{m, mass, false};
        any = true;
    }
    if (!any)
        throw SelectionError("select_band_offset: every band offset yields an empty family");
    return best;
}

VerificationReport::VerificationReport(double h, double eps, int n_eps, int n_max,
                                       std::vector<DepthRecord> records)
    : h_(h), eps_(eps), n_eps_(n_eps), n_max_(n_max), records_(std::move(records)) {}

bool VerificationReport::chain_holds() const {
    for (const DepthRecord& r : records_)
        if (r.n < n_max_ && !r.chain_ok) return false;
    return true;
}

bool VerificationReport::cardinality_in_bounds() const {
    for (const DepthRecord& r : records_) {
        if (r.n < n_eps_) continue;
        const double lc = std::log(static_cast<double>(r.cardinality));
        const double n = static_cast<double>(r.n);
        if (!(lc > n * (h_ - eps_) - kBandSlack)) return false;
        if (!(lc < n * (h_ + eps_) + kBandSlack)) return false;
    }
    return true;
}

bool VerificationReport::member_bound_holds() const {
    for (const DepthRecord& r : records_) {
        if (r.n < n_eps_) continue;
        if (!(r.log_max_member_prob < -static_cast<double>(r.n) * (h_ - eps_) + kBandSlack))
            return false;
    }
    return true;
}

bool VerificationReport::mass_holds() const {
    for (const DepthRecord& r : records_)
        if (!(r.mass > 1.0 - eps_ - kBandSlack)) return false;
    return true;
}

bool VerificationReport::all_pass() const {
    return chain_holds() && cardinality_in_bounds() && member_bound_holds() && mass_holds();
}

double VerificationReport::cardinality_lower(int n) const {
    return std::exp(static_cast<double>(n) * (h_ - eps_));
}

double VerificationReport::cardinality_upper(int n) const {
    return std::exp(static_cast<double>(n) * (h_ + eps_));
}

VerificationReport verify_classical(const ChainedFamily& family, const ProcessModel& model,
                                EntropyRate h, double eps, int n_eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("verify_classical: eps must be positive");
    if (n_eps < 1) throw std::invalid_argument("verify_classical: n_eps must be positive");
    if (model.alphabet_size() != family.alphabet.size)
        throw std::invalid_argument("verify_classical: alphabet mismatch");

    std::vector<DepthRecord> records(static_cast<std::size_t>(family.n_max));
#pragma omp parallel for schedule(dynamic)
    for (int n = 1; n <= family.n_max; ++n) {
        DepthRecord rec;
        rec.n = n;
        const auto& cur = family.slice(n);
        rec.cardinality = static_cast<std::uint64_t>(cur.size());

        const double member_bound = -static_cast<double>(n) * (h.nats - eps);
        double max_lp = -std::numeric_limits<double>::infinity();
        double mass = 0.0;
        for (const Word& w : cur) {
            const double lp = model.log_marginal_prob(w);
            max_lp = std::max(max_lp, lp);
            mass += std::exp(lp);
            if (!rec.member_violator && !(lp < member_bound + kBandSlack))
                rec.member_violator = w;
        }
        rec.log_max_member_prob = max_lp;
        rec.mass = mass;

        if (n < family.n_max) {
            // Merge-walk the sorted truncations of C(n+1) against C(n); the
            // first mismatch is the lexicographically smallest difference.
            const auto& next = family.slice(n + 1);
            std::size_t i = 0;
            Word last;
            bool have_last = false;
            for (const Word& w : next) {
                Word f = w.flat();
                if (have_last && f == last) continue;
                last = f;
                have_last = true;
                if (i < cur.size() && cur[i] == f) {
                    ++i;
                    continue;
                }
                rec.chain_ok = false;
                rec.chain_violator = (i < cur.size() && cur[i] < f) ? cur[i] : f;
                break;
            }
            if (rec.chain_ok && i != cur.size()) {
                rec.chain_ok = false;
                rec.chain_violator = cur[i];
            }
        }
        records[static_cast<std::size_t>(n - 1)] = std::move(rec);
    }
    return VerificationReport(h.nats, eps, n_eps, family.n_max, std::move(records));
}

void write_family_text(std::ostream& os, const ChainedFamily& family) {
    char hb[40], eb[40];
    format_double(hb, sizeof hb, family.h);
    format_double(eb, sizeof eb, family.eps);
    os << "chained-family-v1\n";
    os << "h " << hb << " eps " << eb << " M " << family.band_m << " N_max " << family.n_max
       << " N_eps " << family.n_eps << "\n";
    os << "alphabet " << family.alphabet.size << "\n";
    for (const Word& w : family.leaves()) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (i) os << ' ';
            os << w[i];
        }
        os << "\n";
    }
}

namespace {

[[noreturn]] void corrupt(const std::string& what) {
    throw CorruptionError("family text: " + what);
}

}  // namespace

ChainedFamily read_family_text(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "chained-family-v1") corrupt("bad magic line");

    if (!std::getline(is, line)) corrupt("missing header line");
    std::istringstream header(line);
    std::string kh, ke, km, knm, kne;
    double h, eps;
    int band_m, n_max, n_eps;
    header >> kh >> h >> ke >> eps >> km >> band_m >> knm >> n_max >> kne >> n_eps;
    if (!header || kh != "h" || ke != "eps" || km != "M" || knm != "N_max" || kne != "N_eps")
        corrupt("malformed header line");

    if (!std::getline(is, line)) corrupt("missing alphabet line");
    std::istringstream alpha_line(line);
    std::string ka;
    std::uint32_t alpha_size = 0;
    alpha_line >> ka >> alpha_size;
    if (!alpha_line || ka != "alphabet" || alpha_size == 0) corrupt("malformed alphabet line");

    std::vector<Word> leaves;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ws(line);
        Word w;
        std::int64_t v;
        while (ws >> v) {
            if (v < 0 || v >= static_cast<std::int64_t>(alpha_size))
                corrupt("symbol index outside alphabet");
            w.push_back(static_cast<Symbol>(v));
        }
        if (!ws.eof()) corrupt("non-integer token in word line");
        leaves.push_back(std::move(w));
    }
    try {
        return ChainedFamily::from_leaves(Alphabet::indexed(alpha_size), std::move(leaves), n_max,
                                          h, eps, band_m, n_eps);
    } catch (const std::invalid_argument& e) {
        corrupt(e.what());
    }
}

}  // namespace aep
