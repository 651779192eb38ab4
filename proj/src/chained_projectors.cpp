#include "aepkit/chained_projectors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "aepkit/errors.hpp"
#include "aepkit/kernels.hpp"

namespace aep {

namespace {

std::int64_t checked_pow_dim(int site_dim, int n, const char* what) {
    std::int64_t dim = 1;
    for (int i = 0; i < n; ++i) {
        dim *= site_dim;
        check_dense_dim(dim, what);
    }
    return dim;
}

}  // namespace

VecC RankOneMember::dense(const SpectralSet& basis) const {
    VecC v = VecC::Ones(1);
    for (Symbol label : core_labels) {
        if (label >= basis.components.size())
            throw std::invalid_argument("RankOneMember: label outside the basis");
        v = kernels::kron_vec(v, basis.components[label].vector);
        check_dense_dim(v.size(), "RankOneMember");
    }
    if (tail) {
        v = kernels::kron_vec(v, *tail);
        check_dense_dim(v.size(), "RankOneMember");
    }
    return v;
}

ChainedProjectorFamily::ChainedProjectorFamily(LatticeState state, double eps, int l, int n_eps,
                                               bool mass_target_met, ChainedFamily core,
                                               ProcessModel induced, SpectralSet basis,
                                               std::vector<std::vector<RankOneMember>> members)
    : state_(std::move(state)),
      eps_(eps),
      l_(l),
      n_eps_(n_eps),
      mass_target_met_(mass_target_met),
      core_(std::move(core)),
      induced_(std::move(induced)),
      basis_(std::move(basis)),
      members_(std::move(members)) {
    if (eps_ <= 0.0) throw std::invalid_argument("ChainedProjectorFamily: eps must be positive");
    if (l_ < 1) throw std::invalid_argument("ChainedProjectorFamily: block length must be positive");
    if (members_.empty()) throw std::invalid_argument("ChainedProjectorFamily: no depths");
    for (const auto& depth : members_)
        if (depth.empty()) throw std::invalid_argument("ChainedProjectorFamily: empty depth");
}

const std::vector<RankOneMember>& ChainedProjectorFamily::members(int n) const {
    if (n < 1 || n > n_max())
        throw std::out_of_range("ChainedProjectorFamily: depth outside [1, N_max]");
    return members_[static_cast<std::size_t>(n) - 1];
}

std::int64_t ChainedProjectorFamily::trace(int n) const {
    return static_cast<std::int64_t>(members(n).size());
}

MatC ChainedProjectorFamily::member_columns(int n) const {
    const auto& ms = members(n);
    const std::int64_t dim = checked_pow_dim(site_dim(), n, "member_columns");
    MatC cols(dim, static_cast<Eigen::Index>(ms.size()));
    for (std::size_t i = 0; i < ms.size(); ++i) {
        VecC v = ms[i].dense(basis_);
        if (v.size() != dim)
            throw std::logic_error("ChainedProjectorFamily: member dimension mismatch");
        cols.col(static_cast<Eigen::Index>(i)) = v;
    }
    return cols;
}

ProjectorOp ChainedProjectorFamily::dense_projector(int n) const {
    return ProjectorOp::from_orthonormal_columns(member_columns(n));
}

namespace {

// Members of depth m*l + r, 0 < r < l: the block words of depth m+1 are
// grouped by their length-m prefix, the last block of each group is traced
// down to its first r sites, and the range vectors of that reduced operator
// become the remainder factors.
std::vector<RankOneMember> interpolated_members(const std::vector<Word>& next_slice, int m,
                                                const SpectralSet& basis, std::int64_t keep_dim,
                                                std::int64_t drop_dim) {
    std::vector<RankOneMember> out;
    std::size_t i = 0;
    while (i < next_slice.size()) {
        std::size_t j = i + 1;
        while (j < next_slice.size() &&
               std::equal(next_slice[j].symbols.begin(), next_slice[j].symbols.begin() + m,
                          next_slice[i].symbols.begin()))
            ++j;
        MatC t = MatC::Zero(keep_dim, keep_dim);
        for (std::size_t k = i; k < j; ++k) {
            const VecC& v = basis.components[next_slice[k].symbols[m]].vector;
            Eigen::Map<const MatC> x(v.data(), drop_dim, keep_dim);
            t.noalias() += x.transpose() * x.conjugate();
        }
        MatC q = range_basis(t);
        std::vector<Symbol> prefix(next_slice[i].symbols.begin(),
                                   next_slice[i].symbols.begin() + m);
        for (Eigen::Index c = 0; c < q.cols(); ++c)
            out.push_back({prefix, VecC(q.col(c))});
        i = j;
    }
    return out;
}

}  // namespace

ChainedProjectorFamily build_chained_projectors(const LatticeState& state, double eps, int n_max,
                                                const QuantumBuildOptions& opts) {
    if (!(eps > 0.0) || eps >= 1.0)
        throw std::invalid_argument("build_chained_projectors: eps must lie in (0, 1)");
    if (n_max < 1) throw std::invalid_argument("build_chained_projectors: N_max must be positive");
    const int d = state.site_dim();
    checked_pow_dim(d, n_max, "build_chained_projectors");

    const int l =
        opts.block_length ? *opts.block_length : choose_block_length(state, eps, opts.l_max);
    if (l < 1)
        throw std::invalid_argument("build_chained_projectors: block length must be positive");
    const std::int64_t block_dim = checked_pow_dim(d, l, "build_chained_projectors");

    InducedProcess ind = induced_process(state, l);
    const double s = state.mean_entropy().nats;
    const int m_blocks = (n_max + l - 1) / l;
    const EntropyRate band_center{l * s, false};
    const double eps_build = l * eps / 2.0;
    const double eps_tight = l * eps;

    auto build_at = [&](int band_m) -> std::optional<ChainedFamily> {
        try {
            ChainedFamily base =
                build_chained_family(ind.model, band_center, eps_build, band_m, m_blocks);
            return tighten_family(base, ind.model, eps_tight);
        } catch (const BandConstructionError&) {
            return std::nullopt;
        } catch (const TighteningError&) {
            return std::nullopt;
        }
    };

    std::optional<ChainedFamily> core;
    bool met = false;
    if (opts.band_m) {
        core = build_at(*opts.band_m);
        if (!core)
            throw SelectionError("build_chained_projectors: band offset " +
                                 std::to_string(*opts.band_m) + " yields an empty family");
        met = family_mass(*core, ind.model, m_blocks) > 1.0 - eps;
    } else {
        // smallest offset reaching the mass target, else the mass maximizer
        double best_mass = -1.0;
        int best_m = 0;
        for (int m = 1; m <= m_blocks; ++m) {
            auto fam = build_at(m);
            if (!fam) continue;
            const double mass = family_mass(*fam, ind.model, m_blocks);
            if (mass > 1.0 - eps) {
                core = std::move(fam);
                met = true;
                break;
            }
            if (mass > best_mass) {
                best_mass = mass;
                best_m = m;
            }
        }
        if (!core) {
            if (best_m == 0)
                throw SelectionError(
                    "build_chained_projectors: no band offset yields a nonempty family");
            core = build_at(best_m);
        }
    }

    std::vector<std::vector<RankOneMember>> members(static_cast<std::size_t>(n_max));
    for (int n = 1; n <= n_max; ++n) {
        const int m = n / l;
        const int r = n % l;
        auto& out = members[static_cast<std::size_t>(n) - 1];
        if (r == 0) {
            for (const Word& w : core->slice(m))
                out.push_back({w.symbols, std::nullopt});
        } else {
            std::int64_t keep_dim = 1;
            for (int i = 0; i < r; ++i) keep_dim *= d;
            out = interpolated_members(core->slice(m + 1), m, ind.basis, keep_dim,
                                       block_dim / keep_dim);
        }
    }

    // threshold: the core threshold in site units, pushed further out until
    // the two-eps trace bounds hold through N_max
    int scan = n_max + 1;
    for (int n = n_max; n >= 1; --n) {
        const double lt = std::log(static_cast<double>(members[n - 1].size()));
        const bool ok = lt > n * (s - 2.0 * eps) - kBandSlack && lt < n * (s + 2.0 * eps) + kBandSlack;
        if (!ok) break;
        scan = n;
    }
    const int n_eps = std::max(l * core->n_eps, scan);

    return ChainedProjectorFamily(state, eps, l, n_eps, met, std::move(*core),
                                  std::move(ind.model), std::move(ind.basis), std::move(members));
}

ProjectorOp interpolate_projector(const ProjectorOp& p_next, int site_dim, int l, int r) {
    if (site_dim < 2)
        throw std::invalid_argument("interpolate_projector: site dimension must be at least 2");
    if (!(0 < r && r < l)) throw std::invalid_argument("interpolate_projector: requires 0 < r < l");
    const std::int64_t dim = p_next.dim();
    int sites = 0;
    std::int64_t t = 1;
    while (t < dim) {
        t *= site_dim;
        ++sites;
    }
    if (t != dim || sites < l)
        throw std::invalid_argument(
            "interpolate_projector: dimension is not site_dim^k with k >= l");
    MatC reduced = partial_trace_keep(p_next.matrix(), site_dim, sites, 0, sites - (l - r));
    return range_projector(reduced);
}

std::vector<ProjectorOp> minimal_decomposition(const ChainedProjectorFamily& family, int n) {
    const auto& ms = family.members(n);
    std::vector<ProjectorOp> out;
    out.reserve(ms.size());
    for (const RankOneMember& m : ms) out.push_back(ProjectorOp::rank_one(m.dense(family.basis())));
    return out;
}

QuantumVerificationReport::QuantumVerificationReport(double s, double eps, int n_eps, int n_max,
                                                     int l,
                                                     std::vector<QuantumDepthRecord> records)
    : s_(s), eps_(eps), n_eps_(n_eps), n_max_(n_max), l_(l), records_(std::move(records)) {
    if (static_cast<int>(records_.size()) != n_max_)
        throw std::invalid_argument("QuantumVerificationReport: one record per depth required");
}

bool QuantumVerificationReport::members_orthonormal() const {
    for (const QuantumDepthRecord& r : records_)
        if (!(r.member_gram_residual < kProjTol)) return false;
    return true;
}

bool QuantumVerificationReport::marginals_consistent() const {
    for (const QuantumDepthRecord& r : records_)
        if (r.marginal_checked && (!r.marginal_rank_equal || !(r.marginal_residual < kMarginalTol)))
            return false;
    return true;
}

bool QuantumVerificationReport::trace_in_bounds() const {
    for (const QuantumDepthRecord& r : records_) {
        if (r.n < n_eps_) continue;
        const double lt = std::log(static_cast<double>(r.trace));
        const double n = static_cast<double>(r.n);
        if (!(lt > n * (s_ - 2.0 * eps_) - kBandSlack)) return false;
        if (!(lt < n * (s_ + 2.0 * eps_) + kBandSlack)) return false;
    }
    return true;
}

bool QuantumVerificationReport::member_bound_holds() const {
    for (const QuantumDepthRecord& r : records_) {
        if (r.n < n_eps_) continue;
        const double le = std::log(r.max_member_expectation);
        if (!(le < -static_cast<double>(r.n) * (s_ - 2.0 * eps_) + kBandSlack)) return false;
    }
    return true;
}

bool QuantumVerificationReport::mass_holds() const {
    for (const QuantumDepthRecord& r : records_)
        if (!(r.mass > 1.0 - eps_ - kBandSlack)) return false;
    return true;
}

bool QuantumVerificationReport::all_pass() const {
    return members_orthonormal() && marginals_consistent() && trace_in_bounds() &&
           member_bound_holds() && mass_holds();
}

double QuantumVerificationReport::trace_lower(int n) const {
    return std::exp(n * (s_ - 2.0 * eps_));
}

double QuantumVerificationReport::trace_upper(int n) const {
    return std::exp(n * (s_ + 2.0 * eps_));
}

double QuantumVerificationReport::member_bound(int n) const {
    return std::exp(-n * (s_ - 2.0 * eps_));
}

int QuantumVerificationReport::eps_trace_bounds_from() const {
    int from = n_max_ + 1;
    for (int n = n_max_; n >= 1; --n) {
        const double lt = std::log(static_cast<double>(records_[n - 1].trace));
        const bool ok = lt > n * (s_ - eps_) - kBandSlack && lt < n * (s_ + eps_) + kBandSlack;
        if (!ok) break;
        from = n;
    }
    return from;
}

QuantumVerificationReport verify_quantum(const ChainedProjectorFamily& family, double eps,
                                         int n_eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("verify_quantum: eps must be positive");
    const int n_max = family.n_max();
    const double s = family.state().mean_entropy().nats;
    const int d = family.site_dim();
    std::vector<QuantumDepthRecord> records(static_cast<std::size_t>(n_max));
    std::exception_ptr failure = nullptr;

#pragma omp parallel for schedule(dynamic)
    for (int n = 1; n <= n_max; ++n) {
        try {
            QuantumDepthRecord rec;
            rec.n = n;
            const MatC cols = family.member_columns(n);
            rec.trace = cols.cols();

            MatC rows = cols.adjoint();
            rec.member_gram_residual = kernels::max_abs_diff(
                kernels::gram(rows), MatC::Identity(cols.cols(), cols.cols()));

            std::vector<double> expectations(static_cast<std::size_t>(cols.cols()));
            for (Eigen::Index j = 0; j < cols.cols(); ++j)
                expectations[static_cast<std::size_t>(j)] =
                    family.state().member_expectation(n, VecC(cols.col(j)));
            rec.mass = kernels::chunked_sum(expectations);
            rec.max_member_expectation =
                *std::max_element(expectations.begin(), expectations.end());

            if (n < n_max) {
                // trace the next depth down one site, member by member, and
                // compare range projectors; ranks are compared as integers
                const MatC up = family.member_columns(n + 1);
                const Eigen::Index dim = cols.rows();
                MatC reduced = MatC::Zero(dim, dim);
                for (Eigen::Index j = 0; j < up.cols(); ++j) {
                    Eigen::Map<const MatC> x(up.col(j).data(), d, dim);
                    reduced.noalias() += x.transpose() * x.conjugate();
                }
                MatC q = range_basis(reduced);
                rec.marginal_checked = true;
                rec.marginal_rank_equal = q.cols() == cols.cols();
                MatC p_here;
                p_here.noalias() = cols * cols.adjoint();
                MatC p_reduced;
                p_reduced.noalias() = q * q.adjoint();
                rec.marginal_residual = kernels::max_abs_diff(p_reduced, p_here);
            }
            records[static_cast<std::size_t>(n) - 1] = std::move(rec);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return QuantumVerificationReport(s, eps, n_eps, n_max, family.block_length(),
                                     std::move(records));
}

namespace {

using nlohmann::ordered_json;

ordered_json complex_list(const VecC& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back({v(i).real(), v(i).imag()});
    return arr;
}

VecC complex_vector(const ordered_json& arr, std::int64_t expect_size, const char* what) {
    if (!arr.is_array() || static_cast<std::int64_t>(arr.size()) != expect_size)
        throw CorruptionError(std::string(what) + ": bad vector length");
    VecC v(expect_size);
    for (std::int64_t i = 0; i < expect_size; ++i) {
        const auto& e = arr[static_cast<std::size_t>(i)];
        if (!e.is_array() || e.size() != 2)
            throw CorruptionError(std::string(what) + ": bad complex entry");
        v(i) = Cplx(e[0].get<double>(), e[1].get<double>());
    }
    return v;
}

void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << j.dump(1) << '\n';
}

ordered_json read_json_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw CorruptionError("cannot open " + path.string());
    try {
        return ordered_json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(path.string() + ": " + e.what());
    }
}

}  // namespace

void write_projector_family(const std::string& dir, const ChainedProjectorFamily& family) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root);

    ordered_json meta;
    meta["eps"] = family.eps();
    meta["block_length"] = family.block_length();
    meta["n_max"] = family.n_max();
    meta["n_eps"] = family.n_eps();
    meta["site_dim"] = family.site_dim();
    meta["mass_target_met"] = family.mass_target_met();
    write_json_file(root / "family.json", meta);

    {
        std::ofstream os(root / "core.txt");
        if (!os) throw std::runtime_error("cannot open core.txt for writing");
        write_family_text(os, family.core());
    }

    ordered_json basis;
    basis["dim"] = family.basis().dim();
    ordered_json comps = ordered_json::array();
    for (const SpectralComponent& c : family.basis().components) {
        ordered_json e;
        e["eigenvalue"] = c.eigenvalue;
        e["vector"] = complex_list(c.vector);
        comps.push_back(std::move(e));
    }
    basis["components"] = std::move(comps);
    write_json_file(root / "basis.json", basis);

    ordered_json depths = ordered_json::array();
    for (int n = 1; n <= family.n_max(); ++n) {
        ordered_json depth = ordered_json::array();
        for (const RankOneMember& m : family.members(n)) {
            ordered_json e;
            e["labels"] = m.core_labels;
            if (m.tail) e["tail"] = complex_list(*m.tail);
            depth.push_back(std::move(e));
        }
        depths.push_back(std::move(depth));
    }
    ordered_json members;
    members["depths"] = std::move(depths);
    write_json_file(root / "members.json", members);
}

ChainedProjectorFamily read_projector_family(const std::string& dir, const LatticeState& state) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    try {
        const ordered_json meta = read_json_file(root / "family.json");
        const double eps = meta.at("eps").get<double>();
        const int l = meta.at("block_length").get<int>();
        const int n_max = meta.at("n_max").get<int>();
        const int n_eps = meta.at("n_eps").get<int>();
        const int site_dim = meta.at("site_dim").get<int>();
        const bool met = meta.at("mass_target_met").get<bool>();
        if (l < 1 || n_max < 1 || eps <= 0.0) throw CorruptionError("family.json: bad parameters");
        if (site_dim != state.site_dim())
            throw CorruptionError("family.json: site dimension does not match the state");

        std::int64_t block_dim = 1;
        for (int i = 0; i < l; ++i) block_dim *= site_dim;
        check_dense_dim(block_dim, "read_projector_family");

        ChainedFamily core = [&] {
            std::ifstream is(root / "core.txt");
            if (!is) throw CorruptionError("cannot open core.txt");
            return read_family_text(is);
        }();
        if (static_cast<std::int64_t>(core.alphabet.size) != block_dim)
            throw CorruptionError("core.txt: alphabet does not match the block dimension");
        if (core.n_max != (n_max + l - 1) / l)
            throw CorruptionError("core.txt: depth does not match the family depth");

        const ordered_json basis_json = read_json_file(root / "basis.json");
        if (basis_json.at("dim").get<std::int64_t>() != block_dim)
            throw CorruptionError("basis.json: dimension does not match the block");
        SpectralSet basis;
        for (const auto& e : basis_json.at("components")) {
            SpectralComponent c;
            c.eigenvalue = e.at("eigenvalue").get<double>();
            c.vector = complex_vector(e.at("vector"), block_dim, "basis.json");
            basis.components.push_back(std::move(c));
        }
        if (static_cast<std::int64_t>(basis.components.size()) != block_dim)
            throw CorruptionError("basis.json: component count does not match the dimension");

        // the stored basis must agree with the state's own block eigenbasis; a
        // state that cannot produce one at this block length is a mismatch too
        InducedProcess ind = [&] {
            try {
                return induced_process(state, l);
            } catch (const std::invalid_argument& e) {
                throw CorruptionError(std::string("stored family does not match the state: ") +
                                      e.what());
            }
        }();
        for (std::size_t i = 0; i < basis.components.size(); ++i) {
            const SpectralComponent& file = basis.components[i];
            const SpectralComponent& here = ind.basis.components[i];
            if (std::abs(file.eigenvalue - here.eigenvalue) > 1e-10)
                throw CorruptionError("basis.json: eigenvalue drift against the state");
            if (std::abs(std::abs(file.vector.dot(here.vector)) - 1.0) > kMarginalTol)
                throw CorruptionError("basis.json: eigenvector drift against the state");
        }

        const ordered_json members_json = read_json_file(root / "members.json");
        const auto& depths = members_json.at("depths");
        if (!depths.is_array() || static_cast<int>(depths.size()) != n_max)
            throw CorruptionError("members.json: one depth list per n required");
        std::vector<std::vector<RankOneMember>> members(static_cast<std::size_t>(n_max));
        for (int n = 1; n <= n_max; ++n) {
            const int m = n / l;
            const int r = n % l;
            std::int64_t tail_dim = 1;
            for (int i = 0; i < r; ++i) tail_dim *= site_dim;
            const auto& depth = depths[static_cast<std::size_t>(n) - 1];
            if (!depth.is_array() || depth.empty())
                throw CorruptionError("members.json: empty depth " + std::to_string(n));
            for (const auto& e : depth) {
                RankOneMember mem;
                mem.core_labels = e.at("labels").get<std::vector<Symbol>>();
                if (static_cast<int>(mem.core_labels.size()) != m)
                    throw CorruptionError("members.json: bad label count at depth " +
                                          std::to_string(n));
                for (Symbol lab : mem.core_labels)
                    if (lab >= basis.components.size())
                        throw CorruptionError("members.json: label outside the basis");
                if (r > 0) {
                    mem.tail = complex_vector(e.at("tail"), tail_dim, "members.json");
                    if (std::abs(mem.tail->norm() - 1.0) > kProjTol)
                        throw CorruptionError("members.json: remainder factor is not normalized");
                } else if (e.contains("tail")) {
                    throw CorruptionError("members.json: unexpected remainder factor at depth " +
                                          std::to_string(n));
                }
                members[static_cast<std::size_t>(n) - 1].push_back(std::move(mem));
            }
            if (r == 0) {
                // whole-block depths must mirror the word family exactly
                const auto& slice = core.slice(m);
                const auto& got = members[static_cast<std::size_t>(n) - 1];
                if (got.size() != slice.size())
                    throw CorruptionError("members.json: depth " + std::to_string(n) +
                                          " does not match the word family");
                for (std::size_t i = 0; i < got.size(); ++i)
                    if (got[i].core_labels != slice[i].symbols)
                        throw CorruptionError("members.json: depth " + std::to_string(n) +
                                              " does not match the word family");
            }
        }

        return ChainedProjectorFamily(state, eps, l, n_eps, met, std::move(core),
                                      std::move(ind.model), std::move(basis), std::move(members));
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("projector family: ") + e.what());
    }
}

}  // namespace aep
