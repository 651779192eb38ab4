#include "aepkit/lattice.hpp"

#include <cmath>
#include <stdexcept>

#include "aepkit/errors.hpp"

namespace aep {

namespace {

Eigen::Index pow_dim(int d, int n) {
    Eigen::Index out = 1;
    for (int i = 0; i < n; ++i) {
        out *= d;
        if (out > static_cast<Eigen::Index>(1) << 40)
            throw ResourceLimitError("lattice: block dimension overflow");
    }
    return out;
}

// Contract a d x d matrix into one tensor slot of a length-d^n vector.
VecC site_contract(const VecC& v, const MatC& m, int slot, int d, int n) {
    const Eigen::Index pre = pow_dim(d, slot);
    const Eigen::Index post = pow_dim(d, n - 1 - slot);
    VecC out(v.size());
    VecC x(d), y(d);
    for (Eigen::Index a = 0; a < pre; ++a) {
        const Eigen::Index base = a * d * post;
        for (Eigen::Index c = 0; c < post; ++c) {
            for (int b = 0; b < d; ++b) x(b) = v(base + b * post + c);
            y.noalias() = m * x;
            for (int b = 0; b < d; ++b) out(base + b * post + c) = y(b);
        }
    }
    return out;
}

double shannon(const std::vector<double>& p) {
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

}  // namespace

LatticeState LatticeState::iid_product(DensityOperator site) {
    LatticeState s;
    s.kind_ = Kind::product;
    s.site_dim_ = site.dim();
    s.site_ = std::move(site);
    return s;
}

LatticeState LatticeState::classical_markov(ProcessModel chain) {
    if (chain.is_blocked())
        throw std::invalid_argument("classical_markov: blocked chains are not a site model");
    if (chain.entropy_rate().nonstationary_initial)
        throw std::invalid_argument("classical_markov: chain must be started stationary");
    LatticeState s;
    s.kind_ = Kind::classical;
    s.site_dim_ = static_cast<int>(chain.alphabet_size());
    s.unitary_ = MatC::Identity(s.site_dim_, s.site_dim_);
    s.chain_ = std::move(chain);
    return s;
}

LatticeState LatticeState::rotated_classical(ProcessModel chain, MatC site_unitary) {
    if (chain.is_blocked())
        throw std::invalid_argument("rotated_classical: blocked chains are not a site model");
    if (chain.entropy_rate().nonstationary_initial)
        throw std::invalid_argument("rotated_classical: chain must be started stationary");
    const auto d = static_cast<Eigen::Index>(chain.alphabet_size());
    if (site_unitary.rows() != d || site_unitary.cols() != d)
        throw std::invalid_argument("rotated_classical: unitary dimension mismatch");
    if (kernels::max_abs_diff(site_unitary * site_unitary.adjoint(), MatC::Identity(d, d)) > 1e-10)
        throw std::invalid_argument("rotated_classical: matrix is not unitary");
    LatticeState s;
    s.kind_ = Kind::rotated;
    s.site_dim_ = static_cast<int>(d);
    s.unitary_ = std::move(site_unitary);
    s.chain_ = std::move(chain);
    return s;
}

const ProcessModel& LatticeState::chain() const {
    if (!chain_) throw std::invalid_argument("chain: state has no classical chain");
    return *chain_;
}

const MatC& LatticeState::site_unitary() const {
    if (kind_ == Kind::product) throw std::invalid_argument("site_unitary: product state");
    return unitary_;
}

const DensityOperator& LatticeState::site() const {
    if (!site_) throw std::invalid_argument("site: not a product state");
    return *site_;
}

MeanEntropy LatticeState::mean_entropy() const {
    MeanEntropy s;
    if (kind_ == Kind::product)
        s.nats = von_neumann_entropy(*site_);
    else
        s.nats = chain_->entropy_rate().nats;
    return s;
}

double LatticeState::block_entropy(int l) const {
    if (l < 1) throw std::invalid_argument("block_entropy: l must be positive");
    if (kind_ == Kind::product) return l * von_neumann_entropy(*site_);
    // Shannon entropy of the length-l word distribution
    if (chain_->is_iid()) return l * chain_->entropy_rate().nats;
    const double h1 = shannon(chain_->stationary());
    return h1 + (l - 1) * chain_->entropy_rate().nats;
}

std::vector<double> LatticeState::diagonal_weights(int n) const {
    const int d = site_dim_;
    std::vector<double> w{1.0};
    const std::vector<double> start = chain_->stationary();
    for (int level = 0; level < n; ++level) {
        std::vector<double> next(w.size() * static_cast<std::size_t>(d));
        for (std::size_t i = 0; i < w.size(); ++i) {
            for (int a = 0; a < d; ++a) {
                double step;
                if (level == 0)
                    step = start[static_cast<std::size_t>(a)];
                else if (chain_->is_iid())
                    step = start[static_cast<std::size_t>(a)];
                else
                    step = chain_->transition()[i % static_cast<std::size_t>(d)]
                                               [static_cast<std::size_t>(a)];
                next[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] = w[i] * step;
            }
        }
        w.swap(next);
    }
    return w;
}

DensityOperator LatticeState::block_density(int l) const {
    if (l < 1) throw std::invalid_argument("block_density: l must be positive");
    const Eigen::Index dim = pow_dim(site_dim_, l);
    check_dense_dim(dim, "block_density");
    if (kind_ == Kind::product) {
        MatC m = site_->matrix();
        for (int i = 1; i < l; ++i) m = kernels::kron(m, site_->matrix());
        return DensityOperator(std::move(m));
    }
    std::vector<double> w = diagonal_weights(l);
    MatC m = MatC::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) m(i, i) = w[static_cast<std::size_t>(i)];
    if (kind_ == Kind::classical) return DensityOperator(std::move(m));
    MatC un = unitary_;
    for (int i = 1; i < l; ++i) un = kernels::kron(un, unitary_);
    return DensityOperator((un * m * un.adjoint()).eval());
}

VecC LatticeState::apply_block_density(int n, const VecC& v) const {
    if (n < 1) throw std::invalid_argument("apply_block_density: n must be positive");
    const Eigen::Index dim = pow_dim(site_dim_, n);
    if (v.size() != dim)
        throw std::invalid_argument("apply_block_density: vector length mismatch");
    if (kind_ == Kind::product) {
        VecC out = v;
        for (int slot = 0; slot < n; ++slot)
            out = site_contract(out, site_->matrix(), slot, site_dim_, n);
        return out;
    }
    VecC out = v;
    if (kind_ == Kind::rotated) {
        const MatC udag = unitary_.adjoint();
        for (int slot = 0; slot < n; ++slot)
            out = site_contract(out, udag, slot, site_dim_, n);
    }
    std::vector<double> w = diagonal_weights(n);
    for (Eigen::Index i = 0; i < dim; ++i) out(i) *= w[static_cast<std::size_t>(i)];
    if (kind_ == Kind::rotated) {
        for (int slot = 0; slot < n; ++slot)
            out = site_contract(out, unitary_, slot, site_dim_, n);
    }
    return out;
}

double LatticeState::member_expectation(int n, const VecC& v) const {
    return (v.adjoint() * apply_block_density(n, v))(0).real();
}

int choose_block_length(const LatticeState& state, double eps, int l_max) {
    if (!(eps > 0.0)) throw std::invalid_argument("choose_block_length: eps must be positive");
    if (l_max < 1) throw std::invalid_argument("choose_block_length: l_max must be positive");
    const double target = state.mean_entropy().nats + eps * eps;
    for (int l = 1; l <= l_max; ++l)
        if (state.block_entropy(l) / l < target) return l;
    throw SelectionError("choose_block_length: no block length up to " + std::to_string(l_max) +
                         " brings the entropy density below mean + eps^2");
}

std::vector<std::pair<int, double>> entropy_density_curve(const LatticeState& state, int l_max) {
    std::vector<std::pair<int, double>> out;
    out.reserve(static_cast<std::size_t>(l_max));
    for (int l = 1; l <= l_max; ++l) out.emplace_back(l, state.block_entropy(l) / l);
    return out;
}

InducedProcess induced_process(const LatticeState& state, int l) {
    DensityOperator dl = state.block_density(l);
    const auto dim = static_cast<std::size_t>(dl.dim());

    if (state.is_classical_diagonal()) {
        // The eigenbasis is the word basis itself; build the spectral set
        // directly so exactly degenerate word probabilities stay resolvable.
        std::vector<std::uint32_t> order(dim);
        for (std::uint32_t j = 0; j < dim; ++j) order[j] = j;
        const MatC& m = dl.matrix();
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            const double wa = m(a, a).real(), wb = m(b, b).real();
            if (wa != wb) return wa > wb;
            return a > b;  // basis vector with the higher index is lex smaller
        });
        SpectralSet basis;
        basis.components.reserve(dim);
        for (std::uint32_t j : order) {
            VecC e = VecC::Zero(static_cast<Eigen::Index>(dim));
            e(j) = 1.0;
            basis.components.push_back({m(j, j).real(), std::move(e)});
        }
        return {ProcessModel::blocked(state.chain(), l, std::move(order)), std::move(basis)};
    }

    SpectralSet basis = spectral_projectors(dl);

    if (state.kind() == LatticeState::Kind::product) {
        std::vector<double> probs;
        probs.reserve(dim);
        double sum = 0.0;
        for (const auto& c : basis.components) {
            probs.push_back(std::max(0.0, c.eigenvalue));
            sum += probs.back();
        }
        for (double& p : probs) p /= sum;  // absorb eigensolver round-off
        return {ProcessModel::iid(std::move(probs)), std::move(basis)};
    }

    // map each eigenvector back to the basis word it rotates
    MatC un = state.site_unitary();
    for (int i = 1; i < l; ++i) un = kernels::kron(un, state.site_unitary());
    std::vector<std::uint32_t> label_to_word(dim);
    std::vector<char> used(dim, 0);
    for (std::size_t i = 0; i < dim; ++i) {
        const VecC& v = basis.components[i].vector;
        VecC back = un.adjoint() * v;
        Eigen::Index j = 0;
        back.cwiseAbs().maxCoeff(&j);
        VecC expect = phase_normalize(un.col(j));
        if ((v - expect).cwiseAbs().maxCoeff() > 1e-8)
            throw std::invalid_argument(
                "induced_process: eigenbasis does not match the rotated word basis");
        if (used[static_cast<std::size_t>(j)])
            throw std::invalid_argument("induced_process: eigenbasis maps two labels to one word");
        used[static_cast<std::size_t>(j)] = 1;
        label_to_word[i] = static_cast<std::uint32_t>(j);
    }
    return {ProcessModel::blocked(state.chain(), l, std::move(label_to_word)), std::move(basis)};
}

}  // namespace aep
