#include "aepkit/operators.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "aepkit/errors.hpp"

namespace aep {

void check_dense_dim(Eigen::Index dim, const char* what) {
    if (dim > kDenseDimCap)
        throw ResourceLimitError(std::string(what) + ": dimension " + std::to_string(dim) +
                                 " exceeds the dense cap " + std::to_string(kDenseDimCap));
}

bool is_hermitian(const MatC& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return kernels::max_abs_diff(m, m.adjoint()) <= tol;
}

DensityOperator::DensityOperator(MatC m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0)
        throw std::invalid_argument("DensityOperator: matrix must be square and nonempty");
    check_dense_dim(m_.rows(), "DensityOperator");
    if (!is_hermitian(m_)) throw std::invalid_argument("DensityOperator: matrix is not Hermitian");
    if (std::abs(m_.trace().real() - 1.0) > kTraceTol || std::abs(m_.trace().imag()) > kTraceTol)
        throw std::invalid_argument("DensityOperator: trace differs from 1");
    for (Eigen::Index i = 0; i < m_.rows(); ++i)
        if (m_(i, i).real() < -kEigTol)
            throw std::invalid_argument("DensityOperator: negative diagonal entry");
}

DensityOperator DensityOperator::checked(MatC m) {
    DensityOperator rho(std::move(m));
    auto eig = kernels::hermitian_eigh(rho.m_);
    if (eig.eigenvalues.minCoeff() < -kEigTol)
        throw std::invalid_argument("DensityOperator: negative eigenvalue");
    return rho;
}

ProjectorOp::ProjectorOp(MatC m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0)
        throw std::invalid_argument("ProjectorOp: matrix must be square and nonempty");
    check_dense_dim(m_.rows(), "ProjectorOp");
    if (!is_hermitian(m_)) throw std::invalid_argument("ProjectorOp: matrix is not Hermitian");
    if (kernels::max_abs_diff(m_ * m_, m_) > kProjTol)
        throw std::invalid_argument("ProjectorOp: matrix is not idempotent");
    const double tr = m_.trace().real();
    rank_ = std::llround(tr);
    if (std::abs(tr - static_cast<double>(rank_)) > kProjTol)
        throw std::invalid_argument("ProjectorOp: trace is not close to an integer");
}

ProjectorOp ProjectorOp::from_orthonormal_columns(const MatC& q) {
    if (q.rows() == 0 || q.cols() == 0)
        throw std::invalid_argument("ProjectorOp: empty column set");
    check_dense_dim(q.rows(), "ProjectorOp");
    MatC gram = q.adjoint() * q;
    if (kernels::max_abs_diff(gram, MatC::Identity(q.cols(), q.cols())) > kProjTol)
        throw std::invalid_argument("ProjectorOp: columns are not orthonormal");
    ProjectorOp p;
    p.m_.noalias() = q * q.adjoint();
    p.rank_ = q.cols();
    return p;
}

ProjectorOp ProjectorOp::rank_one(const VecC& v) {
    if (v.size() == 0) throw std::invalid_argument("ProjectorOp: empty vector");
    check_dense_dim(v.size(), "ProjectorOp");
    if (std::abs(v.norm() - 1.0) > kProjTol)
        throw std::invalid_argument("ProjectorOp: vector is not normalized");
    ProjectorOp p;
    p.m_.noalias() = v * v.adjoint();
    p.rank_ = 1;
    return p;
}

MatC SpectralSet::rows() const {
    MatC out(static_cast<Eigen::Index>(components.size()), dim());
    for (std::size_t i = 0; i < components.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = components[i].vector.transpose();
    return out;
}

VecC phase_normalize(VecC v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v(i));
        if (mag > 1e-12) {
            v *= std::conj(v(i)) / mag;
            break;
        }
    }
    return v;
}

namespace {

bool lex_less(const VecC& a, const VecC& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i).real() != b(i).real()) return a(i).real() < b(i).real();
        if (a(i).imag() != b(i).imag()) return a(i).imag() < b(i).imag();
    }
    return false;
}

}  // namespace

SpectralSet spectral_projectors(const DensityOperator& rho) {
    auto eig = kernels::hermitian_eigh(rho.matrix());
    const Eigen::Index n = eig.eigenvalues.size();
    SpectralSet set;
    set.components.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        set.components.push_back(
            {eig.eigenvalues(i), phase_normalize(eig.eigenvectors.col(i))});
    std::sort(set.components.begin(), set.components.end(),
              [](const SpectralComponent& a, const SpectralComponent& b) {
                  if (a.eigenvalue != b.eigenvalue) return a.eigenvalue > b.eigenvalue;
                  return lex_less(a.vector, b.vector);
              });

    // the decomposition must reproduce the operator
    MatC rebuilt = MatC::Zero(n, n);
    for (const auto& c : set.components)
        rebuilt.noalias() += c.eigenvalue * (c.vector * c.vector.adjoint());
    if (kernels::max_abs_diff(rebuilt, rho.matrix()) > 1e-9)
        throw std::runtime_error("spectral_projectors: reconstruction residual too large");
    return set;
}

MatC range_basis(const MatC& psd) {
    if (!is_hermitian(psd)) throw std::invalid_argument("range_basis: matrix is not Hermitian");
    auto eig = kernels::hermitian_eigh(psd);
    const double top = eig.eigenvalues.size() ? eig.eigenvalues.maxCoeff() : 0.0;
    if (top < 1e-14) throw std::invalid_argument("range_basis: operator is numerically zero");
    const double cut = kRangeCutRel * top;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i)
        if (eig.eigenvalues(i) > cut) keep.push_back(i);
    MatC q(psd.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) q.col(static_cast<Eigen::Index>(j)) = eig.eigenvectors.col(keep[j]);
    return q;
}

ProjectorOp range_projector(const MatC& psd) {
    MatC q = range_basis(psd);
    return ProjectorOp(q * q.adjoint());
}

double von_neumann_entropy(const DensityOperator& rho) {
    auto eig = kernels::hermitian_eigh(rho.matrix());
    double h = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
        const double x = eig.eigenvalues(i);
        if (x > 1e-14) h -= x * std::log(x);
    }
    return h;
}

double expectation(const DensityOperator& rho, const MatC& op) {
    if (op.rows() != rho.dim() || op.cols() != rho.dim())
        throw std::invalid_argument("expectation: dimension mismatch");
    return (rho.matrix().transpose().cwiseProduct(op)).sum().real();
}

MatC partial_trace_keep(const MatC& m, int site_dim, int n_sites, int keep_begin, int keep_end) {
    if (site_dim < 2 || n_sites < 1) throw std::invalid_argument("partial_trace_keep: bad shape");
    Eigen::Index dim = 1;
    for (int i = 0; i < n_sites; ++i) dim *= site_dim;
    if (m.rows() != dim || m.cols() != dim)
        throw std::invalid_argument("partial_trace_keep: operator dimension mismatch");
    if (keep_begin < 0 || keep_end > n_sites || keep_begin >= keep_end)
        throw std::invalid_argument("partial_trace_keep: bad site range");
    const int kept = keep_end - keep_begin;
    if (kept == n_sites) return m;
    Eigen::Index keep_dim = 1, drop_dim = 1;
    for (int i = 0; i < kept; ++i) keep_dim *= site_dim;
    for (int i = 0; i < n_sites - kept; ++i) drop_dim *= site_dim;
    if (keep_begin == 0)
        return kernels::partial_trace_keep_prefix(m, static_cast<int>(keep_dim),
                                                  static_cast<int>(drop_dim));
    if (keep_end == n_sites)
        return kernels::partial_trace_keep_suffix(m, static_cast<int>(drop_dim),
                                                  static_cast<int>(keep_dim));
    throw std::invalid_argument("partial_trace_keep: only prefix or suffix runs are supported");
}

void write_operator_json(std::ostream& os, const MatC& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("write_operator_json: matrix not square");
    nlohmann::ordered_json j;
    j["dim"] = m.rows();
    auto& entries = j["entries"] = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index k = 0; k < m.cols(); ++k)
            entries.push_back({m(i, k).real(), m(i, k).imag()});
    os << j.dump(2) << "\n";
}

MatC read_operator_json(std::istream& is) {
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("operator json: ") + e.what());
    }
    if (!j.is_object() || !j.contains("dim") || !j.contains("entries"))
        throw CorruptionError("operator json: missing dim or entries");
    const auto dim = j["dim"].get<Eigen::Index>();
    if (dim < 1) throw CorruptionError("operator json: dim must be positive");
    check_dense_dim(dim, "read_operator_json");
    const auto& entries = j["entries"];
    if (!entries.is_array() || entries.size() != static_cast<std::size_t>(dim * dim))
        throw CorruptionError("operator json: entries length differs from dim^2");
    MatC m(dim, dim);
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index k = 0; k < dim; ++k, ++idx) {
            const auto& e = entries[idx];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw CorruptionError("operator json: entry is not an [re, im] pair");
            m(i, k) = Cplx(e[0].get<double>(), e[1].get<double>());
        }
    return m;
}

}  // namespace aep
