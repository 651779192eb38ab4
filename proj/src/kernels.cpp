#include "aepkit/kernels.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#ifdef AEPKIT_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace aep::kernels {

double chunked_sum(const double* data, std::size_t n, Exec ex) {
    const std::size_t blocks = (n + kChunk - 1) / kChunk;
    if (blocks <= 1) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    std::vector<double> partial(blocks, 0.0);
    const auto body = [&](std::size_t b) {
        const std::size_t lo = b * kChunk;
        const std::size_t hi = std::min(n, lo + kChunk);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += data[i];
        partial[b] = s;
    };
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (long long b = 0; b < static_cast<long long>(blocks); ++b)
            body(static_cast<std::size_t>(b));
    } else {
        for (std::size_t b = 0; b < blocks; ++b) body(b);
    }
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
}

double chunked_sum(const std::vector<double>& v, Exec ex) {
    return chunked_sum(v.data(), v.size(), ex);
}

MatC kron(const MatC& a, const MatC& b) {
    MatC out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

VecC kron_vec(const VecC& a, const VecC& b) {
    VecC out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

namespace {

void check_product_dim(const MatC& m, int da, int db, const char* what) {
    const Eigen::Index dim = static_cast<Eigen::Index>(da) * db;
    if (da < 1 || db < 1 || m.rows() != dim || m.cols() != dim)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

template <typename Body>
void run_rows(Eigen::Index rows, Exec ex, Body&& body) {
    const Eigen::Index blocks = (rows + kRowBlock - 1) / kRowBlock;
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (long long b = 0; b < static_cast<long long>(blocks); ++b) {
            const Eigen::Index lo = static_cast<Eigen::Index>(b) * kRowBlock;
            body(lo, std::min(rows, lo + kRowBlock));
        }
    } else {
        for (Eigen::Index b = 0; b < blocks; ++b) {
            const Eigen::Index lo = b * kRowBlock;
            body(lo, std::min(rows, lo + kRowBlock));
        }
    }
}

}  // namespace

MatC partial_trace_keep_prefix(const MatC& m, int keep_dim, int drop_dim, Exec ex) {
    check_product_dim(m, keep_dim, drop_dim, "partial_trace_keep_prefix");
    MatC out(keep_dim, keep_dim);
    run_rows(keep_dim, ex, [&](Eigen::Index lo, Eigen::Index hi) {
        for (Eigen::Index i = lo; i < hi; ++i)
            for (Eigen::Index j = 0; j < keep_dim; ++j) {
                Cplx s{0.0, 0.0};
                for (Eigen::Index b = 0; b < drop_dim; ++b)
                    s += m(i * drop_dim + b, j * drop_dim + b);
                out(i, j) = s;
            }
    });
    return out;
}

MatC partial_trace_keep_suffix(const MatC& m, int drop_dim, int keep_dim, Exec ex) {
    check_product_dim(m, drop_dim, keep_dim, "partial_trace_keep_suffix");
    MatC out(keep_dim, keep_dim);
    run_rows(keep_dim, ex, [&](Eigen::Index lo, Eigen::Index hi) {
        for (Eigen::Index i = lo; i < hi; ++i)
            for (Eigen::Index j = 0; j < keep_dim; ++j) {
                Cplx s{0.0, 0.0};
                for (Eigen::Index a = 0; a < drop_dim; ++a)
                    s += m(a * keep_dim + i, a * keep_dim + j);
                out(i, j) = s;
            }
    });
    return out;
}

MatC gram(const MatC& rows, Exec ex) {
    MatC out(rows.rows(), rows.rows());
    run_rows(rows.rows(), ex, [&](Eigen::Index lo, Eigen::Index hi) {
        out.middleRows(lo, hi - lo).noalias() = rows.middleRows(lo, hi - lo) * rows.adjoint();
    });
    return out;
}

std::vector<double> quadratic_forms(const MatC& rho, const MatC& rows, Exec ex) {
    if (rho.rows() != rho.cols() || rho.cols() != rows.cols())
        throw std::invalid_argument("quadratic_forms: dimension mismatch");
    std::vector<double> out(static_cast<std::size_t>(rows.rows()));
    run_rows(rows.rows(), ex, [&](Eigen::Index lo, Eigen::Index hi) {
        for (Eigen::Index i = lo; i < hi; ++i) {
            VecC v = rows.row(i).transpose();
            out[static_cast<std::size_t>(i)] = (v.adjoint() * rho * v)(0).real();
        }
    });
    return out;
}

double max_abs_diff(const MatC& a, const MatC& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

EighResult hermitian_eigh(const MatC& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("hermitian_eigh: matrix is not square");
    const int n = static_cast<int>(m.rows());
    if (n == 0) return {Eigen::VectorXd(0), MatC(0, 0)};
#ifdef AEPKIT_HAVE_LAPACKE
    MatC a = m;
    Eigen::VectorXd w(n);
    const int info =
        LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                       reinterpret_cast<lapack_complex_double*>(a.data()), n, w.data());
    if (info != 0)
        throw std::runtime_error("hermitian_eigh: zheevd failed with info " +
                                 std::to_string(info));
    return {std::move(w), std::move(a)};
#else
    Eigen::SelfAdjointEigenSolver<MatC> es(m);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("hermitian_eigh: eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
#endif
}

}  // namespace aep::kernels
