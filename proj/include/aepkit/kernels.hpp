#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <vector>

namespace aep {

using Cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;

namespace kernels {

// Serial and parallel paths share one fixed block decomposition, so results
// are bitwise identical regardless of execution mode or thread count.
enum class Exec { serial, parallel };

inline constexpr std::size_t kChunk = 1024;   // summation chunk length
inline constexpr int kRowBlock = 64;          // rows per matrix work block

// Sum in fixed 1024-element chunks, then combine the partials in order.
double chunked_sum(const double* data, std::size_t n, Exec ex = Exec::serial);
double chunked_sum(const std::vector<double>& v, Exec ex = Exec::serial);

MatC kron(const MatC& a, const MatC& b);
VecC kron_vec(const VecC& a, const VecC& b);

// Partial traces of an operator on a two-factor space, keeping either the
// first factor (dimension keep_dim) or the second.
MatC partial_trace_keep_prefix(const MatC& m, int keep_dim, int drop_dim,
                               Exec ex = Exec::serial);
MatC partial_trace_keep_suffix(const MatC& m, int drop_dim, int keep_dim,
                               Exec ex = Exec::serial);

// rows * rows^H for a matrix whose rows are vectors.
MatC gram(const MatC& rows, Exec ex = Exec::serial);

// re(v^H rho v) for every row v.
std::vector<double> quadratic_forms(const MatC& rho, const MatC& rows, Exec ex = Exec::serial);

double max_abs_diff(const MatC& a, const MatC& b);

struct EighResult {
    Eigen::VectorXd eigenvalues;  // ascending
    MatC eigenvectors;            // columns match the eigenvalue order
};
// Hermitian eigendecomposition (uses the lower triangle).
EighResult hermitian_eigh(const MatC& m);

}  // namespace kernels
}  // namespace aep
