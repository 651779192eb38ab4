#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "aepkit/kernels.hpp"

namespace aep {

// Largest dimension for which operators may be materialized densely.
inline constexpr int kDenseDimCap = 4096;

inline constexpr double kHermTol = 1e-10;
inline constexpr double kEigTol = 1e-10;      // allowed negative dip of density eigenvalues
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kProjTol = 1e-9;      // idempotency and orthonormality
inline constexpr double kRangeCutRel = 1e-10; // range cut relative to the top eigenvalue

// Throws ResourceLimitError above kDenseDimCap.
void check_dense_dim(Eigen::Index dim, const char* what);

bool is_hermitian(const MatC& m, double tol = kHermTol);

// Unit-trace positive operator. The constructor checks hermiticity, trace and
// the diagonal; checked() also confirms the full spectrum, which is the right
// entry point for operators read from external input.
class DensityOperator {
  public:
    explicit DensityOperator(MatC m);
    static DensityOperator checked(MatC m);

    const MatC& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }

  private:
    MatC m_;
};

// Orthogonal projector; rank is pinned to the trace.
class ProjectorOp {
  public:
    explicit ProjectorOp(MatC m);

    // QQ^H for orthonormal columns Q. Checks the k x k gram residual instead
    // of the dim^3 idempotency product, so it stays cheap at large dimension.
    static ProjectorOp from_orthonormal_columns(const MatC& q);
    static ProjectorOp rank_one(const VecC& v);  // v must be normalized

    const MatC& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }
    std::int64_t rank() const { return rank_; }

  private:
    ProjectorOp() = default;
    MatC m_;
    std::int64_t rank_ = 0;
};

struct SpectralComponent {
    double eigenvalue = 0.0;
    VecC vector;
};

// Full rank-one eigendecomposition of a density operator, eigenvalues
// descending. Equal eigenvalues are ordered by the phase-normalized
// eigenvector, lexicographically smaller first, so the order is reproducible.
struct SpectralSet {
    std::vector<SpectralComponent> components;

    int dim() const { return components.empty() ? 0 : static_cast<int>(components[0].vector.size()); }
    MatC rows() const;  // component vectors stacked as rows
};

SpectralSet spectral_projectors(const DensityOperator& rho);

// Fixes the global phase: first component of magnitude above 1e-12 is made
// real positive.
VecC phase_normalize(VecC v);

// Orthonormal columns spanning the range of a PSD operator; eigenvalues below
// kRangeCutRel times the largest are treated as zero. Throws on (numerically)
// zero input.
MatC range_basis(const MatC& psd);
ProjectorOp range_projector(const MatC& psd);

double von_neumann_entropy(const DensityOperator& rho);  // nats

double expectation(const DensityOperator& rho, const MatC& op);  // re tr(rho op)

// Keeps a contiguous run of sites of a d^n dimensional operator. Only prefix
// (keep_begin = 0) and suffix (keep_end = n_sites) runs are supported.
MatC partial_trace_keep(const MatC& m, int site_dim, int n_sites, int keep_begin, int keep_end);

// JSON form: {"dim": d, "entries": [[re, im], ...]} row-major.
void write_operator_json(std::ostream& os, const MatC& m);
MatC read_operator_json(std::istream& is);

}  // namespace aep
