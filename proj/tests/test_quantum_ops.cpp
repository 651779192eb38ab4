#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "aepkit/errors.hpp"
#include "aepkit/operators.hpp"

using aep::Cplx;
using aep::DensityOperator;
using aep::MatC;
using aep::ProjectorOp;
using aep::VecC;
namespace kn = aep::kernels;

namespace {

MatC random_unitary(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    MatC m(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) m(i, j) = Cplx(g(gen), g(gen));
    Eigen::HouseholderQR<MatC> qr(m);
    return qr.householderQ() * MatC::Identity(n, n);
}

DensityOperator diag_density(const std::vector<double>& p) {
    MatC m = MatC::Zero(static_cast<Eigen::Index>(p.size()), static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = p[i];
    return DensityOperator(std::move(m));
}

}  // namespace

TEST_CASE("density validation rejects malformed operators") {
    MatC ok = MatC::Identity(2, 2) / 2.0;
    CHECK_NOTHROW(DensityOperator::checked(ok));

    MatC skew(2, 2);
    skew << 0.5, Cplx(0.1, 0.2), Cplx(0.1, 0.1), 0.5;
    CHECK_THROWS_AS(DensityOperator{skew}, std::invalid_argument);

    MatC off_trace = MatC::Identity(2, 2);
    CHECK_THROWS_AS(DensityOperator{off_trace}, std::invalid_argument);

    MatC neg(2, 2);
    neg << 1.5, 0.0, 0.0, -0.5;
    CHECK_THROWS_AS(DensityOperator{neg}, std::invalid_argument);

    // indefinite but with positive diagonal: only checked() sees the spectrum
    MatC indef(2, 2);
    indef << 0.5, 0.8, 0.8, 0.5;
    CHECK_THROWS_AS(DensityOperator::checked(indef), std::invalid_argument);
}

TEST_CASE("projector validation pins the rank to the trace") {
    ProjectorOp id{MatC::Identity(4, 4)};
    CHECK(id.rank() == 4);
    VecC v(2);
    v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    ProjectorOp line{v * v.adjoint()};
    CHECK(line.rank() == 1);

    MatC not_idem = 0.5 * MatC::Identity(3, 3);
    CHECK_THROWS_AS(ProjectorOp{not_idem}, std::invalid_argument);
}

TEST_CASE("spectral decomposition is descending and reproducible") {
    auto rho = diag_density({0.3, 0.7});
    auto set = aep::spectral_projectors(rho);
    REQUIRE(set.components.size() == 2);
    CHECK(set.components[0].eigenvalue == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(set.components[1].eigenvalue == doctest::Approx(0.3).epsilon(1e-12));
    // top eigenvector of diag(0.3, 0.7) is the second basis vector
    CHECK(std::abs(set.components[0].vector(1)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(set.components[1].vector(0)) == doctest::Approx(1.0).epsilon(1e-12));

    // conjugated copy has the same spectrum and conjugated eigenvectors
    MatC u = random_unitary(4, 3);
    auto base = diag_density({0.4, 0.3, 0.2, 0.1});
    DensityOperator rot{(u * base.matrix() * u.adjoint()).eval()};
    auto rot_set = aep::spectral_projectors(rot);
    for (Eigen::Index i = 0; i < 4; ++i) {
        CHECK(rot_set.components[static_cast<std::size_t>(i)].eigenvalue ==
              doctest::Approx(base.matrix()(i, i).real()).epsilon(1e-10));
        // eigenvector defined up to phase; compare projectors
        VecC a = rot_set.components[static_cast<std::size_t>(i)].vector;
        VecC b = u.col(i);
        CHECK(kn::max_abs_diff(a * a.adjoint(), b * b.adjoint()) < 1e-9);
    }

    // two runs produce identical ordering even in the degenerate case
    auto half = diag_density({0.5, 0.5});
    auto s1 = aep::spectral_projectors(half);
    auto s2 = aep::spectral_projectors(half);
    REQUIRE(s1.components.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(s1.components[i].eigenvalue == s2.components[i].eigenvalue);
        CHECK((s1.components[i].vector - s2.components[i].vector).norm() == 0.0);
    }
    // completeness of the rank-one family
    MatC sum = MatC::Zero(2, 2);
    for (const auto& c : s1.components) sum += c.vector * c.vector.adjoint();
    CHECK(kn::max_abs_diff(sum, MatC::Identity(2, 2)) < 1e-9);
}

TEST_CASE("phase normalization fixes the leading component") {
    VecC v(3);
    v << Cplx(0.0, 0.0), Cplx(0.0, 0.6), Cplx(0.8, 0.0);
    VecC n = aep::phase_normalize(v);
    CHECK(n(1).real() == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(std::abs(n(1).imag()) < 1e-14);
    CHECK((n.adjoint() * n)(0).real() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("range projector keeps exactly the supported subspace") {
    // rank-2 PSD operator on dimension 4
    MatC u = random_unitary(4, 9);
    Eigen::VectorXd evals(4);
    evals << 2.0, 0.5, 0.0, 0.0;
    MatC psd = u * evals.asDiagonal().toDenseMatrix().cast<Cplx>() * u.adjoint();
    auto q = aep::range_basis(psd);
    CHECK(q.cols() == 2);
    CHECK(kn::max_abs_diff(q.adjoint() * q, MatC::Identity(2, 2)) < 1e-12);
    auto p = aep::range_projector(psd);
    CHECK(p.rank() == 2);
    // the projector fixes the range and kills the kernel
    CHECK(kn::max_abs_diff(p.matrix() * psd, psd) < 1e-9);

    CHECK_THROWS_AS(aep::range_basis(MatC::Zero(3, 3)), std::invalid_argument);
}

TEST_CASE("entropy matches closed forms and is additive over products") {
    CHECK(aep::von_neumann_entropy(diag_density({1.0, 0.0})) == doctest::Approx(0.0));
    CHECK(aep::von_neumann_entropy(diag_density({0.5, 0.5})) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    auto a = diag_density({0.9, 0.1});
    CHECK(aep::von_neumann_entropy(a) == doctest::Approx(0.3250829733914482).epsilon(1e-12));

    MatC u = random_unitary(2, 4);
    DensityOperator rot{(u * a.matrix() * u.adjoint()).eval()};
    CHECK(aep::von_neumann_entropy(rot) == doctest::Approx(0.3250829733914482).epsilon(1e-10));

    auto b = diag_density({0.3, 0.7});
    DensityOperator prod{kn::kron(a.matrix(), b.matrix())};
    CHECK(aep::von_neumann_entropy(prod) ==
          doctest::Approx(aep::von_neumann_entropy(a) + aep::von_neumann_entropy(b))
              .epsilon(1e-12));
}

TEST_CASE("expectations agree with the trace formula") {
    auto rho = diag_density({0.2, 0.8});
    MatC p0 = MatC::Zero(2, 2);
    p0(0, 0) = 1.0;
    CHECK(aep::expectation(rho, p0) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(aep::expectation(rho, MatC::Identity(2, 2)) == doctest::Approx(1.0).epsilon(1e-14));

    MatC u = random_unitary(4, 5);
    DensityOperator r2{(u * diag_density({0.4, 0.3, 0.2, 0.1}).matrix() * u.adjoint()).eval()};
    MatC op = (random_unitary(4, 6) + random_unitary(4, 6).adjoint()).eval();
    const Cplx tr = (r2.matrix() * op).trace();
    CHECK(aep::expectation(r2, op) == doctest::Approx(tr.real()).epsilon(1e-12));
}

TEST_CASE("site partial trace handles prefix and suffix runs only") {
    auto a = diag_density({0.9, 0.1});
    auto b = diag_density({0.3, 0.7});
    auto c = diag_density({0.5, 0.5});
    MatC abc = kn::kron(kn::kron(a.matrix(), b.matrix()), c.matrix());
    CHECK(kn::max_abs_diff(aep::partial_trace_keep(abc, 2, 3, 0, 2),
                           kn::kron(a.matrix(), b.matrix())) < 1e-12);
    CHECK(kn::max_abs_diff(aep::partial_trace_keep(abc, 2, 3, 1, 3),
                           kn::kron(b.matrix(), c.matrix())) < 1e-12);
    CHECK(kn::max_abs_diff(aep::partial_trace_keep(abc, 2, 3, 0, 3), abc) == 0.0);
    CHECK_THROWS_AS(aep::partial_trace_keep(abc, 2, 3, 1, 2), std::invalid_argument);
    CHECK_THROWS_AS(aep::partial_trace_keep(abc, 2, 3, 2, 1), std::invalid_argument);
}

TEST_CASE("operator json round trips exactly") {
    MatC m = random_unitary(3, 7);
    std::stringstream ss;
    aep::write_operator_json(ss, m);
    MatC back = aep::read_operator_json(ss);
    CHECK(kn::max_abs_diff(m, back) == 0.0);

    auto expect_corrupt = [](const std::string& text) {
        std::istringstream is(text);
        CHECK_THROWS_AS(aep::read_operator_json(is), aep::CorruptionError);
    };
    expect_corrupt("{");
    expect_corrupt("{\"dim\": 2}");
    expect_corrupt("{\"dim\": 2, \"entries\": [[1, 0]]}");
    expect_corrupt("{\"dim\": 1, \"entries\": [[1, 0, 0]]}");
}

TEST_CASE("dense dimension cap turns into a resource error") {
    CHECK_THROWS_AS(aep::check_dense_dim(aep::kDenseDimCap + 1, "test"), aep::ResourceLimitError);
    CHECK_NOTHROW(aep::check_dense_dim(aep::kDenseDimCap, "test"));
}
