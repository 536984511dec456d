#include <cmath>
#include <complex>

#include "doctest.h"
#include "dfrc/conic/builder.hpp"
#include "dfrc/conic/problem.hpp"
#include "test_util.hpp"

using namespace dfrc;
using namespace dfrc::conic;

namespace {

// Unpack an svec-packed (column-major lower triangle, sqrt(2)-scaled
// off-diagonals) slack block into a dense symmetric matrix.
Mat unpack_svec(const Eigen::VectorXd& s, int offset, int side) {
  Mat y(side, side);
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  int idx = offset;
  for (int c = 0; c < side; ++c) {
    for (int r = c; r < side; ++r, ++idx) {
      const double v = r == c ? s[idx] : s[idx] * inv_rt2;
      y(r, c) = v;
      y(c, r) = v;
    }
  }
  return y;
}

// Re-checks a claimed optimal point directly against the problem data, at ten
// times the solver tolerance, without reusing any solver internals.
void check_solution_feasible(const ConicProblem& prob, const ConicSolution& sol,
                             double tol = 1e-6) {
  const double slack_tol = 10.0 * tol;
  const Eigen::VectorXd residual = prob.A * sol.x + sol.s - prob.b;
  const double scale = 1.0 + prob.b.norm();
  CHECK(residual.norm() <= slack_tol * scale);
  int offset = 0;
  for (const ConeSpec& cone : prob.cones) {
    switch (cone.kind) {
      case ConeKind::Zero:
        CHECK(sol.s.segment(offset, cone.dim).norm() <= slack_tol * scale);
        break;
      case ConeKind::NonNeg:
        CHECK(sol.s.segment(offset, cone.dim).minCoeff() >= -slack_tol * scale);
        break;
      case ConeKind::Soc: {
        const double head = sol.s[offset];
        const double tail = sol.s.segment(offset + 1, cone.dim - 1).norm();
        CHECK(head >= tail - slack_tol * scale);
        break;
      }
      case ConeKind::Psd: {
        const Mat y = unpack_svec(sol.s, offset, cone.side);
        Eigen::SelfAdjointEigenSolver<Mat> eig(y);
        CHECK(eig.eigenvalues().minCoeff() >= -slack_tol * (scale + y.norm()));
        break;
      }
    }
    offset += cone.dim;
  }
}

}  // namespace

TEST_CASE("linear program with a single bound") {
  ProblemBuilder b;
  const int x = b.add_scalar();
  b.add_nonneg(b.scalar(x) - ProblemBuilder::constant(1.0));
  b.minimize(x);
  const ConicProblem prob = b.build();
  const ConicSolution sol = solve(prob, testutil::fast_settings());
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(b.value(sol, x) == doctest::Approx(1.0).epsilon(1e-6));
  check_solution_feasible(prob, sol);
}

TEST_CASE("second-order cone bound on a constant vector") {
  ProblemBuilder b;
  const int t = b.add_scalar();
  b.add_soc(b.scalar(t),
            {ProblemBuilder::constant(3.0), ProblemBuilder::constant(4.0)});
  b.minimize(t);
  const ConicSolution sol = solve(b.build(), testutil::fast_settings());
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("second-order cone with free variables collapses to zero") {
  ProblemBuilder b;
  const int t = b.add_scalar();
  const int x = b.add_scalar();
  const int y = b.add_scalar();
  b.add_soc(b.scalar(t), {b.scalar(x) - ProblemBuilder::constant(3.0),
                          b.scalar(y) + ProblemBuilder::constant(4.0)});
  b.minimize(t);
  const ConicSolution sol = solve(b.build(), testutil::fast_settings());
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(b.value(sol, x) == doctest::Approx(3.0).epsilon(1e-5));
  CHECK(b.value(sol, y) == doctest::Approx(-4.0).epsilon(1e-5));
}

TEST_CASE("correlation bound: unit-diagonal PSD matrix maximizing an off-diagonal") {
  ProblemBuilder b;
  const HermVar x = b.add_hermitian(2);
  const int t = b.add_scalar();
  b.add_psd(b.matrix_expr(x));
  b.add_eq(b.diag_entry(x, 0) - ProblemBuilder::constant(1.0));
  b.add_eq(b.diag_entry(x, 1) - ProblemBuilder::constant(1.0));
  CVec e0 = CVec::Zero(2), e1 = CVec::Zero(2);
  e0(0) = 1.0;
  e1(1) = 1.0;
  b.add_eq(b.scalar(t) + b.sesq_form(x, e0, e1).real());  // t = -Re X01
  b.minimize(t);
  const ConicProblem prob = b.build();
  const ConicSolution sol = solve(prob, testutil::fast_settings());
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-1.0).epsilon(1e-6));
  check_solution_feasible(prob, sol);
}

TEST_CASE("nearest PSD matrix matches the eigenvalue-clamp solution") {
  // minimize ||X - B||_F over X >= 0 has the closed form of clamping the
  // negative eigenvalues of B at zero.
  const int n = 4;
  const CMat bmat = testutil::random_hermitian(n, 77);
  Eigen::SelfAdjointEigenSolver<CMat> eig(bmat);
  const Vec clamped = eig.eigenvalues().cwiseMax(0.0);
  const CMat oracle =
      eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().adjoint();
  const double oracle_dist = (oracle - bmat).norm();

  ProblemBuilder b;
  const HermVar x = b.add_hermitian(n);
  const int t = b.add_scalar();
  b.add_psd(b.matrix_expr(x));
  std::vector<LinExpr> residuals;
  const double rt2 = std::sqrt(2.0);
  for (int c = 0; c < n; ++c) {
    CVec ec = CVec::Zero(n);
    ec(c) = 1.0;
    residuals.push_back(b.diag_entry(x, c) -
                        ProblemBuilder::constant(bmat(c, c).real()));
    for (int r = c + 1; r < n; ++r) {
      CVec er = CVec::Zero(n);
      er(r) = 1.0;
      CxExpr entry = b.sesq_form(x, er, ec);  // X(r, c)
      LinExpr re = entry.real() - ProblemBuilder::constant(bmat(r, c).real());
      LinExpr im = entry.imag() - ProblemBuilder::constant(bmat(r, c).imag());
      re *= rt2;
      im *= rt2;
      residuals.push_back(std::move(re));
      residuals.push_back(std::move(im));
    }
  }
  b.add_soc(b.scalar(t), std::move(residuals));
  b.minimize(t);

  const ConicProblem prob = b.build();
  const ConicSolution sol = solve(prob, testutil::fast_settings());
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(oracle_dist).epsilon(1e-6));
  CHECK((b.value(sol, x) - oracle).norm() < 1e-5 * (1.0 + bmat.norm()));
  check_solution_feasible(prob, sol);

  // Scaling the data scales the solution: the problem is positively homogeneous.
  for (double c : {0.1, 10.0}) {
    ProblemBuilder bs;
    const HermVar xs = bs.add_hermitian(n);
    const int ts = bs.add_scalar();
    bs.add_psd(bs.matrix_expr(xs));
    std::vector<LinExpr> res2;
    for (int col = 0; col < n; ++col) {
      res2.push_back(bs.diag_entry(xs, col) -
                     ProblemBuilder::constant(c * bmat(col, col).real()));
      for (int row = col + 1; row < n; ++row) {
        CVec er = CVec::Zero(n), ecv = CVec::Zero(n);
        er(row) = 1.0;
        ecv(col) = 1.0;
        CxExpr entry = bs.sesq_form(xs, er, ecv);
        LinExpr re = entry.real() - ProblemBuilder::constant(c * bmat(row, col).real());
        LinExpr im = entry.imag() - ProblemBuilder::constant(c * bmat(row, col).imag());
        re *= rt2;
        im *= rt2;
        res2.push_back(std::move(re));
        res2.push_back(std::move(im));
      }
    }
    bs.add_soc(bs.scalar(ts), std::move(res2));
    bs.minimize(ts);
    const ConicSolution ssol = solve(bs.build(), testutil::fast_settings());
    REQUIRE(ssol.status == SolveStatus::Optimal);
    CHECK(ssol.objective == doctest::Approx(c * oracle_dist).epsilon(1e-5));
    // Near the clamped eigenvalues the matrix deviation grows like the square
    // root of the duality gap, so the entry-level check is looser.
    CHECK((bs.value(ssol, xs) - c * oracle).norm() < 2e-3 * (1.0 + c * bmat.norm()));
  }
}

TEST_CASE("contradictory linear constraints are reported infeasible") {
  ProblemBuilder b;
  const int x = b.add_scalar();
  b.add_nonneg(b.scalar(x) - ProblemBuilder::constant(1.0));   // x >= 1
  b.add_nonneg(ProblemBuilder::constant(0.0) - b.scalar(x));   // x <= 0
  b.minimize(x);
  const ConicSolution sol = solve(b.build(), testutil::fast_settings());
  CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("a cost unbounded below is reported unbounded") {
  ProblemBuilder b;
  const int x = b.add_scalar();
  b.add_nonneg(ProblemBuilder::constant(5.0) - b.scalar(x));  // x <= 5 only
  b.minimize(x);
  const ConicSolution sol = solve(b.build(), testutil::fast_settings());
  CHECK(sol.status == SolveStatus::Unbounded);
}

TEST_CASE("solves are bitwise deterministic") {
  ProblemBuilder b;
  const HermVar x = b.add_hermitian(3);
  const int t = b.add_scalar();
  b.add_psd(b.matrix_expr(x));
  for (int i = 0; i < 3; ++i)
    b.add_eq(b.diag_entry(x, i) - ProblemBuilder::constant(1.0));
  const CVec a = testutil::random_complex(3, 1, 4).col(0).normalized();
  b.add_eq(b.scalar(t) - b.quad_form(x, a));
  b.minimize(t);
  const ConicProblem prob = b.build();
  const ConicSolution s1 = solve(prob, testutil::fast_settings());
  const ConicSolution s2 = solve(prob, testutil::fast_settings());
  REQUIRE(s1.status == SolveStatus::Optimal);
  CHECK((s1.x - s2.x).norm() == 0.0);
  CHECK(s1.iterations == s2.iterations);
}

TEST_CASE("hermitian parametrization round-trips") {
  for (int dim : {1, 2, 5}) {
    const CMat a = testutil::random_hermitian(dim, 31 + dim);
    const Vec p = hermitian_to_param(a);
    CHECK(p.size() == dim * dim);
    CHECK((param_to_hermitian(p, dim) - a).norm() < 1e-14 * (1.0 + a.norm()));
  }
}

TEST_CASE("the real symmetric lift preserves definiteness") {
  for (unsigned seed = 0; seed < 1000; ++seed) {
    const CMat a = testutil::random_hermitian(3, seed);
    const Mat lifted = hermitian_lift(a);
    REQUIRE(lifted.rows() == 6);
    CHECK((lifted - lifted.transpose()).norm() < 1e-14 * (1.0 + a.norm()));
    Eigen::SelfAdjointEigenSolver<CMat> ec(a);
    Eigen::SelfAdjointEigenSolver<Mat> er(lifted);
    // The lift doubles the spectrum, so the extreme eigenvalues agree.
    CHECK(er.eigenvalues().minCoeff() ==
          doctest::Approx(ec.eigenvalues().minCoeff()).epsilon(1e-10));
    CHECK(er.eigenvalues().maxCoeff() ==
          doctest::Approx(ec.eigenvalues().maxCoeff()).epsilon(1e-10));
  }
}

TEST_CASE("builder expressions evaluate quadratic and sesquilinear forms correctly") {
  const int dim = 4;
  ProblemBuilder b;
  const HermVar x = b.add_hermitian(dim);
  const CMat xval = testutil::random_hermitian(dim, 91);
  const Vec p = hermitian_to_param(xval);

  auto eval_lin = [&](const LinExpr& e) {
    double acc = e.constant;
    for (const auto& [var, coeff] : e.terms) acc += coeff * p[var];
    return acc;
  };

  const CVec a = testutil::random_complex(dim, 1, 5).col(0);
  const CVec c = testutil::random_complex(dim, 1, 6).col(0);
  const cxd direct = (a.adjoint() * xval * c)(0, 0);
  const CxExpr form = b.sesq_form(x, a, c);
  CHECK(eval_lin(form.real()) == doctest::Approx(direct.real()).epsilon(1e-12));
  CHECK(eval_lin(form.imag()) == doctest::Approx(direct.imag()).epsilon(1e-12));
  CHECK(eval_lin(b.quad_form(x, a)) ==
        doctest::Approx((a.adjoint() * xval * a)(0, 0).real()).epsilon(1e-12));
  for (int i = 0; i < dim; ++i) {
    CHECK(eval_lin(b.diag_entry(x, i)) == doctest::Approx(xval(i, i).real()).epsilon(1e-12));
  }
}
