#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "doctest.h"

#include "alotune/errors.hpp"
#include "alotune/fit.hpp"
#include "support/test_support.hpp"

using namespace alotune;
using testsup::TestRng;

namespace {

Vector lam1(double v) {
  Vector l(1);
  l[0] = v;
  return l;
}

// Reference solve of H x = b with H formed densely, rank-revealing.
Matrix dense_href_solve(const Matrix& x, const Vector& a, const Vector& w,
                        const Matrix& b) {
  const Matrix h =
      x.transpose() * a.asDiagonal() * x + Matrix(w.asDiagonal());
  return h.fullPivLu().solve(b);
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("ridge fit matches the normal equations") {
  TestRng rng(101);
  for (int rep = 0; rep < 5; ++rep) {
    const Index n = 20, p = 4;
    Dataset ds = testsup::random_regression(rng, n, p);
    const double lam = rng.log_uniform(0.05, 5.0);
    const Regularizer reg = testsup::ridge_reg();
    const BoundReg bound = bind_regularizer(reg, lam1(lam));
    const FitState st = fit(ds, LossKind::Squared, reg, bound);
    REQUIRE(st.converged);

    // 2 X^T(X b - y) + 2 lam^2 b = 0
    const Matrix& x = ds.features;
    const Matrix e = x.transpose() * x +
                     lam * lam * Matrix::Identity(p, p);
    const Vector ref = e.ldlt().solve(x.transpose() * ds.responses);
    CHECK((st.beta - ref).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((st.u - x * ref).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((st.a_diag.array() - 2.0).abs().maxCoeff() == 0.0);
    CHECK((st.w_diag.array() - 2.0 * lam * lam).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("logistic fit reaches stationarity and decreases the objective") {
  TestRng rng(102);
  Dataset ds = testsup::random_classification(rng, 60, 6);
  const Regularizer reg = testsup::ridge_reg();
  const BoundReg bound = bind_regularizer(reg, lam1(0.4));
  const FitState st = fit(ds, LossKind::Logistic, reg, bound);
  REQUIRE(st.converged);
  CHECK(st.grad_norm <= 1e-8);
  CHECK(inner_objective(ds, LossKind::Logistic, reg, bound, st.beta) <
        inner_objective(ds, LossKind::Logistic, reg, bound,
                        Vector::Zero(ds.p())));
  // State invariants.
  CHECK((st.u - ds.features * st.beta).cwiseAbs().maxCoeff() < 1e-12);
  for (Index i = 0; i < ds.n(); ++i) {
    CHECK(st.a_diag[i] > 0.0);
    CHECK(st.h[i] > 0.0);
  }
}

TEST_CASE("solver paths agree on a tall problem") {
  TestRng rng(103);
  Dataset ds = testsup::random_classification(rng, 40, 5);
  const Regularizer reg = testsup::ridge_reg();
  const BoundReg bound = bind_regularizer(reg, lam1(0.7));
  FitOptions tall;
  tall.path = SolvePath::NOverP;
  FitOptions wide;
  wide.path = SolvePath::POverN;
  const FitState a = fit(ds, LossKind::Logistic, reg, bound, {}, tall);
  const FitState b = fit(ds, LossKind::Logistic, reg, bound, {}, wide);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(a.factorization.path() == SolvePath::NOverP);
  CHECK(b.factorization.path() == SolvePath::POverN);
  CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((a.h - b.h).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("auto path picks by shape") {
  TestRng rng(104);
  Dataset tall = testsup::random_regression(rng, 12, 4);
  Dataset wide = testsup::random_classification(rng, 8, 14);
  const Regularizer reg = testsup::ridge_reg();
  const BoundReg bound = bind_regularizer(reg, lam1(1.0));
  CHECK(fit(tall, LossKind::Squared, reg, bound).factorization.path() ==
        SolvePath::NOverP);
  CHECK(fit(wide, LossKind::Logistic, reg, bound).factorization.path() ==
        SolvePath::POverN);
}

TEST_CASE("wide-path solves match a dense rank-revealing reference") {
  TestRng rng(105);
  const Index n = 7, p = 12;
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) x(i, j) = rng.normal();
  Vector a(n), w(p);
  for (Index i = 0; i < n; ++i) a[i] = 0.05 + rng.uniform();
  for (Index j = 0; j < p; ++j) w[j] = 0.2 + rng.uniform();

  SUBCASE("all coordinates penalized") {}
  SUBCASE("two unpenalized coordinates") {
    w[0] = 0.0;
    w[7] = 0.0;
  }

  const HFactorization fac =
      assemble_factorization(x, a, w, SolvePath::POverN);
  Matrix rhs(p, 3);
  for (Index j = 0; j < p; ++j)
    for (Index k = 0; k < 3; ++k) rhs(j, k) = rng.normal();
  const Matrix got = fac.solve(rhs);
  const Matrix ref = dense_href_solve(x, a, w, rhs);
  CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-9);

  const Vector gotv = fac.solve(Vector(rhs.col(0)));
  CHECK((gotv - ref.col(0)).cwiseAbs().maxCoeff() < 1e-9);

  // Leverage against the explicit inverse.
  const Vector h = leverage_vector(fac, x);
  const Matrix hinv = dense_href_solve(x, a, w, Matrix::Identity(p, p));
  for (Index i = 0; i < n; ++i)
    CHECK(h[i] ==
          doctest::Approx(x.row(i) * hinv * x.row(i).transpose()).epsilon(1e-9));
}

TEST_CASE("dense-path leverage and half solve") {
  TestRng rng(106);
  const Index n = 15, p = 6;
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) x(i, j) = rng.normal();
  Vector a = Vector::Constant(n, 2.0), w = Vector::Constant(p, 0.5);
  const HFactorization fac =
      assemble_factorization(x, a, w, SolvePath::NOverP);
  const Matrix hinv = dense_href_solve(x, a, w, Matrix::Identity(p, p));
  const Vector h = leverage_vector(fac, x);
  for (Index i = 0; i < n; ++i)
    CHECK(h[i] ==
          doctest::Approx(x.row(i) * hinv * x.row(i).transpose()).epsilon(1e-10));

  // half_solve: |L^-1 v|^2 = v^T H^-1 v.
  const Matrix half = fac.half_solve(x.transpose());
  for (Index i = 0; i < n; ++i)
    CHECK(half.col(i).squaredNorm() == doctest::Approx(h[i]).epsilon(1e-10));
}

TEST_CASE("factorization failure modes") {
  Matrix x(2, 3);
  x << 1, 0, 2, 0, 1, 1;
  const Vector ones2 = Vector::Ones(2);

  // POverN needs positive loss curvature.
  Vector a_bad(2);
  a_bad << 1.0, 0.0;
  CHECK_THROWS_AS(assemble_factorization(x, a_bad, Vector::Ones(3),
                                         SolvePath::POverN),
                  NumericError);
  // Empty penalized block.
  CHECK_THROWS_AS(assemble_factorization(x, ones2, Vector::Zero(3),
                                         SolvePath::POverN),
                  NumericError);
  // More unpenalized coordinates than rows.
  Vector w_many = Vector::Zero(3);
  w_many[0] = 1.0;
  CHECK_THROWS_AS(assemble_factorization(x, ones2, w_many, SolvePath::POverN),
                  NumericError);
  // Dense path, singular H (zero column, zero penalty).
  Matrix xz(3, 2);
  xz << 1, 0, 2, 0, -1, 0;
  CHECK_THROWS_AS(assemble_factorization(xz, Vector::Ones(3), Vector::Zero(2),
                                         SolvePath::NOverP),
                  NumericError);
  // half_solve is a dense-only operation.
  Matrix xw(2, 4);
  xw << 1, 0, 1, -1, 0, 1, 2, 1;
  const HFactorization dual = assemble_factorization(
      xw, ones2, Vector::Ones(4), SolvePath::POverN);
  CHECK_THROWS_AS(dual.half_solve(Matrix::Identity(4, 4)), std::logic_error);
  const Vector probe = Vector::Ones(2);
  CHECK_THROWS_AS(HFactorization().solve(probe), std::logic_error);
}

TEST_CASE("warm start shortens the solve") {
  TestRng rng(107);
  Dataset ds = testsup::random_classification(rng, 80, 8);
  const Regularizer reg = testsup::ridge_reg();
  const BoundReg bound = bind_regularizer(reg, lam1(0.5));
  const FitState cold = fit(ds, LossKind::Logistic, reg, bound);
  REQUIRE(cold.converged);
  const FitState warm = fit(ds, LossKind::Logistic, reg, bound, cold.beta);
  REQUIRE(warm.converged);
  CHECK(warm.iterations <= 1);
  CHECK((warm.beta - cold.beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("iteration cap returns a non-converged state instead of throwing") {
  TestRng rng(108);
  Dataset ds = testsup::random_classification(rng, 50, 10, 4.0);
  const Regularizer reg = testsup::ridge_reg();
  const BoundReg bound = bind_regularizer(reg, lam1(0.05));
  FitOptions opts;
  opts.max_iter = 1;
  const FitState st = fit(ds, LossKind::Logistic, reg, bound, {}, opts);
  CHECK_FALSE(st.converged);
  CHECK(st.iterations == 1);
  CHECK(st.grad_norm > 0.0);
  CHECK(st.factorization.valid());  // state is still fully populated
  CHECK(st.h.size() == ds.n());
}

TEST_CASE("input validation") {
  const Regularizer reg = testsup::ridge_reg();
  const BoundReg bound = bind_regularizer(reg, lam1(1.0));

  Dataset empty = testsup::make_dataset(Matrix(0, 2), Vector(0));
  CHECK_THROWS_AS(fit(empty, LossKind::Squared, reg, bound), DataError);

  Matrix x(3, 2);
  x << 1, 0, 0, 1, 1, 1;
  Vector ybad(3);
  ybad << 1, 0, -1;  // 0 is not a valid label
  Dataset cls = testsup::make_dataset(x, ybad, Task::Classification);
  CHECK_THROWS_AS(fit(cls, LossKind::Logistic, reg, bound), DataError);

  Vector y(3);
  y << 0.5, -1.0, 2.0;
  Dataset ok = testsup::make_dataset(x, y);
  CHECK_THROWS_AS(fit(ok, LossKind::Squared, reg, bound, Vector::Ones(5)),
                  DataError);
}

TEST_CASE("bridge fit stays stable through the smoothing window") {
  TestRng rng(109);
  Dataset ds = testsup::random_regression(rng, 30, 5);
  const Regularizer reg = testsup::bridge_reg();
  Vector lam(2);
  lam << 1.0, 0.8;
  const BoundReg bound = bind_regularizer(reg, lam);
  const FitState st = fit(ds, LossKind::Squared, reg, bound);
  REQUIRE(st.converged);
  // Stationarity of the actual objective, checked by central differences.
  const double f0 = inner_objective(ds, LossKind::Squared, reg, bound, st.beta);
  for (Index j = 0; j < ds.p(); ++j) {
    Vector bp = st.beta, bm = st.beta;
    bp[j] += 1e-6;
    bm[j] -= 1e-6;
    const double g =
        (inner_objective(ds, LossKind::Squared, reg, bound, bp) -
         inner_objective(ds, LossKind::Squared, reg, bound, bm)) /
        2e-6;
    CHECK(std::abs(g) < 1e-4 * std::max(1.0, std::abs(f0)));
  }
}

}  // TEST_SUITE
