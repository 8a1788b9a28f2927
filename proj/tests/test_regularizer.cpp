#include <cmath>
#include <stdexcept>

#include "doctest.h"

#include "alotune/errors.hpp"
#include "alotune/regularizer.hpp"

using namespace alotune;

namespace {

RegDerivs eval_at(const Regularizer& reg, const Vector& lambda, double beta) {
  return reg_derivs(reg, bind_regularizer(reg, lambda), 0, beta, false);
}

// Central difference in lambda[s] of a field extracted by get.
template <typename Get>
double lam_cdiff(const Regularizer& reg, Vector lambda, double beta, Index s,
                 Get get, double h = 1e-5) {
  Vector up = lambda, dn = lambda;
  up[s] += h;
  dn[s] -= h;
  return (get(eval_at(reg, up, beta)) - get(eval_at(reg, dn, beta))) / (2.0 * h);
}

// Central difference in beta of a field extracted by get.
template <typename Get>
double beta_cdiff(const Regularizer& reg, const Vector& lambda, double beta,
                  Get get, double h = 1e-6) {
  return (get(eval_at(reg, lambda, beta + h)) -
          get(eval_at(reg, lambda, beta - h))) /
         (2.0 * h);
}

}  // namespace

TEST_SUITE("regularizer") {

TEST_CASE("ridge closed forms") {
  Regularizer reg;
  Vector lam(1);
  lam[0] = 1.5;
  const double beta = -0.8;
  const RegDerivs d = eval_at(reg, lam, beta);
  CHECK(d.value == doctest::Approx(2.25 * 0.64));
  CHECK(d.d1 == doctest::Approx(2.0 * 2.25 * beta));
  CHECK(d.d2 == doctest::Approx(4.5));
  CHECK(d.d3 == 0.0);
  CHECK(d.d4 == 0.0);
  CHECK(d.dlam_d1[0] == doctest::Approx(4.0 * 1.5 * beta));
  CHECK(d.dlam_d2[0] == doctest::Approx(6.0));
  CHECK(d.dlam_d3[0] == 0.0);
  CHECK(d.dlam2_d1(0, 0) == doctest::Approx(4.0 * beta));
  CHECK(d.dlam2_d2(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("group ridge touches only its own slot") {
  Regularizer reg;
  reg.kind = RegKind::GroupRidge;
  reg.group_of = {0, 1, 1};
  reg.groups = 2;
  Vector lam(2);
  lam << 2.0, 0.5;
  const BoundReg bound = bind_regularizer(reg, lam);

  const RegDerivs d = reg_derivs(reg, bound, 2, 0.3, false);  // group 1
  CHECK(d.value == doctest::Approx(0.25 * 0.09));
  CHECK(d.d2 == doctest::Approx(0.5));
  CHECK(d.dlam_d1[0] == 0.0);
  CHECK(d.dlam_d1[1] == doctest::Approx(4.0 * 0.5 * 0.3));
  CHECK(d.dlam2_d2(1, 1) == doctest::Approx(4.0));
  CHECK(d.dlam2_d2(0, 0) == 0.0);
  CHECK(d.dlam2_d2(0, 1) == 0.0);

  const RegDerivs d0 = reg_derivs(reg, bound, 0, 0.3, false);  // group 0
  CHECK(d0.dlam_d1[0] == doctest::Approx(4.0 * 2.0 * 0.3));
  CHECK(d0.dlam_d1[1] == 0.0);
}

TEST_CASE("intercept coordinates are exempt") {
  Regularizer reg;
  Vector lam(1);
  lam[0] = 3.0;
  const BoundReg bound = bind_regularizer(reg, lam);
  const RegDerivs d = reg_derivs(reg, bound, 0, 5.0, true);
  CHECK(d.value == 0.0);
  CHECK(d.d1 == 0.0);
  CHECK(d.d2 == 0.0);
  CHECK(d.dlam_d1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.dlam2_d2.cwiseAbs().maxCoeff() == 0.0);
  CHECK(reg_value(reg, bound, 0, 5.0, true) == 0.0);
}

TEST_CASE("lambda shape and content validation") {
  Regularizer reg;
  CHECK_THROWS_AS(bind_regularizer(reg, Vector::Ones(2)), DataError);
  Vector nan_lam(1);
  nan_lam[0] = std::nan("");
  CHECK_THROWS_AS(bind_regularizer(reg, nan_lam), DataError);

  Regularizer grp;
  grp.kind = RegKind::GroupRidge;
  grp.group_of = {0, 2};
  grp.groups = 2;
  CHECK_THROWS_AS(grp.validate_for(2), DataError);  // id 2 out of range
  grp.group_of = {0, 1};
  CHECK_THROWS_AS(grp.validate_for(3), DataError);  // wrong length
  CHECK_NOTHROW(grp.validate_for(2));
}

TEST_CASE("bridge smoothing reduces to the plain quadratic at exponent two") {
  // lambda2 = 1 means |beta|^2 everywhere; the window polynomial must be
  // exactly t^2.
  const BridgeSmoothing sm = bridge_smoothing_coeffs(1.0, 0.01);
  CHECK(sm.m == doctest::Approx(2.0));
  CHECK(std::abs(sm.coeffs[0] - 1.0) < 1e-12);
  for (int j = 1; j < 5; ++j) CHECK(std::abs(sm.coeffs[j]) < 1e-12);
}

TEST_CASE("window meets the power curve to fourth order at the seam") {
  Regularizer reg = []{
    Regularizer r;
    r.kind = RegKind::Bridge;
    r.bridge_delta = 0.01;
    return r;
  }();
  for (const double lambda2 : {0.0, 0.5, 0.75, 1.0, 1.5}) {
    CAPTURE(lambda2);
    Vector lam(2);
    lam << 1.0, lambda2;
    const BoundReg bound = bind_regularizer(reg, lam);
    const double delta = 0.01;
    // Just inside vs just outside: the two branches evaluated at the same
    // point (the branch predicate is >= delta, so nudge by one ulp down for
    // the window side).
    const double inside = std::nextafter(delta, 0.0);
    const RegDerivs lo = reg_derivs(reg, bound, 0, inside, false);
    const RegDerivs hi = reg_derivs(reg, bound, 0, delta, false);
    const double m = 1.0 + lambda2 * lambda2;
    // The k-th derivative is assembled from terms of size delta^(m-k); an
    // exact cancellation (e.g. d4 at m = 1) still leaves rounding on that
    // scale, so tolerances must follow it.
    const auto close = [&](double a, double b, int k, double tol) {
      const double mag = std::max(1.0, std::pow(delta, m - k));
      CHECK(std::abs(a - b) <= tol * (mag + std::max(std::abs(a), std::abs(b))));
    };
    close(lo.value, hi.value, 0, 1e-10);
    close(lo.d1, hi.d1, 1, 1e-10);
    close(lo.d2, hi.d2, 2, 1e-10);
    close(lo.d3, hi.d3, 3, 1e-10);
    close(lo.d4, hi.d4, 4, 1e-10);
  }
}

TEST_CASE("bridge matches the pure power away from the window") {
  Regularizer reg;
  reg.kind = RegKind::Bridge;
  Vector lam(2);
  lam << 1.3, 0.8;
  const double m = 1.0 + 0.64;
  const RegDerivs d = eval_at(reg, lam, 0.6);
  CHECK(d.value == doctest::Approx(1.69 * std::pow(0.6, m)).epsilon(1e-13));
  CHECK(d.d1 ==
        doctest::Approx(1.69 * m * std::pow(0.6, m - 1)).epsilon(1e-13));
  CHECK(d.d2 == doctest::Approx(1.69 * m * (m - 1) * std::pow(0.6, m - 2))
                    .epsilon(1e-13));
}

TEST_CASE("bridge is even in beta with odd derivatives flipping sign") {
  Regularizer reg;
  reg.kind = RegKind::Bridge;
  Vector lam(2);
  lam << 0.9, 0.6;
  for (const double beta : {0.004, 0.3}) {
    const RegDerivs pos = eval_at(reg, lam, beta);
    const RegDerivs neg = eval_at(reg, lam, -beta);
    CHECK(pos.value == doctest::Approx(neg.value));
    CHECK(pos.d1 == doctest::Approx(-neg.d1));
    CHECK(pos.d2 == doctest::Approx(neg.d2));
    CHECK(pos.d3 == doctest::Approx(-neg.d3));
    CHECK(pos.d4 == doctest::Approx(neg.d4));
    CHECK(pos.dlam_d1[0] == doctest::Approx(-neg.dlam_d1[0]));
    CHECK(pos.dlam_d2[1] == doctest::Approx(neg.dlam_d2[1]));
  }
}

TEST_CASE("bridge beta-derivatives chain correctly") {
  Regularizer reg;
  reg.kind = RegKind::Bridge;
  Vector lam(2);
  lam << 1.1, 0.7;
  for (const double beta : {0.002, -0.006, 0.05, -0.9}) {
    CAPTURE(beta);
    const RegDerivs d = eval_at(reg, lam, beta);
    CHECK(beta_cdiff(reg, lam, beta, [](const RegDerivs& r) { return r.value; }) ==
          doctest::Approx(d.d1).epsilon(1e-7));
    CHECK(beta_cdiff(reg, lam, beta, [](const RegDerivs& r) { return r.d1; }) ==
          doctest::Approx(d.d2).epsilon(1e-7));
    CHECK(beta_cdiff(reg, lam, beta, [](const RegDerivs& r) { return r.d2; }) ==
          doctest::Approx(d.d3).epsilon(1e-6).scale(1.0));
    CHECK(beta_cdiff(reg, lam, beta, [](const RegDerivs& r) { return r.d3; }) ==
          doctest::Approx(d.d4).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("bridge lambda-partials match finite differences") {
  Regularizer reg;
  reg.kind = RegKind::Bridge;
  Vector lam(2);
  lam << 1.2, 0.65;
  // One point inside the window, one outside.
  for (const double beta : {0.006, -0.45}) {
    CAPTURE(beta);
    const RegDerivs d = eval_at(reg, lam, beta);
    for (Index s = 0; s < 2; ++s) {
      CAPTURE(s);
      const double fd_d1 = lam_cdiff(reg, lam, beta, s,
                                     [](const RegDerivs& r) { return r.d1; });
      const double fd_d2 = lam_cdiff(reg, lam, beta, s,
                                     [](const RegDerivs& r) { return r.d2; });
      const double fd_d3 = lam_cdiff(reg, lam, beta, s,
                                     [](const RegDerivs& r) { return r.d3; });
      CHECK(d.dlam_d1[s] == doctest::Approx(fd_d1).epsilon(1e-7).scale(1.0));
      CHECK(d.dlam_d2[s] == doctest::Approx(fd_d2).epsilon(1e-7).scale(1.0));
      CHECK(d.dlam_d3[s] == doctest::Approx(fd_d3).epsilon(1e-6).scale(1.0));
    }
    // Second lambda-partials via differences of the first ones.
    for (Index s = 0; s < 2; ++s)
      for (Index t = 0; t < 2; ++t) {
        CAPTURE(s);
        CAPTURE(t);
        const double fd2_d1 = lam_cdiff(
            reg, lam, beta, t,
            [s](const RegDerivs& r) { return r.dlam_d1[s]; });
        const double fd2_d2 = lam_cdiff(
            reg, lam, beta, t,
            [s](const RegDerivs& r) { return r.dlam_d2[s]; });
        CHECK(d.dlam2_d1(s, t) ==
              doctest::Approx(fd2_d1).epsilon(1e-6).scale(1.0));
        CHECK(d.dlam2_d2(s, t) ==
              doctest::Approx(fd2_d2).epsilon(1e-6).scale(1.0));
      }
  }
}

TEST_CASE("ridge and group lambda-partials match finite differences") {
  Regularizer grp;
  grp.kind = RegKind::GroupRidge;
  grp.group_of = {0};
  grp.groups = 3;
  Vector lam(3);
  lam << 0.7, 1.4, 2.2;
  const double beta = 0.33;
  const RegDerivs d = eval_at(grp, lam, beta);
  for (Index s = 0; s < 3; ++s) {
    const double fd = lam_cdiff(grp, lam, beta, s,
                                [](const RegDerivs& r) { return r.d1; });
    CHECK(d.dlam_d1[s] == doctest::Approx(fd).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("smoothing coefficient lambda2-derivatives match finite differences") {
  const double delta = 0.01;
  for (const double lambda2 : {0.3, 0.8, 1.0, 1.4}) {
    CAPTURE(lambda2);
    const BridgeSmoothing sm = bridge_smoothing_coeffs(lambda2, delta);
    const double h = 1e-5;
    const BridgeSmoothing up = bridge_smoothing_coeffs(lambda2 + h, delta);
    const BridgeSmoothing dn = bridge_smoothing_coeffs(lambda2 - h, delta);
    for (int j = 0; j < 5; ++j) {
      CAPTURE(j);
      const double fd1 = (up.coeffs[j] - dn.coeffs[j]) / (2.0 * h);
      const double fd2 = (up.dcoeffs[j] - dn.dcoeffs[j]) / (2.0 * h);
      const double scale1 = std::max(1.0, std::abs(sm.dcoeffs[j]));
      const double scale2 = std::max(1.0, std::abs(sm.ddcoeffs[j]));
      CHECK(std::abs(sm.dcoeffs[j] - fd1) / scale1 < 1e-6);
      CHECK(std::abs(sm.ddcoeffs[j] - fd2) / scale2 < 1e-6);
    }
  }
}

TEST_CASE("reg_value agrees with the derivative bundle") {
  Regularizer reg;
  reg.kind = RegKind::Bridge;
  Vector lam(2);
  lam << 1.05, 0.55;
  const BoundReg bound = bind_regularizer(reg, lam);
  for (const double beta : {0.0, 0.003, -0.02, 0.7}) {
    CHECK(reg_value(reg, bound, 0, beta, false) ==
          doctest::Approx(reg_derivs(reg, bound, 0, beta, false).value)
              .epsilon(1e-14));
  }
}

TEST_CASE("smoothing input validation") {
  CHECK_THROWS_AS(bridge_smoothing_coeffs(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bridge_smoothing_coeffs(0.5, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(bridge_smoothing_coeffs(std::nan(""), 0.01),
                  std::invalid_argument);
}

}  // TEST_SUITE
