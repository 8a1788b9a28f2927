#include "alotune/closed_form.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

#include "alotune/alo.hpp"
#include "alotune/errors.hpp"

namespace alotune {

namespace {

void require_all_penalized(const Dataset& ds) {
  if (ds.intercept_index() >= 0)
    throw std::invalid_argument(
        "reference curves penalize every column; drop the intercept");
  if (ds.n() == 0 || ds.p() == 0) throw std::invalid_argument("empty dataset");
}

Vector column_dots(const Matrix& a, const Matrix& b) {
  return (a.array() * b.array()).colwise().sum().transpose();
}

}  // namespace

CurvePoint ridge_reference_eval(const Dataset& ds, double lam) {
  require_all_penalized(ds);
  const Matrix& x = ds.features;
  const Vector& y = ds.responses;
  const Index n = ds.n(), p = ds.p();

  Matrix e(p, p);
  e.noalias() = x.transpose() * x;
  e.diagonal().array() += lam * lam;
  const Eigen::LLT<Matrix> llt(e);
  if (llt.info() != Eigen::Success)
    throw NumericError("X^T X + lam^2 I is not positive definite");

  const Vector beta = llt.solve(x.transpose() * y);
  const Vector resid = y - x * beta;

  // v1_i = E^-1 x_i, v2_i = E^-2 x_i; classic leverage k_i = x_i^T E^-1 x_i.
  const Matrix v1 = llt.solve(x.transpose());
  const Matrix v2 = llt.solve(v1);
  const Vector k = column_dots(Matrix(x.transpose()), v1);
  const Vector m2 = column_dots(v1, v1);  // x^T E^-2 x
  const Vector m3 = column_dots(v1, v2);  // x^T E^-3 x

  const Vector b1 = llt.solve(beta);
  const Vector b2 = llt.solve(b1);
  const Vector xe1b = x * b1;  // x_i^T E^-1 beta
  const Vector xe2b = x * b2;  // x_i^T E^-2 beta

  const double l2 = lam * lam;
  CurvePoint out;
  for (Index i = 0; i < n; ++i) {
    const double omk = 1.0 - k[i];
    if (omk <= 1e-12)
      throw NumericError("leave-one-out pole at row " + std::to_string(i) +
                         ": 1 - k = " + std::to_string(omk));
    const double g = resid[i] / omk;

    const double dy = -2.0 * lam * xe1b[i];          // d yhat_i / d lam
    const double dk = -2.0 * lam * m2[i];            // d k_i / d lam
    const double ddy = 8.0 * l2 * xe2b[i] - 2.0 * xe1b[i];
    const double ddk = 8.0 * l2 * m3[i] - 2.0 * m2[i];

    // g = resid / (1 - k); numerator of g' is N = -dy (1-k) + resid dk.
    const double num = -dy * omk + resid[i] * dk;
    const double dg = num / (omk * omk);
    const double dnum = -ddy * omk + resid[i] * ddk;  // cross terms cancel
    const double ddg = dnum / (omk * omk) + 2.0 * num * dk / (omk * omk * omk);

    out.value += g * g;
    out.d1 += 2.0 * g * dg;
    out.d2 += 2.0 * (dg * dg + g * ddg);
  }
  out.value /= static_cast<double>(n);
  out.d1 /= static_cast<double>(n);
  out.d2 /= static_cast<double>(n);
  return out;
}

CurvePoint logistic_ridge_reference_eval(const Dataset& ds, double lam,
                                         const FitOptions& opts) {
  require_all_penalized(ds);
  const Matrix& x = ds.features;
  const Index n = ds.n(), p = ds.p();

  Regularizer reg;
  reg.kind = RegKind::Ridge;
  Vector lam_vec(1);
  lam_vec[0] = lam;
  const BoundReg bound = bind_regularizer(reg, lam_vec);
  const FitState st = fit(ds, LossKind::Logistic, reg, bound, {}, opts);
  if (!st.converged)
    throw NumericError("reference curve: inner fit did not converge");
  const Vector& beta = st.beta;

  Matrix hmat(p, p);
  hmat.noalias() = x.transpose() * st.a_diag.asDiagonal() * x;
  hmat.diagonal().array() += 2.0 * lam * lam;
  const Eigen::LLT<Matrix> llt(hmat);
  if (llt.info() != Eigen::Success)
    throw NumericError("X^T A X + 2 lam^2 I is not positive definite");

  const Matrix v1 = llt.solve(x.transpose());
  const Vector h = column_dots(Matrix(x.transpose()), v1);

  Vector l3(n), l4(n);
  for (Index i = 0; i < n; ++i) {
    const LossDerivs ld = loss_derivs(LossKind::Logistic, ds.responses[i], st.u[i]);
    l3[i] = ld.d3;
    l4[i] = ld.d4;
  }

  const Vector hinv_beta = llt.solve(beta);
  const Vector dbeta = -4.0 * lam * hinv_beta;
  const Vector du = x * dbeta;

  Matrix dh_mat(p, p);
  dh_mat.noalias() = x.transpose() * Vector(l3.cwiseProduct(du)).asDiagonal() * x;
  dh_mat.diagonal().array() += 4.0 * lam;
  const Matrix w1 = dh_mat * v1;
  const Vector dh = -column_dots(v1, w1);

  Vector rhs(p);
  rhs.noalias() = x.transpose() * Vector(l3.cwiseProduct(du.cwiseProduct(du)));
  rhs += 8.0 * lam * dbeta;
  rhs += 4.0 * beta;
  const Vector d2beta = -llt.solve(rhs);
  const Vector d2u = x * d2beta;

  Matrix d2h_mat(p, p);
  d2h_mat.noalias() =
      x.transpose() *
      Vector(l3.cwiseProduct(d2u) + l4.cwiseProduct(du.cwiseProduct(du))).asDiagonal() * x;
  d2h_mat.diagonal().array() += 4.0;
  const Vector d2h =
      2.0 * column_dots(w1, llt.solve(w1)) - column_dots(v1, d2h_mat * v1);

  CurvePoint out;
  for (Index i = 0; i < n; ++i) {
    const LossDerivs ld = loss_derivs(LossKind::Logistic, ds.responses[i], st.u[i]);
    const UtildeDerivs ud = utilde_derivs(ld, st.u[i], h[i]);
    const double dut = ud.du * du[i] + ud.dh * dh[i];
    const double d2ut = ud.du * d2u[i] + ud.duu * du[i] * du[i] +
                        2.0 * ud.duh * du[i] * dh[i] + ud.dh * d2h[i] +
                        ud.dhh * dh[i] * dh[i];
    const LossDerivs lt = loss_derivs(LossKind::Logistic, ds.responses[i], ud.utilde);
    out.value += lt.value;
    out.d1 += lt.d1 * dut;
    out.d2 += lt.d2 * dut * dut + lt.d1 * d2ut;
  }
  out.value /= static_cast<double>(n);
  out.d1 /= static_cast<double>(n);
  out.d2 /= static_cast<double>(n);
  return out;
}

}  // namespace alotune
