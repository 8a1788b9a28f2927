#include "alotune/regularizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "alotune/errors.hpp"

namespace alotune {

namespace {

// Exponents of the smoothing basis t^2, t^4, t^5, t^6, t^7. No t^3: with the
// five-condition match this basis keeps p even-leading near 0 and the system
// nonsingular for every m >= 1.
constexpr int kExp[5] = {2, 4, 5, 6, 7};

struct Falling {
  double value = 1, d1 = 0, d2 = 0;
};

// m(m-1)...(m-k+1) together with its first two derivatives in m.
Falling falling(double m, int k) {
  Falling f;
  for (int i = 0; i < k; ++i) {
    const double g = m - i;
    f.d2 = f.d2 * g + 2.0 * f.d1;
    f.d1 = f.d1 * g + f.value;
    f.value *= g;
  }
  return f;
}

RegDerivs zero_derivs(Index q) {
  RegDerivs d;
  d.dlam_d1 = Vector::Zero(q);
  d.dlam_d2 = Vector::Zero(q);
  d.dlam_d3 = Vector::Zero(q);
  d.dlam2_d1 = Matrix::Zero(q, q);
  d.dlam2_d2 = Matrix::Zero(q, q);
  return d;
}

// Shared by ridge and group ridge: the penalty lam^2 beta^2 where lam is the
// s-th hyperparameter, all other slots zero.
RegDerivs quadratic_derivs(Index q, Index s, double lam, double beta) {
  RegDerivs d = zero_derivs(q);
  const double l2 = lam * lam;
  d.value = l2 * beta * beta;
  d.d1 = 2.0 * l2 * beta;
  d.d2 = 2.0 * l2;
  d.dlam_d1[s] = 4.0 * lam * beta;
  d.dlam_d2[s] = 4.0 * lam;
  d.dlam2_d1(s, s) = 4.0 * beta;
  d.dlam2_d2(s, s) = 4.0;
  return d;
}

// phi_k = k-th t-derivative of t^m (or of the window polynomial), with its
// lambda2-partials.
struct PhiDerivs {
  double phi = 0, dl2 = 0, ddl2 = 0;
};

PhiDerivs power_branch(double t, double lambda2, double m, int k) {
  const Falling c = falling(m, k);
  const double tk = std::pow(t, m - k);
  const double lt = std::log(t);
  const double dm = (c.d1 + c.value * lt) * tk;
  const double ddm = (c.d2 + 2.0 * c.d1 * lt + c.value * lt * lt) * tk;
  PhiDerivs out;
  out.phi = c.value * tk;
  out.dl2 = 2.0 * lambda2 * dm;                       // dm/dlambda2 = 2 lambda2
  out.ddl2 = 2.0 * dm + 4.0 * lambda2 * lambda2 * ddm;
  return out;
}

PhiDerivs window_branch(double t, const BridgeSmoothing& sm, int k) {
  PhiDerivs out;
  for (int j = 0; j < 5; ++j) {
    const double fall_ek = falling(static_cast<double>(kExp[j]), k).value;
    if (fall_ek == 0.0) continue;  // avoids 0 * t^negative at t = 0
    const double tk = std::pow(t, kExp[j] - k);
    out.phi += sm.coeffs[j] * fall_ek * tk;
    out.dl2 += sm.dcoeffs[j] * fall_ek * tk;
    out.ddl2 += sm.ddcoeffs[j] * fall_ek * tk;
  }
  return out;
}

RegDerivs bridge_derivs(const Vector& lambda, const BridgeSmoothing& sm, double beta) {
  const double l1 = lambda[0];
  const double l12 = l1 * l1;
  const double t = std::abs(beta);
  const double sign = beta < 0 ? -1.0 : 1.0;

  // phi[k] for k = 0..4, in the variable t; parity restores beta-derivatives.
  PhiDerivs phi[5];
  for (int k = 0; k < 5; ++k)
    phi[k] = t >= sm.delta ? power_branch(t, sm.lambda2, sm.m, k)
                           : window_branch(t, sm, k);

  RegDerivs d = zero_derivs(2);
  d.value = l12 * phi[0].phi;
  d.d1 = l12 * sign * phi[1].phi;
  d.d2 = l12 * phi[2].phi;
  d.d3 = l12 * sign * phi[3].phi;
  d.d4 = l12 * phi[4].phi;

  d.dlam_d1[0] = 2.0 * l1 * sign * phi[1].phi;
  d.dlam_d2[0] = 2.0 * l1 * phi[2].phi;
  d.dlam_d3[0] = 2.0 * l1 * sign * phi[3].phi;
  d.dlam_d1[1] = l12 * sign * phi[1].dl2;
  d.dlam_d2[1] = l12 * phi[2].dl2;
  d.dlam_d3[1] = l12 * sign * phi[3].dl2;

  d.dlam2_d1(0, 0) = 2.0 * sign * phi[1].phi;
  d.dlam2_d2(0, 0) = 2.0 * phi[2].phi;
  d.dlam2_d1(0, 1) = d.dlam2_d1(1, 0) = 2.0 * l1 * sign * phi[1].dl2;
  d.dlam2_d2(0, 1) = d.dlam2_d2(1, 0) = 2.0 * l1 * phi[2].dl2;
  d.dlam2_d1(1, 1) = l12 * sign * phi[1].ddl2;
  d.dlam2_d2(1, 1) = l12 * phi[2].ddl2;
  return d;
}

}  // namespace

BridgeSmoothing bridge_smoothing_coeffs(double lambda2, double delta) {
  if (!(delta > 0) || !std::isfinite(delta))
    throw std::invalid_argument("bridge smoothing: delta must be positive");
  if (!std::isfinite(lambda2))
    throw std::invalid_argument("bridge smoothing: lambda2 must be finite");

  BridgeSmoothing sm;
  sm.lambda2 = lambda2;
  sm.delta = delta;
  sm.m = 1.0 + lambda2 * lambda2;

  // Match value and four derivatives of t^m at t = delta. Solved in the
  // rescaled variable tau = t / delta, where the system matrix is a small
  // integer matrix (condition ~1e3) instead of powers of delta (~1e16 apart):
  // with a_j = delta^(m - e_j) g_j the conditions become
  //   sum_j fall(e_j, r) g_j = fall(m, r),  r = 0..4.
  Eigen::Matrix<double, 5, 5> M;
  for (int r = 0; r < 5; ++r)
    for (int j = 0; j < 5; ++j)
      M(r, j) = falling(static_cast<double>(kExp[j]), r).value;

  Eigen::Matrix<double, 5, 1> c, dc, ddc;
  for (int r = 0; r < 5; ++r) {
    const Falling f = falling(sm.m, r);
    c[r] = f.value;
    dc[r] = f.d1;   // d/dm
    ddc[r] = f.d2;  // d2/dm2
  }

  const Eigen::FullPivLU<Eigen::Matrix<double, 5, 5>> lu(M);
  if (!lu.isInvertible()) {
    const Eigen::JacobiSVD<Eigen::Matrix<double, 5, 5>> svd(M);
    throw NumericError("bridge smoothing system singular (condition estimate " +
                       std::to_string(svd.singularValues()(0) /
                                      svd.singularValues()(4)) + ")");
  }
  const Eigen::Matrix<double, 5, 1> g = lu.solve(c);
  const Eigen::Matrix<double, 5, 1> g_m = lu.solve(dc);    // dg/dm
  const Eigen::Matrix<double, 5, 1> g_mm = lu.solve(ddc);  // d2g/dm2

  const double ld = std::log(delta);
  for (int j = 0; j < 5; ++j) {
    const double scale = std::pow(delta, sm.m - kExp[j]);
    const double a = scale * g[j];
    // d/dm of delta^(m-e) g = delta^(m-e) (ln(delta) g + dg/dm), and so on.
    const double a_m = scale * (ld * g[j] + g_m[j]);
    const double a_mm = scale * (ld * ld * g[j] + 2.0 * ld * g_m[j] + g_mm[j]);
    sm.coeffs[j] = a;
    sm.dcoeffs[j] = 2.0 * lambda2 * a_m;
    sm.ddcoeffs[j] = 2.0 * a_m + 4.0 * lambda2 * lambda2 * a_mm;
  }
  return sm;
}

int Regularizer::hyper_count() const {
  switch (kind) {
    case RegKind::Ridge: return 1;
    case RegKind::GroupRidge: return groups;
    case RegKind::Bridge: return 2;
  }
  return 1;
}

void Regularizer::validate_for(Index p) const {
  if (kind == RegKind::GroupRidge) {
    if (groups < 1) throw DataError("group ridge: need at least one group");
    if (static_cast<Index>(group_of.size()) != p)
      throw DataError("group ridge: group map covers " +
                      std::to_string(group_of.size()) + " columns, design has " +
                      std::to_string(p));
    for (int g : group_of)
      if (g < 0 || g >= groups)
        throw DataError("group ridge: group index " + std::to_string(g) +
                        " outside [0, " + std::to_string(groups) + ")");
  }
}

BoundReg bind_regularizer(const Regularizer& reg, const Vector& lambda) {
  if (lambda.size() != reg.hyper_count())
    throw DataError("lambda has " + std::to_string(lambda.size()) +
                    " entries, regularizer expects " +
                    std::to_string(reg.hyper_count()));
  for (Index s = 0; s < lambda.size(); ++s)
    if (!std::isfinite(lambda[s]))
      throw DataError("lambda[" + std::to_string(s) + "] is not finite");
  BoundReg bound;
  bound.lambda = lambda;
  if (reg.kind == RegKind::Bridge)
    bound.smoothing = bridge_smoothing_coeffs(lambda[1], reg.bridge_delta);
  return bound;
}

RegDerivs reg_derivs(const Regularizer& reg, const BoundReg& bound, Index j,
                     double beta, bool is_intercept) {
  const Index q = bound.lambda.size();
  if (is_intercept) return zero_derivs(q);
  switch (reg.kind) {
    case RegKind::Ridge:
      return quadratic_derivs(1, 0, bound.lambda[0], beta);
    case RegKind::GroupRidge: {
      if (j < 0 || j >= static_cast<Index>(reg.group_of.size()))
        throw std::invalid_argument("group ridge: coordinate outside group map");
      const Index g = reg.group_of[static_cast<std::size_t>(j)];
      return quadratic_derivs(q, g, bound.lambda[g], beta);
    }
    case RegKind::Bridge:
      return bridge_derivs(bound.lambda, *bound.smoothing, beta);
  }
  return zero_derivs(q);
}

double reg_value(const Regularizer& reg, const BoundReg& bound, Index j,
                 double beta, bool is_intercept) {
  if (is_intercept) return 0.0;
  switch (reg.kind) {
    case RegKind::Ridge: {
      const double l = bound.lambda[0];
      return l * l * beta * beta;
    }
    case RegKind::GroupRidge: {
      if (j < 0 || j >= static_cast<Index>(reg.group_of.size()))
        throw std::invalid_argument("group ridge: coordinate outside group map");
      const double l = bound.lambda[reg.group_of[static_cast<std::size_t>(j)]];
      return l * l * beta * beta;
    }
    case RegKind::Bridge: {
      const BridgeSmoothing& sm = *bound.smoothing;
      const double l1 = bound.lambda[0];
      const double t = std::abs(beta);
      if (t >= sm.delta) return l1 * l1 * std::pow(t, sm.m);
      double p = 0;
      for (int j5 = 0; j5 < 5; ++j5)
        p += sm.coeffs[j5] * std::pow(t, kExp[j5]);
      return l1 * l1 * p;
    }
  }
  return 0.0;
}

}  // namespace alotune
