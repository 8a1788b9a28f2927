#pragma once

#include "alotune/types.hpp"

namespace alotune {

enum class LossKind { Squared, Logistic };

// Value and first four derivatives of a per-observation loss in its linear
// predictor u = x^T beta. Four derivatives because the leave-one-out curvature
// needs two more than the fit itself.
struct LossDerivs {
  double value = 0;
  double d1 = 0;
  double d2 = 0;
  double d3 = 0;
  double d4 = 0;
};

// (y - u)^2.
LossDerivs squared_loss_derivs(double y, double u);

// log(1 + exp(-y u)) with y in {-1, +1}. Evaluated via softplus/log1p and a
// sign-split sigmoid so it stays finite for |u| up to ~700.
LossDerivs logistic_loss_derivs(double y, double u);

LossDerivs loss_derivs(LossKind kind, double y, double u);
double loss_value(LossKind kind, double y, double u);

}  // namespace alotune
