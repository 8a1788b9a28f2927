#include "alotune/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace alotune {

LossDerivs squared_loss_derivs(double y, double u) {
  LossDerivs d;
  const double r = y - u;
  d.value = r * r;
  d.d1 = -2.0 * r;
  d.d2 = 2.0;
  return d;
}

LossDerivs logistic_loss_derivs(double y, double u) {
  if (y != 1.0 && y != -1.0)
    throw std::invalid_argument("logistic loss labels must be -1 or +1");

  // p = sigmoid(u), q = 1 - p, each computed on its own stable branch so
  // neither underflows to an inexact 1 - p.
  double p, q;
  if (u >= 0) {
    const double e = std::exp(-u);
    p = 1.0 / (1.0 + e);
    q = e / (1.0 + e);
  } else {
    const double e = std::exp(u);
    p = e / (1.0 + e);
    q = 1.0 / (1.0 + e);
  }

  const double t = y * u;
  LossDerivs d;
  d.value = t >= 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
  d.d1 = (y > 0) ? -q : p;
  d.d2 = p * q;
  d.d3 = d.d2 * (q - p);
  d.d4 = d.d2 * (q * q + p * p) - 4.0 * d.d2 * d.d2;
  return d;
}

LossDerivs loss_derivs(LossKind kind, double y, double u) {
  return kind == LossKind::Squared ? squared_loss_derivs(y, u)
                                   : logistic_loss_derivs(y, u);
}

double loss_value(LossKind kind, double y, double u) {
  if (kind == LossKind::Squared) {
    const double r = y - u;
    return r * r;
  }
  if (y != 1.0 && y != -1.0)
    throw std::invalid_argument("logistic loss labels must be -1 or +1");
  const double t = y * u;
  return t >= 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

}  // namespace alotune
