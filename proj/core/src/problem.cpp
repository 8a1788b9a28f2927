#include "alotune/problem.hpp"

#include <stdexcept>

#include "alotune/errors.hpp"

namespace alotune {

AloProblem::AloProblem(Dataset ds, ModelSpec model, FitOptions fit_opts)
    : ds_(std::move(ds)), model_(std::move(model)), fit_opts_(fit_opts) {
  model_.reg.validate_for(ds_.p());
}

const FitState& AloProblem::last_fit() const {
  if (!state_) throw std::logic_error("no fit has been evaluated yet");
  return *state_;
}

const FitState& AloProblem::fit_at(const BoundReg& bound) {
  FitState st = fit(ds_, model_.loss, model_.reg, bound, warm_, fit_opts_);
  if (!st.converged)
    throw NumericError("inner solve did not reach stationarity (grad norm " +
                       std::to_string(st.grad_norm) + " after " +
                       std::to_string(st.iterations) + " steps)");
  warm_ = st.beta;
  state_ = std::move(st);
  return *state_;
}

double AloProblem::value(const Vector& lambda) {
  const BoundReg bound = bind_regularizer(model_.reg, lambda);
  return alo_value(fit_at(bound), ds_, model_.loss);
}

Vector AloProblem::gradient(const Vector& lambda) {
  const BoundReg bound = bind_regularizer(model_.reg, lambda);
  const FitState& st = fit_at(bound);
  return alo_gradient(st, ds_, model_.loss, model_.reg, bound).grad;
}

TrustRegionEval AloProblem::evaluate(const Vector& lambda) {
  const BoundReg bound = bind_regularizer(model_.reg, lambda);
  const FitState& st = fit_at(bound);
  TrustRegionEval ev;
  ev.f = alo_value(st, ds_, model_.loss);
  AloGradient g = alo_gradient(st, ds_, model_.loss, model_.reg, bound);
  ev.grad = std::move(g.grad);
  ev.hess = alo_hessian(st, ds_, bound, g.cache);
  return ev;
}

TrustRegionObjective AloProblem::objective() {
  return [this](const Vector& lambda) { return evaluate(lambda); };
}

}  // namespace alotune
