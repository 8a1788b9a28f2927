#include "alotune/trust_region.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "alotune/errors.hpp"

namespace alotune {

namespace {

void check_config(const TrustRegionConfig& cfg) {
  if (!(cfg.delta0 > 0) || !(cfg.delta_max >= cfg.delta0))
    throw std::invalid_argument("trust region: need 0 < delta0 <= delta_max");
  if (!(cfg.eta > 0 && cfg.eta < 1))
    throw std::invalid_argument("trust region: eta must lie in (0, 1)");
  if (!(cfg.shrink > 0 && cfg.shrink < 1 && cfg.expand > 1))
    throw std::invalid_argument("trust region: need 0 < shrink < 1 < expand");
  if (!(cfg.grad_tol > 0) || cfg.max_iter < 1)
    throw std::invalid_argument("trust region: bad tolerance or iteration budget");
}

double model_reduction(const Vector& g, const Matrix& b, const Vector& s) {
  return -(g.dot(s) + 0.5 * s.dot(b * s));
}

}  // namespace

SubproblemSolution solve_subproblem(const Vector& grad, const Matrix& hess,
                                    double delta) {
  const Index q = grad.size();
  if (hess.rows() != q || hess.cols() != q)
    throw std::invalid_argument("subproblem: gradient/hessian size mismatch");
  if (!(delta > 0)) throw std::invalid_argument("subproblem: delta must be positive");

  Eigen::SelfAdjointEigenSolver<Matrix> es(hess);
  if (es.info() != Eigen::Success)
    throw NumericError("subproblem: eigendecomposition failed");
  const Vector evals = es.eigenvalues();
  const Matrix& vecs = es.eigenvectors();
  const Vector gq = vecs.transpose() * grad;
  const double eig_min = evals[0];

  SubproblemSolution out;

  // Unconstrained Newton point, valid when B is positive definite.
  if (eig_min > 0) {
    const Vector coords = -gq.cwiseQuotient(evals);
    if (coords.norm() <= delta) {
      out.step = vecs * coords;
      out.nu = 0;
      out.predicted_reduction = model_reduction(grad, hess, out.step);
      return out;
    }
  }

  // Boundary solution s(nu) with coordinates -gq_k / (eval_k + nu),
  // nu >= nu0 = max(0, -eig_min). Norm is decreasing in nu.
  const double nu0 = std::max(0.0, -eig_min);
  const double eig_span = std::max(1.0, evals.cwiseAbs().maxCoeff());

  // Hard case: no gradient component along the bottom eigenspace, and the
  // pseudoinverse step at nu0 already fits inside the region. Make up the
  // length with the bottom eigenvector.
  bool grad_in_bottom = false;
  for (Index k = 0; k < q; ++k)
    if (evals[k] - eig_min <= 1e-12 * eig_span && std::abs(gq[k]) > 1e-13 * std::max(1.0, grad.norm()))
      grad_in_bottom = true;
  if (eig_min <= 0 && !grad_in_bottom) {
    Vector coords = Vector::Zero(q);
    for (Index k = 0; k < q; ++k) {
      const double shifted = evals[k] + nu0;
      if (shifted > 1e-12 * eig_span) coords[k] = -gq[k] / shifted;
    }
    const double base = coords.norm();
    if (base <= delta) {
      const double extra = std::sqrt(std::max(0.0, delta * delta - base * base));
      out.step = vecs * coords + extra * vecs.col(0);
      out.nu = nu0;
      out.predicted_reduction = model_reduction(grad, hess, out.step);
      return out;
    }
  }

  auto norm_at = [&](double nu) {
    double sum = 0;
    for (Index k = 0; k < q; ++k) {
      const double c = gq[k] / (evals[k] + nu);
      sum += c * c;
    }
    return std::sqrt(sum);
  };

  // Bracket: at lo the step is too long (or singular), grow hi until too short.
  double lo = nu0;
  double hi = std::max(nu0 + 1.0, nu0 + grad.norm() / delta);
  while (norm_at(hi) > delta) hi = nu0 + 2.0 * (hi - nu0);

  // Safeguarded Newton on psi(nu) = 1/delta - 1/|s(nu)|, the standard
  // well-scaled form of the secular equation.
  double nu = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double nrm = norm_at(nu);
    if (std::abs(nrm - delta) <= 1e-11 * delta) break;
    if (nrm > delta) lo = nu; else hi = nu;
    double dsum = 0;
    for (Index k = 0; k < q; ++k) {
      const double shifted = evals[k] + nu;
      dsum += gq[k] * gq[k] / (shifted * shifted * shifted);
    }
    const double dnorm = -dsum / nrm;
    const double psi = 1.0 / delta - 1.0 / nrm;
    const double dpsi = dnorm / (nrm * nrm);
    double next = nu - psi / dpsi;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    nu = next;
    if (hi - lo <= 1e-14 * std::max(1.0, hi)) break;
  }

  Vector coords(q);
  for (Index k = 0; k < q; ++k) coords[k] = -gq[k] / (evals[k] + nu);
  // Scale exactly onto the boundary to kill residual secular error.
  if (coords.norm() > 0) coords *= delta / coords.norm();
  out.step = vecs * coords;
  out.nu = nu;
  out.predicted_reduction = model_reduction(grad, hess, out.step);
  return out;
}

TuneResult trust_region_minimize(const TrustRegionObjective& obj,
                                 const Vector& lambda0,
                                 const TrustRegionConfig& cfg) {
  check_config(cfg);

  TuneResult res;
  res.lambda = lambda0;
  TrustRegionEval cur = obj(lambda0);  // failure at the start is fatal
  if (!std::isfinite(cur.f))
    throw NumericError("trust region: objective not finite at the start");

  double delta = cfg.delta0;
  int failures = 0;

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    if (cur.grad.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) {
      res.status = TuneStatus::Converged;
      break;
    }
    if (delta < 1e-13) {
      // Radius collapsed without reaching stationarity; give up cleanly.
      res.status = TuneStatus::MaxIter;
      break;
    }

    const SubproblemSolution sub = solve_subproblem(cur.grad, cur.hess, delta);
    TrustRegionIterate rec;
    rec.lambda = res.lambda;
    rec.f = cur.f;
    rec.grad_norm = cur.grad.lpNorm<Eigen::Infinity>();
    rec.delta = delta;
    rec.step_norm = sub.step.norm();

    const Vector trial = res.lambda + sub.step;
    bool eval_ok = true;
    TrustRegionEval ev;
    try {
      ev = obj(trial);
      if (!std::isfinite(ev.f)) eval_ok = false;
    } catch (const NumericError&) {
      eval_ok = false;
    }

    if (!eval_ok || sub.predicted_reduction <= 0) {
      rec.rho = -std::numeric_limits<double>::infinity();
      rec.accepted = false;
      res.trace.push_back(rec);
      delta *= cfg.shrink;
      if (++failures >= cfg.max_consecutive_failures) {
        res.status = TuneStatus::SubproblemFailure;
        res.iterations = static_cast<int>(res.trace.size());
        res.f = cur.f;
        res.grad = cur.grad;
        return res;
      }
      continue;
    }
    failures = 0;

    const double rho = (cur.f - ev.f) / sub.predicted_reduction;
    rec.rho = rho;
    rec.accepted = rho > cfg.eta;
    res.trace.push_back(rec);

    if (rec.accepted) {
      res.lambda = trial;
      cur = std::move(ev);
    }
    if (rho < 0.25) {
      delta *= cfg.shrink;
    } else if (rho > 0.75 && sub.step.norm() >= 0.99 * delta) {
      delta = std::min(cfg.expand * delta, cfg.delta_max);
    }
  }

  if (res.status == TuneStatus::MaxIter &&
      cur.grad.lpNorm<Eigen::Infinity>() <= cfg.grad_tol)
    res.status = TuneStatus::Converged;

  res.f = cur.f;
  res.grad = cur.grad;
  res.iterations = static_cast<int>(res.trace.size());
  return res;
}

}  // namespace alotune
