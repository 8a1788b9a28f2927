#include "alotune/fit.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "alotune/errors.hpp"
#include "alotune/parallel.hpp"

namespace alotune {

namespace {

Matrix gather_cols(const Matrix& x, const std::vector<Index>& idx) {
  Matrix out(x.rows(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j)
    out.col(static_cast<Index>(j)) = x.col(idx[j]);
  return out;
}

}  // namespace

SolvePath HFactorization::path() const {
  if (std::holds_alternative<Dense>(data_)) return SolvePath::NOverP;
  if (std::holds_alternative<Dual>(data_)) return SolvePath::POverN;
  throw std::logic_error("factorization not assembled");
}

Index HFactorization::dim() const {
  if (const auto* d = std::get_if<Dense>(&data_)) return d->llt.matrixLLT().rows();
  if (const auto* d = std::get_if<Dual>(&data_)) return d->p;
  throw std::logic_error("factorization not assembled");
}

Matrix HFactorization::pen_block_solve(Matrix b) const {
  const Dual& d = std::get<Dual>(data_);
  b.array().colwise() *= d.w_pen_inv.array();
  Matrix s = d.cap_llt.solve(d.x_pen * b);
  b.noalias() -= d.w_pen_inv.asDiagonal() * (d.x_pen.transpose() * s);
  return b;
}

Matrix HFactorization::solve(const Matrix& b) const {
  if (const auto* dense = std::get_if<Dense>(&data_)) return dense->llt.solve(b);
  if (!valid()) throw std::logic_error("factorization not assembled");
  const Dual& d = std::get<Dual>(data_);
  if (b.rows() != d.p) throw std::invalid_argument("solve: rhs row count mismatch");

  Matrix bf(static_cast<Index>(d.pen.size()), b.cols());
  for (std::size_t j = 0; j < d.pen.size(); ++j)
    bf.row(static_cast<Index>(j)) = b.row(d.pen[j]);

  Matrix zf = pen_block_solve(std::move(bf));
  Matrix out(d.p, b.cols());
  if (!d.unpen.empty()) {
    Matrix bu(static_cast<Index>(d.unpen.size()), b.cols());
    for (std::size_t j = 0; j < d.unpen.size(); ++j)
      bu.row(static_cast<Index>(j)) = b.row(d.unpen[j]);
    bu.noalias() -= d.h_cross.transpose() * zf;
    Matrix zu = d.schur_llt.solve(bu);
    zf.noalias() -= d.elim * zu;
    for (std::size_t j = 0; j < d.unpen.size(); ++j)
      out.row(d.unpen[j]) = zu.row(static_cast<Index>(j));
  }
  for (std::size_t j = 0; j < d.pen.size(); ++j)
    out.row(d.pen[j]) = zf.row(static_cast<Index>(j));
  return out;
}

Vector HFactorization::solve(const Vector& b) const {
  return solve(Matrix(b)).col(0);
}

Matrix HFactorization::half_solve(const Matrix& b) const {
  const auto* dense = std::get_if<Dense>(&data_);
  if (!dense)
    throw std::logic_error("half_solve: triangular factor only exists on the dense path");
  return dense->llt.matrixL().solve(b);
}

HFactorization assemble_factorization(const Matrix& x, const Vector& a,
                                      const Vector& w, SolvePath hint) {
  const Index n = x.rows(), p = x.cols();
  if (a.size() != n || w.size() != p)
    throw std::invalid_argument("curvature diagonals do not match the design shape");

  const SolvePath path =
      hint != SolvePath::Auto ? hint : (n >= p ? SolvePath::NOverP : SolvePath::POverN);

  HFactorization fac;
  if (path == SolvePath::NOverP) {
    Matrix h(p, p);
    h.noalias() = x.transpose() * a.asDiagonal() * x;
    h.diagonal() += w;
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success)
      throw NumericError("H = X^T A X + W is not positive definite");
    fac.data_ = HFactorization::Dense{std::move(llt)};
    return fac;
  }

  if (a.size() == 0 || a.minCoeff() <= 0)
    throw NumericError("p > n path needs strictly positive loss curvature on every row");

  HFactorization::Dual d;
  d.p = p;
  for (Index j = 0; j < p; ++j) (w[j] != 0.0 ? d.pen : d.unpen).push_back(j);
  if (d.pen.empty())
    throw NumericError("p > n path: no penalized coordinates, H is rank deficient");
  if (static_cast<Index>(d.unpen.size()) >= n)
    throw NumericError("p > n path: unpenalized block is as large as the sample");

  d.x_pen = gather_cols(x, d.pen);
  d.w_pen_inv.resize(static_cast<Index>(d.pen.size()));
  for (std::size_t j = 0; j < d.pen.size(); ++j)
    d.w_pen_inv[static_cast<Index>(j)] = 1.0 / w[d.pen[j]];

  Matrix cap(n, n);
  cap.noalias() = d.x_pen * d.w_pen_inv.asDiagonal() * d.x_pen.transpose();
  cap.diagonal() += a.cwiseInverse();
  d.cap_llt.compute(cap);
  if (d.cap_llt.info() != Eigen::Success)
    throw NumericError("capacitance matrix A^-1 + X W^-1 X^T is not positive definite");

  const bool has_unpen = !d.unpen.empty();
  if (has_unpen) {
    d.x_unpen = gather_cols(x, d.unpen);
    d.h_cross.noalias() = d.x_pen.transpose() * (a.asDiagonal() * d.x_unpen);
  }
  fac.data_ = std::move(d);
  if (has_unpen) {
    auto& dd = std::get<HFactorization::Dual>(fac.data_);
    dd.elim = fac.pen_block_solve(dd.h_cross);
    Matrix schur(static_cast<Index>(dd.unpen.size()), static_cast<Index>(dd.unpen.size()));
    schur.noalias() = dd.x_unpen.transpose() * (a.asDiagonal() * dd.x_unpen);
    schur.noalias() -= dd.h_cross.transpose() * dd.elim;
    dd.schur_llt.compute(schur);
    if (dd.schur_llt.info() != Eigen::Success)
      throw NumericError("unpenalized-block Schur complement is not positive definite");
  }
  return fac;
}

Vector leverage_vector(const HFactorization& fac, const Matrix& x) {
  const Index n = x.rows();
  Vector h(n);
  if (fac.path() == SolvePath::NOverP) {
    parallel_blocks(n, [&](Index b, Index e) {
      const Matrix v = fac.half_solve(x.middleRows(b, e - b).transpose());
      h.segment(b, e - b) = v.colwise().squaredNorm().transpose();
    });
  } else {
    parallel_blocks(n, [&](Index b, Index e) {
      const Matrix xt = x.middleRows(b, e - b).transpose();
      const Matrix t = fac.solve(xt);
      h.segment(b, e - b) = (xt.array() * t.array()).colwise().sum().transpose();
    });
  }
  return h;
}

double inner_objective(const Dataset& ds, LossKind loss, const Regularizer& reg,
                       const BoundReg& bound, const Vector& beta) {
  const Vector u = ds.features * beta;
  double obj = 0;
  for (Index i = 0; i < ds.n(); ++i) obj += loss_value(loss, ds.responses[i], u[i]);
  for (Index j = 0; j < ds.p(); ++j)
    obj += reg_value(reg, bound, j, beta[j], ds.is_intercept(j));
  return obj;
}

FitState fit(const Dataset& ds, LossKind loss, const Regularizer& reg,
             const BoundReg& bound, const std::optional<Vector>& warm_start,
             const FitOptions& opts) {
  const Index n = ds.n(), p = ds.p();
  if (n == 0 || p == 0) throw DataError("fit: empty dataset");
  reg.validate_for(p);
  if (loss == LossKind::Logistic) {
    for (Index i = 0; i < n; ++i)
      if (ds.responses[i] != 1.0 && ds.responses[i] != -1.0)
        throw DataError("logistic loss needs -1/+1 responses (row " +
                        std::to_string(i) + " is " + std::to_string(ds.responses[i]) + ")");
  }
  if (warm_start && warm_start->size() != p)
    throw DataError("warm start has " + std::to_string(warm_start->size()) +
                    " entries for a " + std::to_string(p) + "-column design");

  // Stationarity scale anchored at beta = 0 so warm starts cannot loosen it.
  Vector l1_zero(n);
  for (Index i = 0; i < n; ++i)
    l1_zero[i] = loss_derivs(loss, ds.responses[i], 0.0).d1;
  const double scale = (ds.features.transpose() * l1_zero).lpNorm<Eigen::Infinity>();
  const double tol =
      opts.grad_tol >= 0 ? opts.grad_tol : 1e-10 * std::max(1.0, scale);

  Vector beta = warm_start ? *warm_start : Vector::Zero(p);
  Vector a(n), w(p), l1(n), r1(p), grad(p);
  double obj = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int steps = 0;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const Vector u = ds.features * beta;
    double loss_sum = 0, reg_sum = 0;
    for (Index i = 0; i < n; ++i) {
      const LossDerivs ld = loss_derivs(loss, ds.responses[i], u[i]);
      loss_sum += ld.value;
      l1[i] = ld.d1;
      a[i] = ld.d2;
    }
    for (Index j = 0; j < p; ++j) {
      const RegDerivs rd = reg_derivs(reg, bound, j, beta[j], ds.is_intercept(j));
      reg_sum += rd.value;
      r1[j] = rd.d1;
      w[j] = rd.d2;
    }
    grad.noalias() = ds.features.transpose() * l1;
    grad += r1;
    obj = loss_sum + reg_sum;
    if (grad.lpNorm<Eigen::Infinity>() <= tol) {
      converged = true;
      break;
    }

    const HFactorization fac = assemble_factorization(ds.features, a, w, opts.path);
    const Vector step = -fac.solve(grad);
    const double slope = grad.dot(step);
    if (!(slope < 0))
      throw NumericError("inner solve: Newton direction is not a descent direction");

    // Once the predicted decrease drops below the rounding granularity of the
    // objective, backtracking is blind; the damped phase is over, so take the
    // pure Newton step and let the gradient collapse on its own.
    if (-slope <= 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(obj))) {
      beta += step;
      ++steps;
      continue;
    }

    double alpha = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      const Vector cand = beta + alpha * step;
      const double cand_obj = inner_objective(ds, loss, reg, bound, cand);
      if (cand_obj <= obj + 1e-4 * alpha * slope) {
        beta = cand;
        obj = cand_obj;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // stalled; report non-convergence below
    ++steps;
  }

  FitState st;
  st.beta = beta;
  st.u = ds.features * beta;
  st.a_diag.resize(n);
  st.w_diag.resize(p);
  for (Index i = 0; i < n; ++i) {
    const LossDerivs ld = loss_derivs(loss, ds.responses[i], st.u[i]);
    l1[i] = ld.d1;
    st.a_diag[i] = ld.d2;
  }
  for (Index j = 0; j < p; ++j) {
    const RegDerivs rd = reg_derivs(reg, bound, j, beta[j], ds.is_intercept(j));
    r1[j] = rd.d1;
    st.w_diag[j] = rd.d2;
  }
  grad.noalias() = ds.features.transpose() * l1;
  grad += r1;
  st.grad_norm = grad.lpNorm<Eigen::Infinity>();
  st.converged = converged;
  st.iterations = steps;
  st.factorization = assemble_factorization(ds.features, st.a_diag, st.w_diag, opts.path);
  st.h = leverage_vector(st.factorization, ds.features);
  return st;
}

}  // namespace alotune
