#include "alotune/alo.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "alotune/errors.hpp"
#include "alotune/parallel.hpp"

namespace alotune {

namespace {

constexpr double kPoleFloor = 1e-12;

double checked_denom(double d2, double h, Index row) {
  const double denom = 1.0 - d2 * h;
  if (denom <= kPoleFloor)
    throw NumericError("leave-one-out pole at row " + std::to_string(row) +
                       ": 1 - l'' h = " + std::to_string(denom));
  return denom;
}

// Column-by-column dot products: out[i] = a.col(i) . b.col(i).
Vector colwise_dot(const Matrix& a, const Matrix& b) {
  return (a.array() * b.array()).colwise().sum().transpose();
}

void check_state(const FitState& st, const Dataset& ds) {
  if (!st.factorization.valid())
    throw std::invalid_argument("fit state holds no factorization");
  if (st.u.size() != ds.n() || st.h.size() != ds.n() || st.beta.size() != ds.p())
    throw std::invalid_argument("fit state does not match the dataset shape");
}

void build_tables(const FitState& st, const Dataset& ds, LossKind loss,
                  const Regularizer& reg, const BoundReg& bound,
                  AloIntermediates& c) {
  const Index n = ds.n(), p = ds.p();
  const Index q = bound.lambda.size();
  const Index npairs = q * (q + 1) / 2;

  c.l1.resize(n); c.l2.resize(n); c.l3.resize(n); c.l4.resize(n);
  c.lt1.resize(n); c.lt2.resize(n);
  c.ut.resize(n); c.ut_du.resize(n); c.ut_dh.resize(n);
  c.ut_duu.resize(n); c.ut_duh.resize(n); c.ut_dhh.resize(n);
  for (Index i = 0; i < n; ++i) {
    const LossDerivs ld = loss_derivs(loss, ds.responses[i], st.u[i]);
    checked_denom(ld.d2, st.h[i], i);
    const UtildeDerivs ud = utilde_derivs(ld, st.u[i], st.h[i]);
    c.l1[i] = ld.d1; c.l2[i] = ld.d2; c.l3[i] = ld.d3; c.l4[i] = ld.d4;
    c.ut[i] = ud.utilde;
    c.ut_du[i] = ud.du; c.ut_dh[i] = ud.dh;
    c.ut_duu[i] = ud.duu; c.ut_duh[i] = ud.duh; c.ut_dhh[i] = ud.dhh;
    const LossDerivs lt = loss_derivs(loss, ds.responses[i], ud.utilde);
    c.lt1[i] = lt.d1;
    c.lt2[i] = lt.d2;
  }

  c.r3.resize(p); c.r4.resize(p);
  c.dr1.resize(p, q); c.dr2.resize(p, q); c.dr3.resize(p, q);
  c.ddr1.resize(p, npairs); c.ddr2.resize(p, npairs);
  for (Index j = 0; j < p; ++j) {
    const RegDerivs rd = reg_derivs(reg, bound, j, st.beta[j], ds.is_intercept(j));
    c.r3[j] = rd.d3;
    c.r4[j] = rd.d4;
    c.dr1.row(j) = rd.dlam_d1.transpose();
    c.dr2.row(j) = rd.dlam_d2.transpose();
    c.dr3.row(j) = rd.dlam_d3.transpose();
    for (Index s = 0; s < q; ++s)
      for (Index t = s; t < q; ++t) {
        const Index pair = c.pair_index(s, t);
        c.ddr1(j, pair) = rd.dlam2_d1(s, t);
        c.ddr2(j, pair) = rd.dlam2_d2(s, t);
      }
  }
}

}  // namespace

Index AloIntermediates::pair_index(Index s, Index t) const {
  if (s > t) std::swap(s, t);
  const Index q = dr1.cols();
  return s * q - s * (s - 1) / 2 + (t - s);
}

UtildeDerivs utilde_derivs(const LossDerivs& ld, double u, double h) {
  const double d = 1.0 - ld.d2 * h;
  if (d <= kPoleFloor)
    throw NumericError("leave-one-out pole: 1 - l'' h = " + std::to_string(d));
  const double d2 = d * d, d3 = d2 * d;
  UtildeDerivs out;
  out.utilde = u + ld.d1 * h / d;
  out.du = 1.0 / d + ld.d1 * ld.d3 * h * h / d2;
  out.dh = ld.d1 / d2;
  out.duu = ld.d3 * h / d2 +
            (ld.d2 * ld.d3 + ld.d1 * ld.d4) * h * h / d2 +
            2.0 * ld.d1 * ld.d3 * ld.d3 * h * h * h / d3;
  out.duh = ld.d2 / d2 + 2.0 * ld.d1 * ld.d3 * h / d3;
  out.dhh = 2.0 * ld.d1 * ld.d2 / d3;
  return out;
}

double alo_value(const FitState& st, const Dataset& ds, LossKind loss) {
  check_state(st, ds);
  const Index n = ds.n();
  double sum = 0;
  for (Index i = 0; i < n; ++i) {
    const LossDerivs ld = loss_derivs(loss, ds.responses[i], st.u[i]);
    const double denom = checked_denom(ld.d2, st.h[i], i);
    sum += loss_value(loss, ds.responses[i], st.u[i] + ld.d1 * st.h[i] / denom);
  }
  return sum / static_cast<double>(n);
}

AloGradient alo_gradient(const FitState& st, const Dataset& ds, LossKind loss,
                         const Regularizer& reg, const BoundReg& bound) {
  check_state(st, ds);
  reg.validate_for(ds.p());
  const Index n = ds.n(), p = ds.p();
  const Index q = bound.lambda.size();
  const Matrix& x = ds.features;

  AloGradient out;
  AloIntermediates& c = out.cache;
  c.path = st.factorization.path();
  build_tables(st, ds, loss, reg, bound, c);

  c.t_mat.resize(p, n);
  parallel_blocks(n, [&](Index b, Index e) {
    c.t_mat.middleCols(b, e - b) =
        st.factorization.solve(Matrix(x.middleRows(b, e - b).transpose()));
  });
  if (c.path == SolvePath::POverN) {
    c.xt.resize(n, n);
    parallel_blocks(n, [&](Index b, Index e) {
      c.xt.middleCols(b, e - b).noalias() = x * c.t_mat.middleCols(b, e - b);
    });
  }

  c.dbeta.resize(p, q);
  c.du.resize(n, q);
  c.dh.resize(n, q);
  c.dutilde.resize(n, q);
  if (c.path == SolvePath::NOverP) c.rs.resize(q);
  else { c.ps.resize(q); c.gs.resize(q); }

  out.grad.resize(q);
  for (Index s = 0; s < q; ++s) {
    c.dbeta.col(s) = -st.factorization.solve(Vector(c.dr1.col(s)));
    c.du.col(s).noalias() = x * c.dbeta.col(s);
    const Vector da = c.l3.cwiseProduct(c.du.col(s));
    const Vector dw = c.dr2.col(s) + c.r3.cwiseProduct(c.dbeta.col(s));

    if (c.path == SolvePath::NOverP) {
      Matrix dh_mat(p, p);
      dh_mat.noalias() = x.transpose() * da.asDiagonal() * x;
      dh_mat.diagonal() += dw;
      Matrix pmat(p, n);
      parallel_blocks(n, [&](Index b, Index e) {
        pmat.middleCols(b, e - b).noalias() = dh_mat * c.t_mat.middleCols(b, e - b);
      });
      c.dh.col(s) = -colwise_dot(c.t_mat, pmat);
      Matrix& rmat = c.rs[s];
      rmat.resize(p, n);
      parallel_blocks(n, [&](Index b, Index e) {
        rmat.middleCols(b, e - b) =
            st.factorization.half_solve(pmat.middleCols(b, e - b));
      });
    } else {
      Matrix& pmat = c.ps[s];
      pmat.resize(p, n);
      parallel_blocks(n, [&](Index b, Index e) {
        pmat.middleCols(b, e - b).noalias() =
            x.transpose() * (da.asDiagonal() * c.xt.middleCols(b, e - b));
        pmat.middleCols(b, e - b).noalias() +=
            dw.asDiagonal() * c.t_mat.middleCols(b, e - b);
      });
      c.dh.col(s) = -colwise_dot(c.t_mat, pmat);
      Matrix& gmat = c.gs[s];
      gmat.resize(p, n);
      parallel_blocks(n, [&](Index b, Index e) {
        gmat.middleCols(b, e - b) =
            st.factorization.solve(Matrix(pmat.middleCols(b, e - b)));
      });
    }

    c.dutilde.col(s) = c.ut_du.cwiseProduct(c.du.col(s)) +
                       c.ut_dh.cwiseProduct(c.dh.col(s));
    out.grad[s] = c.lt1.dot(c.dutilde.col(s)) / static_cast<double>(n);
  }
  return out;
}

Matrix alo_hessian(const FitState& st, const Dataset& ds, const BoundReg& bound,
                   const AloIntermediates& c) {
  check_state(st, ds);
  const Index n = ds.n(), p = ds.p();
  const Index q = bound.lambda.size();
  if (c.dbeta.cols() != q || c.dbeta.rows() != p || c.dutilde.rows() != n)
    throw std::invalid_argument("gradient cache does not match this problem");
  const Matrix& x = ds.features;

  Matrix hess(q, q);
  for (Index s = 0; s < q; ++s) {
    for (Index t = s; t < q; ++t) {
      const Index pair = c.pair_index(s, t);
      const Vector du_st = c.du.col(s).cwiseProduct(c.du.col(t));
      const Vector db_st = c.dbeta.col(s).cwiseProduct(c.dbeta.col(t));

      Vector rhs(p);
      rhs.noalias() = x.transpose() * Vector(c.l3.cwiseProduct(du_st));
      rhs += c.dr2.col(s).cwiseProduct(c.dbeta.col(t));
      rhs += c.dr2.col(t).cwiseProduct(c.dbeta.col(s));
      rhs += c.ddr1.col(pair);
      rhs += c.r3.cwiseProduct(db_st);
      const Vector d2beta = -st.factorization.solve(rhs);
      const Vector d2u = x * d2beta;

      const Vector d2a = c.l3.cwiseProduct(d2u) + c.l4.cwiseProduct(du_st);
      const Vector d2w = c.ddr2.col(pair) +
                         c.dr3.col(s).cwiseProduct(c.dbeta.col(t)) +
                         c.dr3.col(t).cwiseProduct(c.dbeta.col(s)) +
                         c.r3.cwiseProduct(d2beta) +
                         c.r4.cwiseProduct(db_st);

      Vector term1(n), term2(n);
      if (c.path == SolvePath::NOverP) {
        term1 = colwise_dot(c.rs[s], c.rs[t]);
        Matrix d2h_mat(p, p);
        d2h_mat.noalias() = x.transpose() * d2a.asDiagonal() * x;
        d2h_mat.diagonal() += d2w;
        Matrix pmat(p, n);
        parallel_blocks(n, [&](Index b, Index e) {
          pmat.middleCols(b, e - b).noalias() =
              d2h_mat * c.t_mat.middleCols(b, e - b);
        });
        term2 = colwise_dot(c.t_mat, pmat);
      } else {
        term1 = colwise_dot(c.ps[s], c.gs[t]);
        term2 = colwise_dot(c.xt, d2a.asDiagonal() * c.xt) +
                colwise_dot(c.t_mat, d2w.asDiagonal() * c.t_mat);
      }
      const Vector d2h = 2.0 * term1 - term2;

      const Vector d2ut =
          c.ut_du.cwiseProduct(d2u) + c.ut_duu.cwiseProduct(du_st) +
          c.ut_duh.cwiseProduct(c.du.col(s).cwiseProduct(c.dh.col(t)) +
                                c.du.col(t).cwiseProduct(c.dh.col(s))) +
          c.ut_dh.cwiseProduct(d2h) +
          c.ut_dhh.cwiseProduct(c.dh.col(s).cwiseProduct(c.dh.col(t)));

      const double val =
          (c.lt2.cwiseProduct(c.dutilde.col(s).cwiseProduct(c.dutilde.col(t))) +
           c.lt1.cwiseProduct(d2ut))
              .sum() /
          static_cast<double>(n);
      hess(s, t) = val;
      hess(t, s) = val;
    }
  }
  return hess;
}

}  // namespace alotune
