#include "alotune/fd_check.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "alotune/errors.hpp"

namespace alotune {

namespace {

std::string lambda_label(const Vector& lambda) {
  std::ostringstream ss;
  ss << std::setprecision(6);
  for (Index s = 0; s < lambda.size(); ++s) {
    if (s) ss << ';';
    ss << lambda[s];
  }
  return ss.str();
}

}  // namespace

Vector fd_gradient(const ScalarFn& f, const Vector& x, double step) {
  const double f0 = f(x);
  Vector g(x.size());
  for (Index s = 0; s < x.size(); ++s) {
    Vector xs = x;
    xs[s] += step;
    g[s] = (f(xs) - f0) / step;
  }
  return g;
}

Matrix fd_hessian(const VectorFn& grad, const Vector& x, double step) {
  const Vector g0 = grad(x);
  Matrix m(x.size(), x.size());
  for (Index s = 0; s < x.size(); ++s) {
    Vector xs = x;
    xs[s] += step;
    m.col(s) = (grad(xs) - g0) / step;
  }
  return 0.5 * (m + m.transpose());
}

double floored_rel_error(double approx, double exact) {
  return std::abs(approx - exact) / std::max(1.0, std::abs(exact));
}

FdReport fd_probe(AloProblem& problem, const std::vector<Vector>& points,
                  double step) {
  FdReport report;
  report.step = step;
  for (const Vector& lambda : points) {
    try {
      const TrustRegionEval ev = problem.evaluate(lambda);
      const Vector g_fd =
          fd_gradient([&](const Vector& l) { return problem.value(l); }, lambda, step);
      const Matrix h_fd =
          fd_hessian([&](const Vector& l) { return problem.gradient(l); }, lambda, step);

      for (Index s = 0; s < lambda.size(); ++s) {
        FdRow row;
        row.lambda = lambda;
        row.quantity = "grad[" + std::to_string(s) + "]";
        row.exact = ev.grad[s];
        row.approx = g_fd[s];
        row.rel_err = floored_rel_error(g_fd[s], ev.grad[s]);
        report.worst = std::max(report.worst, row.rel_err);
        report.rows.push_back(std::move(row));
      }
      for (Index s = 0; s < lambda.size(); ++s)
        for (Index t = s; t < lambda.size(); ++t) {
          FdRow row;
          row.lambda = lambda;
          row.quantity =
              "hess[" + std::to_string(s) + "][" + std::to_string(t) + "]";
          row.exact = ev.hess(s, t);
          row.approx = h_fd(s, t);
          row.rel_err = floored_rel_error(h_fd(s, t), ev.hess(s, t));
          report.worst = std::max(report.worst, row.rel_err);
          report.rows.push_back(std::move(row));
        }
    } catch (const NumericError& err) {
      FdRow row;
      row.lambda = lambda;
      row.quantity = "point";
      row.evaluated = false;
      row.note = err.what();
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void write_fd_csv(const FdReport& report, std::ostream& os) {
  os << "lambda,quantity,exact,fd,rel_err,evaluated,note\n";
  os << std::setprecision(17);
  for (const FdRow& row : report.rows) {
    std::string note = row.note;
    std::replace(note.begin(), note.end(), ',', ';');
    os << lambda_label(row.lambda) << ',' << row.quantity << ',' << row.exact
       << ',' << row.approx << ',' << row.rel_err << ','
       << (row.evaluated ? 1 : 0) << ',' << note << '\n';
  }
}

void write_fd_text(const FdReport& report, std::ostream& os) {
  os << std::left << std::setw(24) << "lambda" << std::setw(14) << "quantity"
     << std::right << std::setw(16) << "exact" << std::setw(16) << "fd"
     << std::setw(12) << "rel_err" << '\n';
  for (const FdRow& row : report.rows) {
    if (!row.evaluated) {
      os << std::left << std::setw(24) << lambda_label(row.lambda)
         << "skipped: " << row.note << '\n';
      continue;
    }
    os << std::left << std::setw(24) << lambda_label(row.lambda)
       << std::setw(14) << row.quantity << std::right << std::setw(16)
       << std::setprecision(8) << row.exact << std::setw(16) << row.approx
       << std::setw(12) << std::setprecision(2) << std::scientific
       << row.rel_err << std::defaultfloat << '\n';
  }
  os << "worst rel_err: " << std::setprecision(3) << std::scientific
     << report.worst << std::defaultfloat << " (fd step " << report.step
     << ")\n";
}

}  // namespace alotune
