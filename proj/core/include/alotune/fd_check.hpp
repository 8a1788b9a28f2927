#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "alotune/problem.hpp"
#include "alotune/types.hpp"

namespace alotune {

using ScalarFn = std::function<double(const Vector&)>;
using VectorFn = std::function<Vector(const Vector&)>;

// Forward differences (f(x + step e_s) - f(x)) / step.
Vector fd_gradient(const ScalarFn& f, const Vector& x, double step = 1e-6);

// Forward differences of an exact gradient, symmetrized to (M + M^T) / 2.
Matrix fd_hessian(const VectorFn& grad, const Vector& x, double step = 1e-6);

// |approx - exact| / max(1, |exact|): relative away from zero, absolute near
// it, so near-zero entries do not blow the comparison up.
double floored_rel_error(double approx, double exact);

struct FdRow {
  Vector lambda;
  std::string quantity;  // "grad[s]" or "hess[s][t]"
  double exact = 0;
  double approx = 0;
  double rel_err = 0;
  bool evaluated = true;  // false when the model failed at this point
  std::string note;
};

struct FdReport {
  std::vector<FdRow> rows;
  double worst = 0;  // over evaluated rows
  double step = 0;
};

// Compares the exact gradient and Hessian against finite differences of the
// model itself at each lambda. Points where the inner solve fails are kept in
// the report, flagged, and excluded from the worst-case figure.
FdReport fd_probe(AloProblem& problem, const std::vector<Vector>& points,
                  double step = 1e-6);

void write_fd_csv(const FdReport& report, std::ostream& os);
void write_fd_text(const FdReport& report, std::ostream& os);

}  // namespace alotune
