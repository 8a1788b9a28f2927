#pragma once

#include <Eigen/Core>

namespace alotune {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace alotune
