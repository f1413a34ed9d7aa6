#pragma once

#include <Eigen/Dense>

namespace cgm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace cgm
