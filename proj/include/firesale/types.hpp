#pragma once

#include <Eigen/Dense>

namespace firesale {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Row-per-bank matrix of shares sold (n x m).
using LiquidationMatrix = Eigen::MatrixXd;

}  // namespace firesale
