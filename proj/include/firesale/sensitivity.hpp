#pragma once

#include <limits>
#include <vector>

#include <Eigen/LU>

#include "firesale/clearing.hpp"
#include "firesale/liquidation.hpp"
#include "firesale/parameters.hpp"

namespace firesale {

struct SensitivityResult {
  ParamTag param;
  Vector dq;      // d q* / d#
  Vector dq_bar;  // d q_bar* / d#
  /// n x m total derivative of every bank's liquidation, including the
  /// response through the clearing prices.
  Matrix dgamma;
  double condition_number = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::size_t> boundary_banks;
};

/// Factorises I - W once at a clearing point, where
///   W = [diag F'; diag F_bar'] [J Gamma*  J Gamma*]
/// stacks the price response of the aggregate liquidations, and solves for
/// the price sensitivities of any number of parameters.
class SensitivitySolver {
 public:
  static constexpr double kMaxCondition = 1e12;

  SensitivitySolver(const BankingSystem& system, const LiquidationStrategy& strategy, const ClearingResult& clearing);

  SensitivityResult solve(const ParamTag& param) const;

  const Matrix& w() const { return w_; }
  double condition_number() const { return condition_; }
  const StrategyJacobian& jacobian() const { return jacobian_; }

 private:
  BankingSystem system_;
  LiquidationStrategy strategy_;
  ClearingResult clearing_;
  Vector dmtmp_;
  Vector dvwap_;
  StrategyJacobian jacobian_;
  Matrix w_;
  double condition_ = 0.0;
  Eigen::PartialPivLU<Matrix> lu_;
};

SensitivityResult price_sensitivity(const BankingSystem& system, const LiquidationStrategy& strategy,
                                    const ClearingResult& clearing, const ParamTag& param);

/// Central difference of the clearing prices with step `step * max(|#|, 1)`.
/// Asset purchases are one-sided (beta >= 0) and use a forward difference.
/// Throws KinkError when the perturbation moves any bank between classes.
SensitivityResult finite_difference_check(const BankingSystem& system, const LiquidationStrategy& strategy,
                                          const ParamTag& param, double step = 1e-6,
                                          const SolverOptions& options = {});

/// sum_k M' d q* / d alpha_k, the market-cap response to a parallel
/// shift of all risk-weights.
double parallel_riskweight_impact(const BankingSystem& system, const LiquidationStrategy& strategy,
                                  const ClearingResult& clearing);

}  // namespace firesale
