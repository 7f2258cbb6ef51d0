#include "firesale/sensitivity.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "firesale/errors.hpp"

namespace firesale {

SensitivitySolver::SensitivitySolver(const BankingSystem& system, const LiquidationStrategy& strategy,
                                     const ClearingResult& clearing)
    : system_(system), strategy_(strategy), clearing_(clearing) {
  if (!system.market.differentiable()) {
    throw PreconditionError("sensitivities need differentiable demand families");
  }
  const auto m = static_cast<Eigen::Index>(system.m());
  const Vector sold = clearing.aggregate();
  dmtmp_ = system.market.mtmp_derivative(sold);
  dvwap_ = system.market.vwap_derivative(sold);
  jacobian_ = strategy_jacobian(strategy, system, clearing.prices, clearing.gamma);

  w_.resize(2 * m, 2 * m);
  w_.topRows(m) = dmtmp_.asDiagonal() * jacobian_.aggregate;
  w_.bottomRows(m) = dvwap_.asDiagonal() * jacobian_.aggregate;
  const Matrix system_matrix = Matrix::Identity(2 * m, 2 * m) - w_;

  const Eigen::JacobiSVD<Matrix> svd(system_matrix);
  const Vector sv = svd.singularValues();
  const double smallest = sv[sv.size() - 1];
  condition_ = smallest > 0.0 ? sv[0] / smallest : std::numeric_limits<double>::infinity();
  if (!(condition_ < kMaxCondition)) {
    throw SingularSystemError("uniqueness condition violated: I - W is numerically singular (condition " +
                              std::to_string(condition_) + ")");
  }
  lu_.compute(system_matrix);
}

SensitivityResult SensitivitySolver::solve(const ParamTag& param) const {
  check_in_range(param, system_);
  const auto m = static_cast<Eigen::Index>(system_.m());
  const auto n = static_cast<Eigen::Index>(system_.n());
  SensitivityResult out;
  out.param = param;
  out.condition_number = condition_;
  out.boundary_banks = jacobian_.boundary_banks;

  Vector rhs = Vector::Zero(2 * m);
  Matrix direct = Matrix::Zero(n, m);
  if (param.kind == ParamTag::Kind::AssetPurchase) {
    const auto k = static_cast<Eigen::Index>(param.asset);
    // A purchase only relieves sales that exist; at Gamma*_k = 0 the
    // right-derivative is zero.
    if (clearing_.aggregate()[k] > 0.0) {
      const double qbar = clearing_.prices.q_bar[k];
      rhs[k] = -dmtmp_[k] / qbar;
      rhs[m + k] = -dvwap_[k] / qbar;
    }
  } else {
    const ParamDerivative pd = param_derivative(strategy_, system_, clearing_.prices, param, clearing_.gamma);
    rhs.head(m) = dmtmp_.cwiseProduct(pd.aggregate);
    rhs.tail(m) = dvwap_.cwiseProduct(pd.aggregate);
    direct = pd.banks;
  }
  const Vector x = lu_.solve(rhs);
  out.dq = x.head(m);
  out.dq_bar = x.tail(m);
  out.dgamma = direct;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.dgamma.row(i) += (jacobian_.banks[static_cast<std::size_t>(i)] * x).transpose();
  }
  return out;
}

SensitivityResult price_sensitivity(const BankingSystem& system, const LiquidationStrategy& strategy,
                                    const ClearingResult& clearing, const ParamTag& param) {
  return SensitivitySolver(system, strategy, clearing).solve(param);
}

SensitivityResult finite_difference_check(const BankingSystem& system, const LiquidationStrategy& strategy,
                                          const ParamTag& param, double step, const SolverOptions& options) {
  check_in_range(param, system);
  if (!(step > 0.0)) throw PreconditionError("finite-difference step must be positive");
  const double h = step * std::max(std::abs(parameter_value(system, param)), 1.0);
  SensitivityResult out;
  out.param = param;

  ClearingResult up;
  ClearingResult down;
  double span = 2.0 * h;
  if (param.kind == ParamTag::Kind::AssetPurchase) {
    Vector beta = Vector::Zero(static_cast<Eigen::Index>(system.m()));
    beta[static_cast<Eigen::Index>(param.asset)] = h;
    down = picard_clear(system, strategy, options);
    up = clear_with_purchase(system, strategy, beta, options);
    span = h;
  } else {
    up = picard_clear(perturbed(system, param, h), strategy, options);
    down = picard_clear(perturbed(system, param, -h), strategy, options);
  }

  std::vector<std::size_t> moved;
  for (std::size_t i = 0; i < system.n(); ++i) {
    if (up.classes[i] != down.classes[i]) moved.push_back(i);
  }
  if (!moved.empty()) {
    throw KinkError("kink detected: perturbing " + to_string(param) +
                        " changes solvency classes; use a smaller step",
                    moved);
  }
  out.dq = (up.prices.q - down.prices.q) / span;
  out.dq_bar = (up.prices.q_bar - down.prices.q_bar) / span;
  out.dgamma = (up.gamma - down.gamma) / span;
  return out;
}

double parallel_riskweight_impact(const BankingSystem& system, const LiquidationStrategy& strategy,
                                  const ClearingResult& clearing) {
  const SensitivitySolver solver(system, strategy, clearing);
  const Vector M = system.market.shares_outstanding();
  double total = 0.0;
  for (std::size_t k = 0; k < system.m(); ++k) total += M.dot(solver.solve(ParamTag::risk_weight(k)).dq);
  return total;
}

}  // namespace firesale
