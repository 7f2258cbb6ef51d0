#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "firesale/banking.hpp"
#include "firesale/parameters.hpp"
#include "firesale/types.hpp"

namespace firesale {

enum class StrategyKind { SingleAsset, Proportional, UtilityMax, PriceTakingEquilibrium };

/// single | proportional | utility | pt-equilibrium
std::string to_string(StrategyKind kind);
StrategyKind parse_strategy(const std::string& name);

/// Concave utility u_i(gamma_i, gamma_-i) of one bank's own sales, given the
/// aggregate sales of everyone else. The gradient is taken in gamma_i.
struct Utility {
  std::function<double(const Market&, const Vector&, const Vector&)> value;
  std::function<Vector(const Market&, const Vector&, const Vector&)> gradient;
};

/// u_i = -gamma_i' (1 - F_bar(gamma_i + gamma_-i)), minus the realised loss.
Utility realized_loss_utility();

struct InnerSolverOptions {
  double step_tol = 1e-14;      // projected-gradient residual, relative to the holdings
  int max_iter = 10000;
  double response_tol = 1e-12;  // best-response round change
  int max_rounds = 2000;
};

struct LiquidationStrategy {
  StrategyKind kind = StrategyKind::Proportional;
  Utility utility = realized_loss_utility();
  InnerSolverOptions inner;

  static LiquidationStrategy single_asset() { return {StrategyKind::SingleAsset, realized_loss_utility(), {}}; }
  static LiquidationStrategy proportional() { return {StrategyKind::Proportional, realized_loss_utility(), {}}; }
  static LiquidationStrategy utility_max(Utility u = realized_loss_utility()) {
    return {StrategyKind::UtilityMax, std::move(u), {}};
  }
  static LiquidationStrategy price_taking(Utility u = realized_loss_utility()) {
    return {StrategyKind::PriceTakingEquilibrium, std::move(u), {}};
  }

  /// Closed-form, nonincreasing in prices.
  bool monotone() const { return kind == StrategyKind::SingleAsset || kind == StrategyKind::Proportional; }
  void check(const BankingSystem& system) const;
};

/// Coefficient vector q_bar - (I - A theta) q of the liquidation condition.
Vector liquidation_value_weights(const Regulation& regulation, const PricePair& prices);

/// Right-hand side (h - q'(I - A theta) s)^+ ^ c's of the liquidation condition.
double required_liquidation_value(const Bank& bank, const Regulation& regulation, const PricePair& prices);

/// Maximises a concave utility over {0 <= g <= upper, c'g >= r} by projected
/// gradient ascent. Throws ConvergenceError when the iteration budget runs out.
Vector maximize_on_slab(const std::function<double(const Vector&)>& value,
                        const std::function<Vector(const Vector&)>& gradient, const Vector& upper, const Vector& c,
                        double r, const InnerSolverOptions& options, const Vector& start);

/// Euclidean projection onto {0 <= g <= upper, c'g >= r}.
Vector project_box_halfspace(const Vector& y, const Vector& upper, const Vector& c, double r);

/// One row of the liquidation matrix. `others` is the aggregate sale of every
/// other bank and only matters for the equilibrium strategy. `start` seeds the
/// utility maximisation; zero when empty.
Vector liquidate_bank(const LiquidationStrategy& strategy, const BankingSystem& system, std::size_t i,
                      const PricePair& prices, const Vector& others, const Vector& start = {});

/// Liquidation matrix at fixed prices. `warm_start`, when non-empty, seeds the
/// equilibrium best-response loop; the other strategies ignore it.
LiquidationMatrix liquidate(const LiquidationStrategy& strategy, const BankingSystem& system,
                            const PricePair& prices, const LiquidationMatrix& warm_start = {});

/// |LHS - RHS| of the minimal liquidation condition per bank.
Vector verify_mlc(const BankingSystem& system, const PricePair& prices, const LiquidationMatrix& gamma);

/// Column sums Gamma' 1.
Vector aggregate(const LiquidationMatrix& gamma);

/// Banks within `eps * q_bar's_i` of a class boundary, where the strategy is
/// only one-sidedly differentiable.
std::vector<std::size_t> boundary_banks(const BankingSystem& system, const PricePair& prices, double eps = 1e-9);

struct StrategyJacobian {
  std::vector<Matrix> banks;  // per bank, m x 2m: [d gamma_i / dq | d gamma_i / dq_bar]
  Matrix aggregate;           // m x 2m, sum of the above
  std::vector<std::size_t> boundary_banks;
};

StrategyJacobian strategy_jacobian(const LiquidationStrategy& strategy, const BankingSystem& system,
                                   const PricePair& prices, const LiquidationMatrix& gamma = {});

/// m x 2m Jacobian of the aggregate liquidation Gamma*(q, q_bar).
Matrix jacobian_aggregate(const LiquidationStrategy& strategy, const BankingSystem& system, const PricePair& prices);

struct ParamDerivative {
  Matrix banks;      // n x m, d gamma_i / d# at fixed prices
  Vector aggregate;  // m
  std::vector<std::size_t> boundary_banks;
};

/// Derivative of the liquidations in a model parameter with prices held
/// fixed. Threshold includes the dependence of every h_i on theta_min.
/// AssetPurchase does not enter the strategy and yields zero.
ParamDerivative param_derivative(const LiquidationStrategy& strategy, const BankingSystem& system,
                                 const PricePair& prices, const ParamTag& param,
                                 const LiquidationMatrix& gamma = {});

}  // namespace firesale
