#pragma once

#include <string>
#include <vector>

#include "firesale/banking.hpp"
#include "firesale/liquidation.hpp"
#include "firesale/types.hpp"

namespace firesale {

enum class UniquenessCertificate { CertifiedUnique, ExtremalOnly, Unchecked };
std::string to_string(UniquenessCertificate c);

struct SolverOptions {
  double tol = 1e-12;
  int max_iter = 100000;
};

struct ClearingResult {
  PricePair prices;
  LiquidationMatrix gamma;
  std::vector<SolvencyClass> classes;
  int iterations = 0;
  double residual = 0.0;  // max |Phi(q, q_bar) - (q, q_bar)| at the returned prices
  UniquenessCertificate certificate = UniquenessCertificate::Unchecked;

  Vector aggregate() const { return firesale::aggregate(gamma); }
};

struct UniquenessReport {
  UniquenessCertificate certificate = UniquenessCertificate::Unchecked;
  Vector margins;  // per asset; NaN where no margin can be computed
};

/// Certifies a unique clearing price when every asset has a positive
/// uniqueness margin and the strategy is one of the monotone closed forms.
/// Utility-based strategies are left Unchecked.
UniquenessReport certify_uniqueness(const BankingSystem& system, const LiquidationStrategy& strategy);

/// One application of the clearing map, optionally with asset purchases
/// beta: prices = (F, F_bar)([Gamma* - beta / q_bar]^+).
PricePair clearing_map(const BankingSystem& system, const LiquidationStrategy& strategy, const PricePair& prices,
                       const Vector& beta = {}, LiquidationMatrix* gamma = nullptr,
                       const LiquidationMatrix& warm_start = {});

/// Picard iteration of the clearing map from (1, 1). Markets with price jumps
/// are routed to the greatest monotone iteration.
ClearingResult picard_clear(const BankingSystem& system, const LiquidationStrategy& strategy,
                            const SolverOptions& options = {});

enum class Extremal { Greatest, Least };

/// Monotone iteration from (1, 1) (Greatest) or from (F(M), F_bar(M)) (Least).
/// Throws StrategyContractError if an iterate moves the wrong way.
ClearingResult monotone_clear(const BankingSystem& system, const LiquidationStrategy& strategy, Extremal direction,
                              const SolverOptions& options = {});

/// Clearing with a central purchase fund beta >= 0; beta = 0 is picard_clear.
ClearingResult clear_with_purchase(const BankingSystem& system, const LiquidationStrategy& strategy,
                                   const Vector& beta, const SolverOptions& options = {});

/// Best response of bank i when it accounts for its own price impact in the
/// regulatory constraint. Assumes the utility is decreasing in own sales.
Vector price_making_response(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t i,
                             const Vector& others);

/// Nash equilibrium of price-making banks by round-robin best responses from
/// Gamma = 0. `iterations` counts rounds and `residual` the last round change.
ClearingResult price_making_clear(const BankingSystem& system, const LiquidationStrategy& strategy,
                                  const SolverOptions& options = {});

}  // namespace firesale
