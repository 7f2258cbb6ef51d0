#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "firesale/clearing.hpp"
#include "firesale/sensitivity.hpp"

namespace firesale {

enum class PolicyMetric { CR, CRL, CMI, DCB, DPB, ICB, IPB };

/// cr | crl | cmi | dcb | dpb | icb | ipb
std::string to_string(PolicyMetric metric);
PolicyMetric parse_policy_metric(const std::string& name);

struct PolicyReport {
  static constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

  PolicyMetric metric = PolicyMetric::CR;
  std::size_t bank = none;   // subject bank (i for CRL/CMI/DCB, j for DPB/IPB)
  std::size_t other = none;  // recipient i of a private bailout
  std::size_t asset = none;
  double value = 0.0;
  /// False when the metric is outside the set of subjects it is meant for,
  /// e.g. a direct bailout of a bank that is not solvent-but-illiquid.
  bool applicable = true;
  std::string verdict;
};

/// Derivative-based regulation costs and bailout values at one clearing
/// point. Every metric uses total derivatives: liquidations respond to the
/// parameter both directly and through the clearing prices.
class PolicyAnalysis {
 public:
  PolicyAnalysis(const BankingSystem& system, const LiquidationStrategy& strategy, const ClearingResult& clearing);

  /// CR = -M' dq*/dtheta.
  double cost_regulation_market() const;
  /// CRL_i = d[(1 - q_bar*)' gamma_i] / dtheta.
  double cost_regulation_realized(std::size_t i) const;
  /// CMI_i = -d C_i / dtheta, C_i the post-sale equity of bank i.
  double cost_regulation_mtm(std::size_t i) const;
  /// DCB_i = -(M' dq*/dh_i + 1).
  double direct_central_bailout(std::size_t i) const;
  /// DPB_ji = dC_j/dh_j - dC_j/dh_i. Bank j must be solvent and j != i.
  double direct_private_bailout(std::size_t j, std::size_t i) const;
  /// ICB_k = M' dq*/dbeta_k - 1.
  double indirect_central_bailout(std::size_t k) const;
  /// IPB_jk = dC_j/dh_j + (1/q_bar_k) dC_j/ds_jk + dC_j/dbeta_k. Bank j must be solvent.
  double indirect_private_bailout(std::size_t j, std::size_t k) const;

  /// Value plus applicability and sign verdict. Unused indices are ignored.
  PolicyReport report(PolicyMetric metric, std::size_t bank = 0, std::size_t other = 0, std::size_t asset = 0) const;
  /// One report per meaningful subject (every bank, asset or bank pair).
  std::vector<PolicyReport> report_all(PolicyMetric metric) const;

  /// d C_j / d# for a solved sensitivity, excluding any direct dependence of
  /// the balance sheet on the parameter.
  double capital_response(std::size_t j, const SensitivityResult& r) const;

  const SensitivitySolver& solver() const { return solver_; }
  const ClearingResult& clearing() const { return clearing_; }

 private:
  void require_solvent(std::size_t j) const;

  BankingSystem system_;
  ClearingResult clearing_;
  SensitivitySolver solver_;
};

double cost_regulation_market(const BankingSystem& system, const LiquidationStrategy& strategy);
double cost_regulation_realized(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t i);
double cost_regulation_mtm(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t i);
double direct_central_bailout(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t i);
double direct_private_bailout(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t j,
                              std::size_t i);
double indirect_central_bailout(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t k);
double indirect_private_bailout(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t j,
                                std::size_t k);

}  // namespace firesale
