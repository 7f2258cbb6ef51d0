#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "firesale/banking.hpp"

namespace firesale {

/// Model parameter with respect to which clearing prices are differentiated.
struct ParamTag {
  enum class Kind { Threshold, RiskWeight, Shortfall, Holding, AssetPurchase };

  Kind kind = Kind::Threshold;
  std::size_t bank = 0;   // Shortfall(i), Holding(j, k)
  std::size_t asset = 0;  // RiskWeight(k), Holding(j, k), AssetPurchase(k)

  static ParamTag threshold() { return {Kind::Threshold, 0, 0}; }
  static ParamTag risk_weight(std::size_t k) { return {Kind::RiskWeight, 0, k}; }
  static ParamTag shortfall(std::size_t i) { return {Kind::Shortfall, i, 0}; }
  static ParamTag holding(std::size_t j, std::size_t k) { return {Kind::Holding, j, k}; }
  static ParamTag asset_purchase(std::size_t k) { return {Kind::AssetPurchase, 0, k}; }

  bool operator==(const ParamTag&) const = default;
};

/// "theta", "alpha:K", "shortfall:I", "holding:J,K" or "purchase:K" (0-based).
std::string to_string(const ParamTag& tag);
ParamTag parse_param_tag(const std::string& text);

void check_in_range(const ParamTag& tag, const BankingSystem& system);

/// Every parameter of the system: theta, each alpha_k, h_i, s_jk and beta_k.
std::vector<ParamTag> all_param_tags(const BankingSystem& system);

/// Current value of a system parameter. AssetPurchase is zero by convention.
double parameter_value(const BankingSystem& system, const ParamTag& tag);

/// Copy of `system` with the parameter shifted by `delta`. Shortfalls move
/// through liabilities, so h_i changes by exactly `delta`. No validation is
/// run on the result. AssetPurchase is not a system parameter and throws.
BankingSystem perturbed(const BankingSystem& system, const ParamTag& tag, double delta);

}  // namespace firesale
