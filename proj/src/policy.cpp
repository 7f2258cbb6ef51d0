#include "firesale/policy.hpp"

#include "firesale/errors.hpp"

namespace firesale {

namespace {

std::string bailout_verdict(double value) { return value > 0.0 ? "bailout advisable" : "bailout not advisable"; }

}  // namespace

std::string to_string(PolicyMetric metric) {
  switch (metric) {
    case PolicyMetric::CR: return "cr";
    case PolicyMetric::CRL: return "crl";
    case PolicyMetric::CMI: return "cmi";
    case PolicyMetric::DCB: return "dcb";
    case PolicyMetric::DPB: return "dpb";
    case PolicyMetric::ICB: return "icb";
    case PolicyMetric::IPB: return "ipb";
  }
  return "unknown";
}

PolicyMetric parse_policy_metric(const std::string& name) {
  for (auto m : {PolicyMetric::CR, PolicyMetric::CRL, PolicyMetric::CMI, PolicyMetric::DCB, PolicyMetric::DPB,
                 PolicyMetric::ICB, PolicyMetric::IPB}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigurationError("unknown policy metric '" + name + "'");
}

PolicyAnalysis::PolicyAnalysis(const BankingSystem& system, const LiquidationStrategy& strategy,
                               const ClearingResult& clearing)
    : system_(system), clearing_(clearing), solver_(system, strategy, clearing) {}

double PolicyAnalysis::capital_response(std::size_t j, const SensitivityResult& r) const {
  const auto row = static_cast<Eigen::Index>(j);
  const Vector gamma = clearing_.gamma.row(row).transpose();
  const Vector kept = system_.banks[j].holdings - gamma;
  const PricePair& p = clearing_.prices;
  return r.dq_bar.dot(gamma) + r.dq.dot(kept) + (p.q_bar - p.q).dot(r.dgamma.row(row).transpose());
}

void PolicyAnalysis::require_solvent(std::size_t j) const {
  if (j >= system_.n()) throw ConfigurationError("bank index out of range");
  if (clearing_.classes[j] == SolvencyClass::Insolvent) {
    throw PreconditionError("bank '" + system_.banks[j].name + "' is insolvent and cannot fund a bailout");
  }
}

double PolicyAnalysis::cost_regulation_market() const {
  return -system_.market.shares_outstanding().dot(solver_.solve(ParamTag::threshold()).dq);
}

double PolicyAnalysis::cost_regulation_realized(std::size_t i) const {
  if (i >= system_.n()) throw ConfigurationError("bank index out of range");
  const SensitivityResult r = solver_.solve(ParamTag::threshold());
  const auto row = static_cast<Eigen::Index>(i);
  const Vector gamma = clearing_.gamma.row(row).transpose();
  const Vector loss = Vector::Ones(gamma.size()) - clearing_.prices.q_bar;
  return -r.dq_bar.dot(gamma) + loss.dot(r.dgamma.row(row).transpose());
}

double PolicyAnalysis::cost_regulation_mtm(std::size_t i) const {
  if (i >= system_.n()) throw ConfigurationError("bank index out of range");
  return -capital_response(i, solver_.solve(ParamTag::threshold()));
}

double PolicyAnalysis::direct_central_bailout(std::size_t i) const {
  const SensitivityResult r = solver_.solve(ParamTag::shortfall(i));
  return -(system_.market.shares_outstanding().dot(r.dq) + 1.0);
}

double PolicyAnalysis::direct_private_bailout(std::size_t j, std::size_t i) const {
  require_solvent(j);
  if (i == j) throw PreconditionError("a bank cannot bail itself out");
  if (i >= system_.n()) throw ConfigurationError("bank index out of range");
  // C_j = -h_j + ..., so its own shortfall carries an extra -1.
  const double own = -1.0 + capital_response(j, solver_.solve(ParamTag::shortfall(j)));
  const double other = capital_response(j, solver_.solve(ParamTag::shortfall(i)));
  return own - other;
}

double PolicyAnalysis::indirect_central_bailout(std::size_t k) const {
  const SensitivityResult r = solver_.solve(ParamTag::asset_purchase(k));
  return system_.market.shares_outstanding().dot(r.dq) - 1.0;
}

double PolicyAnalysis::indirect_private_bailout(std::size_t j, std::size_t k) const {
  require_solvent(j);
  if (k >= system_.m()) throw ConfigurationError("asset index out of range");
  const auto kk = static_cast<Eigen::Index>(k);
  const double qbar = clearing_.prices.q_bar[kk];
  const double d_shortfall = -1.0 + capital_response(j, solver_.solve(ParamTag::shortfall(j)));
  // One more share of k is worth q_k at the clearing price.
  const double d_holding = clearing_.prices.q[kk] + capital_response(j, solver_.solve(ParamTag::holding(j, k)));
  const double d_purchase = capital_response(j, solver_.solve(ParamTag::asset_purchase(k)));
  return d_shortfall + d_holding / qbar + d_purchase;
}

PolicyReport PolicyAnalysis::report(PolicyMetric metric, std::size_t bank, std::size_t other,
                                    std::size_t asset) const {
  PolicyReport r;
  r.metric = metric;
  const auto illiquid = [&](std::size_t i) {
    return i < clearing_.classes.size() && clearing_.classes[i] == SolvencyClass::SolventIlliquid;
  };
  const auto distressed = [&](std::size_t k) {
    return k < system_.m() && clearing_.prices.q[static_cast<Eigen::Index>(k)] < 1.0;
  };
  switch (metric) {
    case PolicyMetric::CR:
      r.value = cost_regulation_market();
      r.verdict = "market cost of regulation";
      break;
    case PolicyMetric::CRL:
      r.bank = bank;
      r.value = cost_regulation_realized(bank);
      r.verdict = "realized-loss cost of regulation";
      break;
    case PolicyMetric::CMI:
      r.bank = bank;
      r.value = cost_regulation_mtm(bank);
      r.verdict = "mark-to-market cost of regulation";
      break;
    case PolicyMetric::DCB:
      r.bank = bank;
      r.value = direct_central_bailout(bank);
      r.applicable = illiquid(bank);
      break;
    case PolicyMetric::DPB:
      r.bank = bank;
      r.other = other;
      r.value = direct_private_bailout(bank, other);
      r.applicable = illiquid(other);
      break;
    case PolicyMetric::ICB:
      r.asset = asset;
      r.value = indirect_central_bailout(asset);
      r.applicable = distressed(asset);
      break;
    case PolicyMetric::IPB:
      r.bank = bank;
      r.asset = asset;
      r.value = indirect_private_bailout(bank, asset);
      r.applicable = distressed(asset);
      break;
  }
  if (r.verdict.empty()) r.verdict = r.applicable ? bailout_verdict(r.value) : "not applicable";
  return r;
}

std::vector<PolicyReport> PolicyAnalysis::report_all(PolicyMetric metric) const {
  std::vector<PolicyReport> out;
  const std::size_t n = system_.n();
  const std::size_t m = system_.m();
  const auto solvent = [&](std::size_t j) { return clearing_.classes[j] != SolvencyClass::Insolvent; };
  switch (metric) {
    case PolicyMetric::CR:
      out.push_back(report(metric));
      break;
    case PolicyMetric::CRL:
    case PolicyMetric::CMI:
    case PolicyMetric::DCB:
      for (std::size_t i = 0; i < n; ++i) out.push_back(report(metric, i));
      break;
    case PolicyMetric::DPB:
      for (std::size_t j = 0; j < n; ++j) {
        if (!solvent(j)) continue;
        for (std::size_t i = 0; i < n; ++i) {
          if (i != j) out.push_back(report(metric, j, i));
        }
      }
      break;
    case PolicyMetric::ICB:
      for (std::size_t k = 0; k < m; ++k) out.push_back(report(metric, 0, 0, k));
      break;
    case PolicyMetric::IPB:
      for (std::size_t j = 0; j < n; ++j) {
        if (!solvent(j)) continue;
        for (std::size_t k = 0; k < m; ++k) out.push_back(report(metric, j, 0, k));
      }
      break;
  }
  return out;
}

double cost_regulation_market(const BankingSystem& system, const LiquidationStrategy& strategy) {
  return PolicyAnalysis(system, strategy, picard_clear(system, strategy)).cost_regulation_market();
}

double cost_regulation_realized(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t i) {
  return PolicyAnalysis(system, strategy, picard_clear(system, strategy)).cost_regulation_realized(i);
}

double cost_regulation_mtm(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t i) {
  return PolicyAnalysis(system, strategy, picard_clear(system, strategy)).cost_regulation_mtm(i);
}

double direct_central_bailout(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t i) {
  return PolicyAnalysis(system, strategy, picard_clear(system, strategy)).direct_central_bailout(i);
}

double direct_private_bailout(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t j,
                              std::size_t i) {
  return PolicyAnalysis(system, strategy, picard_clear(system, strategy)).direct_private_bailout(j, i);
}

double indirect_central_bailout(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t k) {
  return PolicyAnalysis(system, strategy, picard_clear(system, strategy)).indirect_central_bailout(k);
}

double indirect_private_bailout(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t j,
                                std::size_t k) {
  return PolicyAnalysis(system, strategy, picard_clear(system, strategy)).indirect_private_bailout(j, k);
}

}  // namespace firesale
