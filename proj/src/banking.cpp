#include "firesale/banking.hpp"

#include <cmath>

#include "firesale/errors.hpp"

namespace firesale {

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

std::string to_string(SolvencyClass c) {
  switch (c) {
    case SolvencyClass::Insolvent: return "insolvent";
    case SolvencyClass::SolventIlliquid: return "solvent_illiquid";
    case SolvencyClass::SolventLiquid: return "solvent_liquid";
  }
  return "unknown";
}

void Regulation::validate() const {
  if (!(theta_min > 0.0) || !std::isfinite(theta_min)) {
    throw ConfigurationError("theta_min must be positive");
  }
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    if (!finite_nonneg(alpha[k])) {
      throw ConfigurationError("risk-weight alpha[" + std::to_string(k) + "] must be nonnegative");
    }
    if (!(alpha[k] * theta_min < 1.0)) {
      throw ConfigurationError("assume that alpha_k * theta_min < 1 for every asset (asset " +
                               std::to_string(k) + ")");
    }
  }
}

Matrix BankingSystem::holdings() const {
  Matrix S(n(), m());
  for (std::size_t i = 0; i < n(); ++i) S.row(i) = banks[i].holdings.transpose();
  return S;
}

Vector BankingSystem::shortfalls() const {
  Vector h(n());
  for (std::size_t i = 0; i < n(); ++i) h[i] = shortfall(banks[i], regulation);
  return h;
}

void BankingSystem::validate() const {
  if (market.size() == 0) throw ConfigurationError("market has no assets");
  if (static_cast<std::size_t>(regulation.alpha.size()) != m()) {
    throw ConfigurationError("regulation.alpha length does not match the number of assets");
  }
  regulation.validate();
  for (const auto& b : banks) {
    if (static_cast<std::size_t>(b.holdings.size()) != m()) {
      throw ConfigurationError("bank '" + b.name + "' holdings length does not match the number of assets");
    }
    if (!finite_nonneg(b.liquid) || !finite_nonneg(b.nonmarketable) || !finite_nonneg(b.liabilities) ||
        !finite_nonneg(b.alpha_nonmarketable)) {
      throw ConfigurationError("bank '" + b.name + "' has a negative or non-finite balance sheet entry");
    }
    for (Eigen::Index k = 0; k < b.holdings.size(); ++k) {
      if (!finite_nonneg(b.holdings[k])) {
        throw ConfigurationError("bank '" + b.name + "' has negative holdings");
      }
    }
  }
  if (n() > 0) {
    const Vector total = holdings().colwise().sum().transpose();
    const Vector M = market.shares_outstanding();
    for (std::size_t k = 0; k < m(); ++k) {
      if (total[k] > M[k] * (1.0 + 1e-12)) {
        throw ConfigurationError("holdings of asset " + std::to_string(k) + " exceed shares_outstanding");
      }
    }
  }
}

double shortfall(const Bank& bank, const Regulation& regulation) {
  return bank.liabilities - bank.liquid - (1.0 - bank.alpha_nonmarketable * regulation.theta_min) * bank.nonmarketable;
}

double capital_ratio_initial(const Bank& bank, const Regulation& regulation) {
  const double rwa = regulation.alpha.dot(bank.holdings) + bank.alpha_nonmarketable * bank.nonmarketable;
  if (!(rwa > 0.0)) throw PreconditionError("unregulated bank '" + bank.name + "': no risk-weighted assets");
  return (bank.liquid + bank.nonmarketable + bank.holdings.sum() - bank.liabilities) / rwa;
}

double capital_post(const Bank& bank, const PricePair& prices, const Vector& gamma) {
  return bank.liquid + bank.nonmarketable + prices.q_bar.dot(gamma) + prices.q.dot(bank.holdings - gamma) -
         bank.liabilities;
}

double capital_ratio_post(const Bank& bank, const Regulation& regulation, const PricePair& prices,
                          const Vector& gamma) {
  const Vector kept = bank.holdings - gamma;
  const double rwa = prices.q.cwiseProduct(regulation.alpha).dot(kept) + bank.alpha_nonmarketable * bank.nonmarketable;
  if (!(rwa > 0.0)) throw PreconditionError("unregulated bank '" + bank.name + "': no risk-weighted assets");
  return capital_post(bank, prices, gamma) / rwa;
}

SolvencyClass classify(const Bank& bank, const Regulation& regulation, const PricePair& prices) {
  const double h = shortfall(bank, regulation);
  if (bank.holdings.size() == 0 || bank.holdings.isZero(0.0)) {
    return h <= 0.0 ? SolvencyClass::SolventLiquid : SolvencyClass::Insolvent;
  }
  const double liquid_cover = prices.q.cwiseProduct(regulation.retained()).dot(bank.holdings);
  const double full_sale = prices.q_bar.dot(bank.holdings);
  // Weak inequalities on both ends; a simultaneous tie resolves to Insolvent.
  if (h >= full_sale) return SolvencyClass::Insolvent;
  if (h <= liquid_cover) return SolvencyClass::SolventLiquid;
  return SolvencyClass::SolventIlliquid;
}

std::vector<SolvencyClass> classify(const BankingSystem& system, const PricePair& prices) {
  std::vector<SolvencyClass> out;
  out.reserve(system.n());
  for (const auto& b : system.banks) out.push_back(classify(b, system.regulation, prices));
  return out;
}

bool in_price_lattice(const Market& market, const PricePair& prices, double tol) {
  const Vector M = market.shares_outstanding();
  const Vector lo = market.mtmp(M);
  const Vector lo_bar = market.vwap(M);
  for (std::size_t k = 0; k < market.size(); ++k) {
    const double q = prices.q[k];
    const double qb = prices.q_bar[k];
    if (q < lo[k] - tol || q > 1.0 + tol) return false;
    if (qb < lo_bar[k] - tol || qb > 1.0 + tol) return false;
    if (q > qb + tol) return false;
  }
  return true;
}

}  // namespace firesale
