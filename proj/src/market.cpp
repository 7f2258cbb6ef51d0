#include "firesale/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "firesale/errors.hpp"

namespace firesale {

namespace {

constexpr double kDomainSlack = 1e-12;

double checked_gamma(const InverseDemand& asset, double gamma) {
  const double M = asset.shares_outstanding();
  if (!(gamma >= -kDomainSlack * std::max(1.0, M)) || !(gamma <= M + kDomainSlack * std::max(1.0, M))) {
    std::ostringstream os;
    os << "liquidation " << gamma << " outside [0, " << M << "]";
    throw DomainError(os.str());
  }
  return std::clamp(gamma, 0.0, M);
}

void require_differentiable(const InverseDemand& asset) {
  if (!asset.differentiable()) {
    throw PreconditionError("non-differentiable family: " + to_string(asset.family()));
  }
}

// Cumulative order book value sum_j q_j * [min(g, c_{j+1}) - min(g, c_j)].
double book_proceeds(const std::vector<BookLevel>& levels, double gamma) {
  double proceeds = 0.0;
  double cum = 0.0;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    const bool last = j + 1 == levels.size();
    const double next = last ? std::numeric_limits<double>::infinity() : cum + levels[j].depth;
    proceeds += levels[j].price * (std::min(gamma, next) - std::min(gamma, cum));
    if (gamma <= next) break;
    cum = next;
  }
  return proceeds;
}

}  // namespace

std::string to_string(DemandFamily family) {
  switch (family) {
    case DemandFamily::LimitOrderBook: return "limit_order_book";
    case DemandFamily::PowerLinear: return "power_linear";
    case DemandFamily::PowerCompound: return "power_compound";
    case DemandFamily::Exponential: return "exponential";
  }
  return "unknown";
}

DemandFamily parse_demand_family(const std::string& name) {
  if (name == "limit_order_book") return DemandFamily::LimitOrderBook;
  if (name == "power_linear") return DemandFamily::PowerLinear;
  if (name == "power_compound") return DemandFamily::PowerCompound;
  if (name == "exponential") return DemandFamily::Exponential;
  throw ConfigurationError("unknown demand family '" + name + "'");
}

InverseDemand InverseDemand::limit_order_book(std::vector<BookLevel> levels, double shares_outstanding) {
  InverseDemand d;
  d.family_ = DemandFamily::LimitOrderBook;
  d.levels_ = std::move(levels);
  d.shares_ = shares_outstanding;
  d.a_ = 0.0;
  d.b_ = 0.0;
  d.validate();
  return d;
}

InverseDemand InverseDemand::power_linear(double a, double b, double shares_outstanding) {
  InverseDemand d;
  d.family_ = DemandFamily::PowerLinear;
  d.a_ = a;
  d.b_ = b;
  d.shares_ = shares_outstanding;
  d.validate();
  return d;
}

InverseDemand InverseDemand::power_compound(double a, double b, double shares_outstanding) {
  InverseDemand d;
  d.family_ = DemandFamily::PowerCompound;
  d.a_ = a;
  d.b_ = b;
  d.shares_ = shares_outstanding;
  d.validate();
  return d;
}

InverseDemand InverseDemand::exponential(double b, double shares_outstanding) {
  InverseDemand d;
  d.family_ = DemandFamily::Exponential;
  d.a_ = 0.0;
  d.b_ = b;
  d.shares_ = shares_outstanding;
  d.validate();
  return d;
}

InverseDemand InverseDemand::with_slope(double b) const {
  if (family_ == DemandFamily::LimitOrderBook) {
    throw ConfigurationError("limit order book has no slope parameter");
  }
  InverseDemand d = *this;
  d.b_ = b;
  d.validate();
  return d;
}

void InverseDemand::validate() const {
  if (!(shares_ > 0.0) || !std::isfinite(shares_)) {
    throw ConfigurationError("shares_outstanding must be positive and finite");
  }
  if (!std::isfinite(a_) || !std::isfinite(b_)) {
    throw ConfigurationError("demand parameters must be finite");
  }
  switch (family_) {
    case DemandFamily::LimitOrderBook: {
      if (levels_.empty()) throw ConfigurationError("limit order book needs at least one level");
      if (levels_.front().price != 1.0) throw ConfigurationError("first order book level must have price 1");
      double total = 0.0;
      for (std::size_t j = 0; j < levels_.size(); ++j) {
        const auto& lvl = levels_[j];
        if (!(lvl.price > 0.0 && lvl.price <= 1.0)) throw ConfigurationError("order book price outside (0, 1]");
        if (!(lvl.depth > 0.0)) throw ConfigurationError("order book depth must be positive");
        if (j > 0 && !(lvl.price < levels_[j - 1].price)) {
          throw ConfigurationError("order book prices must be strictly decreasing");
        }
        total += lvl.depth;
      }
      if (total < shares_ * (1.0 - 1e-12)) {
        throw ConfigurationError("order book depth does not cover shares_outstanding");
      }
      break;
    }
    case DemandFamily::PowerLinear:
      if (a_ < 0.0) throw ConfigurationError("power_linear exponent a must be >= 0");
      if (b_ < 0.0 || !(b_ * std::pow(shares_, a_) < 1.0)) {
        throw ConfigurationError("power_linear slope b must lie in [0, M^-a)");
      }
      break;
    case DemandFamily::PowerCompound:
      if (a_ * b_ < 0.0) throw ConfigurationError("power_compound requires a*b >= 0");
      if (a_ != 0.0 && !(b_ * shares_ < 1.0)) {
        throw ConfigurationError("power_compound requires b < 1/M");
      }
      break;
    case DemandFamily::Exponential:
      if (b_ < 0.0) throw ConfigurationError("exponential decay b must be >= 0");
      break;
  }
}

bool InverseDemand::differentiable() const {
  if (family_ == DemandFamily::LimitOrderBook) return constant_price();
  // 1 - b g^0 jumps from 1 to 1 - b at the origin.
  if (family_ == DemandFamily::PowerLinear && a_ == 0.0 && b_ != 0.0) return false;
  return true;
}

bool InverseDemand::constant_price() const {
  switch (family_) {
    case DemandFamily::LimitOrderBook: return levels_.size() == 1;
    case DemandFamily::PowerCompound: return b_ == 0.0 || a_ == 0.0;
    default: return b_ == 0.0;
  }
}

double mtmp(const InverseDemand& asset, double gamma) {
  gamma = checked_gamma(asset, gamma);
  const double a = asset.exponent();
  const double b = asset.slope();
  switch (asset.family()) {
    case DemandFamily::LimitOrderBook: {
      const auto& levels = asset.levels();
      double cum = 0.0;
      for (std::size_t j = 0; j + 1 < levels.size(); ++j) {
        cum += levels[j].depth;
        if (gamma < cum) return levels[j].price;
      }
      return levels.back().price;
    }
    case DemandFamily::PowerLinear:
      if (gamma == 0.0 || b == 0.0) return 1.0;
      return 1.0 - b * std::pow(gamma, a);
    case DemandFamily::PowerCompound:
      if (gamma == 0.0 || b == 0.0 || a == 0.0) return 1.0;
      return std::exp(a * std::log1p(-b * gamma));
    case DemandFamily::Exponential:
      return std::exp(-b * gamma);
  }
  return 1.0;
}

double vwap(const InverseDemand& asset, double gamma) {
  gamma = checked_gamma(asset, gamma);
  // 0/0 = 1: nothing sold means nothing realised below par.
  if (gamma == 0.0) return 1.0;
  const double a = asset.exponent();
  const double b = asset.slope();
  switch (asset.family()) {
    case DemandFamily::LimitOrderBook:
      return book_proceeds(asset.levels(), gamma) / gamma;
    case DemandFamily::PowerLinear:
      if (b == 0.0) return 1.0;
      return 1.0 - b * std::pow(gamma, a) / (1.0 + a);
    case DemandFamily::PowerCompound: {
      if (b == 0.0 || a == 0.0) return 1.0;
      const double x = b * gamma;
      if (a == -1.0) return -std::log1p(-x) / x;
      return -std::expm1((1.0 + a) * std::log1p(-x)) / ((1.0 + a) * x);
    }
    case DemandFamily::Exponential: {
      if (b == 0.0) return 1.0;
      const double x = b * gamma;
      return -std::expm1(-x) / x;
    }
  }
  return 1.0;
}

double mtmp_derivative(const InverseDemand& asset, double gamma) {
  require_differentiable(asset);
  gamma = checked_gamma(asset, gamma);
  const double a = asset.exponent();
  const double b = asset.slope();
  switch (asset.family()) {
    case DemandFamily::LimitOrderBook:
      return 0.0;
    case DemandFamily::PowerLinear:
      if (b == 0.0 || a == 0.0) return 0.0;
      if (gamma == 0.0) {
        if (a == 1.0) return -b;
        return a > 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
      }
      return -a * b * std::pow(gamma, a - 1.0);
    case DemandFamily::PowerCompound:
      if (b == 0.0 || a == 0.0) return 0.0;
      return -a * b * std::exp((a - 1.0) * std::log1p(-b * gamma));
    case DemandFamily::Exponential:
      return -b * std::exp(-b * gamma);
  }
  return 0.0;
}

double vwap_derivative(const InverseDemand& asset, double gamma) {
  require_differentiable(asset);
  gamma = checked_gamma(asset, gamma);
  const double a = asset.exponent();
  const double b = asset.slope();
  switch (asset.family()) {
    case DemandFamily::LimitOrderBook:
      return 0.0;
    case DemandFamily::PowerLinear:
      if (b == 0.0 || a == 0.0) return 0.0;
      if (gamma == 0.0) return 0.5 * mtmp_derivative(asset, 0.0);
      return -a * b * std::pow(gamma, a - 1.0) / (1.0 + a);
    case DemandFamily::PowerCompound: {
      if (b == 0.0 || a == 0.0) return 0.0;
      const double x = b * gamma;
      if (std::abs(x) < 1e-4) {
        return b * (-a / 2.0 + a * (a - 1.0) * x / 3.0 - a * (a - 1.0) * (a - 2.0) * x * x / 8.0);
      }
      return (mtmp(asset, gamma) - vwap(asset, gamma)) / gamma;
    }
    case DemandFamily::Exponential: {
      if (b == 0.0) return 0.0;
      const double x = b * gamma;
      if (x < 1e-3) return b * (-0.5 + x / 3.0 - x * x / 8.0 + x * x * x / 30.0);
      return b * (x * std::exp(-x) + std::expm1(-x)) / (x * x);
    }
  }
  return 0.0;
}

double uniqueness_margin(const InverseDemand& asset, double alpha, double theta_min, std::size_t grid_points) {
  const double at = alpha * theta_min;
  if (!(at < 1.0)) {
    throw ConfigurationError("assume that alpha_k * theta_min < 1 for every asset (got " + std::to_string(at) + ")");
  }
  require_differentiable(asset);
  if (grid_points < 2) throw PreconditionError("uniqueness grid needs at least two points");
  const double M = asset.shares_outstanding();
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < grid_points; ++j) {
    const double g = j + 1 == grid_points ? M : M * static_cast<double>(j) / static_cast<double>(grid_points - 1);
    const double fp = mtmp_derivative(asset, g);
    // f' may be -inf at the origin; (M - g) f' is then -inf as well.
    const double value = at * mtmp(asset, g) + (1.0 - at) * (g == M ? 0.0 : fp * (M - g));
    worst = std::min(worst, value);
  }
  return worst;
}

RiskWeightInterval risk_weight_interval(const InverseDemand& asset, double theta_min) {
  RiskWeightInterval out;
  if (asset.constant_price()) {
    out.kind = RiskWeightInterval::Kind::Interval;
    out.lower = 0.0;
    out.upper = 1.0 / theta_min;
    return out;
  }
  switch (asset.family()) {
    case DemandFamily::LimitOrderBook:
      out.kind = RiskWeightInterval::Kind::NotApplicable;
      return out;
    case DemandFamily::PowerLinear:
      // (M - g) f'/f is nondecreasing only for a <= 1; a < 1 gives f'(0) = -inf.
      if (asset.exponent() < 1.0) {
        out.kind = RiskWeightInterval::Kind::Empty;
        return out;
      }
      if (asset.exponent() > 1.0) {
        out.kind = RiskWeightInterval::Kind::NotApplicable;
        return out;
      }
      break;
    case DemandFamily::PowerCompound:
    case DemandFamily::Exponential:
      break;
  }
  const double slope0 = -asset.shares_outstanding() * mtmp_derivative(asset, 0.0);
  out.kind = RiskWeightInterval::Kind::Interval;
  out.lower = slope0 / (1.0 + slope0) / theta_min;
  out.upper = 1.0 / theta_min;
  return out;
}

Market::Market(std::vector<InverseDemand> assets) : assets_(std::move(assets)) {
  if (assets_.empty()) throw ConfigurationError("market needs at least one asset");
}

Vector Market::shares_outstanding() const {
  Vector M(size());
  for (std::size_t k = 0; k < size(); ++k) M[k] = assets_[k].shares_outstanding();
  return M;
}

bool Market::differentiable() const {
  return std::all_of(assets_.begin(), assets_.end(), [](const InverseDemand& d) { return d.differentiable(); });
}

Vector Market::mtmp(const Vector& gamma) const {
  Vector out(size());
  for (std::size_t k = 0; k < size(); ++k) out[k] = firesale::mtmp(assets_[k], gamma[k]);
  return out;
}

Vector Market::vwap(const Vector& gamma) const {
  Vector out(size());
  for (std::size_t k = 0; k < size(); ++k) out[k] = firesale::vwap(assets_[k], gamma[k]);
  return out;
}

Vector Market::mtmp_derivative(const Vector& gamma) const {
  Vector out(size());
  for (std::size_t k = 0; k < size(); ++k) out[k] = firesale::mtmp_derivative(assets_[k], gamma[k]);
  return out;
}

Vector Market::vwap_derivative(const Vector& gamma) const {
  Vector out(size());
  for (std::size_t k = 0; k < size(); ++k) out[k] = firesale::vwap_derivative(assets_[k], gamma[k]);
  return out;
}

}  // namespace firesale
