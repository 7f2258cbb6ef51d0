#include "firesale/liquidation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "firesale/errors.hpp"

namespace firesale {

namespace {

constexpr double kUtilityFdStep = 1e-5;

// Terms of the closed-form liquidation fraction t = N / D.
struct Fraction {
  double numerator = 0.0;    // h - q'(I - A theta) s
  double denominator = 0.0;  // (q_bar - (I - A theta) q)' s
};

Fraction fraction(const Bank& bank, const Regulation& regulation, const PricePair& prices) {
  const Vector c = liquidation_value_weights(regulation, prices);
  return {shortfall(bank, regulation) - prices.q.cwiseProduct(regulation.retained()).dot(bank.holdings),
          c.dot(bank.holdings)};
}

enum class Regime { Idle, Partial, Full };

// Same tie-breaking as classify(): a full sale wins over no sale.
Regime regime(const Fraction& f) {
  if (f.numerator >= f.denominator) return Regime::Full;
  if (f.numerator <= 0.0) return Regime::Idle;
  return Regime::Partial;
}

bool holds_nothing(const Bank& bank) { return bank.holdings.size() == 0 || bank.holdings.isZero(0.0); }

PricePair shifted(const PricePair& prices, std::size_t coord, double delta) {
  PricePair out = prices;
  const auto m = static_cast<std::size_t>(prices.q.size());
  if (coord < m) {
    out.q[coord] += delta;
  } else {
    out.q_bar[coord - m] += delta;
  }
  return out;
}

}  // namespace

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::SingleAsset: return "single";
    case StrategyKind::Proportional: return "proportional";
    case StrategyKind::UtilityMax: return "utility";
    case StrategyKind::PriceTakingEquilibrium: return "pt-equilibrium";
  }
  return "unknown";
}

StrategyKind parse_strategy(const std::string& name) {
  if (name == "single") return StrategyKind::SingleAsset;
  if (name == "proportional") return StrategyKind::Proportional;
  if (name == "utility") return StrategyKind::UtilityMax;
  if (name == "pt-equilibrium") return StrategyKind::PriceTakingEquilibrium;
  throw ConfigurationError("unknown strategy '" + name + "'");
}

Utility realized_loss_utility() {
  Utility u;
  u.value = [](const Market& market, const Vector& gamma, const Vector& others) {
    const Vector fbar = market.vwap(gamma + others);
    return -gamma.dot(Vector::Ones(gamma.size()) - fbar);
  };
  u.gradient = [](const Market& market, const Vector& gamma, const Vector& others) {
    const Vector x = gamma + others;
    const Vector fbar = market.vwap(x);
    const Vector dfbar = market.vwap_derivative(x);
    return Vector(fbar - Vector::Ones(gamma.size()) + gamma.cwiseProduct(dfbar));
  };
  return u;
}

void LiquidationStrategy::check(const BankingSystem& system) const {
  if (kind == StrategyKind::SingleAsset && system.m() != 1) {
    throw ConfigurationError("single-asset strategy needs exactly one marketable asset");
  }
  if (!monotone()) {
    if (!utility.value || !utility.gradient) throw ConfigurationError("utility strategy without a utility");
    if (!system.market.differentiable()) {
      throw ConfigurationError("utility strategies need differentiable demand families");
    }
  }
}

Vector liquidation_value_weights(const Regulation& regulation, const PricePair& prices) {
  return prices.q_bar - regulation.retained().cwiseProduct(prices.q);
}

double required_liquidation_value(const Bank& bank, const Regulation& regulation, const PricePair& prices) {
  const Fraction f = fraction(bank, regulation, prices);
  return std::min(std::max(f.numerator, 0.0), f.denominator);
}

Vector project_box_halfspace(const Vector& y, const Vector& upper, const Vector& c, double r) {
  const auto clip = [&](double mu) {
    return Vector((y + mu * c).cwiseMax(0.0).cwiseMin(upper));
  };
  const auto phi = [&](double mu) { return c.dot(clip(mu)); };
  double lo = 0.0;
  double phi_lo = phi(0.0);
  if (phi_lo >= r) return clip(0.0);

  std::vector<double> breaks;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    if (c[k] == 0.0) continue;
    for (double b : {-y[k] / c[k], (upper[k] - y[k]) / c[k]}) {
      if (b > 0.0) breaks.push_back(b);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  // phi is piecewise linear and nondecreasing in mu; walk its kinks.
  for (double b : breaks) {
    const double phi_b = phi(b);
    if (phi_b >= r) {
      const double mu = phi_b > phi_lo ? lo + (r - phi_lo) * (b - lo) / (phi_b - phi_lo) : b;
      return clip(mu);
    }
    lo = b;
    phi_lo = phi_b;
  }
  return upper;
}

Vector maximize_on_slab(const std::function<double(const Vector&)>& value,
                        const std::function<Vector(const Vector&)>& gradient, const Vector& upper, const Vector& c,
                        double r, const InnerSolverOptions& options, const Vector& start) {
  Vector g = project_box_halfspace(start, upper, c, r);
  double val = value(g);
  Vector grad = gradient(g);
  double t = 1.0;
  double residual = std::numeric_limits<double>::infinity();
  const double tol = options.step_tol * std::max(1.0, upper.norm());
  int stalled = 0;
  for (int it = 0; it < options.max_iter; ++it) {
    // Stationarity measure independent of the current step length.
    residual = (project_box_halfspace(g + grad, upper, c, r) - g).norm();
    if (residual < tol) return g;

    Vector y = project_box_halfspace(g + t * grad, upper, c, r);
    Vector d = y - g;
    double next_val = value(y);
    Vector next_grad = gradient(y);
    // Backtrack along the projection arc until Armijo holds or, for a concave
    // utility, the slope at y still points along d. The slope test keeps making
    // progress once value differences drop below rounding.
    while (next_val < val + 1e-4 * grad.dot(d) && next_grad.dot(d) < 0.0) {
      t *= 0.5;
      if (t < 1e-20) return g;
      y = project_box_halfspace(g + t * grad, upper, c, r);
      d = y - g;
      next_val = value(y);
      next_grad = gradient(y);
    }
    const double curvature = -d.dot(next_grad - grad);
    if (d.norm() > 1e-13 * std::max(1.0, g.norm())) {
      t = curvature > 0.0 ? d.squaredNorm() / curvature : 2.0 * t;
      stalled = 0;
    } else {
      // Too short a step to measure curvature; restart from a unit step. Once
      // unit steps stop moving the iterate the residual is at rounding level.
      t = std::max(t, 1.0);
      if (++stalled >= 5 && residual < 1e6 * tol) return y;
    }
    t = std::clamp(t, 1e-12, 1e12);
    g = std::move(y);
    val = next_val;
    grad = next_grad;
  }
  throw ConvergenceError("projected gradient did not converge", options.max_iter, residual);
}

Vector liquidate_bank(const LiquidationStrategy& strategy, const BankingSystem& system, std::size_t i,
                      const PricePair& prices, const Vector& others, const Vector& start) {
  const Bank& bank = system.banks[i];
  const auto m = static_cast<Eigen::Index>(system.m());
  if (holds_nothing(bank)) return Vector::Zero(m);
  const Fraction f = fraction(bank, system.regulation, prices);
  switch (regime(f)) {
    case Regime::Idle: return Vector::Zero(m);
    case Regime::Full: return bank.holdings;
    case Regime::Partial: break;
  }
  if (strategy.monotone()) return (f.numerator / f.denominator) * bank.holdings;

  const Vector c = liquidation_value_weights(system.regulation, prices);
  const Vector o = strategy.kind == StrategyKind::PriceTakingEquilibrium ? others : Vector::Zero(m);
  const Market& market = system.market;
  const Utility& u = strategy.utility;
  return maximize_on_slab([&](const Vector& g) { return u.value(market, g, o); },
                          [&](const Vector& g) { return u.gradient(market, g, o); }, bank.holdings, c,
                          f.numerator, strategy.inner, start.size() == m ? start : Vector::Zero(m));
}

LiquidationMatrix liquidate(const LiquidationStrategy& strategy, const BankingSystem& system,
                            const PricePair& prices, const LiquidationMatrix& warm_start) {
  strategy.check(system);
  const auto n = static_cast<Eigen::Index>(system.n());
  const auto m = static_cast<Eigen::Index>(system.m());
  LiquidationMatrix gamma = LiquidationMatrix::Zero(n, m);

  if (strategy.kind != StrategyKind::PriceTakingEquilibrium) {
    const Vector none = Vector::Zero(m);
    for (Eigen::Index i = 0; i < n; ++i) {
      gamma.row(i) = liquidate_bank(strategy, system, static_cast<std::size_t>(i), prices, none).transpose();
    }
    return gamma;
  }

  // Gauss-Seidel best responses, damped once the round-to-round change grows.
  if (warm_start.rows() == n && warm_start.cols() == m) gamma = warm_start;
  const InnerSolverOptions& opt = strategy.inner;
  bool damped = false;
  double previous = std::numeric_limits<double>::infinity();
  double change = 0.0;
  for (int round = 0; round < opt.max_rounds; ++round) {
    Vector total = gamma.colwise().sum().transpose();
    change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector own = gamma.row(i).transpose();
      const Vector others = (total - own).cwiseMax(0.0);
      Vector next = liquidate_bank(strategy, system, static_cast<std::size_t>(i), prices, others, own);
      if (damped) next = 0.5 * (own + next);
      change = std::max(change, (next - own).cwiseAbs().maxCoeff());
      total += next - own;
      gamma.row(i) = next.transpose();
    }
    if (change < opt.response_tol) return gamma;
    if (round >= 2 && change > previous) damped = true;
    previous = change;
  }
  throw ConvergenceError("price-taking best responses did not settle", opt.max_rounds, change);
}

Vector verify_mlc(const BankingSystem& system, const PricePair& prices, const LiquidationMatrix& gamma) {
  const Vector c = liquidation_value_weights(system.regulation, prices);
  Vector out(system.n());
  for (std::size_t i = 0; i < system.n(); ++i) {
    const double lhs = c.dot(gamma.row(static_cast<Eigen::Index>(i)).transpose());
    out[static_cast<Eigen::Index>(i)] =
        std::abs(lhs - required_liquidation_value(system.banks[i], system.regulation, prices));
  }
  return out;
}

Vector aggregate(const LiquidationMatrix& gamma) { return gamma.colwise().sum().transpose(); }

std::vector<std::size_t> boundary_banks(const BankingSystem& system, const PricePair& prices, double eps) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < system.n(); ++i) {
    const Bank& bank = system.banks[i];
    if (holds_nothing(bank)) continue;
    const Fraction f = fraction(bank, system.regulation, prices);
    const double scale = std::max(prices.q_bar.dot(bank.holdings), std::numeric_limits<double>::min());
    if (std::abs(f.numerator) <= eps * scale || std::abs(f.numerator - f.denominator) <= eps * scale) {
      out.push_back(i);
    }
  }
  return out;
}

StrategyJacobian strategy_jacobian(const LiquidationStrategy& strategy, const BankingSystem& system,
                                   const PricePair& prices, const LiquidationMatrix& gamma) {
  strategy.check(system);
  const auto m = static_cast<Eigen::Index>(system.m());
  StrategyJacobian out;
  out.boundary_banks = boundary_banks(system, prices);
  out.banks.assign(system.n(), Matrix::Zero(m, 2 * m));

  if (strategy.monotone()) {
    const Vector w = system.regulation.retained();
    for (std::size_t i = 0; i < system.n(); ++i) {
      const Bank& bank = system.banks[i];
      if (holds_nothing(bank)) continue;
      const Fraction f = fraction(bank, system.regulation, prices);
      if (regime(f) != Regime::Partial) continue;
      const double N = f.numerator;
      const double D = f.denominator;
      const Vector& s = bank.holdings;
      const Vector dt_dq = -w.cwiseProduct(s) * (D - N) / (D * D);
      const Vector dt_dqbar = -s * N / (D * D);
      out.banks[i].leftCols(m) = s * dt_dq.transpose();
      out.banks[i].rightCols(m) = s * dt_dqbar.transpose();
    }
  } else {
    const LiquidationMatrix base = gamma.size() ? gamma : liquidate(strategy, system, prices);
    for (Eigen::Index coord = 0; coord < 2 * m; ++coord) {
      const auto c = static_cast<std::size_t>(coord);
      const LiquidationMatrix up = liquidate(strategy, system, shifted(prices, c, kUtilityFdStep), base);
      const LiquidationMatrix down = liquidate(strategy, system, shifted(prices, c, -kUtilityFdStep), base);
      const LiquidationMatrix diff = (up - down) / (2.0 * kUtilityFdStep);
      for (std::size_t i = 0; i < system.n(); ++i) {
        out.banks[i].col(coord) = diff.row(static_cast<Eigen::Index>(i)).transpose();
      }
    }
  }
  out.aggregate = Matrix::Zero(m, 2 * m);
  for (const auto& b : out.banks) out.aggregate += b;
  return out;
}

Matrix jacobian_aggregate(const LiquidationStrategy& strategy, const BankingSystem& system, const PricePair& prices) {
  return strategy_jacobian(strategy, system, prices).aggregate;
}

ParamDerivative param_derivative(const LiquidationStrategy& strategy, const BankingSystem& system,
                                 const PricePair& prices, const ParamTag& param, const LiquidationMatrix& gamma) {
  strategy.check(system);
  check_in_range(param, system);
  const auto n = static_cast<Eigen::Index>(system.n());
  const auto m = static_cast<Eigen::Index>(system.m());
  ParamDerivative out;
  out.banks = Matrix::Zero(n, m);
  out.boundary_banks = boundary_banks(system, prices);

  if (param.kind == ParamTag::Kind::AssetPurchase) {
    out.aggregate = Vector::Zero(m);
    return out;
  }

  if (strategy.monotone()) {
    const Regulation& reg = system.regulation;
    const Vector w = reg.retained();
    const Vector c = liquidation_value_weights(reg, prices);
    for (std::size_t i = 0; i < system.n(); ++i) {
      const Bank& bank = system.banks[i];
      const auto row = static_cast<Eigen::Index>(i);
      const bool is_subject = param.bank == i;
      if (param.kind == ParamTag::Kind::Holding && !is_subject) continue;
      if (param.kind == ParamTag::Kind::Shortfall && !is_subject) continue;
      const Fraction f = fraction(bank, reg, prices);
      const Regime r = holds_nothing(bank) ? (f.numerator > 0.0 ? Regime::Full : Regime::Idle) : regime(f);
      if (r == Regime::Idle) continue;
      if (r == Regime::Full) {
        if (param.kind == ParamTag::Kind::Holding) out.banks(row, static_cast<Eigen::Index>(param.asset)) = 1.0;
        continue;
      }
      const double N = f.numerator;
      const double D = f.denominator;
      const Vector& s = bank.holdings;
      const double t = N / D;
      switch (param.kind) {
        case ParamTag::Kind::Threshold: {
          const double dN = bank.alpha_nonmarketable * bank.nonmarketable +
                            prices.q.cwiseProduct(reg.alpha).dot(s);
          const double dD = reg.alpha.cwiseProduct(prices.q).dot(s);
          out.banks.row(row) = ((dN * D - N * dD) / (D * D)) * s.transpose();
          break;
        }
        case ParamTag::Kind::RiskWeight: {
          const auto k = static_cast<Eigen::Index>(param.asset);
          const double dt = reg.theta_min * prices.q[k] * s[k] * (D - N) / (D * D);
          out.banks.row(row) = dt * s.transpose();
          break;
        }
        case ParamTag::Kind::Shortfall:
          out.banks.row(row) = (1.0 / D) * s.transpose();
          break;
        case ParamTag::Kind::Holding: {
          const auto k = static_cast<Eigen::Index>(param.asset);
          Vector d = s * ((-prices.q[k] * w[k] * D - N * c[k]) / (D * D));
          d[k] += t;
          out.banks.row(row) = d.transpose();
          break;
        }
        case ParamTag::Kind::AssetPurchase:
          break;
      }
    }
  } else {
    const LiquidationMatrix base = gamma.size() ? gamma : liquidate(strategy, system, prices);
    const double step = kUtilityFdStep * std::max(1.0, std::abs(parameter_value(system, param)));
    const LiquidationMatrix up = liquidate(strategy, perturbed(system, param, step), prices, base);
    const LiquidationMatrix down = liquidate(strategy, perturbed(system, param, -step), prices, base);
    out.banks = (up - down) / (2.0 * step);
  }
  out.aggregate = aggregate(out.banks);
  return out;
}

}  // namespace firesale
