#include "firesale/clearing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "firesale/errors.hpp"

namespace firesale {

namespace {

constexpr double kMonotoneSlack = 1e-13;

double max_abs_diff(const PricePair& a, const PricePair& b) {
  return std::max((a.q - b.q).cwiseAbs().maxCoeff(), (a.q_bar - b.q_bar).cwiseAbs().maxCoeff());
}

// Componentwise a <= b + slack on both price vectors.
bool below(const PricePair& a, const PricePair& b) {
  return (a.q.array() <= b.q.array() + kMonotoneSlack).all() &&
         (a.q_bar.array() <= b.q_bar.array() + kMonotoneSlack).all();
}

ClearingResult iterate(const BankingSystem& system, const LiquidationStrategy& strategy, const Vector& beta,
                       PricePair prices, std::optional<Extremal> direction, const SolverOptions& options) {
  if (!(options.tol > 0.0)) throw PreconditionError("solver tolerance must be positive");
  LiquidationMatrix gamma;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  while (true) {
    if (it >= options.max_iter) {
      throw ConvergenceError("clearing iteration did not converge", it, residual);
    }
    ++it;
    const PricePair next = clearing_map(system, strategy, prices, beta, &gamma, gamma);
    if (!in_price_lattice(system.market, next, 1e-12)) {
      throw Error("clearing map left the price lattice");
    }
    if (direction == Extremal::Greatest && !below(next, prices)) {
      throw StrategyContractError("greatest clearing iterate increased; strategy is not nonincreasing in prices");
    }
    if (direction == Extremal::Least && !below(prices, next)) {
      throw StrategyContractError("least clearing iterate decreased; strategy is not nonincreasing in prices");
    }
    residual = max_abs_diff(next, prices);
    prices = next;
    if (residual < options.tol) break;
  }

  ClearingResult out;
  out.prices = prices;
  // Re-run the map at the limit so that Gamma, the classes and the residual
  // all describe the returned prices.
  const PricePair again = clearing_map(system, strategy, prices, beta, &out.gamma, gamma);
  out.residual = max_abs_diff(again, prices);
  out.classes = classify(system, prices);
  out.iterations = it;
  out.certificate = certify_uniqueness(system, strategy).certificate;
  return out;
}

PricePair unit_prices(const BankingSystem& system) { return PricePair::unit(system.m()); }

// Margin of the price-making constraint:
// psi(g) = F_bar(g + o)' g + F(g + o)' (I - A theta)(s - g) - h.
double psi(const BankingSystem& system, const Bank& bank, const Vector& w, const Vector& g, const Vector& o) {
  const Vector x = g + o;
  return system.market.vwap(x).dot(g) + system.market.mtmp(x).cwiseProduct(w).dot(bank.holdings - g) -
         shortfall(bank, system.regulation);
}

Vector psi_gradient(const BankingSystem& system, const Bank& bank, const Vector& w, const Vector& g,
                    const Vector& o) {
  const Vector x = g + o;
  const Market& mk = system.market;
  const Vector f = mk.mtmp(x);
  const Vector df = mk.mtmp_derivative(x);
  const Vector fbar = mk.vwap(x);
  const Vector dfbar = mk.vwap_derivative(x);
  const Vector kept = bank.holdings - g;
  return fbar + g.cwiseProduct(dfbar) - w.cwiseProduct(f) + w.cwiseProduct(df).cwiseProduct(kept);
}

}  // namespace

std::string to_string(UniquenessCertificate c) {
  switch (c) {
    case UniquenessCertificate::CertifiedUnique: return "certified_unique";
    case UniquenessCertificate::ExtremalOnly: return "extremal_only";
    case UniquenessCertificate::Unchecked: return "unchecked";
  }
  return "unknown";
}

UniquenessReport certify_uniqueness(const BankingSystem& system, const LiquidationStrategy& strategy) {
  UniquenessReport out;
  const std::size_t m = system.m();
  out.margins = Vector::Constant(m, std::numeric_limits<double>::quiet_NaN());
  bool all_positive = true;
  for (std::size_t k = 0; k < m; ++k) {
    const InverseDemand& asset = system.market[k];
    const double alpha = system.regulation.alpha[static_cast<Eigen::Index>(k)];
    if (asset.differentiable()) {
      out.margins[static_cast<Eigen::Index>(k)] = uniqueness_margin(asset, alpha, system.regulation.theta_min);
    }
    // A price that never moves cannot create a second fixed point.
    if (asset.constant_price()) continue;
    if (!(out.margins[static_cast<Eigen::Index>(k)] > 0.0)) all_positive = false;
  }
  if (!strategy.monotone()) {
    out.certificate = UniquenessCertificate::Unchecked;
  } else {
    out.certificate = all_positive ? UniquenessCertificate::CertifiedUnique : UniquenessCertificate::ExtremalOnly;
  }
  return out;
}

PricePair clearing_map(const BankingSystem& system, const LiquidationStrategy& strategy, const PricePair& prices,
                       const Vector& beta, LiquidationMatrix* gamma, const LiquidationMatrix& warm_start) {
  LiquidationMatrix g = liquidate(strategy, system, prices, warm_start);
  Vector sold = aggregate(g);
  if (beta.size() > 0) sold = (sold - beta.cwiseQuotient(prices.q_bar)).cwiseMax(0.0);
  sold = sold.cwiseMin(system.market.shares_outstanding());
  if (gamma) *gamma = std::move(g);
  return {system.market.mtmp(sold), system.market.vwap(sold)};
}

ClearingResult picard_clear(const BankingSystem& system, const LiquidationStrategy& strategy,
                            const SolverOptions& options) {
  if (!system.market.differentiable() && strategy.monotone()) {
    return monotone_clear(system, strategy, Extremal::Greatest, options);
  }
  return iterate(system, strategy, Vector(), unit_prices(system), std::nullopt, options);
}

ClearingResult monotone_clear(const BankingSystem& system, const LiquidationStrategy& strategy, Extremal direction,
                              const SolverOptions& options) {
  if (!strategy.monotone()) {
    throw PreconditionError("monotone clearing needs a strategy that is nonincreasing in prices");
  }
  PricePair start = unit_prices(system);
  if (direction == Extremal::Least) {
    const Vector M = system.market.shares_outstanding();
    start = {system.market.mtmp(M), system.market.vwap(M)};
  }
  return iterate(system, strategy, Vector(), start, direction, options);
}

ClearingResult clear_with_purchase(const BankingSystem& system, const LiquidationStrategy& strategy,
                                   const Vector& beta, const SolverOptions& options) {
  if (static_cast<std::size_t>(beta.size()) != system.m()) {
    throw ConfigurationError("purchase vector length does not match the number of assets");
  }
  if ((beta.array() < 0.0).any()) throw ConfigurationError("purchase funds must be nonnegative");
  const auto direction =
      !system.market.differentiable() && strategy.monotone() ? std::optional(Extremal::Greatest) : std::nullopt;
  return iterate(system, strategy, beta, unit_prices(system), direction, options);
}

Vector price_making_response(const BankingSystem& system, const LiquidationStrategy& strategy, std::size_t i,
                             const Vector& others) {
  const Bank& bank = system.banks[i];
  const Vector& s = bank.holdings;
  const auto m = s.size();
  if (s.isZero(0.0)) return Vector::Zero(m);
  const Vector w = system.regulation.retained();
  const auto margin = [&](const Vector& g) { return psi(system, bank, w, g, others); };

  // With a decreasing utility the constraint set {psi >= 0} U {s} is all that
  // matters: no sale if it is already acceptable, everything if nothing is.
  if (margin(Vector::Zero(m)) >= 0.0) return Vector::Zero(m);
  if (margin(s) < 0.0) return s;

  const Market& market = system.market;
  const Utility& u = strategy.utility;
  const auto value = [&](const Vector& g) { return u.value(market, g, others); };
  const auto grad = [&](const Vector& g) { return u.gradient(market, g, others); };
  const InnerSolverOptions& opt = strategy.inner;

  // Sequential linearisation of psi, restoring feasibility along the segment
  // towards s (which is always acceptable) after every convex subproblem.
  Vector z = s;
  double change = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < 500; ++it) {
    const Vector c = psi_gradient(system, bank, w, z, others);
    const double r = c.dot(z) - margin(z);
    Vector g = maximize_on_slab(value, grad, s, c, r, opt, z);
    if (margin(g) < 0.0) {
      double lo = 0.0;
      double hi = 1.0;
      for (int b = 0; b < 200 && hi - lo > 1e-16; ++b) {
        const double mid = 0.5 * (lo + hi);
        if (margin((1.0 - mid) * g + mid * s) >= 0.0) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      g = (1.0 - hi) * g + hi * s;
    }
    change = (g - z).cwiseAbs().maxCoeff();
    z = std::move(g);
    if (change < opt.response_tol) break;
  }
  if (!(change < opt.response_tol)) {
    throw ConvergenceError("price-making best response did not settle", it, change);
  }
  return value(z) >= value(s) ? z : s;
}

ClearingResult price_making_clear(const BankingSystem& system, const LiquidationStrategy& strategy,
                                  const SolverOptions& options) {
  if (!system.market.differentiable()) {
    throw PreconditionError("price-making equilibrium needs differentiable demand families");
  }
  if (!strategy.utility.value || !strategy.utility.gradient) {
    throw ConfigurationError("price-making equilibrium needs a utility");
  }
  const auto n = static_cast<Eigen::Index>(system.n());
  const auto m = static_cast<Eigen::Index>(system.m());
  LiquidationMatrix gamma = LiquidationMatrix::Zero(n, m);
  bool damped = false;
  double previous = std::numeric_limits<double>::infinity();
  double change = 0.0;
  int round = 0;
  std::vector<double> trace;
  while (true) {
    if (round >= options.max_iter) {
      std::string tail;
      for (std::size_t j = trace.size() > 5 ? trace.size() - 5 : 0; j < trace.size(); ++j) {
        tail += " " + std::to_string(trace[j]);
      }
      throw ConvergenceError("price-making best responses did not settle; last changes:" + tail, round, change);
    }
    ++round;
    Vector total = aggregate(gamma);
    change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector own = gamma.row(i).transpose();
      const Vector others = (total - own).cwiseMax(0.0);
      Vector next = price_making_response(system, strategy, static_cast<std::size_t>(i), others);
      if (damped) next = 0.5 * (own + next);
      change = std::max(change, (next - own).cwiseAbs().maxCoeff());
      total += next - own;
      gamma.row(i) = next.transpose();
    }
    trace.push_back(change);
    if (change < options.tol) break;
    if (round >= 3 && change > previous) damped = true;
    previous = change;
  }

  ClearingResult out;
  const Vector sold = aggregate(gamma).cwiseMin(system.market.shares_outstanding());
  out.prices = {system.market.mtmp(sold), system.market.vwap(sold)};
  out.gamma = gamma;
  out.classes = classify(system, out.prices);
  out.iterations = round;
  out.residual = change;
  out.certificate = UniquenessCertificate::Unchecked;
  return out;
}

}  // namespace firesale
