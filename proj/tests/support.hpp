#pragma once

// Shared oracles and generators for the test suite.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "firesale/clearing.hpp"
#include "firesale/market.hpp"

namespace firesale::testing {

inline BankingSystem two_bank(double b) {
  BankingSystem s;
  s.market = Market({InverseDemand::power_linear(1.0, b, 2.0)});
  s.regulation.theta_min = 0.2;
  s.regulation.alpha = Vector::Constant(1, 1.0);
  s.banks = {Bank{"bank 1", 0.0, 0.0, Vector::Constant(1, 1.0), 0.9, 0.0},
             Bank{"bank 2", 0.0, 0.0, Vector::Constant(1, 1.0), 0.6, 0.0}};
  return s;
}

/// Single-asset order book with fixed points at Gamma = 1 and Gamma = 10.
inline BankingSystem lob_two_fixed_points() {
  BankingSystem s;
  s.market = Market({InverseDemand::limit_order_book({{1.0, 3.0}, {0.8, 4.0}, {0.6, 3.0}}, 10.0)});
  s.regulation.theta_min = 0.2;
  s.regulation.alpha = Vector::Constant(1, 1.0);
  s.banks = {Bank{"bank 1", 0.0, 0.0, Vector::Constant(1, 10.0), 8.2, 0.0}};
  return s;
}

/// integral_0^g f by tanh-sinh quadrature of mtmp, split at the book levels
/// where f jumps.
inline double integral_of_mtmp(const InverseDemand& d, double g) {
  if (g <= 0.0) return 0.0;
  std::vector<double> cuts{0.0};
  if (d.family() == DemandFamily::LimitOrderBook) {
    double cum = 0.0;
    for (const auto& l : d.levels()) {
      cum += l.depth;
      if (cum < g) cuts.push_back(cum);
    }
  }
  cuts.push_back(g);
  boost::math::quadrature::tanh_sinh<double> integrator;
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double lo = cuts[j], hi = cuts[j + 1];
    if (hi <= lo) continue;
    // Evaluate strictly inside the piece so that a jump at the right end is not sampled.
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    total += half * integrator.integrate([&](double t) { return mtmp(d, mid + half * t); }, -1.0, 1.0, 1e-14);
  }
  return total;
}

/// Random demand curve of every family, cycling through them with `draw`.
inline InverseDemand random_demand(std::mt19937_64& rng, int draw) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double M = 0.5 + 10.0 * u(rng);
  switch (draw % 4) {
    case 0: {
      const double a = 3.0 * u(rng);
      return InverseDemand::power_linear(a, 0.99 * u(rng) * std::pow(M, -a), M);
    }
    case 1: {
      const double a = -2.0 + 5.0 * u(rng);
      const double b = 0.99 * u(rng) / M;
      return InverseDemand::power_compound(a, a >= 0.0 ? b : -b, M);
    }
    case 2: return InverseDemand::exponential(3.0 * u(rng), M);
    default: {
      std::vector<BookLevel> levels;
      double price = 1.0, depth = 0.0;
      while (depth < M) {
        const double step = 0.1 + M * u(rng) / 3.0;
        levels.push_back({price, step});
        depth += step;
        price *= 0.5 + 0.49 * u(rng);
      }
      return InverseDemand::limit_order_book(levels, M);
    }
  }
}

/// Smallest relative distance of any bank to a class boundary at `prices`.
inline double boundary_distance(const BankingSystem& s, const PricePair& prices) {
  const Vector w = s.regulation.retained();
  double worst = 1e300;
  for (const auto& b : s.banks) {
    const double h = shortfall(b, s.regulation);
    const double liquid = prices.q.cwiseProduct(w).dot(b.holdings);
    const double full = prices.q_bar.dot(b.holdings);
    const double scale = std::max(full, 1e-12);
    worst = std::min({worst, std::abs(h - liquid) / scale, std::abs(h - full) / scale});
  }
  return worst;
}

struct RandomSystem {
  BankingSystem system;
  ClearingResult clearing;
};

/// Random stressed system whose assets all pass the uniqueness certificate:
/// alpha_k theta < 1/2 and b below alpha theta / ((1 - alpha theta) M) keep the
/// margin positive at gamma = 0, where it is smallest. Instances with a bank
/// within `min_gap` of a class boundary at the clearing point are redrawn.
inline RandomSystem random_unique_system(std::mt19937_64& rng, double min_gap = 1e-3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  for (;;) {
    const auto n = static_cast<std::size_t>(2 + rng() % 5);
    const auto m = static_cast<std::size_t>(1 + rng() % 4);
    BankingSystem s;
    s.regulation.theta_min = uni(0.05, 0.15);
    s.regulation.alpha.resize(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) s.regulation.alpha[static_cast<Eigen::Index>(k)] = uni(0.2, 3.0);

    Matrix holdings(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < holdings.rows(); ++i) {
      for (Eigen::Index k = 0; k < holdings.cols(); ++k) holdings(i, k) = uni(0.5, 5.0);
    }
    std::vector<InverseDemand> assets;
    for (std::size_t k = 0; k < m; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double M = holdings.col(kk).sum() * uni(1.05, 1.5);
      const double at = s.regulation.alpha[kk] * s.regulation.theta_min;
      const double bmax = at / ((1.0 - at) * M);
      const double b = uni(0.2, 0.9) * bmax;
      switch (rng() % 3) {
        case 0: assets.push_back(InverseDemand::power_linear(1.0, b, M)); break;
        case 1: assets.push_back(InverseDemand::exponential(b, M)); break;
        default: assets.push_back(InverseDemand::power_compound(2.0, 0.5 * b, M)); break;
      }
    }
    s.market = Market(std::move(assets));

    for (std::size_t i = 0; i < n; ++i) {
      Bank b;
      b.name = "bank " + std::to_string(i + 1);
      b.holdings = holdings.row(static_cast<Eigen::Index>(i)).transpose();
      b.liquid = uni(0.0, 1.0);
      b.nonmarketable = uni(0.0, 5.0);
      b.alpha_nonmarketable = uni(0.2, 1.0);
      const double cover = b.liquid + (1.0 - b.alpha_nonmarketable * s.regulation.theta_min) * b.nonmarketable;
      b.liabilities = cover + uni(0.0, 1.3) * b.holdings.sum();
      s.banks.push_back(std::move(b));
    }
    s.validate();
    if (certify_uniqueness(s, LiquidationStrategy::proportional()).certificate !=
        UniquenessCertificate::CertifiedUnique) {
      continue;
    }
    ClearingResult r = picard_clear(s, LiquidationStrategy::proportional());
    if (boundary_distance(s, r.prices) < min_gap) continue;
    return {std::move(s), std::move(r)};
  }
}

/// |a - b| relative to the larger magnitude, with `floor` guarding zeros.
inline double relative_error(double a, double b, double floor = 1e-2) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace firesale::testing
