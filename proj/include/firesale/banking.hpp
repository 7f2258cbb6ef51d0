#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "firesale/market.hpp"
#include "firesale/types.hpp"

namespace firesale {

struct Bank {
  std::string name;
  double liquid = 0.0;          // x
  double nonmarketable = 0.0;   // ell, cannot be sold during the crisis
  Vector holdings;              // s, shares of each marketable asset
  double liabilities = 0.0;     // p_bar
  double alpha_nonmarketable = 0.0;
};

struct Regulation {
  double theta_min = 0.0;
  Vector alpha;  // marketable risk-weights, diagonal of A

  /// Diagonal of I - A theta_min.
  Vector retained() const { return Vector::Ones(alpha.size()) - theta_min * alpha; }
  void validate() const;
};

struct PricePair {
  Vector q;      // MTMP
  Vector q_bar;  // VWAP

  static PricePair unit(std::size_t m) { return {Vector::Ones(m), Vector::Ones(m)}; }
};

/// Ordered from worst to best so that `a < b` means "a is a worse class".
enum class SolvencyClass { Insolvent = 0, SolventIlliquid = 1, SolventLiquid = 2 };

std::string to_string(SolvencyClass c);

struct BankingSystem {
  std::vector<Bank> banks;
  Market market;
  Regulation regulation;

  std::size_t n() const { return banks.size(); }
  std::size_t m() const { return market.size(); }

  /// Row i holds bank i's marketable holdings.
  Matrix holdings() const;
  Vector shortfalls() const;

  /// Checks dimensions, signs, alpha_k theta_min < 1 and sum_i s_ik <= M_k.
  void validate() const;
};

/// h_i = p_bar_i - x_i - (1 - alpha_ell,i theta_min) ell_i.
double shortfall(const Bank& bank, const Regulation& regulation);

double capital_ratio_initial(const Bank& bank, const Regulation& regulation);
double capital_ratio_post(const Bank& bank, const Regulation& regulation, const PricePair& prices,
                          const Vector& gamma);

/// Equity after the fire sale: x + ell + q_bar' gamma + q' (s - gamma) - p_bar.
double capital_post(const Bank& bank, const PricePair& prices, const Vector& gamma);

SolvencyClass classify(const Bank& bank, const Regulation& regulation, const PricePair& prices);
std::vector<SolvencyClass> classify(const BankingSystem& system, const PricePair& prices);

/// True when q_bar >= q, and both lie between F(M) and 1 (up to `tol`).
bool in_price_lattice(const Market& market, const PricePair& prices, double tol = 1e-12);

}  // namespace firesale
