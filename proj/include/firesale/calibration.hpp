#pragma once

#include <string>
#include <vector>

#include "firesale/banking.hpp"
#include "firesale/types.hpp"

namespace firesale {

/// Aggregate balance-sheet figures for one bank, in currency units.
struct AggregateBankRecord {
  std::string name;
  double capital = 0.0;
  double liquid = 0.0;
  double marketable_value = 0.0;     // 1's
  double nonmarketable_value = 0.0;  // ell
  double marketable_rwa = 0.0;       // 1'A s
  double nonmarketable_rwa = 0.0;    // alpha_ell ell
};

struct Shock {
  /// Loss applied to every non-marketable book: ell <- (1 - loss) ell.
  double nonmarketable_loss = 0.0;
};

/// Minimum-norm s >= 0 with 1's = value and alpha's = rwa, by an active-set
/// loop on the two-multiplier Lagrange solution.
Vector min_norm_portfolio(double value, double rwa, const Vector& alpha);

/// alpha_ell = rwa / ell; zero when both are zero.
double nonmarketable_risk_weight(double rwa, double ell);

/// b_k = 4 alpha_k theta / (5 (1 - alpha_k theta) M_k) for a linear inverse
/// demand; keeps the uniqueness margin alpha_k theta / 5 > 0 at gamma = 0.
double liquidity_param(double alpha, double theta_min, double shares_outstanding);

/// Builds a system of linear-impact assets from aggregate records. Each
/// asset's outstanding shares are the banks' combined holdings.
BankingSystem build_ccar_system(const std::vector<AggregateBankRecord>& records, const Vector& alpha,
                                double theta_min, const Shock& shock = {});

/// Whitespace-separated rows: name capital liquid marketable nonmarketable
/// marketable_rwa nonmarketable_rwa. The name may contain spaces; '#'
/// starts a comment.
std::vector<AggregateBankRecord> load_bank_records(const std::string& path);
/// One risk-weight per row or per whitespace-separated token; '#' comments.
Vector load_risk_weights(const std::string& path);

/// Directory of the bundled data files.
std::string data_dir();

}  // namespace firesale
