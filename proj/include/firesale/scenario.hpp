#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "firesale/banking.hpp"
#include "firesale/clearing.hpp"
#include "firesale/liquidation.hpp"

namespace firesale {

/// Strategy names accepted in scenarios and on the command line: the
/// price-taking kinds plus "pm-equilibrium" for the price-making game.
bool is_price_making(const std::string& strategy);
LiquidationStrategy make_strategy(const std::string& strategy);

struct ScenarioConfig {
  std::string name;
  BankingSystem system;
  std::string strategy = "proportional";
  SolverOptions solver;
  std::optional<std::uint64_t> seed;
};

/// Parses and validates a JSON scenario. Failures are ValidationError with
/// the offending field path, e.g. "banks[1].holdings[0]".
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);
std::string dump_scenario(const ScenarioConfig& config);
void save_scenario(const ScenarioConfig& config, const std::string& path);

/// Clears the scenario with the named strategy (price-making included).
ClearingResult run_clearing(const BankingSystem& system, const std::string& strategy, const SolverOptions& options);

/// Minimal column table rendered as CSV or as an aligned text table.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  void write_csv(std::ostream& os) const;
  void write_pretty(std::ostream& os) const;
  void write(std::ostream& os, const std::string& format) const;
};

std::string format_number(double v);

/// Per-asset prices and sales, then per-bank classes, sales and residuals.
std::vector<Table> clearing_tables(const BankingSystem& system, const ClearingResult& result);
void write_tables(std::ostream& os, const std::vector<Table>& tables, const std::string& format);

struct SweepSpec {
  /// lambda | shock | theta | b:K | alpha:K | liabilities:I
  std::string parameter;
  std::vector<double> grid;
  std::string strategy = "proportional";
  unsigned workers = 0;  // 0 picks the hardware concurrency
};

/// Applies one sweep value to a base system. "lambda" rebuilds the two-bank,
/// two-asset holdings (lambda, M_2 - lambda) and (M_1 - lambda, lambda);
/// "shock" scales every non-marketable book by (1 - value).
BankingSystem apply_sweep_value(const BankingSystem& base, const std::string& parameter, double value);

/// One row per grid value, in grid order: prices, aggregate sales, total
/// market capitalisation M'q, classes and a status column. Points where the
/// solver fails keep their row with the error recorded.
Table sweep(const ScenarioConfig& config, const SweepSpec& spec, const SolverOptions& options);

/// Inclusive grid lo, lo + step, ..., hi (hi included when it lands on the grid).
std::vector<double> make_grid(double lo, double hi, double step);

// Reproduction harness for the bundled case studies.

struct CaseCheck {
  std::string name;
  std::string expected;
  std::string actual;
  bool passed = false;
};

struct CaseStudyReport {
  std::string name;
  std::vector<Table> tables;
  std::vector<CaseCheck> checks;

  bool passed() const;
  Table check_table() const;
};

/// two-bank-low | two-bank-high | diversification | ccar
CaseStudyReport run_case_study(const std::string& name);
std::vector<std::string> case_study_names();

/// Bundled scenario path for a case study name.
std::string bundled_scenario(const std::string& name);

/// The diversification system at a given lambda.
BankingSystem diversification_system(double lambda);
/// The six-bank calibrated system with a non-marketable loss fraction.
BankingSystem ccar_system(double nonmarketable_loss);

}  // namespace firesale
