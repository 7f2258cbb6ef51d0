#include <algorithm>
#include <cmath>
#include <limits>

#include "firesale/calibration.hpp"
#include "firesale/errors.hpp"
#include "firesale/policy.hpp"
#include "firesale/scenario.hpp"

namespace firesale {

namespace {

constexpr double kCcarTheta = 0.08;
constexpr double kCcarShock = 0.05;
constexpr std::size_t kBoA = 0;
constexpr std::size_t kJPM = 3;

CaseCheck check_near(const std::string& name, double expected, double actual, double tol) {
  return {name, format_number(expected) + " +- " + format_number(tol), format_number(actual),
          std::abs(actual - expected) <= tol};
}

CaseCheck check_relative(const std::string& name, double expected, double actual, double rel) {
  return {name, format_number(expected) + " within " + format_number(100.0 * rel) + "%", format_number(actual),
          std::abs(actual - expected) <= rel * std::abs(expected)};
}

CaseCheck check_class(const std::string& name, SolvencyClass expected, SolvencyClass actual) {
  return {name, to_string(expected), to_string(actual), expected == actual};
}

CaseCheck check_true(const std::string& name, const std::string& expected, const std::string& actual, bool ok) {
  return {name, expected, actual, ok};
}

CaseStudyReport two_bank(const std::string& name, bool low) {
  const ScenarioConfig cfg = load_scenario(bundled_scenario(name));
  const ClearingResult r = run_clearing(cfg.system, cfg.strategy, cfg.solver);
  CaseStudyReport out;
  out.name = name;
  out.tables = clearing_tables(cfg.system, r);
  if (low) {
    const double root = std::sqrt(61.0);
    out.checks.push_back(check_near("q*", (34.0 - root) / 30.0, r.prices.q[0], 1e-8));
    out.checks.push_back(check_near("q_bar*", (64.0 - root) / 60.0, r.prices.q_bar[0], 1e-8));
    out.checks.push_back(check_near("gamma_1", 0.8467, r.gamma(0, 0), 1e-4));
    out.checks.push_back(check_near("gamma_2", 0.0, r.gamma(1, 0), 1e-12));
    out.checks.push_back(check_class("class bank 1", SolvencyClass::SolventIlliquid, r.classes[0]));
    out.checks.push_back(check_class("class bank 2", SolvencyClass::SolventLiquid, r.classes[1]));
  } else {
    out.checks.push_back(check_near("q*", 0.10, r.prices.q[0], 1e-10));
    out.checks.push_back(check_near("q_bar*", 0.55, r.prices.q_bar[0], 1e-10));
    out.checks.push_back(check_class("class bank 1", SolvencyClass::Insolvent, r.classes[0]));
    out.checks.push_back(check_class("class bank 2", SolvencyClass::Insolvent, r.classes[1]));
    const auto before = classify(cfg.system, PricePair::unit(cfg.system.m()));
    out.checks.push_back(check_class("class bank 2 before the fire sale", SolvencyClass::SolventLiquid, before[1]));
  }
  return out;
}

CaseStudyReport diversification() {
  const std::vector<double> grid = make_grid(0.0, 1.0, 0.01);
  const std::vector<std::string> strategies{"proportional", "pt-equilibrium", "pm-equilibrium"};
  SolverOptions options;
  options.tol = 1e-10;

  Table table;
  table.header = {"lambda"};
  for (const std::string s : {"prop", "pt", "pm"}) {
    table.header.push_back("q1_" + s);
    table.header.push_back("q2_" + s);
    table.header.push_back("market_cap_" + s);
  }
  std::vector<std::vector<double>> cap(strategies.size(), std::vector<double>(grid.size(), 0.0));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const BankingSystem system = diversification_system(grid[j]);
    const Vector M = system.market.shares_outstanding();
    std::vector<std::string> row{format_number(grid[j])};
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      const ClearingResult r = run_clearing(system, strategies[s], options);
      cap[s][j] = M.dot(r.prices.q);
      row.push_back(format_number(r.prices.q[0]));
      row.push_back(format_number(r.prices.q[1]));
      row.push_back(format_number(cap[s][j]));
    }
    table.add_row(std::move(row));
  }

  CaseStudyReport out;
  out.name = "diversification";
  out.tables.push_back(table);

  const auto& prop = cap[0];
  const auto argmax = static_cast<std::size_t>(std::max_element(prop.begin(), prop.end()) - prop.begin());
  out.checks.push_back(check_true("proportional maximum", "lambda in [0.3, 0.5]", format_number(grid[argmax]),
                                  grid[argmax] >= 0.3 - 1e-9 && grid[argmax] <= 0.5 + 1e-9));
  std::size_t argmin = grid.size() - 1;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (grid[j] >= 0.2 - 1e-9 && prop[j] < prop[argmin]) argmin = j;
  }
  out.checks.push_back(check_true("proportional minimum on [0.2, 1]", "lambda = 1", format_number(grid[argmin]),
                                  argmin == grid.size() - 1));

  const auto nondecreasing = [&](const std::vector<double>& v, const std::string& label) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < v.size(); ++j) worst = std::min(worst, v[j] - v[j - 1]);
    out.checks.push_back(check_true(label + " market cap nondecreasing", "min step >= -1e-6", format_number(worst),
                                    worst >= -1e-6));
  };
  nondecreasing(cap[1], "PT");
  nondecreasing(cap[2], "PM");

  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (grid[j] >= 0.45 - 1e-9) worst = std::min(worst, cap[2][j] - cap[1][j]);
  }
  out.checks.push_back(check_true("PM >= PT for lambda >= 0.45", "min(PM - PT) >= 0", format_number(worst),
                                  worst >= -1e-9));
  return out;
}

CaseStudyReport ccar() {
  CaseStudyReport out;
  out.name = "ccar";

  const BankingSystem calm = ccar_system(0.0);
  const ClearingResult r0 = picard_clear(calm, LiquidationStrategy::proportional());
  const bool unit = (r0.prices.q.array() == 1.0).all() && (r0.prices.q_bar.array() == 1.0).all();
  out.checks.push_back(check_true("unshocked prices", "exactly (1, 1)", unit ? "(1, 1)" : "moved", unit));

  const BankingSystem system = ccar_system(kCcarShock);
  const auto strategy = LiquidationStrategy::proportional();
  const ClearingResult r = picard_clear(system, strategy);
  out.tables = clearing_tables(system, r);
  const PolicyAnalysis policy(system, strategy, r);

  for (std::size_t i = 0; i < system.n(); ++i) {
    const SolvencyClass expected = i == kBoA   ? SolvencyClass::Insolvent
                                   : i == kJPM ? SolvencyClass::SolventIlliquid
                                               : SolvencyClass::SolventLiquid;
    out.checks.push_back(check_class("class " + system.banks[i].name, expected, r.classes[i]));
  }

  Table banks;
  banks.header = {"bank", "class", "crl", "cmi", "dcb", "dpb_to_" + system.banks[kJPM].name};
  bool crl_pattern = true;
  bool cmi_nonzero = true;
  for (std::size_t i = 0; i < system.n(); ++i) {
    const double crl = policy.cost_regulation_realized(i);
    const double cmi = policy.cost_regulation_mtm(i);
    const bool liquidating = i == kBoA || i == kJPM;
    crl_pattern = crl_pattern && ((std::abs(crl) > 1e-9) == liquidating);
    cmi_nonzero = cmi_nonzero && std::abs(cmi) > 1e-9;
    const bool donor = i != kJPM && r.classes[i] != SolvencyClass::Insolvent;
    banks.add_row({system.banks[i].name, to_string(r.classes[i]), format_number(crl), format_number(cmi),
                   format_number(policy.direct_central_bailout(i)),
                   donor ? format_number(policy.direct_private_bailout(i, kJPM)) : ""});
  }
  out.tables.push_back(banks);
  out.checks.push_back(check_true("CRL nonzero pattern", "nonzero only for BoA and JPM",
                                  crl_pattern ? "as expected" : "differs", crl_pattern));
  out.checks.push_back(check_true("CMI nonzero for all banks", "all nonzero", cmi_nonzero ? "all nonzero" : "some zero",
                                  cmi_nonzero));

  out.checks.push_back(check_relative("CR", 3276.8, policy.cost_regulation_market(), 0.10));
  out.checks.push_back(check_relative("DCB JPM", 0.3507, policy.direct_central_bailout(kJPM), 0.10));

  double lo = 0.0, hi = -1.0;
  bool first = true;
  for (std::size_t j = 0; j < system.n(); ++j) {
    if (j == kJPM || r.classes[j] == SolvencyClass::Insolvent) continue;
    const double v = policy.direct_private_bailout(j, kJPM);
    lo = first ? v : std::min(lo, v);
    hi = first ? v : std::max(hi, v);
    first = false;
  }
  out.checks.push_back(check_true("DPB to JPM", "all in [-1, -0.6]",
                                  "[" + format_number(lo) + ", " + format_number(hi) + "]",
                                  !first && lo >= -1.0 && hi <= -0.6));

  Table assets;
  assets.header = {"asset", "alpha", "q", "icb"};
  double icb_max = -1e300;
  for (std::size_t k = 0; k < system.m(); ++k) {
    const double icb = policy.indirect_central_bailout(k);
    icb_max = std::max(icb_max, icb);
    const auto kk = static_cast<Eigen::Index>(k);
    assets.add_row({std::to_string(k), format_number(system.regulation.alpha[kk]), format_number(r.prices.q[kk]),
                    format_number(icb)});
  }
  out.tables.push_back(assets);
  out.checks.push_back(check_true("all ICB < 0", "max ICB < 0", format_number(icb_max), icb_max < 0.0));
  return out;
}

}  // namespace

bool CaseStudyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CaseCheck& c) { return c.passed; });
}

Table CaseStudyReport::check_table() const {
  Table t;
  t.header = {"check", "expected", "actual", "status"};
  for (const auto& c : checks) t.add_row({c.name, c.expected, c.actual, c.passed ? "ok" : "MISMATCH"});
  return t;
}

std::vector<std::string> case_study_names() { return {"two-bank-low", "two-bank-high", "diversification", "ccar"}; }

std::string bundled_scenario(const std::string& name) {
  std::string file = name;
  std::replace(file.begin(), file.end(), '-', '_');
  return data_dir() + "/scenarios/" + file + ".json";
}

BankingSystem diversification_system(double lambda) {
  static const ScenarioConfig base = load_scenario(bundled_scenario("diversification"));
  return apply_sweep_value(base.system, "lambda", lambda);
}

BankingSystem ccar_system(double nonmarketable_loss) {
  const auto records = load_bank_records(data_dir() + "/ccar_banks.txt");
  const Vector alpha = load_risk_weights(data_dir() + "/ccar_risk_weights.txt");
  return build_ccar_system(records, alpha, kCcarTheta, Shock{nonmarketable_loss});
}

CaseStudyReport run_case_study(const std::string& name) {
  if (name == "two-bank-low") return two_bank(name, true);
  if (name == "two-bank-high") return two_bank(name, false);
  if (name == "diversification") return diversification();
  if (name == "ccar") return ccar();
  throw ConfigurationError("unknown case study '" + name + "'");
}

}  // namespace firesale
