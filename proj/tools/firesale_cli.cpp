#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "firesale/calibration.hpp"
#include "firesale/errors.hpp"
#include "firesale/policy.hpp"
#include "firesale/scenario.hpp"
#include "firesale/sensitivity.hpp"

using namespace firesale;

namespace {

enum Exit { kOk = 0, kFailure = 1, kValidation = 2, kNonConvergence = 3, kMismatch = 4 };

struct Globals {
  std::string config;
  std::string strategy;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::string output = "csv";
  std::optional<std::uint64_t> seed;
};

ScenarioConfig load(const Globals& g) {
  if (g.config.empty()) throw ValidationError("--config", "a scenario file is required");
  ScenarioConfig cfg = load_scenario(g.config);
  if (!g.strategy.empty()) {
    cfg.strategy = g.strategy;
    try {
      make_strategy(cfg.strategy).check(cfg.system);
    } catch (const ConfigurationError& e) {
      throw ValidationError("--strategy", e.what());
    }
  }
  if (g.tol) cfg.solver.tol = *g.tol;
  if (g.max_iter) cfg.solver.max_iter = *g.max_iter;
  if (g.seed) cfg.seed = g.seed;
  return cfg;
}

std::string bank_label(const BankingSystem& s, std::size_t i) {
  return i == PolicyReport::none ? "" : s.banks.at(i).name;
}

int cmd_clear(const Globals& g, const std::string& extremal, const std::vector<std::string>& purchases) {
  const ScenarioConfig cfg = load(g);
  ClearingResult r;
  if (!purchases.empty()) {
    if (is_price_making(cfg.strategy)) throw ValidationError("--purchase", "not supported with pm-equilibrium");
    Vector beta = Vector::Zero(static_cast<Eigen::Index>(cfg.system.m()));
    for (const auto& p : purchases) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw ValidationError("--purchase", "expected K=VALUE, got '" + p + "'");
      std::size_t k = 0;
      double v = 0.0;
      try {
        k = std::stoul(p.substr(0, eq));
        v = std::stod(p.substr(eq + 1));
      } catch (const std::exception&) {
        throw ValidationError("--purchase", "expected K=VALUE, got '" + p + "'");
      }
      if (k >= cfg.system.m() || v < 0.0) throw ValidationError("--purchase", "bad asset index or negative amount");
      beta[static_cast<Eigen::Index>(k)] = v;
    }
    r = clear_with_purchase(cfg.system, make_strategy(cfg.strategy), beta, cfg.solver);
  } else if (!extremal.empty()) {
    if (is_price_making(cfg.strategy)) throw ValidationError("--extremal", "not supported with pm-equilibrium");
    const Extremal dir = extremal == "least" ? Extremal::Least : Extremal::Greatest;
    r = monotone_clear(cfg.system, make_strategy(cfg.strategy), dir, cfg.solver);
  } else {
    r = run_clearing(cfg.system, cfg.strategy, cfg.solver);
  }
  write_tables(std::cout, clearing_tables(cfg.system, r), g.output);
  return kOk;
}

int cmd_sensitivity(const Globals& g, const std::vector<std::string>& params, bool fd_check) {
  const ScenarioConfig cfg = load(g);
  if (is_price_making(cfg.strategy)) throw ValidationError("--strategy", "sensitivities need a price-taking strategy");
  const LiquidationStrategy strategy = make_strategy(cfg.strategy);
  const ClearingResult r = picard_clear(cfg.system, strategy, cfg.solver);
  const SensitivitySolver solver(cfg.system, strategy, r);

  std::vector<ParamTag> tags;
  if (params.empty()) {
    tags = all_param_tags(cfg.system);
  } else {
    for (const auto& p : params) {
      try {
        tags.push_back(parse_param_tag(p));
        check_in_range(tags.back(), cfg.system);
      } catch (const ConfigurationError& e) {
        throw ValidationError("--param", e.what());
      }
    }
  }

  Table t;
  t.header = {"param", "asset", "dq", "dq_bar"};
  if (fd_check) {
    t.header.insert(t.header.end(), {"fd_dq", "fd_dq_bar", "status"});
  }
  t.header.push_back("condition");
  for (const auto& tag : tags) {
    const SensitivityResult s = solver.solve(tag);
    std::optional<SensitivityResult> fd;
    std::string status = "ok";
    if (fd_check) {
      try {
        fd = finite_difference_check(cfg.system, strategy, tag, 1e-6, cfg.solver);
      } catch (const KinkError& e) {
        status = std::string("kink: ") + e.what();
      }
    }
    for (std::size_t k = 0; k < cfg.system.m(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      std::vector<std::string> row{to_string(tag), std::to_string(k), format_number(s.dq[kk]),
                                   format_number(s.dq_bar[kk])};
      if (fd_check) {
        row.push_back(fd ? format_number(fd->dq[kk]) : "");
        row.push_back(fd ? format_number(fd->dq_bar[kk]) : "");
        row.push_back(status);
      }
      row.push_back(format_number(s.condition_number));
      t.add_row(std::move(row));
    }
  }
  t.write(std::cout, g.output);
  return kOk;
}

int cmd_policy(const Globals& g, const std::vector<std::string>& metrics, std::optional<std::size_t> bank,
               std::optional<std::size_t> from, std::optional<std::size_t> asset) {
  const ScenarioConfig cfg = load(g);
  if (is_price_making(cfg.strategy)) throw ValidationError("--strategy", "policy metrics need a price-taking strategy");
  const LiquidationStrategy strategy = make_strategy(cfg.strategy);
  const ClearingResult r = picard_clear(cfg.system, strategy, cfg.solver);
  const PolicyAnalysis analysis(cfg.system, strategy, r);

  std::vector<PolicyMetric> chosen;
  if (metrics.empty()) {
    chosen = {PolicyMetric::CR,  PolicyMetric::CRL, PolicyMetric::CMI, PolicyMetric::DCB,
              PolicyMetric::DPB, PolicyMetric::ICB, PolicyMetric::IPB};
  } else {
    for (const auto& m : metrics) {
      try {
        chosen.push_back(parse_policy_metric(m));
      } catch (const ConfigurationError& e) {
        throw ValidationError("--metric", e.what());
      }
    }
  }
  if (bank && *bank >= cfg.system.n()) throw ValidationError("--bank", "bank index out of range");
  if (from && *from >= cfg.system.n()) throw ValidationError("--from", "bank index out of range");
  if (asset && *asset >= cfg.system.m()) throw ValidationError("--asset", "asset index out of range");

  Table t;
  t.header = {"metric", "bank", "recipient", "asset", "value", "applicable", "verdict"};
  for (auto metric : chosen) {
    std::vector<PolicyReport> reports;
    if (bank || from || asset) {
      // --from names the funding bank of a private bailout, --bank its recipient.
      const bool private_bailout = metric == PolicyMetric::DPB || metric == PolicyMetric::IPB;
      const std::size_t subject = private_bailout ? from.value_or(bank.value_or(0)) : bank.value_or(0);
      reports.push_back(analysis.report(metric, subject, bank.value_or(0), asset.value_or(0)));
    } else {
      reports = analysis.report_all(metric);
    }
    for (const auto& rep : reports) {
      t.add_row({to_string(rep.metric), bank_label(cfg.system, rep.bank), bank_label(cfg.system, rep.other),
                 rep.asset == PolicyReport::none ? "" : std::to_string(rep.asset), format_number(rep.value),
                 rep.applicable ? "yes" : "no", rep.verdict});
    }
  }
  t.write(std::cout, g.output);
  return kOk;
}

int cmd_calibrate(const Globals& g, bool ccar, const std::string& records, const std::string& weights,
                  double theta, double shock, const std::string& out) {
  std::string records_path = records;
  std::string weights_path = weights;
  if (ccar) {
    if (records_path.empty()) records_path = data_dir() + "/ccar_banks.txt";
    if (weights_path.empty()) weights_path = data_dir() + "/ccar_risk_weights.txt";
  }
  if (records_path.empty() || weights_path.empty()) {
    throw ValidationError("calibrate", "pass --ccar or both --records and --risk-weights");
  }
  ScenarioConfig cfg;
  cfg.name = ccar ? "ccar" : "calibrated";
  cfg.system = build_ccar_system(load_bank_records(records_path), load_risk_weights(weights_path), theta,
                                 Shock{shock});
  cfg.strategy = g.strategy.empty() ? "proportional" : g.strategy;
  if (g.tol) cfg.solver.tol = *g.tol;
  if (g.max_iter) cfg.solver.max_iter = *g.max_iter;
  cfg.seed = g.seed;
  if (out.empty()) {
    std::cout << dump_scenario(cfg);
  } else {
    save_scenario(cfg, out);
  }
  return kOk;
}

int cmd_case_study(const Globals& g, const std::string& name) {
  std::vector<std::string> names = name == "all" ? case_study_names() : std::vector<std::string>{name};
  bool ok = true;
  for (const auto& n : names) {
    const CaseStudyReport report = run_case_study(n);
    std::cout << "# " << report.name << "\n";
    write_tables(std::cout, report.tables, g.output);
    std::cout << '\n';
    report.check_table().write(std::cout, g.output);
    std::cout << (report.passed() ? "# ok\n" : "# MISMATCH\n");
    if (&n != &names.back()) std::cout << '\n';
    ok = ok && report.passed();
  }
  return ok ? kOk : kMismatch;
}

int cmd_sweep(const Globals& g, const std::string& parameter, const std::vector<double>& values, double lo,
              double hi, double step, unsigned workers) {
  const ScenarioConfig cfg = load(g);
  SweepSpec spec;
  spec.parameter = parameter;
  spec.grid = values.empty() ? make_grid(lo, hi, step) : values;
  spec.strategy = cfg.strategy;
  spec.workers = workers;
  sweep(cfg, spec, cfg.solver).write(std::cout, g.output);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fire-sale contagion under risk-weighted capital requirements"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Scenario file (JSON)");
  app.add_option("--strategy", g.strategy, "single | proportional | utility | pt-equilibrium | pm-equilibrium");
  app.add_option("--tol", g.tol, "Solver tolerance")->check(CLI::PositiveNumber);
  app.add_option("--max-iter", g.max_iter, "Solver iteration cap")->check(CLI::PositiveNumber);
  app.add_option("--output", g.output, "Output format")->check(CLI::IsMember({"csv", "table"}));
  app.add_option("--seed", g.seed, "Seed recorded with the scenario");

  auto* clear = app.add_subcommand("clear", "Compute clearing prices and liquidations");
  std::string extremal;
  std::vector<std::string> purchases;
  clear->add_option("--extremal", extremal, "Monotone iteration to the greatest or least clearing")
      ->check(CLI::IsMember({"greatest", "least"}));
  clear->add_option("--purchase", purchases, "Central purchase K=VALUE (repeatable)");

  auto* sens = app.add_subcommand("sensitivity", "Price sensitivities at the clearing point");
  std::vector<std::string> params;
  bool fd_check = false;
  sens->add_option("--param", params, "theta | alpha:K | shortfall:I | holding:J,K | purchase:K (default: all)");
  sens->add_flag("--fd-check", fd_check, "Compare against finite differences");

  auto* pol = app.add_subcommand("policy", "Costs of regulation and bailout values");
  std::vector<std::string> metrics;
  std::optional<std::size_t> bank, from, asset;
  pol->add_option("--metric", metrics, "cr | crl | cmi | dcb | dpb | icb | ipb (default: all)");
  pol->add_option("--bank", bank, "Subject bank, or the recipient of a private bailout");
  pol->add_option("--from", from, "Funding bank of a private bailout");
  pol->add_option("--asset", asset, "Asset index");

  auto* cal = app.add_subcommand("calibrate", "Build a scenario from aggregate balance sheets");
  bool ccar = false;
  std::string records, weights, out;
  double theta = 0.08, shock = 0.0;
  cal->add_flag("--ccar", ccar, "Use the bundled six-bank data");
  cal->add_option("--records", records, "Bank records file");
  cal->add_option("--risk-weights", weights, "Risk-weights file");
  cal->add_option("--theta", theta, "Minimum capital ratio")->capture_default_str();
  cal->add_option("--shock", shock, "Loss fraction on non-marketable assets")->check(CLI::Range(0.0, 1.0));
  cal->add_option("--out", out, "Write the scenario here instead of stdout");

  auto* cs = app.add_subcommand("case-study", "Reproduce a bundled case study");
  std::string study;
  cs->add_option("name", study, "two-bank-low | two-bank-high | diversification | ccar | all")->required();

  auto* sw = app.add_subcommand("sweep", "Clear the scenario over a parameter grid");
  std::string sweep_param;
  std::vector<double> values;
  double lo = 0.0, hi = 1.0, step = 0.1;
  unsigned workers = 0;
  sw->add_option("--param", sweep_param, "lambda | shock | theta | b:K | alpha:K | liabilities:I")->required();
  sw->add_option("--values", values, "Explicit grid values");
  sw->add_option("--lo", lo, "Grid start")->capture_default_str();
  sw->add_option("--hi", hi, "Grid end")->capture_default_str();
  sw->add_option("--step", step, "Grid step")->capture_default_str();
  sw->add_option("--workers", workers, "Worker threads (0: hardware concurrency)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*clear) return cmd_clear(g, extremal, purchases);
    if (*sens) return cmd_sensitivity(g, params, fd_check);
    if (*pol) return cmd_policy(g, metrics, bank, from, asset);
    if (*cal) return cmd_calibrate(g, ccar, records, weights, theta, shock, out);
    if (*cs) return cmd_case_study(g, study);
    if (*sw) return cmd_sweep(g, sweep_param, values, lo, hi, step, workers);
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ConfigurationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const CalibrationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
