#include "firesale/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "firesale/errors.hpp"

namespace firesale {

using nlohmann::json;

namespace {

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ValidationError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ValidationError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(path, "must be finite");
  return x;
}

double nonneg(const json& v, const std::string& path) {
  const double x = number(v, path);
  if (x < 0.0) throw ValidationError(path, "must be nonnegative");
  return x;
}

double number_or(const json& obj, const std::string& key, double fallback, const std::string& path) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, path + "." + key);
}

Vector vector_of(const json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError(path, "expected an array");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) out[static_cast<Eigen::Index>(k)] = nonneg(v[k], path + "[" + std::to_string(k) + "]");
  return out;
}

std::string indexed(const std::string& base, std::size_t k) { return base + "[" + std::to_string(k) + "]"; }

InverseDemand parse_asset(const json& a, const std::string& path) {
  const json& fam = require(a, "family", path);
  if (!fam.is_string()) throw ValidationError(path + ".family", "expected a string");
  const double M = number(require(a, "shares_outstanding", path), path + ".shares_outstanding");
  DemandFamily family;
  try {
    family = parse_demand_family(fam.get<std::string>());
  } catch (const ConfigurationError& e) {
    throw ValidationError(path + ".family", e.what());
  }
  try {
    switch (family) {
      case DemandFamily::LimitOrderBook: {
        const json& levels = require(a, "levels", path);
        if (!levels.is_array()) throw ValidationError(path + ".levels", "expected an array");
        std::vector<BookLevel> book;
        for (std::size_t j = 0; j < levels.size(); ++j) {
          const std::string lp = indexed(path + ".levels", j);
          book.push_back({number(require(levels[j], "price", lp), lp + ".price"),
                          number(require(levels[j], "depth", lp), lp + ".depth")});
        }
        return InverseDemand::limit_order_book(std::move(book), M);
      }
      case DemandFamily::PowerLinear:
        return InverseDemand::power_linear(number(require(a, "a", path), path + ".a"),
                                           number(require(a, "b", path), path + ".b"), M);
      case DemandFamily::PowerCompound:
        return InverseDemand::power_compound(number(require(a, "a", path), path + ".a"),
                                             number(require(a, "b", path), path + ".b"), M);
      case DemandFamily::Exponential:
        return InverseDemand::exponential(number(require(a, "b", path), path + ".b"), M);
    }
  } catch (const ConfigurationError& e) {
    throw ValidationError(path, e.what());
  }
  throw ValidationError(path + ".family", "unsupported family");
}

json asset_json(const InverseDemand& d) {
  json a;
  a["family"] = to_string(d.family());
  switch (d.family()) {
    case DemandFamily::LimitOrderBook: {
      json levels = json::array();
      for (const auto& l : d.levels()) levels.push_back({{"price", l.price}, {"depth", l.depth}});
      a["levels"] = levels;
      break;
    }
    case DemandFamily::Exponential:
      a["b"] = d.slope();
      break;
    default:
      a["a"] = d.exponent();
      a["b"] = d.slope();
  }
  a["shares_outstanding"] = d.shares_outstanding();
  return a;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

}  // namespace

bool is_price_making(const std::string& strategy) { return strategy == "pm-equilibrium"; }

LiquidationStrategy make_strategy(const std::string& strategy) {
  if (is_price_making(strategy)) return LiquidationStrategy::price_taking();
  LiquidationStrategy s;
  s.kind = parse_strategy(strategy);
  return s;
}

ScenarioConfig parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("<root>", std::string("parse error: ") + e.what());
  }
  if (!root.is_object()) throw ValidationError("<root>", "expected an object");

  ScenarioConfig cfg;
  if (root.contains("name")) cfg.name = root["name"].get<std::string>();

  const json& reg = require(root, "regulation", "");
  cfg.system.regulation.theta_min = number(require(reg, "theta_min", "regulation"), "regulation.theta_min");
  if (!(cfg.system.regulation.theta_min > 0.0)) throw ValidationError("regulation.theta_min", "must be positive");
  cfg.system.regulation.alpha = vector_of(require(reg, "alpha", "regulation"), "regulation.alpha");
  for (Eigen::Index k = 0; k < cfg.system.regulation.alpha.size(); ++k) {
    const double at = cfg.system.regulation.alpha[k] * cfg.system.regulation.theta_min;
    if (!(at < 1.0)) {
      throw ValidationError(indexed("regulation.alpha", static_cast<std::size_t>(k)),
                            "alpha_k * theta_min = " + format_number(at) +
                                " violates the standing assumption alpha_k * theta_min < 1");
    }
  }

  const json& assets = require(root, "assets", "");
  if (!assets.is_array() || assets.empty()) throw ValidationError("assets", "expected a nonempty array");
  std::vector<InverseDemand> market;
  for (std::size_t k = 0; k < assets.size(); ++k) market.push_back(parse_asset(assets[k], indexed("assets", k)));
  cfg.system.market = Market(std::move(market));
  const std::size_t m = cfg.system.market.size();
  if (static_cast<std::size_t>(cfg.system.regulation.alpha.size()) != m) {
    throw ValidationError("regulation.alpha", "expected " + std::to_string(m) + " risk-weights, one per asset");
  }

  const json& banks = require(root, "banks", "");
  if (!banks.is_array()) throw ValidationError("banks", "expected an array");
  for (std::size_t i = 0; i < banks.size(); ++i) {
    const std::string path = indexed("banks", i);
    const json& b = banks[i];
    Bank bank;
    bank.name = b.contains("name") ? b["name"].get<std::string>() : "bank " + std::to_string(i + 1);
    bank.liquid = nonneg(require(b, "liquid", path), path + ".liquid");
    bank.nonmarketable = nonneg(require(b, "nonmarketable", path), path + ".nonmarketable");
    bank.liabilities = nonneg(require(b, "liabilities", path), path + ".liabilities");
    bank.alpha_nonmarketable = nonneg(require(b, "alpha_nonmarketable", path), path + ".alpha_nonmarketable");
    bank.holdings = vector_of(require(b, "holdings", path), path + ".holdings");
    if (static_cast<std::size_t>(bank.holdings.size()) != m) {
      throw ValidationError(path + ".holdings", "expected " + std::to_string(m) + " entries, one per asset");
    }
    cfg.system.banks.push_back(std::move(bank));
  }
  for (std::size_t k = 0; k < m; ++k) {
    double held = 0.0;
    for (const auto& b : cfg.system.banks) held += b.holdings[static_cast<Eigen::Index>(k)];
    const double M = cfg.system.market[k].shares_outstanding();
    if (held > M * (1.0 + 1e-12)) {
      throw ValidationError(indexed("assets", k) + ".shares_outstanding",
                            "combined holdings " + format_number(held) + " exceed shares outstanding " +
                                format_number(M) + " (sum_i s_ik <= M_k)");
    }
  }

  if (root.contains("strategy")) {
    if (!root["strategy"].is_string()) throw ValidationError("strategy", "expected a string");
    cfg.strategy = root["strategy"].get<std::string>();
    try {
      make_strategy(cfg.strategy).check(cfg.system);
    } catch (const ConfigurationError& e) {
      throw ValidationError("strategy", e.what());
    }
  }
  if (root.contains("solver")) {
    const json& s = root["solver"];
    cfg.solver.tol = number_or(s, "tol", cfg.solver.tol, "solver");
    if (!(cfg.solver.tol > 0.0)) throw ValidationError("solver.tol", "must be positive");
    const double it = number_or(s, "max_iter", cfg.solver.max_iter, "solver");
    if (!(it >= 1.0) || it != std::floor(it)) throw ValidationError("solver.max_iter", "must be a positive integer");
    cfg.solver.max_iter = static_cast<int>(it);
  }
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) throw ValidationError("seed", "expected a nonnegative integer");
    cfg.seed = root["seed"].get<std::uint64_t>();
  }
  cfg.system.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path, "cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string dump_scenario(const ScenarioConfig& config) {
  json root;
  if (!config.name.empty()) root["name"] = config.name;
  root["regulation"] = {{"theta_min", config.system.regulation.theta_min},
                        {"alpha", vector_json(config.system.regulation.alpha)}};
  json assets = json::array();
  for (const auto& a : config.system.market.assets()) assets.push_back(asset_json(a));
  root["assets"] = assets;
  json banks = json::array();
  for (const auto& b : config.system.banks) {
    banks.push_back({{"name", b.name},
                     {"liquid", b.liquid},
                     {"nonmarketable", b.nonmarketable},
                     {"liabilities", b.liabilities},
                     {"alpha_nonmarketable", b.alpha_nonmarketable},
                     {"holdings", vector_json(b.holdings)}});
  }
  root["banks"] = banks;
  root["strategy"] = config.strategy;
  root["solver"] = {{"tol", config.solver.tol}, {"max_iter", config.solver.max_iter}};
  if (config.seed) root["seed"] = *config.seed;
  return root.dump(2) + "\n";
}

void save_scenario(const ScenarioConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write '" + path + "'");
  out << dump_scenario(config);
}

ClearingResult run_clearing(const BankingSystem& system, const std::string& strategy, const SolverOptions& options) {
  if (is_price_making(strategy)) return price_making_clear(system, make_strategy(strategy), options);
  return picard_clear(system, make_strategy(strategy), options);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void Table::write_csv(std::ostream& os) const {
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string& c = cells[j];
      if (j) os << ',';
      if (c.find_first_of(",\"\n") != std::string::npos) {
        os << '"';
        for (char ch : c) os << (ch == '"' ? "\"\"" : std::string(1, ch));
        os << '"';
      } else {
        os << c;
      }
    }
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

void Table::write_pretty(std::ostream& os) const {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t j = 0; j < header.size(); ++j) width[j] = header[j].size();
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size() && j < width.size(); ++j) width[j] = std::max(width[j], r[j].size());
  }
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      os << (j ? "  " : "") << std::left << std::setw(static_cast<int>(j < width.size() ? width[j] : 0)) << cells[j];
    }
    os << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w + 2;
  os << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
  for (const auto& r : rows) line(r);
}

void Table::write(std::ostream& os, const std::string& format) const {
  if (format == "table") {
    write_pretty(os);
  } else {
    write_csv(os);
  }
}

void write_tables(std::ostream& os, const std::vector<Table>& tables, const std::string& format) {
  for (std::size_t t = 0; t < tables.size(); ++t) {
    if (t) os << '\n';
    tables[t].write(os, format);
  }
}

std::vector<Table> clearing_tables(const BankingSystem& system, const ClearingResult& result) {
  Table assets;
  assets.header = {"asset", "q", "q_bar", "sold", "market_cap"};
  const Vector sold = result.aggregate();
  const Vector M = system.market.shares_outstanding();
  for (std::size_t k = 0; k < system.m(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    assets.add_row({std::to_string(k), format_number(result.prices.q[kk]), format_number(result.prices.q_bar[kk]),
                    format_number(sold[kk]), format_number(M[kk] * result.prices.q[kk])});
  }

  Table banks;
  banks.header = {"bank", "class", "shortfall", "liquidated_value", "mlc_residual", "capital_after"};
  const Vector residual = verify_mlc(system, result.prices, result.gamma);
  for (std::size_t i = 0; i < system.n(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const Bank& b = system.banks[i];
    const Vector g = result.gamma.row(ii).transpose();
    banks.add_row({b.name, to_string(result.classes[i]), format_number(shortfall(b, system.regulation)),
                   format_number(result.prices.q_bar.dot(g)), format_number(residual[ii]),
                   format_number(capital_post(b, result.prices, g))});
  }

  Table summary;
  summary.header = {"iterations", "residual", "total_market_cap", "certificate"};
  summary.add_row({std::to_string(result.iterations), format_number(result.residual),
                   format_number(M.dot(result.prices.q)), to_string(result.certificate)});
  return {assets, banks, summary};
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ValidationError("grid", "need step > 0 and hi >= lo");
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long j = 0; j <= count; ++j) out.push_back(lo + static_cast<double>(j) * step);
  return out;
}

BankingSystem apply_sweep_value(const BankingSystem& base, const std::string& parameter, double value) {
  BankingSystem s = base;
  const auto colon = parameter.find(':');
  const std::string head = parameter.substr(0, colon);
  std::size_t index = 0;
  if (colon != std::string::npos) {
    try {
      index = std::stoul(parameter.substr(colon + 1));
    } catch (const std::exception&) {
      throw ValidationError("sweep.parameter", "bad index in '" + parameter + "'");
    }
  }
  if (head == "lambda") {
    if (s.n() != 2 || s.m() != 2) throw ValidationError("sweep.parameter", "lambda needs two banks and two assets");
    const Vector M = s.market.shares_outstanding();
    s.banks[0].holdings << value, M[1] - value;
    s.banks[1].holdings << M[0] - value, value;
  } else if (head == "shock") {
    for (auto& b : s.banks) b.nonmarketable *= 1.0 - value;
  } else if (head == "theta") {
    s.regulation.theta_min = value;
  } else if (head == "b") {
    if (index >= s.m()) throw ValidationError("sweep.parameter", "asset index out of range");
    s.market.assets()[index] = s.market[index].with_slope(value);
  } else if (head == "alpha") {
    if (index >= s.m()) throw ValidationError("sweep.parameter", "asset index out of range");
    s.regulation.alpha[static_cast<Eigen::Index>(index)] = value;
  } else if (head == "liabilities") {
    if (index >= s.n()) throw ValidationError("sweep.parameter", "bank index out of range");
    s.banks[index].liabilities = value;
  } else {
    throw ValidationError("sweep.parameter", "unknown sweep parameter '" + parameter + "'");
  }
  s.validate();
  return s;
}

Table sweep(const ScenarioConfig& config, const SweepSpec& spec, const SolverOptions& options) {
  if (spec.grid.empty()) throw ValidationError("sweep.grid", "grid is empty");
  if (!std::is_sorted(spec.grid.begin(), spec.grid.end())) throw ValidationError("sweep.grid", "grid is not sorted");
  // Reject an unknown parameter before spawning any work.
  apply_sweep_value(config.system, spec.parameter, spec.grid.front());

  const std::size_t m = config.system.m();
  Table table;
  table.header = {spec.parameter};
  for (std::size_t k = 0; k < m; ++k) table.header.push_back("q" + std::to_string(k));
  for (std::size_t k = 0; k < m; ++k) table.header.push_back("q_bar" + std::to_string(k));
  for (std::size_t k = 0; k < m; ++k) table.header.push_back("sold" + std::to_string(k));
  table.header.push_back("market_cap");
  for (const auto& b : config.system.banks) table.header.push_back("class:" + b.name);
  table.header.push_back("iterations");
  table.header.push_back("status");

  const std::size_t points = spec.grid.size();
  table.rows.assign(points, {});
  const auto evaluate = [&](std::size_t j) {
    std::vector<std::string> row{format_number(spec.grid[j])};
    try {
      const BankingSystem s = apply_sweep_value(config.system, spec.parameter, spec.grid[j]);
      const ClearingResult r = run_clearing(s, spec.strategy, options);
      const Vector sold = r.aggregate();
      for (std::size_t k = 0; k < m; ++k) row.push_back(format_number(r.prices.q[static_cast<Eigen::Index>(k)]));
      for (std::size_t k = 0; k < m; ++k) row.push_back(format_number(r.prices.q_bar[static_cast<Eigen::Index>(k)]));
      for (std::size_t k = 0; k < m; ++k) row.push_back(format_number(sold[static_cast<Eigen::Index>(k)]));
      row.push_back(format_number(s.market.shares_outstanding().dot(r.prices.q)));
      for (auto c : r.classes) row.push_back(to_string(c));
      row.push_back(std::to_string(r.iterations));
      row.push_back("ok");
    } catch (const std::exception& e) {
      row.resize(1);
      row.resize(table.header.size() - 1, "");
      row.push_back(std::string("error: ") + e.what());
    }
    table.rows[j] = std::move(row);
  };

  unsigned workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, points));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t j = next++; j < points; j = next++) evaluate(j);
    });
  }
  for (auto& t : pool) t.join();
  return table;
}

}  // namespace firesale
