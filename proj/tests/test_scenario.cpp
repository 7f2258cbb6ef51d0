#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "firesale/calibration.hpp"
#include "firesale/errors.hpp"
#include "firesale/scenario.hpp"

using namespace firesale;
using nlohmann::json;

namespace {

json bundled(const std::string& name) {
  std::ifstream in(bundled_scenario(name));
  return json::parse(in);
}

std::string rejected_path(const json& doc) {
  try {
    parse_scenario(doc.dump());
  } catch (const ValidationError& e) {
    return e.path();
  }
  return "";
}

std::string rejected_message(const json& doc) {
  try {
    parse_scenario(doc.dump());
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("bundled scenarios load") {
  const auto low = load_scenario(bundled_scenario("two-bank-low"));
  CHECK(low.system.m() == 1);
  CHECK(low.system.n() == 2);
  CHECK(low.strategy == "single");
  CHECK(low.system.market[0].shares_outstanding() == 2.0);
  for (const auto& name : {"two-bank-high", "diversification"}) CHECK_NOTHROW(load_scenario(bundled_scenario(name)));
  CHECK_NOTHROW(load_scenario(data_dir() + "/scenarios/lob_two_fixed_points.json"));
  CHECK_THROWS_AS(load_scenario(data_dir() + "/scenarios/none.json"), Error);
}

TEST_CASE("invariant violations are reported with field paths") {
  auto doc = bundled("two-bank-low");
  doc["regulation"]["alpha"][0] = 6.0;  // alpha theta = 1.2
  CHECK(rejected_path(doc) == "regulation.alpha[0]");
  CHECK(rejected_message(doc).find("alpha_k * theta_min < 1") != std::string::npos);

  doc = bundled("two-bank-low");
  doc["banks"][0]["holdings"][0] = 1.5;  // 2.5 > M = 2
  CHECK(rejected_path(doc) == "assets[0].shares_outstanding");
  CHECK(rejected_message(doc).find("sum_i s_ik <= M_k") != std::string::npos);

  doc = bundled("two-bank-low");
  doc["banks"][1]["holdings"] = json::array({1.0, 0.0});
  CHECK(rejected_path(doc).rfind("banks[1].holdings", 0) == 0);

  doc = bundled("two-bank-low");
  doc["strategy"] = "random";
  CHECK(rejected_path(doc) == "strategy");

  doc = bundled("two-bank-low");
  doc["solver"]["max_iter"] = 0;
  CHECK(rejected_path(doc) == "solver.max_iter");

  doc = bundled("two-bank-low");
  doc["assets"][0]["family"] = "quadratic";
  CHECK(rejected_path(doc).rfind("assets[0]", 0) == 0);

  CHECK_THROWS_AS(parse_scenario("{ not json"), ValidationError);
}

TEST_CASE("scenarios round-trip") {
  for (const auto& name : case_study_names()) {
    if (name == "ccar") continue;
    const auto first = load_scenario(bundled_scenario(name));
    const auto text = dump_scenario(first);
    const auto second = parse_scenario(text);
    CHECK(dump_scenario(second) == text);
    CHECK(second.system.n() == first.system.n());
    CHECK(second.solver.tol == first.solver.tol);
  }
  ScenarioConfig ccar{"ccar", ccar_system(0.05), "proportional", {}, 7};
  const auto again = parse_scenario(dump_scenario(ccar));
  CHECK(again.seed == std::optional<std::uint64_t>(7));
  for (std::size_t i = 0; i < 6; ++i) CHECK(again.system.banks[i].holdings == ccar.system.banks[i].holdings);
}

TEST_CASE("clearing through the named strategies") {
  const auto low = load_scenario(bundled_scenario("two-bank-low"));
  const auto r = run_clearing(low.system, low.strategy, low.solver);
  CHECK(r.prices.q[0] == doctest::Approx((34.0 - std::sqrt(61.0)) / 30.0).epsilon(1e-10));
  const auto tables = clearing_tables(low.system, r);
  REQUIRE(tables.size() == 3);
  CHECK(tables[1].rows.size() == 2);
  CHECK(tables[1].rows[0][1] == "solvent_illiquid");
  std::ostringstream csv;
  tables[0].write_csv(csv);
  CHECK(csv.str().rfind("asset,q,q_bar,sold,market_cap\n", 0) == 0);
  CHECK(is_price_making("pm-equilibrium"));
  CHECK_THROWS(make_strategy("nope"));
}

TEST_CASE("sweeps") {
  auto div = load_scenario(bundled_scenario("diversification"));
  SweepSpec spec{"lambda", {0.0, 0.5, 1.0}, "proportional", 3};
  const Table t = sweep(div, spec, div.solver);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.header.front() == "lambda");
  CHECK(t.header.back() == "status");
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::stod(t.rows[j][0]) == spec.grid[j]);
    CHECK(t.rows[j].back() == "ok");
  }
  // lambda = 0 is fully diverse: bank 1 holds only asset 2.
  const auto s0 = apply_sweep_value(div.system, "lambda", 0.0);
  CHECK(s0.banks[0].holdings[0] == 0.0);
  CHECK(s0.banks[0].holdings[1] == 2.0);
  const auto s1 = apply_sweep_value(div.system, "lambda", 1.0);
  CHECK(s1.banks[0].holdings == s1.banks[1].holdings);

  spec.grid = {};
  CHECK_THROWS_AS(sweep(div, spec, div.solver), ValidationError);
  spec.grid = {0.5, 0.2};
  CHECK_THROWS_AS(sweep(div, spec, div.solver), ValidationError);
  spec.parameter = "gamma";
  spec.grid = {0.1};
  CHECK_THROWS(sweep(div, spec, div.solver));

  // Failed points keep their row.
  SolverOptions tight = div.solver;
  tight.max_iter = 1;
  spec = {"lambda", {0.2, 0.4}, "proportional", 2};
  const Table failed = sweep(div, spec, tight);
  REQUIRE(failed.rows.size() == 2);
  CHECK(failed.rows[0].back().rfind("error:", 0) == 0);

  // Shock of zero on the calibrated system: no fire sale.
  ScenarioConfig ccar{"ccar", ccar_system(0.0), "proportional", {}, {}};
  const Table shock = sweep(ccar, {"shock", {0.0, 0.05}, "proportional", 0}, {});
  CHECK(shock.rows[0][1] == "1");
  CHECK(shock.rows[0][16] == "1");
  CHECK(shock.rows[1].back() == "ok");

  CHECK(make_grid(0.0, 1.0, 0.25).size() == 5);
  CHECK(make_grid(0.0, 1.0, 0.01).size() == 101);
  CHECK_THROWS_AS(make_grid(1.0, 0.0, 0.1), ValidationError);
}

TEST_CASE("case studies") {
  for (const auto& name : {"two-bank-low", "two-bank-high", "diversification"}) {
    const auto report = run_case_study(name);
    CAPTURE(name);
    CHECK(report.passed());
    CHECK_FALSE(report.checks.empty());
  }
  CHECK_THROWS(run_case_study("unknown"));
}
