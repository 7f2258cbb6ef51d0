// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "firesale/errors.hpp"
#include "firesale/policy.hpp"
#include "firesale/scenario.hpp"
#include "firesale/sensitivity.hpp"
#include "support.hpp"

using namespace firesale;
using firesale::testing::relative_error;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;
};

class Timer {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Largest MLC residual over every clearing point of criteria 1-7.
double g_worst_mlc = 0.0;
int g_mlc_points = 0;

void record_mlc(const BankingSystem& s, const ClearingResult& r) {
  const Vector res = verify_mlc(s, r.prices, r.gamma);
  if (res.size() > 0) g_worst_mlc = std::max(g_worst_mlc, res.maxCoeff());
  ++g_mlc_points;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

Outcome two_bank_low() {
  const auto s = firesale::testing::two_bank(0.15);
  const auto strategy = LiquidationStrategy::single_asset();
  Timer t;
  const auto r = picard_clear(s, strategy);
  const double elapsed = t.ms();
  record_mlc(s, r);
  const double root = std::sqrt(61.0);
  const double eq = std::abs(r.prices.q[0] - (34.0 - root) / 30.0);
  const double eqb = std::abs(r.prices.q_bar[0] - (64.0 - root) / 60.0);
  const double eg = std::abs(r.gamma(0, 0) - 0.8467);
  Outcome o;
  o.passed = eq < 1e-8 && eqb < 1e-8 && eg < 1e-4 && r.classes[0] == SolvencyClass::SolventIlliquid &&
             r.classes[1] == SolvencyClass::SolventLiquid && elapsed < 10.0;
  o.detail = fmt("|dq|=%.2e |dq_bar|=%.2e |dgamma|=%.2e", eq, eqb, eg) + fmt(" time=%.3fms", elapsed);
  return o;
}

Outcome two_bank_high() {
  const auto s = firesale::testing::two_bank(0.45);
  const auto r = picard_clear(s, LiquidationStrategy::single_asset());
  record_mlc(s, r);
  const auto before = classify(s.banks[1], s.regulation, PricePair::unit(1));
  Outcome o;
  o.passed = std::abs(r.prices.q[0] - 0.10) < 1e-10 && std::abs(r.prices.q_bar[0] - 0.55) < 1e-10 &&
             r.classes[0] == SolvencyClass::Insolvent && r.classes[1] == SolvencyClass::Insolvent &&
             before == SolvencyClass::SolventLiquid;
  o.detail = fmt("q=%.12f q_bar=%.12f", r.prices.q[0], r.prices.q_bar[0]) + " bank 2: " + to_string(before) +
             " -> " + to_string(r.classes[1]);
  return o;
}

Outcome vwap_identity() {
  std::mt19937_64 rng(20240301);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    const InverseDemand d = firesale::testing::random_demand(rng, draw);
    const double g = d.shares_outstanding() * u(rng);
    worst = std::max(worst, std::abs(g * vwap(d, g) - firesale::testing::integral_of_mtmp(d, g)));
  }
  return {worst < 1e-8, fmt("1000 draws, max error %.2e", worst)};
}

double scalar_dq_dh() {
  // Implicit differentiation of q = 1 - 0.15 (h - 0.8 q) / (0.5 - 0.3 q) at h = 0.9.
  const double q = (34.0 - std::sqrt(61.0)) / 30.0;
  const double den = 0.5 - 0.3 * q;
  return -(0.15 / den) / (1.0 + 0.15 * (-0.8 * den + 0.3 * (0.9 - 0.8 * q)) / (den * den));
}

Outcome sensitivity_oracle() {
  std::mt19937_64 rng(4);
  const auto strategy = LiquidationStrategy::proportional();
  double worst = 0.0;
  int checked = 0;
  for (int draw = 0; draw < 50; ++draw) {
    const auto rs = firesale::testing::random_unique_system(rng);
    record_mlc(rs.system, rs.clearing);
    const SensitivitySolver solver(rs.system, strategy, rs.clearing);
    for (const auto& tag : all_param_tags(rs.system)) {
      const auto a = solver.solve(tag);
      const auto fd = finite_difference_check(rs.system, strategy, tag);
      for (Eigen::Index k = 0; k < a.dq.size(); ++k) {
        worst = std::max({worst, relative_error(a.dq[k], fd.dq[k]), relative_error(a.dq_bar[k], fd.dq_bar[k])});
      }
      ++checked;
    }
  }
  const auto s = firesale::testing::two_bank(0.15);
  const auto r = picard_clear(s, LiquidationStrategy::single_asset());
  const double dq = price_sensitivity(s, LiquidationStrategy::single_asset(), r, ParamTag::shortfall(0)).dq[0];
  const double oracle = scalar_dq_dh();
  Outcome o;
  o.passed = worst < 1e-4 && std::abs(dq - (-0.960)) < 1e-3 && std::abs(dq - oracle) < 1e-10;
  o.detail = fmt("%g tags, max rel error %.2e", checked, worst) + fmt("; dq/dh1=%.6f oracle=%.6f", dq, oracle);
  return o;
}

Outcome uniqueness() {
  std::mt19937_64 rng(5);
  const auto strategy = LiquidationStrategy::proportional();
  double worst = 0.0;
  for (int draw = 0; draw < 50; ++draw) {
    const auto rs = firesale::testing::random_unique_system(rng, 0.0);
    const auto up = monotone_clear(rs.system, strategy, Extremal::Greatest);
    const auto down = monotone_clear(rs.system, strategy, Extremal::Least);
    record_mlc(rs.system, up);
    record_mlc(rs.system, down);
    worst = std::max({worst, (up.prices.q - down.prices.q).cwiseAbs().maxCoeff(),
                      (up.prices.q_bar - down.prices.q_bar).cwiseAbs().maxCoeff()});
  }

  // Order book with two fixed points, against a brute-force scan of the
  // aggregate-liquidation fixed-point residual.
  const auto s = firesale::testing::lob_two_fixed_points();
  const auto single = LiquidationStrategy::single_asset();
  const auto up = monotone_clear(s, single, Extremal::Greatest);
  const auto down = monotone_clear(s, single, Extremal::Least);
  record_mlc(s, up);
  record_mlc(s, down);
  const InverseDemand& d = s.market[0];
  const double M = d.shares_outstanding();
  std::vector<double> roots;
  bool was_fixed = false;
  for (int j = 0; j <= 10000; ++j) {
    const double g = M * j / 10000.0;
    const PricePair p{Vector::Constant(1, mtmp(d, g)), Vector::Constant(1, vwap(d, g))};
    const bool fixed = std::abs(aggregate(liquidate(single, s, p))[0] - g) < 1e-9;
    if (fixed && !was_fixed) roots.push_back(g);
    was_fixed = fixed;
  }
  const bool scan = roots.size() == 2 && std::abs(up.aggregate()[0] - roots.front()) < 1e-9 &&
                    std::abs(down.aggregate()[0] - roots.back()) < 1e-9;
  Outcome o;
  o.passed = worst < 1e-10 && up.prices.q[0] > down.prices.q[0] && scan;
  o.detail = fmt("max |greatest - least| %.2e; order book q: greatest %.4f least %.4f", worst, up.prices.q[0],
                 down.prices.q[0]) +
             (scan ? ", scan agrees" : ", scan disagrees");
  return o;
}

Outcome ccar() {
  Timer t;
  const auto report = run_case_study("ccar");
  const double elapsed = t.ms();
  const auto strategy = LiquidationStrategy::proportional();
  for (double loss : {0.0, 0.05}) {
    const auto s = ccar_system(loss);
    record_mlc(s, picard_clear(s, strategy));
  }
  Outcome o;
  o.passed = report.passed() && elapsed < 5000.0;
  std::ostringstream os;
  os << fmt("time=%.0fms", elapsed);
  for (const auto& c : report.checks) {
    if (!c.passed) os << "; " << c.name << " expected " << c.expected << " got " << c.actual;
  }
  o.detail = os.str();
  return o;
}

Outcome diversification() {
  Timer t;
  const auto report = run_case_study("diversification");
  const double elapsed = t.ms();
  SolverOptions options;
  options.tol = 1e-10;
  for (double lambda : make_grid(0.0, 1.0, 0.01)) {
    const auto s = diversification_system(lambda);
    for (const std::string name : {"proportional", "pt-equilibrium", "pm-equilibrium"}) {
      record_mlc(s, run_clearing(s, name, options));
    }
  }
  Outcome o;
  o.passed = report.passed() && elapsed < 60000.0;
  std::ostringstream os;
  os << fmt("time=%.0fms", elapsed);
  for (const auto& c : report.checks) {
    if (!c.passed) os << "; " << c.name << " expected " << c.expected << " got " << c.actual;
  }
  o.detail = os.str();
  return o;
}

Outcome sign_properties() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto strategy = LiquidationStrategy::proportional();
  constexpr double slack = 1e-12;
  int violations = 0;
  std::map<std::string, int> by_property;
  const auto fail = [&](const std::string& what) {
    ++violations;
    ++by_property[what];
  };
  for (int draw = 0; draw < 200; ++draw) {
    const auto rs = firesale::testing::random_unique_system(rng);
    const auto& s = rs.system;
    const PolicyAnalysis pa(s, strategy, rs.clearing);
    if (pa.cost_regulation_market() < -slack) fail("CR");
    for (std::size_t i = 0; i < s.n(); ++i) {
      if (pa.cost_regulation_realized(i) < -slack) fail("CRL");
      if (pa.cost_regulation_mtm(i) < -slack) fail("CMI");
      if (pa.solver().solve(ParamTag::shortfall(i)).dq.maxCoeff() > slack) fail("dq/dh");
    }
    for (std::size_t k = 0; k < s.m(); ++k) {
      if (pa.solver().solve(ParamTag::asset_purchase(k)).dq.minCoeff() < -slack) fail("dq/dbeta");
    }
    if (pa.solver().w().minCoeff() < -slack) fail("W");
    const Vector M = s.market.shares_outstanding();
    for (int trial = 0; trial < 5; ++trial) {
      const Vector g = M.cwiseProduct(Vector::NullaryExpr(M.size(), [&] { return u(rng); }));
      const PricePair p{s.market.mtmp(g), s.market.vwap(g)};
      if (!in_price_lattice(s.market, clearing_map(s, strategy, p))) fail("lattice");
    }
  }
  Outcome o;
  o.passed = violations == 0;
  std::ostringstream os;
  os << "200 draws, " << violations << " violations";
  for (const auto& [what, count] : by_property) os << "; " << what << ": " << count;
  o.detail = os.str();
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "two-bank low impact", two_bank_low},
      {2, "two-bank high impact", two_bank_high},
      {3, "VWAP integral identity", vwap_identity},
      {4, "sensitivity oracle equivalence", sensitivity_oracle},
      {5, "uniqueness certification", uniqueness},
      {6, "six-bank reproduction", ccar},
      {7, "diversification", diversification},
      {8, "sign properties", sign_properties},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.passed ? 0 : 1;
    std::printf("criterion %d %s: %s  [%s]\n", c.id, o.passed ? "PASS" : "FAIL", c.name, o.detail.c_str());
  }
  const bool mlc = g_worst_mlc < 1e-8 && g_mlc_points > 0;
  failures += mlc ? 0 : 1;
  std::printf("criterion 9 %s: minimal liquidation condition  [%d clearing points, max residual %.2e]\n",
              mlc ? "PASS" : "FAIL", g_mlc_points, g_worst_mlc);
  return failures == 0 ? 0 : 1;
}
