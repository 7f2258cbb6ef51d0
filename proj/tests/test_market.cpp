#include <doctest.h>

#include <cmath>
#include <random>

#include "firesale/errors.hpp"
#include "firesale/market.hpp"
#include "support.hpp"

using namespace firesale;
using firesale::testing::integral_of_mtmp;

namespace {

std::vector<InverseDemand> sample_assets() {
  return {InverseDemand::power_linear(1.0, 0.15, 2.0),   InverseDemand::power_linear(0.5, 0.3, 2.0),
          InverseDemand::power_linear(2.5, 0.05, 3.0),   InverseDemand::power_compound(2.0, 0.1, 5.0),
          InverseDemand::power_compound(-1.0, -0.2, 3.0), InverseDemand::power_compound(0.5, 0.2, 4.0),
          InverseDemand::exponential(1.0, 4.0),           InverseDemand::exponential(0.0, 1.0),
          InverseDemand::limit_order_book({{1.0, 3.0}, {0.8, 4.0}, {0.6, 3.0}}, 10.0)};
}

double central(const auto& f, double x, double h) { return (f(x + h) - f(x - h)) / (2.0 * h); }

}  // namespace

TEST_CASE("mtmp closed forms") {
  const auto lin = InverseDemand::power_linear(1.0, 0.15, 2.0);
  CHECK(mtmp(lin, 0.0) == 1.0);
  CHECK(mtmp(lin, 0.8467) == doctest::Approx(0.8730).epsilon(1e-4));
  const auto book = InverseDemand::limit_order_book({{1.0, 3.0}, {0.8, 4.0}, {0.6, 3.0}}, 10.0);
  CHECK(mtmp(book, 5.0) == 0.8);
  CHECK(mtmp(book, 0.0) == 1.0);
  CHECK(mtmp(book, 10.0) == 0.6);
}

TEST_CASE("vwap closed forms and the 0/0 convention") {
  for (const auto& d : sample_assets()) CHECK(vwap(d, 0.0) == 1.0);
  CHECK(vwap(InverseDemand::power_linear(1.0, 0.15, 2.0), 0.8467) == doctest::Approx(0.9365).epsilon(1e-4));
  const auto e = InverseDemand::exponential(1.0, 4.0);
  CHECK(vwap(e, 1.0) == doctest::Approx(integral_of_mtmp(e, 1.0)).epsilon(1e-12));
  CHECK(vwap(e, 1.0) == doctest::Approx(0.63212).epsilon(1e-5));
}

TEST_CASE("gamma outside [0, M] is a domain error") {
  const auto d = InverseDemand::power_linear(1.0, 0.15, 2.0);
  CHECK_THROWS_AS(mtmp(d, -0.1), DomainError);
  CHECK_THROWS_AS(vwap(d, 2.5), DomainError);
  CHECK_THROWS_AS(mtmp_derivative(d, 3.0), DomainError);
}

TEST_CASE("invalid parameters are rejected at construction") {
  CHECK_THROWS_AS(InverseDemand::power_linear(1.0, 0.5, 2.0), ConfigurationError);  // b >= M^-a
  CHECK_THROWS_AS(InverseDemand::power_compound(2.0, 0.5, 2.0), ConfigurationError);
  CHECK_THROWS_AS(InverseDemand::power_compound(2.0, -0.1, 2.0), ConfigurationError);  // a b < 0
  CHECK_THROWS_AS(InverseDemand::exponential(-1.0, 2.0), ConfigurationError);
  CHECK_THROWS_AS(InverseDemand::limit_order_book({{0.9, 3.0}}, 2.0), ConfigurationError);
  CHECK_THROWS_AS(InverseDemand::limit_order_book({{1.0, 1.0}, {0.8, 1.0}}, 3.0), ConfigurationError);
  CHECK_THROWS_AS(InverseDemand::limit_order_book({{1.0, 1.0}, {1.0, 3.0}}, 3.0), ConfigurationError);
}

TEST_CASE("derivative examples") {
  CHECK(mtmp_derivative(InverseDemand::power_linear(1.0, 0.15, 2.0), 0.5) == doctest::Approx(-0.15));
  CHECK(mtmp_derivative(InverseDemand::exponential(2.0, 1.0), 0.0) == doctest::Approx(-2.0));
  const auto pc = InverseDemand::power_compound(2.0, 0.1, 5.0);
  // f(g) = (1 - 0.1 g)^2, f'(1) = -0.2 * 0.9 = -0.18; checked against a central difference.
  const double fd = central([&](double g) { return mtmp(pc, g); }, 1.0, 1e-6);
  CHECK(mtmp_derivative(pc, 1.0) == doctest::Approx(fd).epsilon(1e-8));
  CHECK(mtmp_derivative(pc, 1.0) == doctest::Approx(-0.18).epsilon(1e-12));

  CHECK(vwap_derivative(InverseDemand::power_linear(1.0, 0.3, 2.0), 1.0) == doctest::Approx(-0.15));
  const auto e = InverseDemand::exponential(1.0, 4.0);
  CHECK(vwap_derivative(e, 0.0) == doctest::Approx(-0.5));
  const double fde = central([&](double g) { return vwap(e, g); }, 1.0, 1e-6);
  CHECK(vwap_derivative(e, 1.0) == doctest::Approx(fde).epsilon(1e-8));
  CHECK(vwap_derivative(e, 1.0) == doctest::Approx(-0.26424).epsilon(1e-4));

  const auto book = InverseDemand::limit_order_book({{1.0, 3.0}, {0.8, 4.0}, {0.6, 3.0}}, 10.0);
  CHECK_THROWS_AS(mtmp_derivative(book, 1.0), PreconditionError);
  CHECK_THROWS_AS(vwap_derivative(book, 1.0), PreconditionError);
}

TEST_CASE("running-mean identity, ordering and monotone proceeds on a dense grid") {
  for (const auto& d : sample_assets()) {
    const double M = d.shares_outstanding();
    double last_proceeds = 0.0;
    for (int j = 1; j <= 200; ++j) {
      const double g = M * j / 200.0;
      CAPTURE(to_string(d.family()));
      CAPTURE(g);
      CHECK(std::abs(g * vwap(d, g) - integral_of_mtmp(d, g)) < 1e-10);
      CHECK(vwap(d, g) >= mtmp(d, g) - 1e-15);
      CHECK(mtmp(d, g) > 0.0);
      const double proceeds = g * vwap(d, g);
      CHECK(proceeds > last_proceeds);
      last_proceeds = proceeds;
    }
  }
}

TEST_CASE("analytic derivatives match central differences on interior points") {
  for (const auto& d : sample_assets()) {
    if (!d.differentiable()) continue;
    const double M = d.shares_outstanding();
    for (int j = 1; j < 50; ++j) {
      const double g = M * j / 50.0;
      const double h = 1e-6 * std::max(1.0, g);
      const double fd = central([&](double x) { return mtmp(d, x); }, g, h);
      const double fdbar = central([&](double x) { return vwap(d, x); }, g, h);
      CAPTURE(to_string(d.family()));
      CAPTURE(g);
      CHECK(firesale::testing::relative_error(mtmp_derivative(d, g), fd, 1e-3) < 1e-6);
      CHECK(firesale::testing::relative_error(vwap_derivative(d, g), fdbar, 1e-3) < 1e-6);
    }
  }
}

TEST_CASE("power-compound log branch and small-b stability") {
  const auto d = InverseDemand::power_compound(-1.0, -0.2, 3.0);
  // a = -1: f = 1/(1 + 0.2 g), integral = ln(1 + 0.2 g)/0.2.
  CHECK(vwap(d, 2.0) == doctest::Approx(std::log1p(0.4) / 0.4).epsilon(1e-14));
  const auto tiny = InverseDemand::power_compound(2.0, 1e-12, 3.0);
  CHECK(vwap(tiny, 1.0) == doctest::Approx(1.0 - 1e-12).epsilon(1e-15));
  CHECK(vwap_derivative(tiny, 1.0) == doctest::Approx(-1e-12).epsilon(1e-6));
}

TEST_CASE("uniqueness margin examples") {
  CHECK(uniqueness_margin(InverseDemand::power_linear(1.0, 0.15, 2.0), 1.0, 0.2) ==
        doctest::Approx(0.2 - 1.6 * 0.15));
  CHECK(uniqueness_margin(InverseDemand::power_linear(1.0, 0.1, 2.0), 1.0, 0.2) ==
        doctest::Approx(0.04));
  CHECK(uniqueness_margin(InverseDemand::power_linear(1.0, 0.0, 2.0), 1.5, 0.2) == doctest::Approx(0.3));
  CHECK_THROWS_AS(uniqueness_margin(InverseDemand::power_linear(1.0, 0.1, 2.0), 6.0, 0.2), ConfigurationError);
}

TEST_CASE("risk-weight interval examples") {
  const auto e = risk_weight_interval(InverseDemand::exponential(0.5, 2.0), 0.2);
  REQUIRE(e.kind == RiskWeightInterval::Kind::Interval);
  CHECK(e.lower == doctest::Approx(2.5));
  CHECK(e.upper == doctest::Approx(5.0));
  const auto flat = risk_weight_interval(InverseDemand::power_linear(1.0, 0.0, 2.0), 0.2);
  REQUIRE(flat.kind == RiskWeightInterval::Kind::Interval);
  CHECK(flat.lower == doctest::Approx(0.0));
  CHECK(flat.upper == doctest::Approx(5.0));
  CHECK(risk_weight_interval(InverseDemand::power_linear(0.5, 0.3, 2.0), 0.2).kind ==
        RiskWeightInterval::Kind::Empty);
  CHECK(risk_weight_interval(InverseDemand::limit_order_book({{1.0, 1.0}, {0.7, 2.0}}, 3.0), 0.2).kind ==
        RiskWeightInterval::Kind::NotApplicable);
  // A single level at price one never moves the price.
  const auto deep = risk_weight_interval(InverseDemand::limit_order_book({{1.0, 3.0}}, 3.0), 0.2);
  CHECK(deep.kind == RiskWeightInterval::Kind::Interval);
  CHECK(deep.upper == doctest::Approx(5.0));
  const auto pc = risk_weight_interval(InverseDemand::power_compound(2.0, 0.1, 4.0), 0.2);
  REQUIRE(pc.kind == RiskWeightInterval::Kind::Interval);
  CHECK(pc.lower == doctest::Approx(5.0 * 0.8 / 1.8));
}

TEST_CASE("interval lower bound is where the margin at gamma = 0 turns nonnegative") {
  const double theta = 0.2;
  for (const auto& d : {InverseDemand::power_compound(2.0, 0.1, 4.0), InverseDemand::exponential(0.5, 2.0),
                        InverseDemand::power_compound(0.5, 0.2, 3.0)}) {
    const auto iv = risk_weight_interval(d, theta);
    REQUIRE(iv.kind == RiskWeightInterval::Kind::Interval);
    const double M = d.shares_outstanding();
    const auto margin0 = [&](double alpha) {
      const double at = alpha * theta;
      return at + (1.0 - at) * mtmp_derivative(d, 0.0) * M;
    };
    // Bisection oracle for the root of the analytic gamma = 0 margin.
    double lo = 0.0, hi = 1.0 / theta - 1e-12;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (margin0(mid) < 0.0 ? lo : hi) = mid;
    }
    CHECK(iv.lower == doctest::Approx(hi).epsilon(1e-10));
  }
}

TEST_CASE("VWAP identity on random draws") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int draw = 0; draw < 300; ++draw) {
    const InverseDemand d = firesale::testing::random_demand(rng, draw);
    const double M = d.shares_outstanding();
    const double g = M * u(rng);
    CAPTURE(draw);
    CHECK(std::abs(g * vwap(d, g) - integral_of_mtmp(d, g)) < 1e-8);
  }
}
