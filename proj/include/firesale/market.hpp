#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "firesale/types.hpp"

namespace firesale {

enum class DemandFamily { LimitOrderBook, PowerLinear, PowerCompound, Exponential };

std::string to_string(DemandFamily family);
DemandFamily parse_demand_family(const std::string& name);

/// One price level of a limit order book: `depth` shares are absorbed at `price`.
struct BookLevel {
  double price;
  double depth;
};

/// Price-impact law of a single marketable asset.
///
/// The terminal mark-to-market price (MTMP) after `gamma` shares have been sold
/// is f(gamma); the volume weighted average price (VWAP) realised on those
/// sales is the running mean (1/gamma) * integral_0^gamma f. Both equal one
/// before any sale. Instances are immutable and validated on construction.
class InverseDemand {
 public:
  /// Levels are (price, depth) pairs starting at price 1 with strictly
  /// decreasing prices; total depth must cover `shares_outstanding`.
  static InverseDemand limit_order_book(std::vector<BookLevel> levels, double shares_outstanding);
  /// f(g) = 1 - b g^a with a >= 0 and 0 <= b < M^-a.
  static InverseDemand power_linear(double a, double b, double shares_outstanding);
  /// f(g) = (1 - b g)^a with a b >= 0 and b M < 1.
  static InverseDemand power_compound(double a, double b, double shares_outstanding);
  /// f(g) = exp(-b g) with b >= 0.
  static InverseDemand exponential(double b, double shares_outstanding);

  DemandFamily family() const { return family_; }
  double exponent() const { return a_; }
  double slope() const { return b_; }
  const std::vector<BookLevel>& levels() const { return levels_; }
  double shares_outstanding() const { return shares_; }

  bool differentiable() const;
  /// True when the price never moves (f == 1 on [0, M]).
  bool constant_price() const;

  /// Copy with a different impact parameter b (not valid for order books).
  InverseDemand with_slope(double b) const;

 private:
  InverseDemand() = default;
  void validate() const;

  DemandFamily family_ = DemandFamily::PowerLinear;
  double a_ = 1.0;
  double b_ = 0.0;
  double shares_ = 1.0;
  std::vector<BookLevel> levels_;
};

double mtmp(const InverseDemand& asset, double gamma);
double vwap(const InverseDemand& asset, double gamma);
double mtmp_derivative(const InverseDemand& asset, double gamma);
/// d/dgamma of the VWAP; equals f'(0)/2 at gamma = 0.
double vwap_derivative(const InverseDemand& asset, double gamma);

/// Minimum over a uniform grid on [0, M] of
///   g'(gamma) = alpha theta f(gamma) + (1 - alpha theta) f'(gamma) (M - gamma),
/// the slope of this asset's term in the uniqueness map. Positive certifies
/// the asset.
double uniqueness_margin(const InverseDemand& asset, double alpha, double theta_min,
                         std::size_t grid_points = 1001);

struct RiskWeightInterval {
  enum class Kind { Interval, Empty, NotApplicable };
  Kind kind = Kind::NotApplicable;
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double alpha) const { return kind == Kind::Interval && alpha > lower && alpha < upper; }
};

/// Open interval of risk-weights for which the closed-form uniqueness
/// criterion applies to this asset.
RiskWeightInterval risk_weight_interval(const InverseDemand& asset, double theta_min);

/// Ordered collection of assets; index k is shared by every other module.
class Market {
 public:
  Market() = default;
  explicit Market(std::vector<InverseDemand> assets);

  std::size_t size() const { return assets_.size(); }
  const InverseDemand& operator[](std::size_t k) const { return assets_[k]; }
  const std::vector<InverseDemand>& assets() const { return assets_; }
  std::vector<InverseDemand>& assets() { return assets_; }

  Vector shares_outstanding() const;
  bool differentiable() const;

  Vector mtmp(const Vector& gamma) const;
  Vector vwap(const Vector& gamma) const;
  Vector mtmp_derivative(const Vector& gamma) const;
  Vector vwap_derivative(const Vector& gamma) const;

 private:
  std::vector<InverseDemand> assets_;
};

}  // namespace firesale
