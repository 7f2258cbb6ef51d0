#include "firesale/calibration.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "firesale/errors.hpp"

#ifndef FIRESALE_DATA_DIR
#define FIRESALE_DATA_DIR "data"
#endif

namespace firesale {

namespace {

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

}  // namespace

Vector min_norm_portfolio(double value, double rwa, const Vector& alpha) {
  const auto m = alpha.size();
  if (m == 0) throw CalibrationError("no assets to allocate to");
  if (!(value >= 0.0) || !(rwa >= 0.0)) throw CalibrationError("portfolio value and RWA must be nonnegative");
  if (value == 0.0) {
    if (rwa != 0.0) throw CalibrationError("positive RWA on an empty portfolio");
    return Vector::Zero(m);
  }
  const double ratio = rwa / value;
  const double slack = 1e-12 * std::max(1.0, std::abs(ratio));
  if (ratio < alpha.minCoeff() - slack || ratio > alpha.maxCoeff() + slack) {
    std::ostringstream os;
    os << "average risk-weight " << ratio << " outside [" << alpha.minCoeff() << ", " << alpha.maxCoeff() << "]";
    throw CalibrationError(os.str());
  }

  std::vector<bool> free(static_cast<std::size_t>(m), true);
  Vector s = Vector::Zero(m);
  for (int pass = 0; pass < 4 * static_cast<int>(m) + 8; ++pass) {
    // Stationarity on the free set: s_k = l1 + l2 alpha_k.
    double count = 0.0, sa = 0.0, saa = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (!free[static_cast<std::size_t>(k)]) continue;
      count += 1.0;
      sa += alpha[k];
      saa += alpha[k] * alpha[k];
    }
    if (count == 0.0) break;
    const double det = count * saa - sa * sa;
    double l1 = 0.0, l2 = 0.0;
    if (std::abs(det) <= 1e-14 * std::max(1.0, count * saa)) {
      l1 = value / count;  // all free weights equal: equal split
    } else {
      l1 = (saa * value - sa * rwa) / det;
      l2 = (count * rwa - sa * value) / det;
    }
    Eigen::Index worst = -1;
    double most_negative = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double v = free[static_cast<std::size_t>(k)] ? l1 + l2 * alpha[k] : 0.0;
      s[k] = v;
      if (v < most_negative) {
        most_negative = v;
        worst = k;
      }
    }
    if (worst >= 0 && most_negative < -1e-12 * value) {
      free[static_cast<std::size_t>(worst)] = false;
      continue;
    }
    // A clamped component whose multiplier has the wrong sign goes back in.
    Eigen::Index readd = -1;
    double best = 1e-12;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (free[static_cast<std::size_t>(k)]) continue;
      const double grad = l1 + l2 * alpha[k];
      if (grad > best) {
        best = grad;
        readd = k;
      }
    }
    if (readd < 0) return s.cwiseMax(0.0);
    free[static_cast<std::size_t>(readd)] = true;
  }
  throw CalibrationError("active-set iteration for the minimum-norm portfolio did not terminate");
}

double nonmarketable_risk_weight(double rwa, double ell) {
  if (ell > 0.0) return rwa / ell;
  if (rwa == 0.0) return 0.0;
  throw CalibrationError("non-marketable RWA without non-marketable assets");
}

double liquidity_param(double alpha, double theta_min, double shares_outstanding) {
  const double at = alpha * theta_min;
  if (!(at < 1.0)) throw ConfigurationError("assume that alpha_k * theta_min < 1 for every asset");
  if (!(shares_outstanding > 0.0)) throw CalibrationError("shares_outstanding must be positive");
  return 4.0 * at / (5.0 * (1.0 - at) * shares_outstanding);
}

BankingSystem build_ccar_system(const std::vector<AggregateBankRecord>& records, const Vector& alpha,
                                double theta_min, const Shock& shock) {
  if (!(shock.nonmarketable_loss >= 0.0 && shock.nonmarketable_loss <= 1.0)) {
    throw CalibrationError("non-marketable loss must lie in [0, 1]");
  }
  const auto m = alpha.size();
  BankingSystem system;
  system.regulation.theta_min = theta_min;
  system.regulation.alpha = alpha;
  for (const auto& r : records) {
    Bank b;
    b.name = r.name;
    b.liquid = r.liquid;
    try {
      b.alpha_nonmarketable = nonmarketable_risk_weight(r.nonmarketable_rwa, r.nonmarketable_value);
      b.holdings = min_norm_portfolio(r.marketable_value, r.marketable_rwa, alpha);
    } catch (const CalibrationError& e) {
      throw CalibrationError("bank '" + r.name + "': " + e.what());
    }
    b.liabilities = r.liquid + r.marketable_value + r.nonmarketable_value - r.capital;
    if (b.liabilities < 0.0) throw CalibrationError("bank '" + r.name + "': capital exceeds total assets");
    // Calibrate first, then shock the non-marketable book.
    b.nonmarketable = r.nonmarketable_value * (1.0 - shock.nonmarketable_loss);
    system.banks.push_back(std::move(b));
  }

  std::vector<InverseDemand> assets;
  for (Eigen::Index k = 0; k < m; ++k) {
    double M = 0.0;
    for (const auto& b : system.banks) M += b.holdings[k];
    if (!(M > 0.0)) throw CalibrationError("asset " + std::to_string(k) + " is held by no bank");
    try {
      assets.push_back(InverseDemand::power_linear(1.0, liquidity_param(alpha[k], theta_min, M), M));
    } catch (const ConfigurationError& e) {
      throw CalibrationError("asset " + std::to_string(k) + ": " + e.what());
    }
  }
  system.market = Market(std::move(assets));
  system.validate();
  return system;
}

std::vector<AggregateBankRecord> load_bank_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open bank records '" + path + "'");
  std::vector<AggregateBankRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream tokens(strip_comment(line));
    std::vector<std::string> words;
    for (std::string w; tokens >> w;) words.push_back(w);
    if (words.empty()) continue;
    if (words.size() < 7) {
      throw ConfigurationError(path + ":" + std::to_string(lineno) + ": expected a name and six numbers");
    }
    const std::size_t first = words.size() - 6;
    AggregateBankRecord r;
    for (std::size_t j = 0; j < first; ++j) r.name += (j ? " " : "") + words[j];
    double v[6];
    for (std::size_t j = 0; j < 6; ++j) {
      try {
        std::size_t used = 0;
        v[j] = std::stod(words[first + j], &used);
        if (used != words[first + j].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigurationError(path + ":" + std::to_string(lineno) + ": bad number '" + words[first + j] + "'");
      }
    }
    r.capital = v[0];
    r.liquid = v[1];
    r.marketable_value = v[2];
    r.nonmarketable_value = v[3];
    r.marketable_rwa = v[4];
    r.nonmarketable_rwa = v[5];
    out.push_back(r);
  }
  if (out.empty()) throw ConfigurationError("no bank records in '" + path + "'");
  return out;
}

Vector load_risk_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open risk-weights '" + path + "'");
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream tokens(strip_comment(line));
    for (std::string w; tokens >> w;) {
      try {
        values.push_back(std::stod(w));
      } catch (const std::exception&) {
        throw ConfigurationError("bad risk-weight '" + w + "' in '" + path + "'");
      }
    }
  }
  if (values.empty()) throw ConfigurationError("no risk-weights in '" + path + "'");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string data_dir() {
  if (const char* env = std::getenv("FIRESALE_DATA")) return env;
  return FIRESALE_DATA_DIR;
}

}  // namespace firesale
