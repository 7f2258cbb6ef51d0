#include "firesale/parameters.hpp"

#include <charconv>

#include "firesale/errors.hpp"

namespace firesale {

namespace {

std::size_t parse_index(const std::string& text, const std::string& whole) {
  std::size_t value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc{} || ptr != last) {
    throw ConfigurationError("bad index in parameter '" + whole + "'");
  }
  return value;
}

}  // namespace

std::string to_string(const ParamTag& tag) {
  switch (tag.kind) {
    case ParamTag::Kind::Threshold: return "theta";
    case ParamTag::Kind::RiskWeight: return "alpha:" + std::to_string(tag.asset);
    case ParamTag::Kind::Shortfall: return "shortfall:" + std::to_string(tag.bank);
    case ParamTag::Kind::Holding: return "holding:" + std::to_string(tag.bank) + "," + std::to_string(tag.asset);
    case ParamTag::Kind::AssetPurchase: return "purchase:" + std::to_string(tag.asset);
  }
  return "unknown";
}

ParamTag parse_param_tag(const std::string& text) {
  if (text == "theta") return ParamTag::threshold();
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigurationError("unknown parameter '" + text + "'");
  const std::string head = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (head == "alpha") return ParamTag::risk_weight(parse_index(rest, text));
  if (head == "shortfall") return ParamTag::shortfall(parse_index(rest, text));
  if (head == "purchase") return ParamTag::asset_purchase(parse_index(rest, text));
  if (head == "holding") {
    const auto comma = rest.find(',');
    if (comma == std::string::npos) throw ConfigurationError("holding parameter needs J,K: '" + text + "'");
    return ParamTag::holding(parse_index(rest.substr(0, comma), text), parse_index(rest.substr(comma + 1), text));
  }
  throw ConfigurationError("unknown parameter '" + text + "'");
}

std::vector<ParamTag> all_param_tags(const BankingSystem& system) {
  std::vector<ParamTag> out{ParamTag::threshold()};
  for (std::size_t k = 0; k < system.m(); ++k) out.push_back(ParamTag::risk_weight(k));
  for (std::size_t i = 0; i < system.n(); ++i) out.push_back(ParamTag::shortfall(i));
  for (std::size_t j = 0; j < system.n(); ++j) {
    for (std::size_t k = 0; k < system.m(); ++k) out.push_back(ParamTag::holding(j, k));
  }
  for (std::size_t k = 0; k < system.m(); ++k) out.push_back(ParamTag::asset_purchase(k));
  return out;
}

void check_in_range(const ParamTag& tag, const BankingSystem& system) {
  const bool uses_bank = tag.kind == ParamTag::Kind::Shortfall || tag.kind == ParamTag::Kind::Holding;
  const bool uses_asset = tag.kind == ParamTag::Kind::RiskWeight || tag.kind == ParamTag::Kind::Holding ||
                          tag.kind == ParamTag::Kind::AssetPurchase;
  if (uses_bank && tag.bank >= system.n()) {
    throw ConfigurationError("bank index out of range in '" + to_string(tag) + "'");
  }
  if (uses_asset && tag.asset >= system.m()) {
    throw ConfigurationError("asset index out of range in '" + to_string(tag) + "'");
  }
}

double parameter_value(const BankingSystem& system, const ParamTag& tag) {
  check_in_range(tag, system);
  switch (tag.kind) {
    case ParamTag::Kind::Threshold: return system.regulation.theta_min;
    case ParamTag::Kind::RiskWeight: return system.regulation.alpha[tag.asset];
    case ParamTag::Kind::Shortfall: return shortfall(system.banks[tag.bank], system.regulation);
    case ParamTag::Kind::Holding: return system.banks[tag.bank].holdings[tag.asset];
    case ParamTag::Kind::AssetPurchase: return 0.0;
  }
  return 0.0;
}

BankingSystem perturbed(const BankingSystem& system, const ParamTag& tag, double delta) {
  check_in_range(tag, system);
  BankingSystem out = system;
  switch (tag.kind) {
    case ParamTag::Kind::Threshold: out.regulation.theta_min += delta; break;
    case ParamTag::Kind::RiskWeight: out.regulation.alpha[tag.asset] += delta; break;
    case ParamTag::Kind::Shortfall: out.banks[tag.bank].liabilities += delta; break;
    case ParamTag::Kind::Holding: out.banks[tag.bank].holdings[tag.asset] += delta; break;
    case ParamTag::Kind::AssetPurchase:
      throw PreconditionError("asset purchases are a clearing input, not a system parameter");
  }
  return out;
}

}  // namespace firesale
