#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "saac/valuations.hpp"

namespace saac {

// Value functions travel as {"m": m, "table": [v(0), v(1), ..., v(2^m - 1)]}
// with entries in bitmask order.
inline nlohmann::json value_function_to_json(const ValueFunction& v) {
  return {{"m", v.m_items()}, {"table", v.table()}};
}

inline ValueFunction value_function_from_json(const nlohmann::json& j) {
  return {j.at("m").get<int>(), j.at("table").get<std::vector<Money>>()};
}

inline nlohmann::json config_to_json(const AuctionConfig& c) {
  return {{"n", c.n_bidders}, {"m", c.m_items}, {"epsilon", c.epsilon}, {"seed", c.rng_seed}};
}

inline AuctionConfig config_from_json(const nlohmann::json& j) {
  AuctionConfig c;
  c.n_bidders = j.at("n").get<int>();
  c.m_items = j.at("m").get<int>();
  c.epsilon = j.value("epsilon", 1.0);
  c.rng_seed = j.value("seed", std::uint64_t{0});
  c.validate();
  return c;
}

inline nlohmann::json instance_to_json(const Instance& inst) {
  nlohmann::json bidders = nlohmann::json::array();
  for (const auto& p : inst.profiles)
    bidders.push_back({{"budget", p.budget}, {"values", value_function_to_json(p.values)}});
  return {{"config", config_to_json(inst.config)}, {"bidders", bidders}};
}

// Validates counts, item dimensions and free disposal.
inline Instance instance_from_json(const nlohmann::json& j) {
  Instance inst;
  inst.config = config_from_json(j.at("config"));
  for (const auto& b : j.at("bidders")) {
    BidderProfile p{b.at("budget").get<Money>(), value_function_from_json(b.at("values"))};
    if (p.budget < 0) throw ConfigError("bidder budget must be non-negative");
    if (p.values.m_items() != inst.config.m_items) throw ConfigError("value function item count mismatch");
    if (auto v = free_disposal_violation(p.values))
      throw ConfigError("value function violates free disposal: v(" + format_items(v->first) + ") > v(" +
                        format_items(v->second) + ")");
    inst.profiles.push_back(std::move(p));
  }
  if (static_cast<int>(inst.profiles.size()) != inst.config.n_bidders)
    throw ConfigError("instance needs one bidder entry per bidder");
  return inst;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

// Accepts a single instance object or an array of them.
inline std::vector<Instance> load_instances(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_file(path));
  std::vector<Instance> out;
  if (j.is_array()) {
    for (const auto& e : j) out.push_back(instance_from_json(e));
  } else {
    out.push_back(instance_from_json(j));
  }
  return out;
}

}  // namespace saac
