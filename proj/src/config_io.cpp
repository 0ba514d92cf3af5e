#include "vanet/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace vanet {

namespace {

using nlohmann::json;

void expect_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

const char* link_rule_name(LinkRule r) { return r == LinkRule::max_range ? "max" : "min"; }

LinkRule parse_link_rule(const std::string& s) {
  if (s == "max") return LinkRule::max_range;
  if (s == "min") return LinkRule::min_range;
  throw ConfigError("simulation.link_rule: expected 'max' or 'min', got '" + s + "'");
}

std::vector<SpeedClass> parse_classes(const json& j, std::string_view where) {
  if (!j.is_array()) throw ConfigError(std::string(where) + ": expected an array");
  std::vector<SpeedClass> out;
  for (const auto& c : j) {
    expect_keys(c, where, {"name", "v_min", "v_max"});
    SpeedClass cls;
    read(c, "name", cls.name);
    read(c, "v_min", cls.v_min);
    read(c, "v_max", cls.v_max);
    out.push_back(cls);
  }
  return out;
}

json classes_json(const std::vector<SpeedClass>& classes) {
  json arr = json::array();
  for (const auto& c : classes) arr.push_back({{"name", c.name}, {"v_min", c.v_min}, {"v_max", c.v_max}});
  return arr;
}

void parse_turns(const json& j, TurnProbabilities& t) {
  read(j, "straight", t.straight);
  read(j, "left", t.left);
  read(j, "right", t.right);
}

RunConfig from_json(const json& root) {
  RunConfig c;
  expect_keys(root, "config",
              {"grid_side", "geometry", "speed_classes", "class_transitions", "turns", "intersection_weights",
               "entrances", "transmission", "percolation", "simulation", "seed"});
  read(root, "grid_side", c.grid_side);
  read(root, "seed", c.seed);
  if (root.contains("geometry")) {
    const auto& g = root.at("geometry");
    expect_keys(g, "geometry", {"front", "middle", "end"});
    read(g, "front", c.geometry.len_front);
    read(g, "middle", c.geometry.len_middle);
    read(g, "end", c.geometry.len_end);
  }
  if (root.contains("speed_classes")) {
    const auto& s = root.at("speed_classes");
    expect_keys(s, "speed_classes", {"front", "middle", "end"});
    if (s.contains("front")) c.classes.front = parse_classes(s.at("front"), "speed_classes.front");
    if (s.contains("middle")) c.classes.middle = parse_classes(s.at("middle"), "speed_classes.middle");
    if (s.contains("end")) c.classes.end = parse_classes(s.at("end"), "speed_classes.end");
  }
  if (root.contains("class_transitions")) {
    const auto& t = root.at("class_transitions");
    expect_keys(t, "class_transitions", {"front_to_middle", "middle_to_end", "end_to_front", "entrance"});
    read(t, "front_to_middle", c.transitions.front_to_middle);
    read(t, "middle_to_end", c.transitions.middle_to_end);
    read(t, "end_to_front", c.transitions.end_to_front);
    read(t, "entrance", c.transitions.entrance);
  }
  if (root.contains("turns")) {
    const auto& t = root.at("turns");
    expect_keys(t, "turns", {"straight", "left", "right", "outside_weight", "overrides"});
    parse_turns(t, c.turns);
    read(t, "outside_weight", c.outside_weight);
    if (t.contains("overrides")) {
      for (const auto& o : t.at("overrides")) {
        expect_keys(o, "turns.overrides", {"intersection", "straight", "left", "right"});
        TurnOverride ov;
        read(o, "intersection", ov.intersection);
        parse_turns(o, ov.turns);
        c.turn_overrides.push_back(ov);
      }
    }
  }
  read(root, "intersection_weights", c.intersection_weights);
  if (root.contains("entrances")) {
    const auto& e = root.at("entrances");
    expect_keys(e, "entrances", {"rate", "rates"});
    read(e, "rate", c.entrance_rate);
    read(e, "rates", c.entrance_rates);
  }
  if (root.contains("transmission")) {
    const auto& t = root.at("transmission");
    expect_keys(t, "transmission", {"model", "range", "x1", "x2", "p_type1", "weighting", "bound"});
    std::string model = "single";
    read(t, "model", model);
    if (model == "single") {
      c.transmission.kind = TransmissionModel::Kind::single;
    } else if (model == "dual") {
      c.transmission.kind = TransmissionModel::Kind::dual;
    } else {
      throw ConfigError("transmission.model: expected 'single' or 'dual', got '" + model + "'");
    }
    read(t, "range", c.transmission.range);
    read(t, "x1", c.transmission.x1);
    read(t, "x2", c.transmission.x2);
    read(t, "p_type1", c.transmission.p_type1);
    if (t.contains("weighting")) {
      const auto w = t.at("weighting").get<std::string>();
      if (w == "type2_count") {
        c.transmission.weighting = TypeWeighting::type2_count;
      } else if (w == "printed") {
        c.transmission.weighting = TypeWeighting::printed;
      } else {
        throw ConfigError("transmission.weighting: expected 'type2_count' or 'printed'");
      }
    }
    if (t.contains("bound")) {
      const auto b = t.at("bound").get<std::string>();
      if (b == "approximate") {
        c.transmission.form = BoundForm::approximate;
      } else if (b == "exact") {
        c.transmission.form = BoundForm::exact;
      } else {
        throw ConfigError("transmission.bound: expected 'approximate' or 'exact'");
      }
    }
  }
  if (root.contains("percolation")) {
    const auto& p = root.at("percolation");
    expect_keys(p, "percolation", {"iterations"});
    read(p, "iterations", c.percolation_iterations);
  }
  if (root.contains("simulation")) {
    const auto& s = root.at("simulation");
    expect_keys(s, "simulation", {"dt", "warmup", "duration", "measured", "sample_interval", "batches", "link_rule"});
    read(s, "dt", c.simulation.dt);
    if (s.contains("warmup") && !s.at("warmup").is_null()) c.simulation.warmup = s.at("warmup").get<double>();
    if (s.contains("duration") && !s.at("duration").is_null()) c.simulation.duration = s.at("duration").get<double>();
    read(s, "measured", c.simulation.measured);
    read(s, "sample_interval", c.simulation.sample_interval);
    read(s, "batches", c.simulation.batches);
    if (s.contains("link_rule")) c.simulation.link_rule = parse_link_rule(s.at("link_rule").get<std::string>());
  }
  return c;
}

json to_json(const RunConfig& c) {
  json overrides = json::array();
  for (const auto& o : c.turn_overrides) {
    overrides.push_back(
        {{"intersection", o.intersection}, {"straight", o.turns.straight}, {"left", o.turns.left}, {"right", o.turns.right}});
  }
  const auto& tx = c.transmission;
  return json{
      {"grid_side", c.grid_side},
      {"seed", c.seed},
      {"geometry", {{"front", c.geometry.len_front}, {"middle", c.geometry.len_middle}, {"end", c.geometry.len_end}}},
      {"speed_classes",
       {{"front", classes_json(c.classes.front)},
        {"middle", classes_json(c.classes.middle)},
        {"end", classes_json(c.classes.end)}}},
      {"class_transitions",
       {{"front_to_middle", c.transitions.front_to_middle},
        {"middle_to_end", c.transitions.middle_to_end},
        {"end_to_front", c.transitions.end_to_front},
        {"entrance", c.transitions.entrance}}},
      {"turns",
       {{"straight", c.turns.straight},
        {"left", c.turns.left},
        {"right", c.turns.right},
        {"outside_weight", c.outside_weight},
        {"overrides", overrides}}},
      {"intersection_weights", c.intersection_weights},
      {"entrances", {{"rate", c.entrance_rate}, {"rates", c.entrance_rates}}},
      {"transmission",
       {{"model", tx.kind == TransmissionModel::Kind::single ? "single" : "dual"},
        {"range", tx.range},
        {"x1", tx.x1},
        {"x2", tx.x2},
        {"p_type1", tx.p_type1},
        {"weighting", tx.weighting == TypeWeighting::type2_count ? "type2_count" : "printed"},
        {"bound", tx.form == BoundForm::approximate ? "approximate" : "exact"}}},
      {"percolation", {{"iterations", c.percolation_iterations}}},
      {"simulation",
       {{"dt", c.simulation.dt},
        {"warmup", c.simulation.warmup ? json(*c.simulation.warmup) : json(nullptr)},
        {"duration", c.simulation.duration ? json(*c.simulation.duration) : json(nullptr)},
        {"measured", c.simulation.measured},
        {"sample_interval", c.simulation.sample_interval},
        {"batches", c.simulation.batches},
        {"link_rule", link_rule_name(c.simulation.link_rule)}}},
  };
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return from_json(root);
  } catch (const json::type_error& e) {
    throw ConfigError(std::string("config has a value of the wrong type: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string dump_config(const RunConfig& config) { return to_json(config).dump(2); }

std::string config_hash(const RunConfig& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace vanet
