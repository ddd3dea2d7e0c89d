#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtamp/domain/transition_system.hpp"
#include "rtamp/errors.hpp"
#include "rtamp/ltl/parser.hpp"

namespace rtamp {

struct ExecutionConfig {
  double ee_speed = 0.25;      // m/s
  double tick_hz = 20.0;
  double timeout_s = 600.0;
  double jitter_fraction = 0.3;  // placement jitter radius as a fraction of region radius
  double grasp_failure_prob = 0.0;
};

/// Everything needed to start a session: layout, initial placement, task formula, cost model.
struct Scenario {
  std::string name = "scenario";
  WorldGeometry geometry;
  SymbolicState initial;
  std::set<std::string> macros;
  std::string formula = "F G all_obj_in_r2";
  double provider_latency_ms = 0.0;
  std::uint64_t seed = 1;
  ExecutionConfig execution;

  TransitionSystem transition_system() const { return TransitionSystem(geometry, initial, macros); }
};

namespace detail {

inline Vec3 vec_from_json(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
inline nlohmann::json vec_to_json(Vec3 v) { return nlohmann::json::array({v.x, v.y, v.z}); }

inline bool valid_id(const std::string& id) {
  if (id.empty() || !std::islower(static_cast<unsigned char>(id[0]))) return false;
  for (char c : id)
    if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)))) return false;
  return true;
}

}  // namespace detail

/// Parses and validates a scenario document. Throws ValidationError listing field paths.
/// The formula is syntax-checked here; satisfiability is left to planning.
inline Scenario scenario_from_json(const nlohmann::json& doc) {
  std::vector<std::string> problems;
  Scenario sc;
  const auto problem = [&](const std::string& path, const std::string& msg) { problems.push_back(path + ": " + msg); };

  if (!doc.is_object()) throw ValidationError({"$: scenario must be a JSON object"});
  if (doc.contains("schema") && doc["schema"] != "v1") problem("schema", "unsupported schema version");
  sc.name = doc.value("name", sc.name);

  std::set<std::string> region_ids;
  const auto vec = [&](const nlohmann::json& j, const std::string& path) -> Vec3 {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number()) {
      problem(path, "expected [x, y, z]");
      return {};
    }
    return detail::vec_from_json(j);
  };

  if (!doc.contains("regions") || !doc["regions"].is_array()) {
    problem("regions", "required array");
  } else {
    for (std::size_t i = 0; i < doc["regions"].size(); ++i) {
      const auto& r = doc["regions"][i];
      const std::string path = "regions[" + std::to_string(i) + "]";
      const std::string id = r.value("id", "");
      if (!detail::valid_id(id)) problem(path + ".id", "invalid region id '" + id + "'");
      else if (!region_ids.insert(id).second) problem(path + ".id", "duplicate region id '" + id + "'");
      FixedRegion region;
      region.center = vec(r.value("center", nlohmann::json()), path + ".center");
      region.radius = r.value("radius", kDefaultRegionRadius);
      if (region.radius <= 0) problem(path + ".radius", "must be positive");
      sc.geometry.regions[id] = region;
    }
  }

  if (doc.contains("trays")) {
    for (std::size_t i = 0; i < doc["trays"].size(); ++i) {
      const auto& t = doc["trays"][i];
      const std::string path = "trays[" + std::to_string(i) + "]";
      const std::string id = t.value("id", "");
      if (!detail::valid_id(id)) problem(path + ".id", "invalid tray id '" + id + "'");
      else if (!region_ids.insert(id).second) problem(path + ".id", "duplicate region id '" + id + "'");
      Tray tray;
      tray.radius = t.value("radius", kDefaultRegionRadius);
      const auto docks = t.value("docks", nlohmann::json::array());
      for (std::size_t k = 0; k < docks.size(); ++k) {
        const std::string dpath = path + ".docks[" + std::to_string(k) + "]";
        const std::string did = docks[k].value("id", "");
        if (!detail::valid_id(did)) problem(dpath + ".id", "invalid dock id '" + did + "'");
        else if (tray.docks.contains(did)) problem(dpath + ".id", "duplicate dock id '" + did + "'");
        tray.docks[did] = vec(docks[k].value("position", nlohmann::json()), dpath + ".position");
      }
      if (tray.docks.empty()) problem(path + ".docks", "tray needs at least one dock");
      tray.dock = t.value("dock", tray.docks.empty() ? std::string{} : tray.docks.begin()->first);
      if (!tray.docks.empty() && !tray.docks.contains(tray.dock)) problem(path + ".dock", "unknown dock '" + tray.dock + "'");
      sc.geometry.trays[id] = tray;
      if (!tray.docks.empty() && tray.docks.contains(tray.dock)) sc.initial.tray_docks[id] = tray.dock;
    }
  }

  if (doc.contains("objects")) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < doc["objects"].size(); ++i) {
      const auto& o = doc["objects"][i];
      const std::string path = "objects[" + std::to_string(i) + "]";
      const std::string id = o.value("id", "");
      const std::string region = o.value("region", "");
      if (!detail::valid_id(id)) problem(path + ".id", "invalid object id '" + id + "'");
      else if (!seen.insert(id).second || region_ids.contains(id)) problem(path + ".id", "duplicate id '" + id + "'");
      if (!region_ids.contains(region)) problem(path + ".region", "unknown region '" + region + "'");
      sc.initial.assignment[id] = region;
    }
  }

  if (doc.contains("home")) sc.geometry.home = vec(doc["home"], "home");
  for (const auto& m : doc.value("macros", nlohmann::json::array())) {
    const std::string name = m.get<std::string>();
    if (!name.starts_with(kAllObjPrefix)) problem("macros", "macro '" + name + "' has no labeling rule");
    sc.macros.insert(name);
  }
  sc.formula = doc.value("formula", sc.formula);
  try {
    (void)ltl::parse_formula(sc.formula);
  } catch (const ParseError& e) {
    problem("formula", e.what());
  }
  if (doc.contains("cost")) {
    sc.provider_latency_ms = doc["cost"].value("latency_ms", 0.0);
    if (doc["cost"].value("provider", "geometric") != "geometric") problem("cost.provider", "only 'geometric' is supported");
    if (sc.provider_latency_ms < 0) problem("cost.latency_ms", "must be >= 0");
  }
  sc.seed = doc.value("seed", std::uint64_t{1});
  if (doc.contains("execution")) {
    const auto& e = doc["execution"];
    sc.execution.ee_speed = e.value("ee_speed", sc.execution.ee_speed);
    sc.execution.tick_hz = e.value("tick_hz", sc.execution.tick_hz);
    sc.execution.timeout_s = e.value("timeout_s", sc.execution.timeout_s);
    sc.execution.jitter_fraction = e.value("jitter_fraction", sc.execution.jitter_fraction);
    sc.execution.grasp_failure_prob = e.value("grasp_failure_prob", sc.execution.grasp_failure_prob);
    if (sc.execution.ee_speed <= 0) problem("execution.ee_speed", "must be positive");
    if (sc.execution.tick_hz <= 0) problem("execution.tick_hz", "must be positive");
  }

  if (!problems.empty()) throw ValidationError(std::move(problems));
  for (const auto& [o, r] : sc.initial.assignment) {
    sc.geometry.objects[o] = sc.geometry.region_center(r);
  }
  return sc;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& [id, r] : sc.geometry.regions)
    regions.push_back({{"id", id}, {"center", detail::vec_to_json(r.center)}, {"radius", r.radius}});
  nlohmann::json trays = nlohmann::json::array();
  for (const auto& [id, t] : sc.geometry.trays) {
    nlohmann::json docks = nlohmann::json::array();
    for (const auto& [d, p] : t.docks) docks.push_back({{"id", d}, {"position", detail::vec_to_json(p)}});
    const auto dock = sc.initial.tray_docks.contains(id) ? sc.initial.tray_docks.at(id) : t.dock;
    trays.push_back({{"id", id}, {"docks", docks}, {"dock", dock}, {"radius", t.radius}});
  }
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& [o, r] : sc.initial.assignment) objects.push_back({{"id", o}, {"region", r}});
  return {{"schema", "v1"},
          {"name", sc.name},
          {"home", detail::vec_to_json(sc.geometry.home)},
          {"regions", regions},
          {"trays", trays},
          {"objects", objects},
          {"macros", sc.macros},
          {"formula", sc.formula},
          {"cost", {{"provider", "geometric"}, {"latency_ms", sc.provider_latency_ms}}},
          {"seed", sc.seed},
          {"execution",
           {{"ee_speed", sc.execution.ee_speed},
            {"tick_hz", sc.execution.tick_hz},
            {"timeout_s", sc.execution.timeout_s},
            {"jitter_fraction", sc.execution.jitter_fraction},
            {"grasp_failure_prob", sc.execution.grasp_failure_prob}}}};
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError({std::string("$: ") + e.what()});
  }
  return scenario_from_json(doc);
}

namespace scenarios {

/// Three blocks on r1, goal F G all_obj_in_r2.
inline Scenario three_block() {
  Scenario sc;
  sc.name = "3-block";
  sc.geometry.home = {0.0, -0.2, 0.4};
  sc.geometry.regions["r1"] = FixedRegion{{0.45, 0.0, 0.0}, 0.1};
  sc.geometry.regions["r2"] = FixedRegion{{-0.45, 0.0, 0.0}, 0.1};
  for (const char* o : {"o1", "o2", "o3"}) sc.initial.assignment[o] = "r1";
  sc.macros = {"all_obj_in_r2"};
  sc.formula = "F G all_obj_in_r2";
  for (const auto& [o, r] : sc.initial.assignment) sc.geometry.objects[o] = sc.geometry.region_center(r);
  return sc;
}

/// Three blocks on r1 with a tray r3 docked near r1; r1 and r2 are 1.2 m apart and each tray dock
/// sits 0.2 m from its region. The end-effector rest pose is on the r2 side of the workspace.
inline Scenario three_block_tray() {
  Scenario sc;
  sc.name = "3-block+tray";
  sc.geometry.home = {-0.2, -0.1, 0.1};
  sc.geometry.regions["r1"] = FixedRegion{{0.6, 0.0, 0.0}, 0.08};
  sc.geometry.regions["r2"] = FixedRegion{{-0.6, 0.0, 0.0}, 0.08};
  Tray tray;
  tray.radius = 0.08;
  tray.docks["d1"] = {0.4, 0.0, 0.0};
  tray.docks["d2"] = {-0.4, 0.0, 0.0};
  tray.dock = "d1";
  sc.geometry.trays["r3"] = tray;
  sc.initial.tray_docks["r3"] = "d1";
  for (const char* o : {"o1", "o2", "o3"}) sc.initial.assignment[o] = "r1";
  sc.macros = {"all_obj_in_r2"};
  sc.formula = "F G all_obj_in_r2";
  for (const auto& [o, r] : sc.initial.assignment) sc.geometry.objects[o] = sc.geometry.region_center(r);
  return sc;
}

}  // namespace scenarios

}  // namespace rtamp
