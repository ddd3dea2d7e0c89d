#pragma once

#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtamp/domain/geometry.hpp"
#include "rtamp/errors.hpp"

namespace rtamp::sim {

/// Object id "*" in a relocate or remove event picks a random object not held by the gripper
/// when the event is applied.
inline const std::string kAnyObject = "*";
/// Region id "*" in a relocate or add event picks a random region (other than the current one).
inline const std::string kAnyRegion = "*";

struct RelocateObject {
  std::string object;
  std::string region;
};
struct AddObject {
  std::string object;
  std::string region;
};
struct RemoveObject {
  std::string object;
};
struct AddTray {
  std::string tray;
  std::map<std::string, Vec3> docks;
  std::string dock;
  double radius = kDefaultRegionRadius;
};
struct RemoveRegion {
  std::string region;
};

using EventBody = std::variant<RelocateObject, AddObject, RemoveObject, AddTray, RemoveRegion>;

/// Environmental change not caused by the robot.
struct InterventionEvent {
  double time = 0;  // simulated seconds
  EventBody body;

  std::string kind() const {
    return std::visit(
        [](const auto& e) -> std::string {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, RelocateObject>) return "relocate_object";
          if constexpr (std::is_same_v<T, AddObject>) return "add_object";
          if constexpr (std::is_same_v<T, RemoveObject>) return "remove_object";
          if constexpr (std::is_same_v<T, AddTray>) return "add_tray";
          return "remove_region";
        },
        body);
  }

  /// Relocations keep the object and region sets; everything else changes them.
  bool changes_layout() const { return !std::holds_alternative<RelocateObject>(body); }
};

inline nlohmann::json event_to_json(const InterventionEvent& e) {
  nlohmann::json j{{"t", e.time}, {"kind", e.kind()}};
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, RelocateObject> || std::is_same_v<T, AddObject>) {
          j["object"] = b.object;
          j["region"] = b.region;
        } else if constexpr (std::is_same_v<T, RemoveObject>) {
          j["object"] = b.object;
        } else if constexpr (std::is_same_v<T, AddTray>) {
          j["tray"] = b.tray;
          nlohmann::json docks = nlohmann::json::array();
          for (const auto& [d, p] : b.docks) docks.push_back({{"id", d}, {"position", {p.x, p.y, p.z}}});
          j["docks"] = docks;
          j["dock"] = b.dock;
          j["radius"] = b.radius;
        } else {
          j["region"] = b.region;
        }
      },
      e.body);
  return j;
}

/// Throws ValidationError naming the offending field.
inline InterventionEvent event_from_json(const nlohmann::json& j, const std::string& path = "event") {
  std::vector<std::string> problems;
  const auto str = [&](const char* key) -> std::string {
    if (!j.contains(key) || !j[key].is_string()) {
      problems.push_back(path + "." + key + ": required string");
      return {};
    }
    return j[key].get<std::string>();
  };
  if (!j.is_object()) throw ValidationError({path + ": expected object"});
  InterventionEvent e;
  if (j.contains("t")) {
    if (!j["t"].is_number() || j["t"].get<double>() < 0) problems.push_back(path + ".t: must be a number >= 0");
    else e.time = j["t"].get<double>();
  }
  const std::string kind = j.value("kind", "");
  if (kind == "relocate_object") {
    e.body = RelocateObject{str("object"), str("region")};
  } else if (kind == "add_object") {
    e.body = AddObject{str("object"), str("region")};
  } else if (kind == "remove_object") {
    e.body = RemoveObject{str("object")};
  } else if (kind == "add_tray") {
    AddTray t;
    t.tray = str("tray");
    t.radius = j.value("radius", kDefaultRegionRadius);
    const auto docks = j.value("docks", nlohmann::json::array());
    for (std::size_t k = 0; k < docks.size(); ++k) {
      const auto& p = docks[k].value("position", nlohmann::json());
      if (!p.is_array() || p.size() != 3) {
        problems.push_back(path + ".docks[" + std::to_string(k) + "].position: expected [x, y, z]");
        continue;
      }
      t.docks[docks[k].value("id", "")] = Vec3{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
    }
    if (t.docks.empty()) problems.push_back(path + ".docks: tray needs at least one dock");
    t.dock = j.value("dock", t.docks.empty() ? std::string{} : t.docks.begin()->first);
    if (!t.docks.empty() && !t.docks.contains(t.dock)) problems.push_back(path + ".dock: unknown dock '" + t.dock + "'");
    e.body = t;
  } else if (kind == "remove_region") {
    e.body = RemoveRegion{str("region")};
  } else {
    problems.push_back(path + ".kind: unknown event kind '" + kind + "'");
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return e;
}

inline std::vector<InterventionEvent> script_from_json(const nlohmann::json& doc) {
  const auto& list = doc.is_array() ? doc : doc.value("events", nlohmann::json::array());
  std::vector<InterventionEvent> out;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < list.size(); ++i) {
    try {
      out.push_back(event_from_json(list[i], "events[" + std::to_string(i) + "]"));
    } catch (const ValidationError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  return out;
}

inline nlohmann::json script_to_json(const std::vector<InterventionEvent>& events) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : events) list.push_back(event_to_json(e));
  return {{"schema", "v1"}, {"events", list}};
}

inline std::vector<InterventionEvent> load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open intervention script '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError({std::string("$: ") + e.what()});
  }
  return script_from_json(doc);
}

}  // namespace rtamp::sim
