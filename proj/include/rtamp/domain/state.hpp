#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rtamp/errors.hpp"

namespace rtamp {

/// Pseudo-region of an object held in the gripper.
inline const std::string kHand = "rhand";

/// Discrete world state: object -> region, tray -> dock.
struct SymbolicState {
  std::map<std::string, std::string> assignment;
  std::map<std::string, std::string> tray_docks;

  std::optional<std::string> held() const {
    for (const auto& [o, r] : assignment)
      if (r == kHand) return o;
    return std::nullopt;
  }

  friend bool operator==(const SymbolicState&, const SymbolicState&) = default;
  friend auto operator<=>(const SymbolicState&, const SymbolicState&) = default;
};

/// "o1r1_o2r3" followed by tray docks "r3d1"; objects and trays in id order.
inline std::string encode_state(const SymbolicState& s) {
  std::string out;
  for (const auto& [o, r] : s.assignment) {
    if (!out.empty()) out += '_';
    out += o + r;
  }
  for (const auto& [t, d] : s.tray_docks) {
    if (!out.empty()) out += '_';
    out += t + d;
  }
  return out;
}

/// Ids known to a transition system; needed because encoded pairs have no separator.
struct Vocabulary {
  std::set<std::string> objects;
  std::set<std::string> regions;  // fixed regions and trays
  std::map<std::string, std::set<std::string>> tray_docks;
};

inline SymbolicState decode_state(std::string_view text, const Vocabulary& vocab) {
  SymbolicState s;
  if (text.empty()) return s;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('_', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string token(text.substr(start, end - start));

    int matches = 0;
    std::string key, value;
    bool is_tray = false;
    for (const auto& o : vocab.objects) {
      if (!token.starts_with(o)) continue;
      const std::string rest = token.substr(o.size());
      if (vocab.regions.contains(rest) || rest == kHand) {
        ++matches;
        key = o;
        value = rest;
        is_tray = false;
      }
    }
    for (const auto& [t, docks] : vocab.tray_docks) {
      if (!token.starts_with(t)) continue;
      const std::string rest = token.substr(t.size());
      if (docks.contains(rest)) {
        ++matches;
        key = t;
        value = rest;
        is_tray = true;
      }
    }
    if (matches != 1) throw Error("cannot decode state token '" + token + "'");
    (is_tray ? s.tray_docks : s.assignment)[key] = value;
    start = end + 1;
  }
  return s;
}

/// Pick-and-place of an object, or moving a tray between docks.
struct ActionSpec {
  enum class Kind { MoveObject, MoveRegion };
  Kind kind = Kind::MoveObject;
  std::string entity;       // object id or tray id
  std::string destination;  // region id or dock id

  static ActionSpec move_object(std::string object, std::string region) {
    return {Kind::MoveObject, std::move(object), std::move(region)};
  }
  static ActionSpec move_region(std::string tray, std::string dock) {
    return {Kind::MoveRegion, std::move(tray), std::move(dock)};
  }

  /// move_o1_r2 / move_r3_d2
  std::string name() const { return "move_" + entity + "_" + destination; }

  friend bool operator==(const ActionSpec&, const ActionSpec&) = default;
  friend auto operator<=>(const ActionSpec&, const ActionSpec&) = default;
};

}  // namespace rtamp
