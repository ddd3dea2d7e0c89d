#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "rtamp/domain/geometry.hpp"
#include "rtamp/domain/state.hpp"
#include "rtamp/errors.hpp"
#include "rtamp/ltl/formula.hpp"

namespace rtamp {

inline const std::string kAllObjPrefix = "all_obj_in_";

using Label = std::set<std::string>;

/// Changes to the object set or region layout observed by perception.
struct TsDelta {
  std::map<std::string, std::string> added_objects;  // object -> region
  std::set<std::string> removed_objects;
  std::map<std::string, FixedRegion> added_regions;
  std::map<std::string, Tray> added_trays;
  std::set<std::string> removed_regions;

  bool empty() const {
    return added_objects.empty() && removed_objects.empty() && added_regions.empty() && added_trays.empty() &&
           removed_regions.empty();
  }
};

/// Deterministic transition system over object placements. Held-object states are an execution
/// concern only; planning states map every object to a region.
class TransitionSystem {
public:
  TransitionSystem(WorldGeometry geometry, SymbolicState initial, std::set<std::string> macros)
      : geometry_(std::move(geometry)), initial_(std::move(initial)), macros_(std::move(macros)) {
    for (const auto& [o, r] : initial_.assignment) {
      if (r != kHand && !geometry_.has_region(r))
        throw Error("object '" + o + "' starts in unknown region '" + r + "'");
    }
    for (const auto& [t, tray] : geometry_.trays) {
      if (!initial_.tray_docks.contains(t)) initial_.tray_docks[t] = tray.dock;
      if (!tray.docks.contains(initial_.tray_docks.at(t))) throw Error("tray '" + t + "' has unknown dock");
    }
    for (const auto& m : macros_) {
      if (!m.starts_with(kAllObjPrefix) || m.size() == kAllObjPrefix.size())
        throw UnknownAtom("macro atom '" + m + "' has no labeling rule (expected all_obj_in_<region>)");
    }
  }

  const WorldGeometry& geometry() const noexcept { return geometry_; }
  const SymbolicState& initial() const noexcept { return initial_; }
  const std::set<std::string>& macros() const noexcept { return macros_; }
  std::uint64_t version() const noexcept { return geometry_.version; }

  std::vector<std::string> objects() const {
    std::vector<std::string> out;
    for (const auto& [o, r] : initial_.assignment) out.push_back(o);
    return out;
  }

  /// Fixed regions followed by trays, each group in id order.
  std::vector<std::string> regions() const {
    std::vector<std::string> out;
    for (const auto& [id, r] : geometry_.regions) out.push_back(id);
    for (const auto& [id, t] : geometry_.trays) out.push_back(id);
    return out;
  }

  Vocabulary vocabulary() const {
    Vocabulary v;
    for (const auto& o : objects()) v.objects.insert(o);
    for (const auto& r : regions()) v.regions.insert(r);
    for (const auto& [t, tray] : geometry_.trays)
      for (const auto& [d, p] : tray.docks) v.tray_docks[t].insert(d);
    return v;
  }

  /// Atom vocabulary: object/region pairs, tray/dock pairs, declared macros.
  std::set<std::string> atoms() const {
    std::set<std::string> out(macros_.begin(), macros_.end());
    for (const auto& o : objects())
      for (const auto& r : regions()) out.insert(o + r);
    for (const auto& [t, tray] : geometry_.trays)
      for (const auto& [d, p] : tray.docks) out.insert(t + d);
    return out;
  }

  /// Throws UnknownAtom if the formula uses an atom without a labeling rule.
  void check_formula(const ltl::Formula& f) const {
    const auto known = atoms();
    for (const auto& a : f.atoms()) {
      if (!known.contains(a)) throw UnknownAtom("atom '" + a + "' has no labeling rule");
    }
  }

  /// |R|^|O| times the product of tray dock counts.
  std::size_t state_count() const {
    std::size_t n = 1;
    const auto r = regions().size();
    for (std::size_t i = 0; i < initial_.assignment.size(); ++i) n *= r;
    for (const auto& [t, tray] : geometry_.trays) n *= tray.docks.size();
    return n;
  }

  std::vector<ActionSpec> enumerate_actions(const SymbolicState& s) const {
    std::vector<ActionSpec> out;
    const auto held = s.held();
    const auto rs = regions();
    for (const auto& [o, cur] : s.assignment) {
      if (cur == kHand) continue;
      for (const auto& r : rs)
        if (r != cur) out.push_back(ActionSpec::move_object(o, r));
    }
    for (const auto& [t, tray] : geometry_.trays) {
      // A tray cannot move while the gripper is occupied.
      if (held) continue;
      const auto cur = s.tray_docks.at(t);
      for (const auto& [d, p] : tray.docks)
        if (d != cur) out.push_back(ActionSpec::move_region(t, d));
    }
    return out;
  }

  SymbolicState apply_action(const SymbolicState& s, const ActionSpec& a) const {
    SymbolicState next = s;
    if (a.kind == ActionSpec::Kind::MoveObject) {
      auto it = next.assignment.find(a.entity);
      if (it == next.assignment.end()) throw IllegalAction("unknown object '" + a.entity + "'");
      if (it->second == kHand) throw IllegalAction("object '" + a.entity + "' is in the gripper");
      if (!geometry_.has_region(a.destination)) throw IllegalAction("unknown region '" + a.destination + "'");
      if (it->second == a.destination) throw IllegalAction(a.name() + " is a no-op");
      it->second = a.destination;
    } else {
      auto tray = geometry_.trays.find(a.entity);
      if (tray == geometry_.trays.end()) throw IllegalAction("unknown tray '" + a.entity + "'");
      if (!tray->second.docks.contains(a.destination)) throw IllegalAction("unknown dock '" + a.destination + "'");
      if (s.held()) throw IllegalAction("tray cannot move while the gripper is occupied");
      auto& dock = next.tray_docks.at(a.entity);
      if (dock == a.destination) throw IllegalAction(a.name() + " is a no-op");
      dock = a.destination;
    }
    return next;
  }

  Label label(const SymbolicState& s) const {
    Label out;
    for (const auto& [o, r] : s.assignment) out.insert(o + r);
    for (const auto& [t, d] : s.tray_docks) out.insert(t + d);
    for (const auto& m : macros_) {
      const std::string region = m.substr(kAllObjPrefix.size());
      bool all = true;
      for (const auto& [o, r] : s.assignment) all = all && r == region;
      if (all) out.insert(m);
    }
    return out;
  }

  /// Every planning state (no held objects) in lexicographic assignment order.
  std::vector<SymbolicState> enumerate_states() const {
    std::vector<SymbolicState> out{SymbolicState{}};
    const auto rs = regions();
    for (const auto& o : objects()) {
      std::vector<SymbolicState> grown;
      grown.reserve(out.size() * rs.size());
      for (const auto& s : out)
        for (const auto& r : rs) {
          auto t = s;
          t.assignment[o] = r;
          grown.push_back(std::move(t));
        }
      out = std::move(grown);
    }
    for (const auto& [t, tray] : geometry_.trays) {
      std::vector<SymbolicState> grown;
      for (const auto& s : out)
        for (const auto& [d, p] : tray.docks) {
          auto u = s;
          u.tray_docks[t] = d;
          grown.push_back(std::move(u));
        }
      out = std::move(grown);
    }
    return out;
  }

  /// New system for an observed state after objects/regions were added or removed.
  /// The observed state becomes the initial state; the geometry version is bumped.
  TransitionSystem reconstruct(const SymbolicState& observed, const TsDelta& delta) const {
    WorldGeometry g = geometry_;
    for (const auto& r : delta.removed_regions) {
      if (!g.regions.erase(r) && !g.trays.erase(r)) throw InconsistentObservation("removed region '" + r + "' unknown");
    }
    for (const auto& [id, r] : delta.added_regions) {
      if (g.has_region(id)) throw InconsistentObservation("region '" + id + "' already exists");
      g.regions.emplace(id, r);
    }
    for (const auto& [id, t] : delta.added_trays) {
      if (g.has_region(id)) throw InconsistentObservation("region '" + id + "' already exists");
      g.trays.emplace(id, t);
    }
    std::set<std::string> objs;
    for (const auto& o : objects()) objs.insert(o);
    for (const auto& o : delta.removed_objects) {
      if (!objs.erase(o)) throw InconsistentObservation("removed object '" + o + "' unknown");
      g.objects.erase(o);
    }
    for (const auto& [o, r] : delta.added_objects) {
      if (!objs.insert(o).second) throw InconsistentObservation("object '" + o + "' already exists");
    }

    SymbolicState init;
    for (const auto& [o, r] : observed.assignment) {
      if (!objs.contains(o)) throw InconsistentObservation("observed object '" + o + "' is not in the system");
      if (r != kHand && !g.has_region(r)) throw InconsistentObservation("observed region '" + r + "' is unknown");
      init.assignment[o] = r;
    }
    for (const auto& o : objs)
      if (!init.assignment.contains(o)) throw InconsistentObservation("object '" + o + "' was not observed");
    for (const auto& [t, d] : observed.tray_docks) {
      if (!g.trays.contains(t)) throw InconsistentObservation("observed tray '" + t + "' is unknown");
      init.tray_docks[t] = d;
      g.trays.at(t).dock = d;
    }
    ++g.version;
    return TransitionSystem(std::move(g), std::move(init), macros_);
  }

  /// Same layout, different initial state (relocations do not change the version).
  TransitionSystem with_initial(SymbolicState s) const {
    TransitionSystem copy = *this;
    copy.initial_ = std::move(s);
    for (const auto& [t, d] : copy.initial_.tray_docks) copy.geometry_.trays.at(t).dock = d;
    return copy;
  }

private:
  WorldGeometry geometry_;
  SymbolicState initial_;
  std::set<std::string> macros_;
};

}  // namespace rtamp
