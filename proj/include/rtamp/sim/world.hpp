#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rtamp/bt/nodes.hpp"
#include "rtamp/domain/geometry.hpp"
#include "rtamp/domain/state.hpp"
#include "rtamp/io/scenario.hpp"
#include "rtamp/search/cost.hpp"
#include "rtamp/sim/events.hpp"

namespace rtamp::sim {

struct ActiveAction {
  ActionSpec spec;
  double duration = 0;  // seconds
  double elapsed = 0;
  Vec3 source;                       // object position at dispatch
  std::vector<std::string> riders;   // objects carried along by a tray move

  double progress() const { return duration > 0 ? std::min(1.0, elapsed / duration) : 1.0; }
};

struct Completion {
  ActionSpec action;
  bool success = true;  // false: grasp failed, object left at its source
  double duration = 0;
};

/// Discrete-time surrogate of the robot cell. Object positions live in geometry().objects; an
/// object being moved counts as held from dispatch until completion.
class SimWorld {
public:
  SimWorld(WorldGeometry geometry, const SymbolicState& initial, ExecutionConfig config, std::uint64_t seed)
      : geometry_(std::move(geometry)), config_(config), rng_(seed) {
    for (const auto& [t, d] : initial.tray_docks)
      if (auto it = geometry_.trays.find(t); it != geometry_.trays.end()) it->second.dock = d;
    for (const auto& [o, r] : initial.assignment)
      if (!geometry_.objects.contains(o)) geometry_.objects[o] = geometry_.region_center(r);
  }

  const WorldGeometry& geometry() const noexcept { return geometry_; }
  const ExecutionConfig& config() const noexcept { return config_; }
  double clock() const noexcept { return clock_; }
  const std::optional<ActiveAction>& active() const noexcept { return active_; }
  std::optional<std::string> held() const {
    if (active_ && active_->spec.kind == ActionSpec::Kind::MoveObject) return active_->spec.entity;
    return std::nullopt;
  }
  /// Entity in the gripper (object or tray), for running-condition atoms.
  std::optional<std::string> in_hand() const {
    if (active_) return active_->spec.entity;
    return std::nullopt;
  }

  /// Object -> region (held -> rhand), tray -> dock. Throws PerceptionGap for an object outside
  /// every region.
  SymbolicState perceive() const {
    SymbolicState s;
    for (const auto& [t, tray] : geometry_.trays) s.tray_docks[t] = tray.dock;
    const auto h = held();
    for (const auto& [o, p] : geometry_.objects) {
      if (h && *h == o) {
        s.assignment[o] = kHand;
        continue;
      }
      try {
        s.assignment[o] = region_of(geometry_, p);
      } catch (const NoRegion&) {
        throw PerceptionGap("object '" + o + "' is outside every region");
      }
    }
    return s;
  }

  double duration_of(const ActionSpec& a, const SymbolicState& s) const {
    return motion_cost_geometric(geometry_, s, a) / config_.ee_speed;
  }

  /// Dispatches an action. Throws IllegalAction when busy or when the action does not apply.
  void start(const ActionSpec& a) {
    if (active_) throw IllegalAction("executor busy with " + active_->spec.name());
    const auto s = perceive();
    ActiveAction act{a, 0, 0, {}, {}};
    if (a.kind == ActionSpec::Kind::MoveObject) {
      auto it = s.assignment.find(a.entity);
      if (it == s.assignment.end()) throw IllegalAction("unknown object '" + a.entity + "'");
      if (!geometry_.has_region(a.destination)) throw IllegalAction("unknown region '" + a.destination + "'");
      if (it->second == a.destination) throw IllegalAction(a.name() + " is a no-op");
      act.source = geometry_.objects.at(a.entity);
    } else {
      auto it = geometry_.trays.find(a.entity);
      if (it == geometry_.trays.end()) throw IllegalAction("unknown tray '" + a.entity + "'");
      if (!it->second.docks.contains(a.destination) || it->second.dock == a.destination)
        throw IllegalAction(a.name() + " does not apply");
      for (const auto& [o, r] : s.assignment)
        if (r == a.entity) act.riders.push_back(o);
    }
    act.duration = duration_of(a, s);
    active_ = std::move(act);
  }

  /// Advances the clock; returns the action that finished during this step, if any.
  std::optional<Completion> step(double dt) {
    if (!(dt > 0)) throw Error("step: dt must be positive");
    clock_ += dt;
    if (!active_) return std::nullopt;
    active_->elapsed += dt;
    if (active_->elapsed < active_->duration - 1e-9) return std::nullopt;

    ActiveAction done = std::move(*active_);
    active_.reset();
    Completion c{done.spec, true, done.duration};
    if (done.spec.kind == ActionSpec::Kind::MoveObject) {
      if (config_.grasp_failure_prob > 0 && uniform() < config_.grasp_failure_prob) {
        c.success = false;
        geometry_.objects.at(done.spec.entity) = done.source;
        changed_ = true;  // perception now disagrees with the plan
      } else {
        geometry_.objects.at(done.spec.entity) = jittered(done.spec.destination);
      }
    } else {
      auto& tray = geometry_.trays.at(done.spec.entity);
      const Vec3 offset = tray.docks.at(done.spec.destination) - tray.center();
      tray.dock = done.spec.destination;
      for (const auto& o : done.riders)
        if (auto it = geometry_.objects.find(o); it != geometry_.objects.end()) it->second = it->second + offset;
    }
    return c;
  }

  /// Cancels the action in flight; a carried object drops back to where it was picked.
  std::optional<ActionSpec> abort() {
    if (!active_) return std::nullopt;
    auto spec = active_->spec;
    if (spec.kind == ActionSpec::Kind::MoveObject) geometry_.objects.at(spec.entity) = active_->source;
    active_.reset();
    return spec;
  }

  /// Applies an intervention and returns it with wildcards resolved.
  InterventionEvent inject(const InterventionEvent& e) {
    InterventionEvent out = e;
    std::visit([&](auto& b) { apply(b); }, out.body);
    changed_ = true;
    return out;
  }

  bool consume_change() { return std::exchange(changed_, false); }

private:
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

  Vec3 jittered(const std::string& region) {
    const Vec3 c = geometry_.region_center(region);
    const double r = config_.jitter_fraction * geometry_.region_radius(region) * std::sqrt(uniform());
    const double th = 2 * std::numbers::pi * uniform();
    return {c.x + r * std::cos(th), c.y + r * std::sin(th), c.z};
  }

  std::string region_now(const std::string& o) const {
    try {
      return region_of(geometry_, geometry_.objects.at(o));
    } catch (const NoRegion&) {
      return {};
    }
  }

  std::string pick_object() {
    std::vector<std::string> free;
    const auto h = held();
    for (const auto& [o, p] : geometry_.objects)
      if (!h || *h != o) free.push_back(o);
    if (free.empty()) throw UnresolvableEvent("no object available for a wildcard event");
    return free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng_)];
  }

  std::string pick_region(const std::string& exclude) {
    std::vector<std::string> ids;
    for (const auto& [id, r] : geometry_.regions)
      if (id != exclude) ids.push_back(id);
    for (const auto& [id, t] : geometry_.trays)
      if (id != exclude) ids.push_back(id);
    if (ids.empty()) throw UnresolvableEvent("no region available for a wildcard event");
    return ids[std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(rng_)];
  }

  void check_not_held(const std::string& o) const {
    if (held() == o) throw HeldObjectConflict("object '" + o + "' is in the gripper");
  }

  void apply(RelocateObject& e) {
    if (e.object == kAnyObject) e.object = pick_object();
    if (!geometry_.objects.contains(e.object)) throw UnresolvableEvent("unknown object '" + e.object + "'");
    check_not_held(e.object);
    if (e.region == kAnyRegion) e.region = pick_region(region_now(e.object));
    if (!geometry_.has_region(e.region)) throw UnresolvableEvent("unknown region '" + e.region + "'");
    if (active_) std::erase(active_->riders, e.object);
    geometry_.objects[e.object] = jittered(e.region);
    board_if_moving(e.object, e.region);
  }

  // Anything put on a tray in transit travels with it.
  void board_if_moving(const std::string& object, const std::string& region) {
    if (active_ && active_->spec.kind == ActionSpec::Kind::MoveRegion && active_->spec.entity == region)
      active_->riders.push_back(object);
  }

  void apply(AddObject& e) {
    if (e.object == kAnyObject)
      for (int k = 1; e.object == kAnyObject || geometry_.objects.contains(e.object); ++k) e.object = "o" + std::to_string(k);
    if (geometry_.objects.contains(e.object) || geometry_.has_region(e.object))
      throw UnresolvableEvent("id '" + e.object + "' already exists");
    if (e.region == kAnyRegion) e.region = pick_region("");
    if (!geometry_.has_region(e.region)) throw UnresolvableEvent("unknown region '" + e.region + "'");
    geometry_.objects[e.object] = jittered(e.region);
    board_if_moving(e.object, e.region);
    ++geometry_.version;
  }

  void apply(RemoveObject& e) {
    if (e.object == kAnyObject) e.object = pick_object();
    if (!geometry_.objects.contains(e.object)) throw UnresolvableEvent("unknown object '" + e.object + "'");
    check_not_held(e.object);
    if (active_)
      std::erase(active_->riders, e.object);
    geometry_.objects.erase(e.object);
    ++geometry_.version;
  }

  void apply(AddTray& e) {
    if (geometry_.has_region(e.tray) || geometry_.objects.contains(e.tray))
      throw UnresolvableEvent("id '" + e.tray + "' already exists");
    if (!e.docks.contains(e.dock)) throw UnresolvableEvent("tray '" + e.tray + "' has unknown dock '" + e.dock + "'");
    geometry_.trays[e.tray] = Tray{e.docks, e.dock, e.radius};
    ++geometry_.version;
  }

  void apply(RemoveRegion& e) {
    if (!geometry_.has_region(e.region)) throw UnresolvableEvent("unknown region '" + e.region + "'");
    if (active_ && (active_->spec.entity == e.region || active_->spec.destination == e.region))
      throw HeldObjectConflict("region '" + e.region + "' is used by the action in flight");
    for (const auto& [o, p] : geometry_.objects)
      if ((!held() || *held() != o) && region_now(o) == e.region)
        throw UnresolvableEvent("region '" + e.region + "' still contains '" + o + "'");
    geometry_.regions.erase(e.region);
    geometry_.trays.erase(e.region);
    ++geometry_.version;
  }

  WorldGeometry geometry_;
  ExecutionConfig config_;
  std::mt19937_64 rng_;
  double clock_ = 0;
  std::optional<ActiveAction> active_;
  bool changed_ = false;
};

/// Bridges Action leaves to the simulator. Completions are held until the leaf that owns the
/// action ticks again.
class SimPort final : public bt::ActionPort {
public:
  explicit SimPort(SimWorld& world) : world_(world) {}

  void deliver(Completion c) { pending_ = std::move(c); }
  const std::optional<Completion>& pending() const noexcept { return pending_; }
  void clear() { pending_.reset(); }

  /// Actions dispatched by the tree since the last call.
  std::vector<ActionSpec> take_started() { return std::exchange(started_, {}); }

  bt::NodeStatus drive(const ActionSpec& a, bool may_start) override {
    const auto& act = world_.active();
    if (act && act->spec == a) return bt::NodeStatus::Running;
    if (pending_) {
      if (pending_->action == a) {
        const bool ok = pending_->success;
        pending_.reset();
        return ok ? bt::NodeStatus::Success : bt::NodeStatus::Failure;
      }
      // Nobody claimed the previous completion; its effect is already visible to perception.
      pending_.reset();
    }
    if (act || !may_start) return bt::NodeStatus::Failure;
    try {
      world_.start(a);
    } catch (const IllegalAction&) {
      return bt::NodeStatus::Failure;
    }
    started_.push_back(a);
    return bt::NodeStatus::Running;
  }

private:
  SimWorld& world_;
  std::optional<Completion> pending_;
  std::vector<ActionSpec> started_;
};

}  // namespace rtamp::sim
