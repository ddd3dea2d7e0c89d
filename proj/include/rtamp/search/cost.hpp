#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <chrono>
#include <cstdint>
#include <limits>
#include <memory>
#include <thread>
#include <vector>

#include "rtamp/domain/geometry.hpp"
#include "rtamp/domain/state.hpp"

namespace rtamp {

/// Pick and place points of an action in state s.
inline std::pair<Vec3, Vec3> action_endpoints(const WorldGeometry& g, const SymbolicState& s, const ActionSpec& a) {
  const auto dock_of = [&](const std::string& region) -> std::optional<std::string> {
    if (auto it = s.tray_docks.find(region); it != s.tray_docks.end()) return it->second;
    return std::nullopt;
  };
  if (a.kind == ActionSpec::Kind::MoveObject) {
    const auto& src = s.assignment.at(a.entity);
    return {g.region_center(src, dock_of(src)), g.region_center(a.destination, dock_of(a.destination))};
  }
  const auto& tray = g.trays.at(a.entity);
  return {tray.docks.at(s.tray_docks.at(a.entity)), tray.docks.at(a.destination)};
}

/// End-effector displacement in meters: approach from `ee` to the pick point, then carry to the
/// place point. For a tray the pick point is its grasp point at the current dock.
inline double motion_cost_geometric(const WorldGeometry& g, const SymbolicState& s, const ActionSpec& a, Vec3 ee) {
  const auto [pick, place] = action_endpoints(g, s, a);
  return distance(ee, pick) + distance(pick, place);
}

inline double motion_cost_geometric(const WorldGeometry& g, const SymbolicState& s, const ActionSpec& a) {
  return motion_cost_geometric(g, s, a, g.home);
}

/// Smallest nonzero distance between any two placement points (region centers and docks).
/// Every legal action carries at least this far, so it lower-bounds every edge cost.
inline double minimum_place_leg(const WorldGeometry& g) {
  std::vector<Vec3> points;
  for (const auto& [id, r] : g.regions) points.push_back(r.center);
  for (const auto& [id, t] : g.trays)
    for (const auto& [d, p] : t.docks) points.push_back(p);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double d = distance(points[i], points[j]);
      if (d > 1e-9) best = std::min(best, d);
    }
  return std::isfinite(best) ? best : 0.0;
}

/// Source of edge weights for the product graph.
class CostProvider {
public:
  virtual ~CostProvider() = default;

  virtual double cost(const WorldGeometry& g, const SymbolicState& s, const ActionSpec& a) = 0;
  /// Lower bound on cost() over all legal actions in this geometry.
  virtual double min_cost(const WorldGeometry& g) const = 0;

  std::uint64_t invocations() const noexcept { return invocations_.load(); }

protected:
  void count() noexcept { ++invocations_; }

private:
  std::atomic<std::uint64_t> invocations_{0};
};

class GeometricCostProvider final : public CostProvider {
public:
  double cost(const WorldGeometry& g, const SymbolicState& s, const ActionSpec& a) override {
    count();
    return motion_cost_geometric(g, s, a);
  }
  double min_cost(const WorldGeometry& g) const override { return minimum_place_leg(g); }
};

/// Forwards to an inner provider, sleeping for a fixed delay on every call. Stands in for an
/// expensive inverse-kinematics query.
class LatencyCostProvider final : public CostProvider {
public:
  LatencyCostProvider(std::shared_ptr<CostProvider> inner, std::chrono::nanoseconds delay)
      : inner_(std::move(inner)), delay_(delay < std::chrono::nanoseconds::zero() ? std::chrono::nanoseconds::zero() : delay) {}

  double cost(const WorldGeometry& g, const SymbolicState& s, const ActionSpec& a) override {
    count();
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    return inner_->cost(g, s, a);
  }
  double min_cost(const WorldGeometry& g) const override { return inner_->min_cost(g); }

  std::chrono::nanoseconds delay() const noexcept { return delay_; }

private:
  std::shared_ptr<CostProvider> inner_;
  std::chrono::nanoseconds delay_;
};

inline std::shared_ptr<CostProvider> latency_wrapped_provider(std::shared_ptr<CostProvider> inner,
                                                              std::chrono::nanoseconds delay) {
  return std::make_shared<LatencyCostProvider>(std::move(inner), delay);
}

inline std::shared_ptr<CostProvider> make_provider(double latency_ms) {
  auto base = std::make_shared<GeometricCostProvider>();
  if (latency_ms <= 0) return base;
  return latency_wrapped_provider(base, std::chrono::nanoseconds(static_cast<std::int64_t>(latency_ms * 1e6)));
}

}  // namespace rtamp
