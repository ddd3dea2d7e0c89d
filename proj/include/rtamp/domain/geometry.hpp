#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "rtamp/errors.hpp"

namespace rtamp {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline double distance(Vec3 a, Vec3 b) { return (a - b).norm(); }

inline constexpr double kDefaultRegionRadius = 0.15;

struct FixedRegion {
  Vec3 center;
  double radius = kDefaultRegionRadius;
};

/// Movable region: a region that sits at one of a finite set of docks.
struct Tray {
  std::map<std::string, Vec3> docks;
  std::string dock;
  double radius = kDefaultRegionRadius;

  Vec3 center() const { return docks.at(dock); }
};

/// Continuous workspace data: fixed regions, trays, object positions and the end-effector rest pose.
/// `version` changes whenever the region/dock layout or the object set changes.
struct WorldGeometry {
  std::map<std::string, FixedRegion> regions;
  std::map<std::string, Tray> trays;
  std::map<std::string, Vec3> objects;
  Vec3 home{0.0, 0.0, 0.5};
  std::uint64_t version = 0;

  bool has_region(const std::string& id) const { return regions.contains(id) || trays.contains(id); }

  /// Center of a fixed region, or of a tray at the given dock (its current dock if none given).
  Vec3 region_center(const std::string& id, const std::optional<std::string>& dock = std::nullopt) const {
    if (auto it = regions.find(id); it != regions.end()) return it->second.center;
    if (auto it = trays.find(id); it != trays.end()) return it->second.docks.at(dock.value_or(it->second.dock));
    throw Error("unknown region '" + id + "'");
  }

  double region_radius(const std::string& id) const {
    if (auto it = regions.find(id); it != regions.end()) return it->second.radius;
    return trays.at(id).radius;
  }
};

/// Region whose center is nearest to `position` among those containing it; ties go to the
/// lexicographically smallest id. Throws NoRegion when no region contains the position.
inline std::string region_of(const WorldGeometry& geometry, Vec3 position) {
  if (geometry.regions.empty() && geometry.trays.empty()) throw NoRegion("geometry has no regions");
  std::optional<std::string> best;
  double best_dist = 0;
  const auto consider = [&](const std::string& id, Vec3 center, double radius) {
    const double d = distance(center, position);
    if (d > radius + 1e-12) return;
    // Maps iterate in id order, so a strict comparison keeps the smallest id on ties.
    if (!best || d < best_dist - 1e-12 || (std::abs(d - best_dist) <= 1e-12 && id < *best)) {
      best = id;
      best_dist = d;
    }
  };
  for (const auto& [id, r] : geometry.regions) consider(id, r.center, r.radius);
  for (const auto& [id, t] : geometry.trays) consider(id, t.center(), t.radius);
  if (!best) throw NoRegion("position is outside every region");
  return *best;
}

}  // namespace rtamp
