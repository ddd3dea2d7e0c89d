#pragma once

#include <random>
#include <string>
#include <vector>

#include "rtamp/io/scenario.hpp"

namespace rtamp::bench {

/// Random table-top layout: n_regions fixed regions of radius 0.08 scattered over a 1.2 m square
/// with centers at least 0.2 m apart, objects placed uniformly at random among them.
inline Scenario random_instance(std::uint64_t seed, int n_objects, int n_regions,
                                std::string formula = "F G all_obj_in_r2") {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-0.6, 0.6);
  Scenario sc;
  sc.name = "random-" + std::to_string(seed);
  sc.seed = seed;
  sc.geometry.home = {0.0, 0.0, 0.5};
  std::vector<Vec3> centers;
  while (static_cast<int>(centers.size()) < n_regions) {
    const Vec3 c{coord(rng), coord(rng), 0.0};
    bool ok = true;
    for (const auto& o : centers) ok = ok && distance(o, c) >= 0.2;
    if (ok) centers.push_back(c);
  }
  for (int r = 0; r < n_regions; ++r) sc.geometry.regions["r" + std::to_string(r + 1)] = FixedRegion{centers[r], 0.08};
  std::uniform_int_distribution<int> region(1, n_regions);
  for (int o = 1; o <= n_objects; ++o) sc.initial.assignment["o" + std::to_string(o)] = "r" + std::to_string(region(rng));
  for (const auto& [o, r] : sc.initial.assignment) sc.geometry.objects[o] = sc.geometry.region_center(r);
  sc.formula = std::move(formula);
  sc.macros = {"all_obj_in_r1", "all_obj_in_r2"};
  return sc;
}

/// Formulas exercised by the randomized optimality check. Each is satisfiable on any layout with
/// at least two regions and at least one object.
inline std::vector<std::string> optimality_formulas(int n_regions) {
  std::vector<std::string> out{"F G all_obj_in_r2", "F all_obj_in_r1 & F G all_obj_in_r2", "F G (o1r2 | all_obj_in_r1)"};
  if (n_regions >= 3) out.push_back("G (!o1r1 | F o1r3) & F G all_obj_in_r2");
  return out;
}

}  // namespace rtamp::bench
