#pragma once

// Generators shared by the unit and acceptance suites.

#include <random>
#include <string>
#include <vector>

#include "rtamp/ltl/formula.hpp"
#include "rtamp/ltl/lasso.hpp"

namespace rtamp::test {

inline ltl::Formula random_formula(std::mt19937& rng, int depth) {
  using ltl::Formula;
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 11);
  switch (pick(rng)) {
    case 0: return Formula::atom("p");
    case 1: return Formula::atom("q");
    case 2: return std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? Formula::top() : Formula::atom("p");
    case 3: return Formula::negate(random_formula(rng, depth - 1));
    case 4: return Formula::next(random_formula(rng, depth - 1));
    case 5: return Formula::eventually(random_formula(rng, depth - 1));
    case 6: return Formula::always(random_formula(rng, depth - 1));
    case 7: return Formula::conj(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
    case 8: return Formula::disj(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
    case 9: return Formula::until(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
    case 10: return Formula::release(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
    default: return Formula::bottom();
  }
}

/// Every lasso word with |prefix| <= max_prefix and 1 <= |cycle| <= max_cycle over the given atoms.
inline std::vector<ltl::LassoWord> all_lassos(const std::vector<std::string>& atoms, std::size_t max_prefix,
                                              std::size_t max_cycle) {
  std::vector<ltl::Letter> letters;
  for (std::size_t mask = 0; mask < (std::size_t{1} << atoms.size()); ++mask) {
    ltl::Letter l;
    for (std::size_t i = 0; i < atoms.size(); ++i)
      if (mask & (std::size_t{1} << i)) l.insert(atoms[i]);
    letters.push_back(std::move(l));
  }
  const auto sequences = [&](std::size_t len) {
    std::vector<std::vector<ltl::Letter>> out{{}};
    for (std::size_t i = 0; i < len; ++i) {
      std::vector<std::vector<ltl::Letter>> grown;
      for (const auto& s : out)
        for (const auto& l : letters) {
          auto t = s;
          t.push_back(l);
          grown.push_back(std::move(t));
        }
      out = std::move(grown);
    }
    return out;
  };
  std::vector<ltl::LassoWord> words;
  for (std::size_t p = 0; p <= max_prefix; ++p)
    for (std::size_t c = 1; c <= max_cycle; ++c)
      for (const auto& prefix : sequences(p))
        for (const auto& cycle : sequences(c)) words.push_back(ltl::LassoWord{prefix, cycle});
  return words;
}

}  // namespace rtamp::test

#include <limits>
#include <map>
#include <queue>

#include "rtamp/domain/transition_system.hpp"

namespace rtamp::test {

/// Motion cost recomputed from raw coordinates: home to pick point, pick point to place point.
inline double oracle_motion_cost(const WorldGeometry& g, const SymbolicState& s, const ActionSpec& a) {
  const auto where = [&](const std::string& region) {
    if (g.regions.contains(region)) return g.regions.at(region).center;
    return g.trays.at(region).docks.at(s.tray_docks.at(region));
  };
  Vec3 pick, place;
  if (a.kind == ActionSpec::Kind::MoveObject) {
    pick = where(s.assignment.at(a.entity));
    place = g.regions.contains(a.destination) ? g.regions.at(a.destination).center
                                              : g.trays.at(a.destination).docks.at(s.tray_docks.at(a.destination));
  } else {
    pick = g.trays.at(a.entity).docks.at(s.tray_docks.at(a.entity));
    place = g.trays.at(a.entity).docks.at(a.destination);
  }
  const auto d = [](Vec3 p, Vec3 q) {
    return std::sqrt((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) + (p.z - q.z) * (p.z - q.z));
  };
  return d(g.home, pick) + d(pick, place);
}

/// Optimal plan cost by plain Dijkstra over the explicitly enumerated product. A node (s, q) is a
/// goal when the automaton started in q accepts L(s)^ω, decided by the lasso oracle.
/// `allow` filters actions (used to strip tray moves). Returns +inf when no plan exists.
template <typename Allow>
double oracle_optimal_cost(const TransitionSystem& ts, const ltl::BuchiAutomaton& ba, const SymbolicState& start,
                           Allow allow) {
  using Node = std::pair<SymbolicState, int>;
  const auto is_goal = [&](const Node& n) {
    auto copy = ba;
    copy.initial = n.second;
    const auto l = ts.label(n.first);
    return ltl::accepts_lasso(copy, ltl::LassoWord{{}, {ltl::Letter(l.begin(), l.end())}});
  };
  std::map<Node, double> dist;
  using Item = std::pair<double, Node>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[{start, ba.initial}] = 0;
  open.push({0, {start, ba.initial}});
  while (!open.empty()) {
    auto [d, n] = open.top();
    open.pop();
    if (d > dist[n]) continue;
    if (is_goal(n)) return d;
    const auto l = ts.label(n.first);
    for (const auto& a : ts.enumerate_actions(n.first)) {
      if (!allow(a)) continue;
      const auto next = ts.apply_action(n.first, a);
      const double c = d + oracle_motion_cost(ts.geometry(), n.first, a);
      for (const auto& e : ba.edges(n.second)) {
        bool ok = true;
        for (const auto& p : e.guard.pos) ok = ok && l.contains(p);
        for (const auto& m : e.guard.neg) ok = ok && !l.contains(m);
        if (!ok) continue;
        const Node t{next, e.target};
        auto it = dist.find(t);
        if (it == dist.end() || c < it->second) {
          dist[t] = c;
          open.push({c, t});
        }
      }
    }
  }
  return std::numeric_limits<double>::infinity();
}

inline double oracle_optimal_cost(const TransitionSystem& ts, const ltl::BuchiAutomaton& ba, const SymbolicState& start) {
  return oracle_optimal_cost(ts, ba, start, [](const ActionSpec&) { return true; });
}

}  // namespace rtamp::test

#include "rtamp/bt/subtree.hpp"

namespace rtamp::test {

/// Action tuples of a random walk of `length` steps through the system from `start`.
inline std::vector<bt::ActionTuple> random_walk(const TransitionSystem& ts, std::mt19937_64& rng, SymbolicState start,
                                                std::size_t length) {
  std::vector<bt::ActionTuple> out;
  for (std::size_t i = 0; i < length; ++i) {
    const auto acts = ts.enumerate_actions(start);
    if (acts.empty()) break;
    const auto a = acts[rng() % acts.size()];
    auto next = ts.apply_action(start, a);
    out.push_back(bt::make_tuple(start, a, next));
    start = std::move(next);
  }
  return out;
}

}  // namespace rtamp::test
