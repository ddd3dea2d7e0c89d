#pragma once

#include <chrono>
#include <memory>
#include <queue>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtamp/errors.hpp"
#include "rtamp/search/product_graph.hpp"

namespace rtamp {

struct PlanStep {
  ProductState from;
  ActionSpec action;
  ProductState to;
  double cost = 0;
};

struct SearchStats {
  std::size_t nodes_expanded = 0;
  std::size_t graph_nodes = 0;
  std::uint64_t provider_calls = 0;
  std::uint64_t cache_hits = 0;
  double construct_time_s = 0;  // full graph construction only
  double wall_time_s = 0;       // construction + search
};

struct Plan {
  std::vector<PlanStep> steps;
  double cost = 0;
  SearchStats stats;

  bool empty() const noexcept { return steps.empty(); }
  std::size_t size() const noexcept { return steps.size(); }

  std::vector<ActionSpec> actions() const {
    std::vector<ActionSpec> out;
    for (const auto& s : steps) out.push_back(s.action);
    return out;
  }
};

enum class SearchAlgorithm { AStar, Dijkstra };
enum class GraphMode { Partial, Full };

namespace detail {

struct QueueEntry {
  double f;
  double g;
  const std::string* key;
};

// Lowest f first; among equal f prefer the deeper node (larger g); then key order.
struct QueueOrder {
  bool operator()(const QueueEntry& a, const QueueEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g < b.g;
    return *a.key > *b.key;
  }
};

}  // namespace detail

/// Best-first search from `start` to a goal node. With SearchAlgorithm::Dijkstra the heuristic is
/// ignored. Nodes are expanded lazily, so on a partial graph only the explored region is built.
inline Plan search_product(ProductGraph& graph, const ProductState& start, EdgeCoster& coster, SearchAlgorithm algo) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto calls0 = coster.provider_calls();
  const auto hits0 = coster.cache_hits();
  const double c_min = coster.provider().min_cost(graph.ts().geometry());
  const BaDistanceHeuristic heuristic(graph.ba(), c_min);
  const auto h = [&](const std::string& key) {
    if (algo == SearchAlgorithm::Dijkstra) return 0.0;
    return heuristic(graph.node(key).state.ba, graph.is_goal(key));
  };

  struct Parent {
    const std::string* key = nullptr;
    const ProductEdge* edge = nullptr;
  };
  std::unordered_map<std::string_view, double> best;
  std::unordered_map<std::string_view, Parent> parent;
  std::unordered_set<std::string_view> closed;
  std::priority_queue<detail::QueueEntry, std::vector<detail::QueueEntry>, detail::QueueOrder> open;

  const std::string& start_key = graph.add(start);
  best[start_key] = 0;
  const double h0 = h(start_key);
  if (std::isfinite(h0)) open.push({h0, 0, &start_key});

  Plan plan;
  const std::string* goal = nullptr;
  while (!open.empty()) {
    const auto cur = open.top();
    open.pop();
    if (closed.contains(*cur.key)) continue;
    if (cur.g > best.at(*cur.key)) continue;
    if (graph.is_goal(*cur.key)) {
      goal = cur.key;
      break;
    }
    closed.insert(*cur.key);
    ++plan.stats.nodes_expanded;
    // Edges live in the node table, so pointers into them stay valid for this query.
    const auto& edges = graph.successors(*cur.key, coster);
    for (const auto& e : edges) {
      if (closed.contains(e.target)) continue;
      const double g = cur.g + e.cost;
      auto it = best.find(e.target);
      if (it != best.end() && it->second <= g) continue;
      const double hv = h(e.target);
      if (!std::isfinite(hv)) continue;
      const std::string* tkey = &graph.node_key(e.target);
      best[*tkey] = g;
      parent[*tkey] = Parent{cur.key, &e};
      open.push({g + hv, g, tkey});
    }
  }

  plan.stats.graph_nodes = graph.node_count();
  plan.stats.provider_calls = coster.provider_calls() - calls0;
  plan.stats.cache_hits = coster.cache_hits() - hits0;
  plan.stats.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!goal) throw NoPlan("no accepting product node is reachable from " + start_key);

  std::vector<PlanStep> reversed;
  for (const std::string* k = goal; *k != start_key;) {
    const auto& p = parent.at(*k);
    reversed.push_back(PlanStep{graph.node(*p.key).state, p.edge->action, graph.node(*k).state, p.edge->cost});
    k = p.key;
  }
  plan.steps.assign(reversed.rbegin(), reversed.rend());
  for (const auto& s : plan.steps) plan.cost += s.cost;
  return plan;
}

/// Planner configuration: search algorithm, graph construction mode, and whether edge costs and
/// the partial graph persist across queries.
struct PlannerConfig {
  SearchAlgorithm algorithm = SearchAlgorithm::AStar;
  GraphMode graph = GraphMode::Partial;
  bool experience = true;
  std::size_t full_graph_budget = kFullGraphNodeBudget;
};

/// Stateful planner carrying experience between queries.
class Planner {
public:
  Planner(PlannerConfig config, std::shared_ptr<const ltl::BuchiAutomaton> ba, std::shared_ptr<CostProvider> provider)
      : config_(config), ba_(std::move(ba)), provider_(std::move(provider)) {}

  /// Plans from (start, initial Büchi state) over `ts`.
  Plan plan(std::shared_ptr<const TransitionSystem> ts, const SymbolicState& start) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!config_.experience) cache_.clear();
    cache_.prune(ts->version());
    EdgeCoster coster(*provider_, &cache_);

    const ProductState q0{start, ba_->initial};
    Plan plan;
    if (config_.graph == GraphMode::Full) {
      const auto tc = std::chrono::steady_clock::now();
      ProductGraph full = full_graph_construct(ts, ba_, coster, config_.full_graph_budget);
      const double construct = std::chrono::duration<double>(std::chrono::steady_clock::now() - tc).count();
      const auto calls = coster.provider_calls();
      const auto hits = coster.cache_hits();
      plan = search_product(full, q0, coster, config_.algorithm);
      plan.stats.construct_time_s = construct;
      plan.stats.provider_calls += calls;
      plan.stats.cache_hits += hits;
      last_graph_ = std::make_shared<ProductGraph>(std::move(full));
    } else {
      if (!config_.experience || !graph_ || graph_->version() != ts->version() || !same_layout(*graph_, *ts))
        graph_ = std::make_shared<ProductGraph>(ts, ba_);
      plan = search_product(*graph_, q0, coster, config_.algorithm);
      last_graph_ = graph_;
    }
    plan.stats.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return plan;
  }

  const ExperienceCache& cache() const noexcept { return cache_; }
  ExperienceCache& cache() noexcept { return cache_; }
  const PlannerConfig& config() const noexcept { return config_; }
  std::shared_ptr<const ProductGraph> last_graph() const { return last_graph_; }
  const CostProvider& provider() const { return *provider_; }

private:
  // A persisted partial graph stays valid only while objects, regions and docks are unchanged.
  static bool same_layout(const ProductGraph& g, const TransitionSystem& ts) {
    return g.ts().objects() == ts.objects() && g.ts().regions() == ts.regions();
  }

  PlannerConfig config_;
  std::shared_ptr<const ltl::BuchiAutomaton> ba_;
  std::shared_ptr<CostProvider> provider_;
  ExperienceCache cache_;
  std::shared_ptr<ProductGraph> graph_;
  std::shared_ptr<ProductGraph> last_graph_;
};

inline nlohmann::json stats_to_json(const Plan& p) {
  return {{"schema", "v1"},
          {"nodes_expanded", p.stats.nodes_expanded},
          {"graph_nodes", p.stats.graph_nodes},
          {"provider_invocations", p.stats.provider_calls},
          {"cache_hits", p.stats.cache_hits},
          {"construct_time_s", p.stats.construct_time_s},
          {"wall_time_s", p.stats.wall_time_s},
          {"plan_cost", p.cost},
          {"plan_length", p.size()}};
}

inline nlohmann::json plan_to_json(const Plan& p) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : p.steps)
    steps.push_back({{"action", s.action.name()},
                     {"kind", s.action.kind == ActionSpec::Kind::MoveObject ? "move_object" : "move_region"},
                     {"entity", s.action.entity},
                     {"destination", s.action.destination},
                     {"from", s.from.key()},
                     {"to", s.to.key()},
                     {"cost", s.cost}});
  return {{"schema", "v1"}, {"cost", p.cost}, {"steps", steps}};
}

}  // namespace rtamp
