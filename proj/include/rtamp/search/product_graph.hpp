#pragma once

#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtamp/domain/transition_system.hpp"
#include "rtamp/errors.hpp"
#include "rtamp/ltl/buchi.hpp"
#include "rtamp/search/cost.hpp"
#include "rtamp/search/experience_cache.hpp"

namespace rtamp {

/// Node of the product automaton: a TS state paired with a Büchi state.
struct ProductState {
  SymbolicState ts;
  int ba = 0;

  std::string key() const { return encode_state(ts) + "|" + std::to_string(ba); }

  friend bool operator==(const ProductState&, const ProductState&) = default;
};

struct ProductEdge {
  std::string target;
  ActionSpec action;
  double cost = 0;
};

/// Edge weights for one query: cache first, provider on miss.
class EdgeCoster {
public:
  EdgeCoster(CostProvider& provider, ExperienceCache* cache) : provider_(provider), cache_(cache) {}

  double operator()(const TransitionSystem& ts, const std::string& state_key, const SymbolicState& s,
                    const ActionSpec& a) {
    const auto name = a.name();
    if (cache_) {
      if (auto hit = cache_->lookup(state_key, name, ts.version())) {
        ++hits_;
        return *hit;
      }
    }
    ++calls_;
    const double c = provider_.cost(ts.geometry(), s, a);
    if (cache_) cache_->store(state_key, name, ts.version(), c);
    return c;
  }

  std::uint64_t provider_calls() const noexcept { return calls_; }
  std::uint64_t cache_hits() const noexcept { return hits_; }
  CostProvider& provider() noexcept { return provider_; }

private:
  CostProvider& provider_;
  ExperienceCache* cache_;
  std::uint64_t calls_ = 0;
  std::uint64_t hits_ = 0;
};

/// Product graph with on-demand expansion. A fully constructed graph is the same structure with
/// every node expanded up front.
class ProductGraph {
public:
  struct Node {
    ProductState state;
    bool expanded = false;
    int goal = -1;  // -1 unknown, 0 no, 1 yes
    std::vector<ProductEdge> edges;
  };

  ProductGraph(std::shared_ptr<const TransitionSystem> ts, std::shared_ptr<const ltl::BuchiAutomaton> ba)
      : ts_(std::move(ts)), ba_(std::move(ba)) {}

  const TransitionSystem& ts() const noexcept { return *ts_; }
  const ltl::BuchiAutomaton& ba() const noexcept { return *ba_; }
  std::uint64_t version() const noexcept { return ts_->version(); }

  const Node& node(const std::string& key) const { return nodes_.at(key); }
  bool contains(const std::string& key) const { return nodes_.contains(key); }
  /// Stored copy of a key; its address is stable for the graph's lifetime.
  const std::string& node_key(const std::string& key) const { return nodes_.find(key)->first; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t expanded_count() const noexcept { return expanded_; }
  std::size_t edge_count() const noexcept { return edges_; }

  const std::string& add(const ProductState& q) {
    auto key = q.key();
    auto [it, inserted] = nodes_.try_emplace(key);
    if (inserted) it->second.state = q;
    return it->first;
  }

  /// Successors per the product transition relation: (apply(s, a), q') for every enabled action a
  /// and every Büchi edge q -> q' whose guard holds on the label of the source state s.
  const std::vector<ProductEdge>& successors(const std::string& key, EdgeCoster& coster) {
    auto& n = nodes_.at(key);
    if (n.expanded) return n.edges;
    const ProductState q = n.state;
    const auto label = ts_->label(q.ts);
    const auto ts_key = encode_state(q.ts);
    std::vector<int> moves;
    for (const auto& e : ba_->edges(q.ba))
      if (e.guard.satisfied_by(label)) moves.push_back(e.target);
    std::vector<ProductEdge> out;
    if (!moves.empty()) {
      for (const auto& a : ts_->enumerate_actions(q.ts)) {
        const auto next = ts_->apply_action(q.ts, a);
        const double c = coster(*ts_, ts_key, q.ts, a);
        for (int target : moves) {
          const auto& tkey = add(ProductState{next, target});
          out.push_back(ProductEdge{tkey, a, c});
        }
      }
    }
    auto& node = nodes_.at(key);  // add() may have rehashed
    node.edges = std::move(out);
    node.expanded = true;
    ++expanded_;
    edges_ += node.edges.size();
    return node.edges;
  }

  /// Accepting continuation exists by repeating this node's TS state forever.
  bool is_goal(const std::string& key) {
    auto& n = nodes_.at(key);
    if (n.goal < 0) n.goal = ba_->accepts_constant(n.state.ba, ts_->label(n.state.ts)) ? 1 : 0;
    return n.goal == 1;
  }

  /// Expanded nodes solid, frontier dashed.
  std::string to_dot() const {
    std::ostringstream out;
    out << "digraph product {\n";
    std::vector<std::string> keys;
    for (const auto& [k, n] : nodes_) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (const auto& k : keys) {
      const auto& n = nodes_.at(k);
      out << "  \"" << k << "\" [style=" << (n.expanded ? "solid" : "dashed")
          << (n.goal == 1 ? ", shape=doublecircle" : "") << "];\n";
    }
    for (const auto& k : keys)
      for (const auto& e : nodes_.at(k).edges)
        out << "  \"" << k << "\" -> \"" << e.target << "\" [label=\"" << e.action.name() << " " << e.cost << "\"];\n";
    out << "}\n";
    return out.str();
  }

private:
  std::shared_ptr<const TransitionSystem> ts_;
  std::shared_ptr<const ltl::BuchiAutomaton> ba_;
  std::unordered_map<std::string, Node> nodes_;
  std::size_t expanded_ = 0;
  std::size_t edges_ = 0;
};

inline constexpr std::size_t kFullGraphNodeBudget = 1'000'000;

/// Materializes every product node and edge. Node count is |S| * |Q_b|.
inline ProductGraph full_graph_construct(std::shared_ptr<const TransitionSystem> ts,
                                         std::shared_ptr<const ltl::BuchiAutomaton> ba, EdgeCoster& coster,
                                         std::size_t budget = kFullGraphNodeBudget) {
  const std::size_t expected = ts->state_count() * ba->size();
  if (expected > budget)
    throw GraphTooLarge("full product graph would have " + std::to_string(expected) + " nodes (budget " +
                        std::to_string(budget) + ")");
  ProductGraph g(ts, ba);
  std::vector<std::string> keys;
  keys.reserve(expected);
  for (const auto& s : ts->enumerate_states())
    for (std::size_t q = 0; q < ba->size(); ++q) keys.push_back(g.add(ProductState{s, static_cast<int>(q)}));
  for (const auto& k : keys) {
    g.successors(k, coster);
    g.is_goal(k);
  }
  return g;
}

/// Admissible, consistent lower bound: zero at goal nodes, otherwise c_min times the larger of 1
/// and the unweighted Büchi distance to a state that can accept some constant suffix.
class BaDistanceHeuristic {
public:
  BaDistanceHeuristic(const ltl::BuchiAutomaton& ba, double c_min)
      : distance_(ba.distance_to_stutter_accepting()), c_min_(c_min) {}

  double operator()(int ba_state, bool goal) const {
    if (goal) return 0.0;
    const int d = distance_.at(static_cast<std::size_t>(ba_state));
    if (d < 0) return std::numeric_limits<double>::infinity();
    return c_min_ * std::max(1, d);
  }

  int distance(int ba_state) const { return distance_.at(static_cast<std::size_t>(ba_state)); }

private:
  std::vector<int> distance_;
  double c_min_;
};

inline double heuristic_ba_distance(ProductGraph& graph, const std::string& key, double c_min) {
  BaDistanceHeuristic h(graph.ba(), c_min);
  return h(graph.node(key).state.ba, graph.is_goal(key));
}

}  // namespace rtamp
