#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "rtamp/errors.hpp"
#include "rtamp/ltl/formula.hpp"

namespace rtamp::ltl {

/// Conjunction of literals. Empty guard accepts every letter.
struct Guard {
  std::set<std::string> pos;
  std::set<std::string> neg;

  template <typename LabelSet>
  bool satisfied_by(const LabelSet& label) const {
    for (const auto& a : pos)
      if (!label.contains(a)) return false;
    for (const auto& a : neg)
      if (label.contains(a)) return false;
    return true;
  }

  bool unguarded() const noexcept { return pos.empty() && neg.empty(); }

  /// "+a,+b,-c" with positives first, each group sorted.
  std::string str() const {
    std::string out;
    for (const auto& a : pos) out += (out.empty() ? "+" : ",+") + a;
    for (const auto& a : neg) out += (out.empty() ? "-" : ",-") + a;
    return out;
  }

  friend bool operator==(const Guard&, const Guard&) = default;
  friend bool operator<(const Guard& a, const Guard& b) { return std::tie(a.pos, a.neg) < std::tie(b.pos, b.neg); }
};

struct BuchiEdge {
  Guard guard;
  int target = 0;

  friend bool operator==(const BuchiEdge&, const BuchiEdge&) = default;
  friend bool operator<(const BuchiEdge& a, const BuchiEdge& b) {
    return std::tie(a.guard, a.target) < std::tie(b.guard, b.target);
  }
};

struct BuchiState {
  bool accepting = false;
  std::vector<BuchiEdge> edges;
};

/// Nondeterministic Büchi automaton with literal-conjunction guards on edges.
/// State ids are dense indices; state 0 is the initial state after canonicalization.
struct BuchiAutomaton {
  std::vector<BuchiState> states;
  int initial = 0;
  std::set<std::string> atoms;

  std::size_t size() const noexcept { return states.size(); }
  bool accepting(int q) const { return states.at(static_cast<std::size_t>(q)).accepting; }
  const std::vector<BuchiEdge>& edges(int q) const { return states.at(static_cast<std::size_t>(q)).edges; }

  /// Line-oriented canonical text: `state <id> [init] [accept]` then `edge <src> <dst> <guard>`.
  std::string serialize() const {
    std::ostringstream out;
    for (std::size_t q = 0; q < states.size(); ++q) {
      out << "state " << q;
      if (static_cast<int>(q) == initial) out << " init";
      if (states[q].accepting) out << " accept";
      out << '\n';
    }
    for (std::size_t q = 0; q < states.size(); ++q)
      for (const auto& e : states[q].edges) {
        out << "edge " << q << ' ' << e.target;
        if (!e.guard.unguarded()) out << ' ' << e.guard.str();
        out << '\n';
      }
    return out.str();
  }

  std::string to_dot() const {
    std::ostringstream out;
    out << "digraph buchi {\n  rankdir=LR;\n  __start [shape=point];\n";
    for (std::size_t q = 0; q < states.size(); ++q)
      out << "  q" << q << " [shape=" << (states[q].accepting ? "doublecircle" : "circle") << ", label=\"q" << q
          << "\"];\n";
    out << "  __start -> q" << initial << ";\n";
    for (std::size_t q = 0; q < states.size(); ++q)
      for (const auto& e : states[q].edges)
        out << "  q" << q << " -> q" << e.target << " [label=\""
            << (e.guard.unguarded() ? std::string("true") : e.guard.str()) << "\"];\n";
    out << "}\n";
    return out.str();
  }

  /// Minimum number of edges from each state to an accepting state, guards ignored. -1 if unreachable.
  std::vector<int> distance_to_accepting() const {
    return backward_bfs([this](int q) { return accepting(q); });
  }

  /// Minimum number of edges from each state to a state from which some constant word σ^ω is
  /// accepted. A product node cannot reach a goal in fewer product edges than this.
  std::vector<int> distance_to_stutter_accepting() const {
    std::vector<bool> target(states.size(), false);
    for (std::size_t q = 0; q < states.size(); ++q) target[q] = can_stutter_accept_some_letter(static_cast<int>(q));
    return backward_bfs([&](int q) { return target[static_cast<std::size_t>(q)]; });
  }

  /// True when the constant word label^ω is accepted from state `from`.
  template <typename LabelSet>
  bool accepts_constant(int from, const LabelSet& label) const {
    const auto n = states.size();
    std::vector<std::vector<int>> succ(n);
    for (std::size_t q = 0; q < n; ++q)
      for (const auto& e : states[q].edges)
        if (e.guard.satisfied_by(label)) succ[q].push_back(e.target);
    const auto reach_from = [&](int s) {
      std::vector<bool> seen(n, false);
      std::vector<int> stack{s};
      seen[static_cast<std::size_t>(s)] = true;
      while (!stack.empty()) {
        int q = stack.back();
        stack.pop_back();
        for (int t : succ[static_cast<std::size_t>(q)])
          if (!seen[static_cast<std::size_t>(t)]) {
            seen[static_cast<std::size_t>(t)] = true;
            stack.push_back(t);
          }
      }
      return seen;
    };
    const auto reachable = reach_from(from);
    for (std::size_t q = 0; q < n; ++q) {
      if (!reachable[q] || !states[q].accepting) continue;
      for (int t : succ[q])
        if (reach_from(t)[q]) return true;
    }
    return false;
  }

private:
  template <typename Pred>
  std::vector<int> backward_bfs(Pred is_target) const {
    const auto n = states.size();
    std::vector<std::vector<int>> pred(n);
    for (std::size_t q = 0; q < n; ++q)
      for (const auto& e : states[q].edges) pred[static_cast<std::size_t>(e.target)].push_back(static_cast<int>(q));
    std::vector<int> dist(n, -1);
    std::deque<int> queue;
    for (std::size_t q = 0; q < n; ++q)
      if (is_target(static_cast<int>(q))) {
        dist[q] = 0;
        queue.push_back(static_cast<int>(q));
      }
    while (!queue.empty()) {
      int q = queue.front();
      queue.pop_front();
      for (int p : pred[static_cast<std::size_t>(q)])
        if (dist[static_cast<std::size_t>(p)] < 0) {
          dist[static_cast<std::size_t>(p)] = dist[static_cast<std::size_t>(q)] + 1;
          queue.push_back(p);
        }
    }
    return dist;
  }

  // Guards are conjunctions of literals, so a letter satisfying a set of guards exists iff
  // their union is consistent. Enumerating letters over the automaton's atoms is exact.
  bool can_stutter_accept_some_letter(int q) const {
    std::vector<std::string> names(atoms.begin(), atoms.end());
    if (names.size() > 16) return true;  // conservative: keeps the heuristic admissible
    const std::size_t letters = std::size_t{1} << names.size();
    for (std::size_t mask = 0; mask < letters; ++mask) {
      std::set<std::string> label;
      for (std::size_t i = 0; i < names.size(); ++i)
        if (mask & (std::size_t{1} << i)) label.insert(names[i]);
      if (accepts_constant(q, label)) return true;
    }
    return false;
  }
};

namespace detail {

// Tableau node of the expand-node construction.
struct TableauNode {
  int id = 0;
  std::set<int> incoming;
  std::set<Formula> pending;
  std::set<Formula> old;
  std::set<Formula> next;
};

class TableauBuilder {
public:
  static constexpr int kInit = 0;

  std::vector<TableauNode> build(const Formula& f) {
    TableauNode root;
    root.id = fresh();
    root.incoming = {kInit};
    root.pending = {f};
    expand(std::move(root));
    return std::move(done_);
  }

private:
  int fresh() { return next_id_++; }

  static bool is_literal(const Formula& f) {
    return f.op() == Op::Atom || f.op() == Op::True || f.op() == Op::False ||
           (f.op() == Op::Not && f.lhs().op() == Op::Atom);
  }

  static Formula complement(const Formula& lit) {
    switch (lit.op()) {
      case Op::Atom: return Formula::negate(lit);
      case Op::Not: return lit.lhs();
      case Op::True: return Formula::bottom();
      default: return Formula::top();
    }
  }

  void expand(TableauNode node) {
    // Iterative over the worklist of pending formulas; splits recurse.
    while (!node.pending.empty()) {
      Formula eta = *node.pending.begin();
      node.pending.erase(node.pending.begin());
      if (node.old.contains(eta)) continue;

      if (is_literal(eta)) {
        if (eta.op() == Op::False || node.old.contains(complement(eta))) return;
        node.old.insert(eta);
        continue;
      }
      switch (eta.op()) {
        case Op::And:
          add_pending(node, eta.lhs());
          add_pending(node, eta.rhs());
          node.old.insert(eta);
          continue;
        case Op::Next:
          node.old.insert(eta);
          node.next.insert(eta.lhs());
          continue;
        case Op::Or:
        case Op::Until:
        case Op::Release: {
          TableauNode first = node;
          TableauNode second = node;
          first.id = fresh();
          second.id = fresh();
          first.old.insert(eta);
          second.old.insert(eta);
          if (eta.op() == Op::Or) {
            add_pending(first, eta.lhs());
            add_pending(second, eta.rhs());
          } else if (eta.op() == Op::Until) {
            add_pending(first, eta.lhs());
            first.next.insert(eta);
            add_pending(second, eta.rhs());
          } else {
            add_pending(first, eta.rhs());
            first.next.insert(eta);
            add_pending(second, eta.lhs());
            add_pending(second, eta.rhs());
          }
          expand(std::move(first));
          expand(std::move(second));
          return;
        }
        default:
          throw Error("tableau construction requires a formula in negation normal form");
      }
    }

    for (auto& existing : done_) {
      if (existing.old == node.old && existing.next == node.next) {
        existing.incoming.insert(node.incoming.begin(), node.incoming.end());
        return;
      }
    }
    TableauNode successor;
    successor.id = fresh();
    successor.incoming = {node.id};
    successor.pending = node.next;
    done_.push_back(std::move(node));
    expand(std::move(successor));
  }

  static void add_pending(TableauNode& node, const Formula& f) {
    if (!node.old.contains(f)) node.pending.insert(f);
  }

  int next_id_ = 1;
  std::vector<TableauNode> done_;
};

inline void collect_untils(const Formula& f, std::set<Formula>& out) {
  if (f.op() == Op::Until) out.insert(f);
  if (f.is_unary() || f.is_binary()) collect_untils(f.lhs(), out);
  if (f.is_binary()) collect_untils(f.rhs(), out);
}

// Raw automaton before simplification: arbitrary ids, edges as sets.
struct RawAutomaton {
  std::vector<bool> accepting;
  std::vector<std::set<BuchiEdge>> edges;
  int initial = 0;
};

inline RawAutomaton degeneralize(const std::vector<TableauNode>& nodes, const std::set<Formula>& untils) {
  // Tableau ids -> dense index; the init pseudo-node gets index 0.
  std::map<int, int> index{{TableauBuilder::kInit, 0}};
  for (const auto& n : nodes) index.emplace(n.id, static_cast<int>(index.size()));
  const int base = static_cast<int>(index.size());

  std::vector<Guard> guard(static_cast<std::size_t>(base));
  for (const auto& n : nodes) {
    Guard g;
    for (const auto& lit : n.old) {
      if (lit.op() == Op::Atom) g.pos.insert(lit.name());
      if (lit.op() == Op::Not && lit.lhs().op() == Op::Atom) g.neg.insert(lit.lhs().name());
    }
    guard[static_cast<std::size_t>(index.at(n.id))] = std::move(g);
  }

  const std::vector<Formula> sets(untils.begin(), untils.end());
  const std::size_t k = sets.size();
  // in_set[i][q]: tableau state q satisfies acceptance condition i.
  std::vector<std::vector<bool>> in_set(k, std::vector<bool>(static_cast<std::size_t>(base), false));
  for (std::size_t i = 0; i < k; ++i)
    for (const auto& n : nodes) {
      const bool ok = !n.old.contains(sets[i]) || n.old.contains(sets[i].rhs());
      in_set[i][static_cast<std::size_t>(index.at(n.id))] = ok;
    }

  const std::size_t layers = std::max<std::size_t>(k, 1);
  RawAutomaton raw;
  raw.accepting.assign(static_cast<std::size_t>(base) * layers, false);
  raw.edges.assign(static_cast<std::size_t>(base) * layers, {});
  const auto id = [&](int q, std::size_t layer) { return static_cast<int>(layer * static_cast<std::size_t>(base)) + q; };

  for (int q = 0; q < base; ++q)
    for (std::size_t layer = 0; layer < layers; ++layer) {
      bool acc = false;
      if (k == 0) acc = true;
      else if (layer == 0 && q != 0) acc = in_set[0][static_cast<std::size_t>(q)];
      raw.accepting[static_cast<std::size_t>(id(q, layer))] = acc;
    }

  for (const auto& n : nodes) {
    const int dst = index.at(n.id);
    for (int src_tab : n.incoming) {
      const int src = index.at(src_tab);
      for (std::size_t layer = 0; layer < layers; ++layer) {
        std::size_t next_layer = layer;
        if (k > 0 && src != 0 && in_set[layer][static_cast<std::size_t>(src)]) next_layer = (layer + 1) % k;
        raw.edges[static_cast<std::size_t>(id(src, layer))].insert(
            BuchiEdge{guard[static_cast<std::size_t>(dst)], id(dst, next_layer)});
      }
    }
  }
  raw.initial = id(0, 0);
  return raw;
}

// Removes unreachable states and repeatedly merges states with equal acceptance and equal
// outgoing edge sets, then renumbers in breadth-first order from the initial state.
inline BuchiAutomaton simplify(RawAutomaton raw) {
  const auto n = raw.accepting.size();
  std::vector<int> rep(n);
  for (std::size_t q = 0; q < n; ++q) rep[q] = static_cast<int>(q);

  const auto reachable = [&]() {
    std::vector<bool> seen(n, false);
    std::vector<int> stack{raw.initial};
    seen[static_cast<std::size_t>(raw.initial)] = true;
    while (!stack.empty()) {
      int q = stack.back();
      stack.pop_back();
      for (const auto& e : raw.edges[static_cast<std::size_t>(q)])
        if (!seen[static_cast<std::size_t>(e.target)]) {
          seen[static_cast<std::size_t>(e.target)] = true;
          stack.push_back(e.target);
        }
    }
    return seen;
  };

  for (bool changed = true; changed;) {
    changed = false;
    const auto live = reachable();
    std::map<std::pair<bool, std::set<BuchiEdge>>, int> signature;
    std::vector<int> merge(n, -1);
    for (std::size_t q = 0; q < n; ++q) {
      if (!live[q]) continue;
      auto [it, inserted] = signature.try_emplace({raw.accepting[q], raw.edges[q]}, static_cast<int>(q));
      if (!inserted) {
        merge[q] = it->second;
        changed = true;
      }
    }
    if (!changed) break;
    const auto resolve = [&](int q) { return merge[static_cast<std::size_t>(q)] >= 0 ? merge[static_cast<std::size_t>(q)] : q; };
    for (std::size_t q = 0; q < n; ++q) {
      std::set<BuchiEdge> redirected;
      for (const auto& e : raw.edges[q]) redirected.insert(BuchiEdge{e.guard, resolve(e.target)});
      raw.edges[q] = std::move(redirected);
    }
    raw.initial = resolve(raw.initial);
    for (std::size_t q = 0; q < n; ++q)
      if (merge[q] >= 0) raw.edges[q].clear();
  }

  // Breadth-first renumbering from the initial state.
  std::map<int, int> order;
  std::deque<int> queue{raw.initial};
  order.emplace(raw.initial, 0);
  while (!queue.empty()) {
    int q = queue.front();
    queue.pop_front();
    for (const auto& e : raw.edges[static_cast<std::size_t>(q)])
      if (order.emplace(e.target, static_cast<int>(order.size())).second) queue.push_back(e.target);
  }

  BuchiAutomaton ba;
  ba.states.resize(order.size());
  for (const auto& [old_id, new_id] : order) {
    auto& st = ba.states[static_cast<std::size_t>(new_id)];
    st.accepting = raw.accepting[static_cast<std::size_t>(old_id)];
    for (const auto& e : raw.edges[static_cast<std::size_t>(old_id)]) st.edges.push_back(BuchiEdge{e.guard, order.at(e.target)});
    std::sort(st.edges.begin(), st.edges.end());
  }
  ba.initial = 0;
  return ba;
}

}  // namespace detail

/// Tableau (expand-node) construction, counter degeneralization, then simplification.
/// Accepts NNF input; non-NNF input is normalized first.
inline BuchiAutomaton build_buchi(const Formula& f) {
  const Formula nnf = is_nnf(f) ? f : to_nnf(f);
  detail::TableauBuilder builder;
  const auto nodes = builder.build(nnf);
  std::set<Formula> untils;
  detail::collect_untils(nnf, untils);
  BuchiAutomaton ba = detail::simplify(detail::degeneralize(nodes, untils));
  ba.atoms = f.atoms();
  return ba;
}

}  // namespace rtamp::ltl
