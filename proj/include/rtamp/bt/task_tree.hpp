#pragma once

#include <functional>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtamp/bt/subtree.hpp"

namespace rtamp::bt {

struct ReconfigureResult {
  std::size_t inserted = 0;
  std::size_t removed = 0;
  std::size_t kept = 0;
  std::vector<SubtreePtr> subtrees;
  std::vector<SubtreePtr> dropped;

  std::size_t changes() const noexcept { return inserted + removed; }
};

inline SubtreePtr make_subtree(const ActionTuple& t, ConditionStyle style, int id) {
  return std::make_shared<Subtree>(id, t, style);
}

/// Shares subtrees between the current list and a new plan by matching action names from the back.
/// A mismatch either drops the old subtrees between an earlier match and the current slot, or
/// inserts a fresh subtree. Subtrees left over at the head are dropped.
inline ReconfigureResult reconfigure(std::vector<SubtreePtr> current, const std::vector<ActionTuple>& plan,
                                     ConditionStyle style, int& next_id) {
  ReconfigureResult r;
  auto& psi = current;
  const std::size_t n = plan.size();
  for (std::size_t i = 1; i <= n; ++i) {
    const auto& t = plan[n - i];
    const std::size_t m = psi.size();
    if (m >= i && psi[m - i]->action() == t.action) {
      psi[m - i]->update_conditions(t);
      ++r.kept;
      continue;
    }
    std::optional<std::size_t> j;
    if (m >= i)
      for (std::size_t k = m - i; k-- > 0;)
        if (psi[k]->action() == t.action) {
          j = k;
          break;
        }
    if (j) {
      const auto first = psi.begin() + static_cast<std::ptrdiff_t>(*j + 1);
      const auto last = psi.begin() + static_cast<std::ptrdiff_t>(m - i + 1);
      r.dropped.insert(r.dropped.end(), first, last);
      r.removed += static_cast<std::size_t>(last - first);
      psi.erase(first, last);
      psi[*j]->update_conditions(t);
      ++r.kept;
    } else {
      const std::size_t at = m >= i ? m - i + 1 : 0;
      psi.insert(psi.begin() + static_cast<std::ptrdiff_t>(at), make_subtree(t, style, next_id++));
      ++r.inserted;
    }
  }
  if (psi.size() > n) {
    const auto head = psi.begin() + static_cast<std::ptrdiff_t>(psi.size() - n);
    r.dropped.insert(r.dropped.end(), psi.begin(), head);
    r.removed += static_cast<std::size_t>(head - psi.begin());
    psi.erase(psi.begin(), head);
  }
  for (auto& st : psi) st->done = false;
  r.subtrees = std::move(psi);
  return r;
}

/// Discards everything and compiles the plan from scratch.
inline ReconfigureResult offline_rebuild(const std::vector<SubtreePtr>& current, const std::vector<ActionTuple>& plan,
                                         ConditionStyle style, int& next_id) {
  ReconfigureResult r;
  r.dropped = current;
  r.removed = current.size();
  for (const auto& t : plan) r.subtrees.push_back(make_subtree(t, style, next_id++));
  r.inserted = plan.size();
  return r;
}

/// Task root: the subtree in flight, then the goal sentinel, then the earliest pending subtree
/// whose entry condition holds.
class TaskTree {
public:
  using GoalCheck = std::function<bool(const Label&)>;

  explicit TaskTree(ConditionStyle style = ConditionStyle::Action) : style_(style) {}

  ConditionStyle style() const noexcept { return style_; }
  const std::vector<SubtreePtr>& subtrees() const noexcept { return subtrees_; }
  SubtreePtr active() const { return active_; }
  std::size_t changes() const noexcept { return changes_; }
  NodeStatus status() const noexcept { return status_; }

  void set_goal(GoalCheck goal) { goal_ = std::move(goal); }
  bool goal_holds(const Label& l) const { return goal_ && goal_(l); }

  ReconfigureResult reconfigure(const std::vector<ActionTuple>& plan) {
    auto r = bt::reconfigure(subtrees_, plan, style_, next_id_);
    subtrees_ = r.subtrees;
    retire(r.dropped);
    changes_ += r.changes();
    return r;
  }

  /// The caller is responsible for aborting the action in flight.
  ReconfigureResult offline_rebuild(const std::vector<ActionTuple>& plan) {
    auto r = bt::offline_rebuild(subtrees_, plan, style_, next_id_);
    if (active_) {
      active_->root().halt();
      active_->running = false;
      active_.reset();
    }
    subtrees_ = r.subtrees;
    changes_ += r.changes();
    return r;
  }

  void clear() {
    changes_ += subtrees_.size();
    subtrees_.clear();
    if (active_) active_->root().halt();
    active_.reset();
  }

  /// Recovery: make subtree i pending again.
  void reactivate(std::size_t i) { subtrees_.at(i)->done = false; }

  NodeStatus tick(const Label& atoms, ActionPort* port) {
    for (auto& st : subtrees_) st->root().invalidate();
    if (active_) active_->root().invalidate();
    TickContext ctx{atoms, port};

    if (active_) {
      const auto s = active_->root().tick(ctx);
      if (s == NodeStatus::Running) return status_ = s;
      finish(s);
      if (s == NodeStatus::Success) return status_ = goal_holds(atoms) ? NodeStatus::Success : NodeStatus::Running;
      // A failed subtree stays pending; fall through so it can be retried if its precondition holds.
    }
    if (goal_holds(atoms)) return status_ = NodeStatus::Success;
    for (auto& st : subtrees_) {
      if (st->done) continue;
      if (!st->pre_holds(atoms) && !st->running_holds(atoms)) continue;
      const auto s = st->root().tick(ctx);
      if (s == NodeStatus::Running) {
        active_ = st;
        st->running = true;
        return status_ = s;
      }
      if (s == NodeStatus::Success) {
        st->done = true;
        return status_ = goal_holds(atoms) ? NodeStatus::Success : NodeStatus::Running;
      }
      // Refused, e.g. a resume branch with nothing in flight; try the next pending subtree.
    }
    return status_ = NodeStatus::Failure;
  }

  std::string to_dot() const {
    std::ostringstream out;
    out << "digraph bt {\n  node [shape=box, style=filled];\n  task [label=\"Task (" << to_string(status_)
        << ")\", fillcolor=" << color(status_) << "];\n";
    int counter = 0;
    const auto emit = [&](const Subtree& st) {
      std::vector<int> stack;
      visit(st.root(), [&](const Node& n, int depth) {
        const int id = counter++;
        stack.resize(static_cast<std::size_t>(depth));
        out << "  n" << id << " [label=\"" << n.kind() << "\\n" << n.name();
        for (const auto& a : n.condition_atoms()) out << "\\n" << a;
        if (depth == 0) out << (st.done ? "\\n(done)" : "") << (st.retiring ? "\\n(retiring)" : "");
        out << "\", fillcolor=" << color(n.status()) << "];\n";
        out << "  " << (depth == 0 ? std::string("task") : "n" + std::to_string(stack.back())) << " -> n" << id << ";\n";
        stack.push_back(id);
      });
    };
    for (const auto& st : subtrees_) emit(*st);
    if (active_ && active_->retiring) emit(*active_);
    out << "}\n";
    return out.str();
  }

  nlohmann::json to_json() const {
    const auto node_json = [](const auto& self, const Node& n) -> nlohmann::json {
      nlohmann::json j{{"kind", n.kind()}, {"name", n.name()}, {"status", to_string(n.status())}};
      if (n.kind() == "Condition") j["atoms"] = n.condition_atoms();
      nlohmann::json kids = nlohmann::json::array();
      for (const auto& c : n.children()) kids.push_back(self(self, *c));
      j["children"] = kids;
      return j;
    };
    nlohmann::json subs = nlohmann::json::array();
    const auto sub_json = [&](const Subtree& st) {
      return nlohmann::json{{"id", st.id()},
                            {"action", st.action().name()},
                            {"style", to_string(st.style())},
                            {"done", st.done},
                            {"running", st.running},
                            {"retiring", st.retiring},
                            {"pre", st.pre()},
                            {"post", st.post()},
                            {"running_condition", st.running_condition()},
                            {"root", node_json(node_json, st.root())}};
    };
    for (const auto& st : subtrees_) subs.push_back(sub_json(*st));
    nlohmann::json j{{"schema", "v1"}, {"status", to_string(status_)}, {"subtrees", subs}, {"changes", changes_}};
    if (active_) j["active"] = active_->id();
    if (active_ && active_->retiring) j["retiring"] = sub_json(*active_);
    return j;
  }

private:
  static const char* color(NodeStatus s) {
    switch (s) {
      case NodeStatus::Success: return "palegreen";
      case NodeStatus::Running: return "khaki";
      case NodeStatus::Failure: return "salmon";
      default: return "lightgray";
    }
  }

  // A removed subtree that is still executing stays attached as the active one until it ends.
  void retire(const std::vector<SubtreePtr>& dropped) {
    for (const auto& st : dropped)
      if (st == active_) st->retiring = true;
  }

  void finish(NodeStatus s) {
    active_->running = false;
    if (s == NodeStatus::Success && !active_->retiring) active_->done = true;
    active_.reset();
  }

  ConditionStyle style_;
  std::vector<SubtreePtr> subtrees_;
  SubtreePtr active_;
  GoalCheck goal_;
  int next_id_ = 0;
  std::size_t changes_ = 0;
  NodeStatus status_ = NodeStatus::Invalid;
};

}  // namespace rtamp::bt
