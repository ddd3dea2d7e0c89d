#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rtamp/bt/nodes.hpp"
#include "rtamp/search/planner.hpp"

namespace rtamp::bt {

using Atoms = std::set<std::string>;

/// Object and tray-dock atoms of a state; derived macros are left out.
inline Atoms state_atoms(const SymbolicState& s) {
  Atoms out;
  for (const auto& [o, r] : s.assignment) out.insert(o + r);
  for (const auto& [t, d] : s.tray_docks) out.insert(t + d);
  return out;
}

struct ActionTuple {
  ActionSpec action;
  Atoms pre;      // full source state
  Atoms post;     // full target state
  Atoms running;  // moved entity in the gripper plus every untouched entity
  SymbolicState from;
  SymbolicState to;
};

inline Atoms running_atoms(const SymbolicState& from, const ActionSpec& a) {
  Atoms out{a.entity + kHand};
  for (const auto& [o, r] : from.assignment)
    if (o != a.entity) out.insert(o + r);
  for (const auto& [t, d] : from.tray_docks)
    if (t != a.entity) out.insert(t + d);
  return out;
}

inline ActionTuple make_tuple(const SymbolicState& from, const ActionSpec& a, const SymbolicState& to) {
  return ActionTuple{a, state_atoms(from), state_atoms(to), running_atoms(from, a), from, to};
}

inline std::vector<ActionTuple> plan_to_action_tuples(const Plan& p) {
  std::vector<ActionTuple> out;
  for (const auto& step : p.steps) out.push_back(make_tuple(step.from.ts, step.action, step.to.ts));
  return out;
}

enum class ConditionStyle { State, Action };

inline const char* to_string(ConditionStyle s) { return s == ConditionStyle::State ? "state" : "action"; }

/// Soft precondition: where the moved entity is, plus the dock of any tray it leaves or enters.
inline Atoms action_precondition(const ActionTuple& t) {
  const auto& a = t.action;
  if (a.kind == ActionSpec::Kind::MoveRegion) return {a.entity + t.from.tray_docks.at(a.entity)};
  const auto& src = t.from.assignment.at(a.entity);
  Atoms out{a.entity + src};
  for (const auto& region : {src, a.destination})
    if (auto it = t.from.tray_docks.find(region); it != t.from.tray_docks.end()) out.insert(region + it->second);
  return out;
}

inline Atoms action_postcondition(const ActionTuple& t) {
  const auto& a = t.action;
  if (a.kind == ActionSpec::Kind::MoveRegion) return {a.entity + a.destination};
  Atoms out{a.entity + a.destination};
  if (auto it = t.to.tray_docks.find(a.destination); it != t.to.tray_docks.end()) out.insert(a.destination + it->second);
  return out;
}

inline Atoms action_running(const ActionTuple& t) {
  const auto& a = t.action;
  Atoms out{a.entity + kHand};
  if (a.kind == ActionSpec::Kind::MoveObject)
    if (auto it = t.from.tray_docks.find(a.destination); it != t.from.tray_docks.end()) out.insert(a.destination + it->second);
  return out;
}

/// One plan step compiled into a chooser-rooted subtree:
///   Chooser[ Sequence[C_R, Action(resume)], Sequence[C_pre, StateUpdate(Action)] ]
/// The resume branch follows an action already in flight; only the second branch dispatches.
class Subtree {
public:
  Subtree(int id, ActionTuple tuple, ConditionStyle style) : id_(id), style_(style) { rebuild(std::move(tuple)); }
  // The StateUpdate callback captures this.
  Subtree(const Subtree&) = delete;
  Subtree& operator=(const Subtree&) = delete;

  int id() const noexcept { return id_; }
  ConditionStyle style() const noexcept { return style_; }
  const ActionTuple& tuple() const noexcept { return tuple_; }
  const ActionSpec& action() const noexcept { return tuple_.action; }
  Node& root() noexcept { return *root_; }
  const Node& root() const noexcept { return *root_; }

  const Atoms& pre() const noexcept { return pre_; }
  const Atoms& post() const noexcept { return post_; }
  const Atoms& running_condition() const noexcept { return running_; }

  bool done = false;
  bool retiring = false;
  bool running = false;

  /// Replaces the conditions; the action must be unchanged.
  void update_conditions(ActionTuple tuple) {
    tuple_ = std::move(tuple);
    compute_conditions();
    resume_cond_->set_atoms(running_);
    pre_cond_->set_atoms(pre_);
  }

  static bool contains_all(const Label& label, const Atoms& atoms) {
    for (const auto& a : atoms)
      if (!label.contains(a)) return false;
    return true;
  }
  bool pre_holds(const Label& l) const { return contains_all(l, pre_); }
  bool post_holds(const Label& l) const { return contains_all(l, post_); }
  bool running_holds(const Label& l) const { return contains_all(l, running_); }

  /// Done and its effect still holds.
  bool completed(const Label& l) const { return done && post_holds(l); }

  std::size_t action_leaves() const {
    std::size_t n = 0;
    visit(*root_, [&](const Node& node, int) { n += node.kind() == "Action"; });
    return n;
  }

private:
  void compute_conditions() {
    if (style_ == ConditionStyle::State) {
      pre_ = tuple_.pre;
      post_ = tuple_.post;
      running_ = tuple_.running;
    } else {
      pre_ = action_precondition(tuple_);
      post_ = action_postcondition(tuple_);
      running_ = action_running(tuple_);
    }
  }

  void rebuild(ActionTuple tuple) {
    tuple_ = std::move(tuple);
    compute_conditions();
    auto root = std::make_unique<Chooser>("subtree_" + std::to_string(id_));
    auto& resume = root->add(std::make_unique<Sequence>("resume"));
    resume_cond_ = static_cast<Condition*>(&resume.add(std::make_unique<Condition>("C_R", running_)));
    resume.add(std::make_unique<Action>(tuple_.action, true));
    auto& start = root->add(std::make_unique<Sequence>("start"));
    pre_cond_ = static_cast<Condition*>(&start.add(std::make_unique<Condition>("C_pre", pre_)));
    start.add(std::make_unique<StateUpdate>(std::make_unique<Action>(tuple_.action), [this] { done = true; }));
    root_ = std::move(root);
  }

  int id_;
  ConditionStyle style_;
  ActionTuple tuple_;
  Atoms pre_, post_, running_;
  std::unique_ptr<Node> root_;
  Condition* resume_cond_ = nullptr;
  Condition* pre_cond_ = nullptr;
};

using SubtreePtr = std::shared_ptr<Subtree>;

inline SubtreePtr build_state_condition_subtree(const ActionTuple& t, int id = 0) {
  return std::make_shared<Subtree>(id, t, ConditionStyle::State);
}

inline SubtreePtr build_action_condition_subtree(const ActionTuple& t, int id = 0) {
  return std::make_shared<Subtree>(id, t, ConditionStyle::Action);
}

/// Earliest subtree that is not completed and whose precondition holds in the snapshot. A subtree
/// already executing its action also matches when its running condition holds.
inline std::optional<std::size_t> find_recovery_subtree(const Label& snapshot, const std::vector<SubtreePtr>& subtrees) {
  for (std::size_t i = 0; i < subtrees.size(); ++i) {
    const auto& st = *subtrees[i];
    if (st.completed(snapshot)) continue;
    if (st.pre_holds(snapshot) || (st.running && st.running_holds(snapshot))) return i;
  }
  return std::nullopt;
}

}  // namespace rtamp::bt
