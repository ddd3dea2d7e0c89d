#pragma once

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "rtamp/domain/state.hpp"
#include "rtamp/domain/transition_system.hpp"

namespace rtamp::bt {

enum class NodeStatus { Success, Running, Failure, Invalid };

inline const char* to_string(NodeStatus s) {
  switch (s) {
    case NodeStatus::Success: return "SUCCESS";
    case NodeStatus::Running: return "RUNNING";
    case NodeStatus::Failure: return "FAILURE";
    default: return "INVALID";
  }
}

/// World side of Action leaves. drive() starts the action when the executor is idle and reports
/// RUNNING until it completes; FAILURE when the executor is busy with something else or refuses.
class ActionPort {
public:
  virtual ~ActionPort() = default;
  virtual NodeStatus drive(const ActionSpec& a, bool may_start) = 0;
};

struct TickContext {
  const Label& atoms;  // labeled snapshot plus running atoms such as o1rhand
  ActionPort* port = nullptr;
};

class Node {
public:
  explicit Node(std::string name) : name_(std::move(name)) {}
  virtual ~Node() = default;

  NodeStatus tick(TickContext& ctx) {
    status_ = do_tick(ctx);
    return status_;
  }

  /// Marks this subtree as not ticked in the current traversal. Control memory is kept.
  void invalidate() {
    status_ = NodeStatus::Invalid;
    for (auto& c : children_) c->invalidate();
  }

  /// Clears control memory (running child, resume index).
  virtual void halt() {
    for (auto& c : children_) c->halt();
  }

  virtual std::string kind() const = 0;
  virtual std::set<std::string> condition_atoms() const { return {}; }

  const std::string& name() const noexcept { return name_; }
  NodeStatus status() const noexcept { return status_; }
  const std::vector<std::unique_ptr<Node>>& children() const noexcept { return children_; }

  Node& add(std::unique_ptr<Node> child) {
    children_.push_back(std::move(child));
    return *children_.back();
  }

protected:
  virtual NodeStatus do_tick(TickContext& ctx) = 0;

  std::vector<std::unique_ptr<Node>> children_;

private:
  std::string name_;
  NodeStatus status_ = NodeStatus::Invalid;
};

/// Left to right; a RUNNING child is resumed on the next tick without re-checking earlier siblings.
class Sequence final : public Node {
public:
  using Node::Node;
  std::string kind() const override { return "Sequence"; }
  void halt() override {
    current_ = 0;
    Node::halt();
  }

protected:
  NodeStatus do_tick(TickContext& ctx) override {
    for (; current_ < children_.size(); ++current_) {
      const auto s = children_[current_]->tick(ctx);
      if (s == NodeStatus::Running) return s;
      if (s != NodeStatus::Success) {
        current_ = 0;
        return s;
      }
    }
    current_ = 0;
    return NodeStatus::Success;
  }

private:
  std::size_t current_ = 0;
};

class Selector final : public Node {
public:
  using Node::Node;
  std::string kind() const override { return "Selector"; }

protected:
  NodeStatus do_tick(TickContext& ctx) override {
    for (auto& c : children_) {
      const auto s = c->tick(ctx);
      if (s != NodeStatus::Failure) return s;
    }
    return NodeStatus::Failure;
  }
};

/// Selector that sticks with a RUNNING child until it returns a terminal status.
class Chooser final : public Node {
public:
  using Node::Node;
  std::string kind() const override { return "Chooser"; }
  void halt() override {
    running_ = -1;
    Node::halt();
  }
  int running_child() const noexcept { return running_; }

protected:
  NodeStatus do_tick(TickContext& ctx) override {
    if (running_ >= 0) {
      const auto s = children_[static_cast<std::size_t>(running_)]->tick(ctx);
      if (s != NodeStatus::Running) running_ = -1;
      return s;
    }
    for (std::size_t i = 0; i < children_.size(); ++i) {
      const auto s = children_[i]->tick(ctx);
      if (s == NodeStatus::Running) running_ = static_cast<int>(i);
      if (s != NodeStatus::Failure) return s;
    }
    return NodeStatus::Failure;
  }

private:
  int running_ = -1;
};

/// All atoms must be present in the snapshot.
class Condition final : public Node {
public:
  Condition(std::string name, std::set<std::string> atoms) : Node(std::move(name)), atoms_(std::move(atoms)) {}
  static std::unique_ptr<Condition> constant(bool value) {
    auto c = std::make_unique<Condition>(value ? "true" : "false", std::set<std::string>{});
    c->negated_ = !value;
    return c;
  }

  std::string kind() const override { return "Condition"; }
  std::set<std::string> condition_atoms() const override { return atoms_; }
  void set_atoms(std::set<std::string> atoms) { atoms_ = std::move(atoms); }

  bool holds(const Label& label) const {
    for (const auto& a : atoms_)
      if (!label.contains(a)) return negated_;
    return !negated_;
  }

protected:
  NodeStatus do_tick(TickContext& ctx) override { return holds(ctx.atoms) ? NodeStatus::Success : NodeStatus::Failure; }

private:
  std::set<std::string> atoms_;
  bool negated_ = false;
};

class Action final : public Node {
public:
  /// A resume-only leaf never dispatches a new command; it only follows one already in flight.
  Action(ActionSpec action, bool resume_only = false)
      : Node(action.name()), action_(std::move(action)), resume_only_(resume_only) {}
  std::string kind() const override { return "Action"; }
  const ActionSpec& action() const noexcept { return action_; }
  bool resume_only() const noexcept { return resume_only_; }

protected:
  NodeStatus do_tick(TickContext& ctx) override {
    if (!ctx.port) return NodeStatus::Failure;
    return ctx.port->drive(action_, !resume_only_);
  }

private:
  ActionSpec action_;
  bool resume_only_;
};

/// Runs its child; on SUCCESS refreshes the recorded state via the callback.
class StateUpdate final : public Node {
public:
  StateUpdate(std::unique_ptr<Node> child, std::function<void()> on_success)
      : Node("StateUpdate"), on_success_(std::move(on_success)) {
    children_.push_back(std::move(child));
  }
  std::string kind() const override { return "StateUpdate"; }

protected:
  NodeStatus do_tick(TickContext& ctx) override {
    const auto s = children_.front()->tick(ctx);
    if (s == NodeStatus::Success && on_success_) on_success_();
    return s;
  }

private:
  std::function<void()> on_success_;
};

inline NodeStatus tick(Node& root, TickContext& ctx) {
  root.invalidate();
  return root.tick(ctx);
}

template <typename Fn>
void visit(const Node& n, Fn&& fn, int depth = 0) {
  fn(n, depth);
  for (const auto& c : n.children()) visit(*c, fn, depth + 1);
}

}  // namespace rtamp::bt
