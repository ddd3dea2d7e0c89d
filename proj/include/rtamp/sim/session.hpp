#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtamp/bt/task_tree.hpp"
#include "rtamp/io/scenario.hpp"
#include "rtamp/ltl/buchi.hpp"
#include "rtamp/ltl/parser.hpp"
#include "rtamp/search/planner.hpp"
#include "rtamp/sim/events.hpp"
#include "rtamp/sim/world.hpp"

namespace rtamp::sim {

enum class BtVariant { OnlineAction, OnlineState, OfflineAction };

inline const char* to_string(BtVariant v) {
  switch (v) {
    case BtVariant::OnlineAction: return "online_action";
    case BtVariant::OnlineState: return "online_state";
    default: return "offline_action";
  }
}

inline BtVariant parse_bt_variant(const std::string& s) {
  if (s == "online_action") return BtVariant::OnlineAction;
  if (s == "online_state") return BtVariant::OnlineState;
  if (s == "offline_action") return BtVariant::OfflineAction;
  throw ValidationError({"bt: unknown variant '" + s + "' (online_action, online_state, offline_action)"});
}

/// astar_exp: A* with carried experience; astar: A* from scratch; dijkstra: uniform cost, no experience.
inline PlannerConfig planner_config(const std::string& name, const std::string& graph = "partial") {
  PlannerConfig c;
  if (name == "astar_exp") {
    c.algorithm = SearchAlgorithm::AStar;
    c.experience = true;
  } else if (name == "astar") {
    c.algorithm = SearchAlgorithm::AStar;
    c.experience = false;
  } else if (name == "dijkstra") {
    c.algorithm = SearchAlgorithm::Dijkstra;
    c.experience = false;
  } else {
    throw ValidationError({"planner: unknown planner '" + name + "' (astar_exp, astar, dijkstra)"});
  }
  if (graph == "partial") c.graph = GraphMode::Partial;
  else if (graph == "full") c.graph = GraphMode::Full;
  else throw ValidationError({"graph: unknown mode '" + graph + "' (partial, full)"});
  return c;
}

struct SessionConfig {
  PlannerConfig planner;
  BtVariant bt = BtVariant::OnlineAction;
  // Simulated planner cost: provider latency per call plus these per-node terms.
  double expansion_time_s = 2e-5;
  double graph_node_time_s = 1e-6;
};

struct SessionMetrics {
  bool success = false;
  std::string outcome = "running";  // running | success | timeout | infeasible
  double init_plan_time_s = 0;      // simulated
  double total_replan_time_s = 0;   // simulated
  std::size_t replan_count = 0;
  double completion_time_s = 0;
  std::size_t bt_changes = 0;
  std::uint64_t init_provider_calls = 0;
  std::uint64_t replan_provider_calls = 0;
  std::uint64_t cache_hits = 0;
  std::size_t ts_reconstructions = 0;
  std::size_t recoveries = 0;
  std::size_t actions_executed = 0;
  double action_time_s = 0;
  double init_plan_wall_s = 0;
  double total_replan_wall_s = 0;

  nlohmann::json to_json() const {
    return {{"schema", "v1"},
            {"success", success},
            {"outcome", outcome},
            {"init_plan_time_s", init_plan_time_s},
            {"total_replan_time_s", total_replan_time_s},
            {"replan_count", replan_count},
            {"completion_time_s", completion_time_s},
            {"bt_changes", bt_changes},
            {"init_provider_calls", init_provider_calls},
            {"replan_provider_calls", replan_provider_calls},
            {"cache_hits", cache_hits},
            {"ts_reconstructions", ts_reconstructions},
            {"recoveries", recoveries},
            {"actions_executed", actions_executed},
            {"action_time_s", action_time_s},
            {"init_plan_wall_s", init_plan_wall_s},
            {"total_replan_wall_s", total_replan_wall_s}};
  }

  static std::string csv_header() {
    return "success,outcome,init_plan_time_s,total_replan_time_s,replan_count,completion_time_s,bt_changes,"
           "init_provider_calls,replan_provider_calls,cache_hits,ts_reconstructions,recoveries,actions_executed,"
           "action_time_s,init_plan_wall_s,total_replan_wall_s";
  }

  std::string csv_row() const {
    std::ostringstream o;
    o << (success ? 1 : 0) << ',' << outcome << ',' << init_plan_time_s << ',' << total_replan_time_s << ','
      << replan_count << ',' << completion_time_s << ',' << bt_changes << ',' << init_provider_calls << ','
      << replan_provider_calls << ',' << cache_hits << ',' << ts_reconstructions << ',' << recoveries << ','
      << actions_executed << ',' << action_time_s << ',' << init_plan_wall_s << ',' << total_replan_wall_s;
    return o.str();
  }
};

/// Perceive, recover or replan, reconfigure, tick. Planning runs to completion when requested but
/// its result reaches the tree only after a simulated delay; the tree keeps ticking meanwhile.
class Session {
public:
  using Observer = std::function<void(const nlohmann::json&)>;

  Session(Scenario scenario, SessionConfig config, std::vector<InterventionEvent> script = {},
          std::shared_ptr<CostProvider> provider = nullptr)
      : scenario_(std::move(scenario)),
        config_(config),
        ba_(std::make_shared<ltl::BuchiAutomaton>(ltl::build_buchi(ltl::parse_formula(scenario_.formula)))),
        provider_(provider ? std::move(provider) : make_provider(scenario_.provider_latency_ms)),
        planner_(config.planner, ba_, provider_),
        world_(scenario_.geometry, scenario_.initial, scenario_.execution, scenario_.seed),
        port_(world_),
        tree_(config.bt == BtVariant::OnlineState ? bt::ConditionStyle::State : bt::ConditionStyle::Action) {
    auto ts = std::make_shared<TransitionSystem>(scenario_.transition_system());
    ts->check_formula(ltl::parse_formula(scenario_.formula));
    ts_ = std::move(ts);
    for (auto& e : script) queue_.push_back(std::move(e));
    std::stable_sort(queue_.begin(), queue_.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  }

  // The port refers to the world member.
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void set_observer(Observer o) { observer_ = std::move(o); }

  const Scenario& scenario() const noexcept { return scenario_; }
  const SessionConfig& config() const noexcept { return config_; }
  const SessionMetrics& metrics() const noexcept { return metrics_; }
  const std::vector<nlohmann::json>& trace() const noexcept { return trace_; }
  const SimWorld& world() const noexcept { return world_; }
  const bt::TaskTree& tree() const noexcept { return tree_; }
  const Planner& planner() const noexcept { return planner_; }
  const TransitionSystem& ts() const noexcept { return *ts_; }
  const std::optional<Plan>& current_plan() const noexcept { return plan_; }
  const ltl::BuchiAutomaton& automaton() const noexcept { return *ba_; }
  bool finished() const noexcept { return finished_; }
  bool started() const noexcept { return started_; }
  double clock() const noexcept { return world_.clock(); }
  double dt() const { return 1.0 / scenario_.execution.tick_hz; }

  /// Live intervention; applied at the next tick boundary.
  void schedule(InterventionEvent e) {
    e.time = std::max(e.time, world_.clock());
    const auto at = std::upper_bound(queue_.begin(), queue_.end(), e.time,
                                     [](double t, const InterventionEvent& x) { return t < x.time; });
    queue_.insert(at, std::move(e));
  }

  /// One control period. Returns false once the session has ended.
  bool step() {
    if (finished_) return false;
    if (!started_) begin();
    if (finished_) return false;

    apply_due_events();
    deliver_plan_if_ready();
    if (finished_) return false;
    handle_changes();
    if (finished_) return false;

    std::optional<SymbolicState> seen;
    try {
      seen = world_.perceive();
    } catch (const PerceptionGap& e) {
      if (!gap_reported_) emit("perception_gap", {{"message", e.what()}});
      gap_reported_ = true;
      change_pending_ = true;
    }
    if (seen) gap_reported_ = false;
    if (seen) {
      const auto label = tick_label(*seen);
      const bool waiting_offline = config_.bt == BtVariant::OfflineAction && pending_;
      const auto status = waiting_offline ? bt::NodeStatus::Running : tree_.tick(label, &port_);
      for (const auto& a : port_.take_started()) {
        ++metrics_.actions_executed;
        emit("action_started", {{"action", a.name()}, {"duration_s", world_.active()->duration}});
      }
      if (status != last_status_) {
        emit("bt_status", {{"status", bt::to_string(status)}});
        last_status_ = status;
      }
      if (status == bt::NodeStatus::Success && !world_.active() && !pending_) {
        metrics_.success = true;
        emit("goal_reached", {});
        finish("success");
        return false;
      }
      if (status == bt::NodeStatus::Failure && !pending_ && !world_.active()) request_plan("bt_failure", *seen);
      if (finished_) return false;
    }

    if (auto c = world_.step(dt())) {
      metrics_.action_time_s += c->duration;
      emit("action_completed", {{"action", c->action.name()}, {"success", c->success}});
      port_.deliver(std::move(*c));
    }
    if (world_.clock() >= scenario_.execution.timeout_s - 1e-9) {
      emit("timeout", {});
      finish("timeout");
      return false;
    }
    return true;
  }

  SessionMetrics run() {
    while (step()) {
    }
    return metrics_;
  }

  std::string trace_jsonl() const {
    std::string out;
    for (const auto& e : trace_) out += e.dump() + "\n";
    return out;
  }

private:
  struct PendingPlan {
    Plan plan;
    std::shared_ptr<const TransitionSystem> ts;
    double ready_at = 0;
    bool initial = false;
  };

  void emit(const std::string& type, nlohmann::json body) {
    body["seq"] = trace_.size();
    body["t"] = world_.clock();
    body["type"] = type;
    trace_.push_back(body);
    if (observer_) observer_(trace_.back());
  }

  void finish(const std::string& outcome) {
    finished_ = true;
    metrics_.outcome = outcome;
    metrics_.completion_time_s = world_.clock();
    emit("session_done", {{"metrics", metrics_.to_json()}});
  }

  void begin() {
    started_ = true;
    emit("scenario_loaded", {{"scenario", scenario_.name},
                             {"formula", scenario_.formula},
                             {"bt", to_string(config_.bt)},
                             {"objects", ts_->objects()},
                             {"regions", ts_->regions()}});
    request_plan("initial", world_.perceive());
  }

  // Held entity counted at its destination: plans start where the running action will leave the world.
  SymbolicState projected(SymbolicState s) const {
    if (const auto& act = world_.active()) {
      if (act->spec.kind == ActionSpec::Kind::MoveObject) s.assignment[act->spec.entity] = act->spec.destination;
      else s.tray_docks[act->spec.entity] = act->spec.destination;
    }
    return s;
  }

  Label tick_label(const SymbolicState& seen) const {
    auto label = ts_->label(seen);
    if (auto e = world_.in_hand()) label.insert(*e + kHand);
    return label;
  }

  void request_plan(const std::string& reason, const SymbolicState& seen) {
    const bool initial = !plan_ && (!pending_ || pending_->initial);
    if (config_.bt == BtVariant::OfflineAction && !initial) {
      if (auto a = world_.abort()) emit("action_aborted", {{"action", a->name()}});
      port_.clear();
      tree_.clear();
    }
    const auto start = projected(config_.bt == BtVariant::OfflineAction ? world_.perceive() : seen);
    if (start.assignment != ts_->initial().assignment || start.tray_docks != ts_->initial().tray_docks)
      ts_ = std::make_shared<TransitionSystem>(ts_->with_initial(start));
    emit(initial ? "plan_started" : "replan_started", {{"reason", reason}, {"from", encode_state(start)}});

    Plan plan;
    try {
      plan = planner_.plan(ts_, start);
    } catch (const NoPlan& e) {
      emit("no_plan", {{"message", e.what()}});
      finish("infeasible");
      return;
    } catch (const GraphTooLarge& e) {
      emit("no_plan", {{"message", e.what()}});
      finish("infeasible");
      return;
    }
    const double delay = static_cast<double>(plan.stats.provider_calls) * scenario_.provider_latency_ms * 1e-3 +
                         static_cast<double>(plan.stats.nodes_expanded) * config_.expansion_time_s +
                         (config_.planner.graph == GraphMode::Full
                              ? static_cast<double>(plan.stats.graph_nodes) * config_.graph_node_time_s
                              : 0.0);
    metrics_.cache_hits += plan.stats.cache_hits;
    if (initial) {
      metrics_.init_plan_time_s += delay;
      metrics_.init_plan_wall_s += plan.stats.wall_time_s;
      metrics_.init_provider_calls += plan.stats.provider_calls;
    } else {
      ++metrics_.replan_count;
      metrics_.total_replan_time_s += delay;
      metrics_.total_replan_wall_s += plan.stats.wall_time_s;
      metrics_.replan_provider_calls += plan.stats.provider_calls;
    }
    emit(initial ? "plan_computed" : "replan_finished",
         {{"actions", plan.size()},
          {"cost", plan.cost},
          {"provider_calls", plan.stats.provider_calls},
          {"cache_hits", plan.stats.cache_hits},
          {"nodes_expanded", plan.stats.nodes_expanded},
          {"delay_s", delay}});
    pending_ = PendingPlan{std::move(plan), ts_, world_.clock() + delay, initial};
  }

  void deliver_plan_if_ready() {
    if (!pending_ || world_.clock() + 1e-12 < pending_->ready_at) return;
    PendingPlan p = std::move(*pending_);
    pending_.reset();
    const auto tuples = bt::plan_to_action_tuples(p.plan);
    const int q_goal = p.plan.empty() ? ba_->initial : p.plan.steps.back().to.ba;
    tree_.set_goal([ba = ba_, q_goal](const Label& l) { return ba->accepts_constant(q_goal, l); });
    const auto r = config_.bt == BtVariant::OfflineAction ? tree_.offline_rebuild(tuples) : tree_.reconfigure(tuples);
    if (!p.initial) metrics_.bt_changes += r.changes();
    plan_ = std::move(p.plan);
    emit("plan_ready", {{"actions", action_names(*plan_)}, {"cost", plan_->cost}});
    emit("bt_reconfigured",
         {{"inserted", r.inserted}, {"removed", r.removed}, {"kept", r.kept}, {"subtrees", tree_.subtrees().size()}});
  }

  static std::vector<std::string> action_names(const Plan& p) {
    std::vector<std::string> out;
    for (const auto& a : p.actions()) out.push_back(a.name());
    return out;
  }

  void apply_due_events() {
    while (!queue_.empty() && queue_.front().time <= world_.clock() + 1e-9) {
      auto e = std::move(queue_.front());
      queue_.pop_front();
      try {
        const auto applied = world_.inject(e);
        auto body = event_to_json(applied);
        body.erase("t");
        emit("intervention", body);
        if (applied.changes_layout()) layout_changed_ = true;
        change_pending_ = true;
      } catch (const Error& err) {
        emit("intervention_rejected", {{"kind", e.kind()}, {"message", err.what()}});
      }
    }
  }

  TsDelta layout_delta() const {
    TsDelta d;
    const auto& g = world_.geometry();
    const auto& old = ts_->geometry();
    const auto objs = ts_->objects();
    const std::set<std::string> known(objs.begin(), objs.end());
    for (const auto& o : known)
      if (!g.objects.contains(o)) d.removed_objects.insert(o);
    for (const auto& [o, p] : g.objects)
      if (!known.contains(o)) d.added_objects[o] = "";
    for (const auto& [id, r] : old.regions)
      if (!g.regions.contains(id)) d.removed_regions.insert(id);
    for (const auto& [id, t] : old.trays)
      if (!g.trays.contains(id)) d.removed_regions.insert(id);
    for (const auto& [id, r] : g.regions)
      if (!old.regions.contains(id)) d.added_regions[id] = r;
    for (const auto& [id, t] : g.trays)
      if (!old.trays.contains(id)) d.added_trays[id] = t;
    return d;
  }

  void handle_changes() {
    if (!world_.consume_change() && !change_pending_) return;
    SymbolicState seen;
    try {
      seen = world_.perceive();
    } catch (const PerceptionGap& e) {
      if (!gap_reported_) emit("perception_gap", {{"message", e.what()}});
      gap_reported_ = true;
      return;  // retried next tick
    }
    change_pending_ = false;
    emit("change_detected", {{"state", encode_state(seen)}, {"layout", layout_changed_}});

    if (layout_changed_) {
      layout_changed_ = false;
      const auto d = layout_delta();
      if (!d.empty()) {
        ts_ = std::make_shared<TransitionSystem>(ts_->reconstruct(projected(seen), d));
        ++metrics_.ts_reconstructions;
        emit("ts_reconstructed", {{"version", ts_->version()}, {"objects", ts_->objects()}, {"regions", ts_->regions()}});
      }
      request_plan("layout_changed", seen);
      return;
    }
    // Relocation only: try to resume from an existing subtree before paying for a replan.
    if (!pending_) {
      if (auto i = bt::find_recovery_subtree(tick_label(seen), tree_.subtrees())) {
        tree_.reactivate(*i);
        ++metrics_.recoveries;
        emit("recovery", {{"subtree", tree_.subtrees()[*i]->id()}, {"action", tree_.subtrees()[*i]->action().name()}});
        return;
      }
    }
    request_plan("relocated", seen);
  }

  Scenario scenario_;
  SessionConfig config_;
  std::shared_ptr<const ltl::BuchiAutomaton> ba_;
  std::shared_ptr<CostProvider> provider_;
  Planner planner_;
  SimWorld world_;
  SimPort port_;
  bt::TaskTree tree_;
  std::shared_ptr<const TransitionSystem> ts_;
  std::deque<InterventionEvent> queue_;
  std::optional<PendingPlan> pending_;
  std::optional<Plan> plan_;
  SessionMetrics metrics_;
  std::vector<nlohmann::json> trace_;
  Observer observer_;
  bt::NodeStatus last_status_ = bt::NodeStatus::Invalid;
  bool started_ = false;
  bool finished_ = false;
  bool change_pending_ = false;
  bool layout_changed_ = false;
  bool gap_reported_ = false;
};

inline SessionMetrics run_session(const Scenario& scenario, const SessionConfig& config,
                                  const std::vector<InterventionEvent>& script = {}) {
  return Session(scenario, config, script).run();
}

}  // namespace rtamp::sim
