#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "rtamp/bench/instances.hpp"
#include "rtamp/search/planner.hpp"
#include "rtamp/sim/session.hpp"

namespace rtamp::bench {

struct Summary {
  std::size_t n = 0;
  double mean = 0, sd = 0, ci95 = 0, median = 0, min = 0, max = 0;
};

/// Sample statistics; ci95 is the normal-approximation half width 1.96 sd / sqrt(n).
inline Summary summarize(std::vector<double> xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  std::sort(xs.begin(), xs.end());
  s.min = xs.front();
  s.max = xs.back();
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(s.n);
  const std::size_t h = s.n / 2;
  s.median = s.n % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
  if (s.n > 1) {
    double acc = 0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(acc / static_cast<double>(s.n - 1));
    s.ci95 = 1.96 * s.sd / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

/// Wraps a provider and remembers every (state, action, layout version) it was asked about.
/// Calls for an already evaluated edge are counted as repeats.
class RecordingProvider final : public CostProvider {
public:
  explicit RecordingProvider(std::shared_ptr<CostProvider> inner) : inner_(std::move(inner)) {}

  double cost(const WorldGeometry& g, const SymbolicState& s, const ActionSpec& a) override {
    count();
    {
      std::lock_guard lock(mu_);
      if (!seen_.emplace(encode_state(s), a.name(), g.version).second) ++repeats_;
    }
    return inner_->cost(g, s, a);
  }
  double min_cost(const WorldGeometry& g) const override { return inner_->min_cost(g); }

  std::uint64_t repeats() const {
    std::lock_guard lock(mu_);
    return repeats_;
  }
  /// Marks the boundary after which repeats are of interest.
  void reset_repeats() {
    std::lock_guard lock(mu_);
    repeats_ = 0;
  }

private:
  std::shared_ptr<CostProvider> inner_;
  mutable std::mutex mu_;
  std::set<std::tuple<std::string, std::string, std::uint64_t>> seen_;
  std::uint64_t repeats_ = 0;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) fn(i);
    });
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------------------------
// Intervention suite

struct InterventionBenchSpec {
  Scenario scenario = scenarios::three_block_tray();
  std::vector<std::string> kinds{"relocate", "add", "remove"};
  std::vector<std::string> planners{"astar_exp", "astar", "dijkstra"};
  std::string graph = "partial";
  sim::BtVariant bt = sim::BtVariant::OnlineAction;
  std::size_t seeds = 30;
  std::uint64_t first_seed = 1;
  double window_lo = 1.0;  // events fire uniformly in [lo, hi] simulated seconds
  double window_hi = 15.0;
  std::size_t events_per_seed = 1;
  double provider_latency_ms = 1.0;
  double timeout_s = 600.0;
  unsigned jobs = 1;
};

struct RunRecord {
  std::string scenario;
  std::string kind;
  std::string planner;
  std::string bt;
  std::uint64_t seed = 0;
  sim::SessionMetrics metrics;
  std::uint64_t repeat_calls_after_init = 0;
};

/// Random events of one kind. Objects and target regions are wildcards resolved by the simulator
/// at apply time; added objects get fresh ids.
inline std::vector<sim::InterventionEvent> random_script(const std::string& kind, std::uint64_t seed, double lo,
                                                         double hi, std::size_t count) {
  std::mt19937_64 rng(seed * 7919 + 17);
  std::uniform_real_distribution<double> when(lo, hi);
  std::vector<sim::InterventionEvent> out;
  for (std::size_t i = 0; i < count; ++i) {
    sim::InterventionEvent e;
    e.time = when(rng);
    if (kind == "relocate") e.body = sim::RelocateObject{sim::kAnyObject, sim::kAnyRegion};
    else if (kind == "add") e.body = sim::AddObject{"o" + std::to_string(100 + i), sim::kAnyRegion};
    else if (kind == "remove") e.body = sim::RemoveObject{sim::kAnyObject};
    else throw ValidationError({"kind: unknown intervention kind '" + kind + "' (relocate, add, remove)"});
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  return out;
}

inline RunRecord run_one(const Scenario& base, const std::string& kind, const std::string& planner,
                         const std::string& graph, sim::BtVariant bt, std::uint64_t seed,
                         const std::vector<sim::InterventionEvent>& script, double latency_ms, double timeout_s) {
  Scenario sc = base;
  sc.seed = seed;
  sc.provider_latency_ms = latency_ms;
  sc.execution.timeout_s = timeout_s;
  sim::SessionConfig cfg;
  cfg.planner = sim::planner_config(planner, graph);
  cfg.bt = bt;
  auto rec = std::make_shared<RecordingProvider>(make_provider(latency_ms));
  sim::Session session(sc, cfg, script, rec);
  bool init_done = false;
  session.set_observer([&](const nlohmann::json& e) {
    if (!init_done && e["type"] == "plan_ready") {
      init_done = true;
      rec->reset_repeats();
    }
  });
  RunRecord r;
  r.scenario = sc.name;
  r.kind = kind;
  r.planner = planner;
  r.bt = sim::to_string(bt);
  r.seed = seed;
  r.metrics = session.run();
  r.repeat_calls_after_init = init_done ? rec->repeats() : 0;
  return r;
}

inline std::vector<RunRecord> run_intervention_bench(const InterventionBenchSpec& spec) {
  if (spec.seeds == 0) throw ValidationError({"seeds: need at least one seed"});
  if (spec.kinds.empty() || spec.planners.empty()) throw ValidationError({"variants: nothing to run"});
  struct Job {
    std::string kind, planner;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& k : spec.kinds)
    for (const auto& p : spec.planners)
      for (std::size_t i = 0; i < spec.seeds; ++i) jobs.push_back({k, p, spec.first_seed + i});
  std::vector<RunRecord> out(jobs.size());
  parallel_for(jobs.size(), spec.jobs, [&](std::size_t i) {
    const auto& j = jobs[i];
    const auto script = random_script(j.kind, j.seed, spec.window_lo, spec.window_hi, spec.events_per_seed);
    out[i] = run_one(spec.scenario, j.kind, j.planner, spec.graph, spec.bt, j.seed, script, spec.provider_latency_ms,
                     spec.timeout_s);
  });
  return out;
}

struct CellAggregate {
  std::string scenario, kind, planner, bt;
  std::size_t runs = 0, successes = 0;
  Summary init_plan_time, total_replan_time, replan_count, completion_time, bt_changes;
  Summary init_plan_wall, total_replan_wall;
  std::uint64_t repeat_calls_after_init = 0;
};

inline std::vector<CellAggregate> aggregate(const std::vector<RunRecord>& records) {
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<Key, std::vector<const RunRecord*>> cells;
  std::vector<Key> order;
  for (const auto& r : records) {
    const Key key{r.scenario, r.kind, r.planner, r.bt};
    if (!cells.contains(key)) order.push_back(key);
    cells[key].push_back(&r);
  }
  std::vector<CellAggregate> out;
  for (const auto& key : order) {
    const auto& rs = cells[key];
    CellAggregate a;
    std::tie(a.scenario, a.kind, a.planner, a.bt) = key;
    a.runs = rs.size();
    std::vector<double> ipt, trt, rc, ct, bc, ipw, trw;
    for (const auto* r : rs) {
      const auto& m = r->metrics;
      a.successes += m.success;
      a.repeat_calls_after_init += r->repeat_calls_after_init;
      ipt.push_back(m.init_plan_time_s);
      trt.push_back(m.total_replan_time_s);
      rc.push_back(static_cast<double>(m.replan_count));
      ct.push_back(m.completion_time_s);
      bc.push_back(static_cast<double>(m.bt_changes));
      ipw.push_back(m.init_plan_wall_s);
      trw.push_back(m.total_replan_wall_s);
    }
    a.init_plan_time = summarize(ipt);
    a.total_replan_time = summarize(trt);
    a.replan_count = summarize(rc);
    a.completion_time = summarize(ct);
    a.bt_changes = summarize(bc);
    a.init_plan_wall = summarize(ipw);
    a.total_replan_wall = summarize(trw);
    out.push_back(std::move(a));
  }
  return out;
}

inline std::string records_csv(const std::vector<RunRecord>& records) {
  std::ostringstream o;
  o << "scenario,kind,planner,bt,seed," << sim::SessionMetrics::csv_header() << ",repeat_calls_after_init\n";
  for (const auto& r : records)
    o << r.scenario << ',' << r.kind << ',' << r.planner << ',' << r.bt << ',' << r.seed << ','
      << r.metrics.csv_row() << ',' << r.repeat_calls_after_init << '\n';
  return o.str();
}

inline std::string aggregate_csv(const std::vector<CellAggregate>& cells) {
  std::ostringstream o;
  o << "scenario,kind,planner,bt,runs,successes,init_plan_time_mean,init_plan_time_ci95,total_replan_time_mean,"
       "total_replan_time_ci95,replan_count_mean,replan_count_median,completion_time_mean,completion_time_ci95,"
       "bt_changes_mean,init_plan_wall_mean,total_replan_wall_mean,total_replan_wall_ci95,repeat_calls_after_init\n";
  for (const auto& c : cells)
    o << c.scenario << ',' << c.kind << ',' << c.planner << ',' << c.bt << ',' << c.runs << ',' << c.successes << ','
      << c.init_plan_time.mean << ',' << c.init_plan_time.ci95 << ',' << c.total_replan_time.mean << ','
      << c.total_replan_time.ci95 << ',' << c.replan_count.mean << ',' << c.replan_count.median << ','
      << c.completion_time.mean << ',' << c.completion_time.ci95 << ',' << c.bt_changes.mean << ','
      << c.init_plan_wall.mean << ',' << c.total_replan_wall.mean << ',' << c.total_replan_wall.ci95 << ','
      << c.repeat_calls_after_init << '\n';
  return o.str();
}

inline std::string aggregate_table(const std::vector<CellAggregate>& cells) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(3);
  o << std::left << std::setw(14) << "scenario" << std::setw(10) << "change" << std::setw(11) << "planner" << std::setw(16) << "bt" << std::setw(9)
    << "success" << std::setw(20) << "init plan s" << std::setw(20) << "replan s" << std::setw(20) << "replan wall s"
    << std::setw(14) << "# replan" << std::setw(20) << "completion s" << "\n";
  const auto pm = [](const Summary& s) {
    std::ostringstream x;
    x << std::fixed << std::setprecision(3) << s.mean << " +- " << s.ci95;
    return x.str();
  };
  for (const auto& c : cells) {
    std::ostringstream rc;
    rc << std::fixed << std::setprecision(2) << c.replan_count.mean << " (" << c.replan_count.median << ")";
    o << std::setw(14) << c.scenario << std::setw(10) << c.kind << std::setw(11) << c.planner << std::setw(16) << c.bt << std::setw(9)
      << (std::to_string(c.successes) + "/" + std::to_string(c.runs)) << std::setw(20) << pm(c.init_plan_time)
      << std::setw(20) << pm(c.total_replan_time) << std::setw(20) << pm(c.total_replan_wall) << std::setw(14)
      << rc.str() << std::setw(20) << pm(c.completion_time) << "\n";
  }
  return o.str();
}

// ---------------------------------------------------------------------------------------------
// Scaling: partial vs full product-graph construction

struct ScalingSample {
  int n_objects = 0;
  std::uint64_t geometry = 0;
  std::string mode;  // partial | full
  std::size_t graph_nodes = 0;
  double time_s = 0;  // initial plan plus one replan, wall clock
  bool ok = true;
  std::string error;
};

struct ScalingSpec {
  int n_regions = 5;
  int min_objects = 2;
  int max_objects = 6;
  std::size_t geometries = 10;
  std::uint64_t first_seed = 1;
  double provider_latency_ms = 0.0;
  std::size_t full_graph_budget = kFullGraphNodeBudget;
};

/// Plans once from the initial placement, relocates one object and replans with the same planner,
/// timing both queries together.
inline ScalingSample scaling_sample(const ScalingSpec& spec, int n_objects, std::uint64_t geometry, GraphMode mode) {
  ScalingSample out;
  out.n_objects = n_objects;
  out.geometry = geometry;
  out.mode = mode == GraphMode::Full ? "full" : "partial";
  const auto sc = random_instance(spec.first_seed + geometry, n_objects, spec.n_regions);
  auto ts = std::make_shared<const TransitionSystem>(sc.transition_system());
  auto ba = std::make_shared<const ltl::BuchiAutomaton>(ltl::build_buchi(ltl::parse_formula(sc.formula)));
  PlannerConfig cfg;
  cfg.algorithm = SearchAlgorithm::AStar;
  cfg.graph = mode;
  cfg.experience = true;
  cfg.full_graph_budget = spec.full_graph_budget;
  Planner planner(cfg, ba, make_provider(spec.provider_latency_ms));

  std::mt19937_64 rng(geometry * 31 + static_cast<std::uint64_t>(n_objects));
  auto moved = sc.initial;
  auto& slot = moved.assignment["o1"];
  const auto regions = ts->regions();
  std::string to = slot;
  while (to == slot) to = regions[std::uniform_int_distribution<std::size_t>(0, regions.size() - 1)(rng)];
  slot = to;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const auto p1 = planner.plan(ts, sc.initial);
    const auto ts2 = std::make_shared<const TransitionSystem>(ts->with_initial(moved));
    const auto p2 = planner.plan(ts2, moved);
    out.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.graph_nodes = std::max(p1.stats.graph_nodes, p2.stats.graph_nodes);
  } catch (const Error& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

inline std::vector<ScalingSample> run_scaling(const ScalingSpec& spec) {
  std::vector<ScalingSample> out;
  for (int n = spec.min_objects; n <= spec.max_objects; ++n)
    for (std::size_t g = 0; g < spec.geometries; ++g)
      for (auto mode : {GraphMode::Partial, GraphMode::Full}) out.push_back(scaling_sample(spec, n, g, mode));
  return out;
}

inline std::string scaling_csv(const std::vector<ScalingSample>& samples) {
  std::ostringstream o;
  o << "n_objects,geometry,mode,graph_nodes,time_s,ok,error\n";
  for (const auto& s : samples)
    o << s.n_objects << ',' << s.geometry << ',' << s.mode << ',' << s.graph_nodes << ',' << s.time_s << ','
      << (s.ok ? 1 : 0) << ',' << s.error << '\n';
  return o.str();
}

/// One row per (|O|, mode): mean and std of time over geometries, node count of the full graph.
inline std::string scaling_curves_csv(const std::vector<ScalingSample>& samples) {
  std::map<std::pair<int, std::string>, std::vector<const ScalingSample*>> points;
  for (const auto& s : samples) points[{s.n_objects, s.mode}].push_back(&s);
  std::ostringstream o;
  o << "n_objects,mode,samples,failures,time_mean_s,time_std_s,graph_nodes_max\n";
  for (const auto& [key, ss] : points) {
    std::vector<double> ts;
    std::size_t fails = 0, nodes = 0;
    for (const auto* s : ss) {
      if (!s->ok) {
        ++fails;
        continue;
      }
      ts.push_back(s->time_s);
      nodes = std::max(nodes, s->graph_nodes);
    }
    const auto sum = summarize(ts);
    o << key.first << ',' << key.second << ',' << ss.size() << ',' << fails << ',' << sum.mean << ',' << sum.sd << ','
      << nodes << '\n';
  }
  return o.str();
}

// ---------------------------------------------------------------------------------------------
// BT variant comparison

struct BtBenchSpec {
  std::vector<Scenario> scenarios{scenarios::three_block(), scenarios::three_block_tray()};
  std::vector<sim::BtVariant> variants{sim::BtVariant::OnlineAction, sim::BtVariant::OnlineState,
                                      sim::BtVariant::OfflineAction};
  std::string planner = "astar_exp";
  std::size_t seeds = 10;
  std::uint64_t first_seed = 1;
  double provider_latency_ms = 1.0;
  // Script variants: relocation only, and relocation followed by a new object so every variant replans.
  std::vector<bool> with_add{false, true};
  unsigned jobs = 1;
};

inline std::string bt_script_name(bool with_add) { return with_add ? "relocation+add" : "relocation"; }

/// Scripted unrelated relocation: while the first action runs, the block the plan moves last is put
/// straight into its goal region. Optionally a new block appears later.
inline std::vector<sim::InterventionEvent> unrelated_relocation_script(const Scenario& sc, std::uint64_t seed,
                                                                       bool add_object) {
  auto ts = std::make_shared<const TransitionSystem>(sc.transition_system());
  auto ba = std::make_shared<const ltl::BuchiAutomaton>(ltl::build_buchi(ltl::parse_formula(sc.formula)));
  Planner planner(PlannerConfig{}, ba, make_provider(0));
  const auto plan = planner.plan(ts, sc.initial);
  std::string last, goal_region;
  for (const auto& s : plan.steps)
    if (s.action.kind == ActionSpec::Kind::MoveObject) {
      last = s.action.entity;
      goal_region = s.action.destination;
    }
  if (plan.empty() || last.empty()) return {};
  // Duration of the first action bounds the relocation window.
  const double first = motion_cost_geometric(ts->geometry(), sc.initial, plan.steps.front().action) /
                       sc.execution.ee_speed;
  std::mt19937_64 rng(seed * 104729 + 3);
  std::vector<sim::InterventionEvent> out;
  const double t_rel = std::uniform_real_distribution<double>(0.2 * first, 0.8 * first)(rng);
  out.push_back({t_rel, sim::RelocateObject{last, goal_region}});
  if (add_object) {
    const double t_add = std::uniform_real_distribution<double>(1.1 * first, 1.7 * first)(rng);
    out.push_back({t_add, sim::AddObject{"o9", sc.initial.assignment.begin()->second}});
  }
  return out;
}

inline std::vector<RunRecord> run_bt_bench(const BtBenchSpec& spec) {
  struct Job {
    std::size_t scenario;
    bool add;
    sim::BtVariant bt;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < spec.scenarios.size(); ++s)
    for (bool add : spec.with_add)
      for (auto v : spec.variants)
        for (std::size_t i = 0; i < spec.seeds; ++i) jobs.push_back({s, add, v, spec.first_seed + i});
  std::vector<RunRecord> out(jobs.size());
  parallel_for(jobs.size(), spec.jobs, [&](std::size_t i) {
    const auto& j = jobs[i];
    const auto& sc = spec.scenarios[j.scenario];
    const auto script = unrelated_relocation_script(sc, j.seed, j.add);
    out[i] = run_one(sc, bt_script_name(j.add), spec.planner, "partial", j.bt, j.seed, script,
                     spec.provider_latency_ms, sc.execution.timeout_s);
  });
  return out;
}

}  // namespace rtamp::bench
