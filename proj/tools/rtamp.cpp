// rtamp: plan, run sessions headlessly, reproduce the benchmark tables, serve the HTTP API.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rtamp/bench/harness.hpp"
#include "rtamp/service/server.hpp"

namespace fs = std::filesystem;
using namespace rtamp;

namespace {

enum Exit { kOk = 0, kInputError = 1, kNoPlan = 2, kTimeout = 3 };

std::string normalize(std::string s) {
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

Scenario resolve_scenario(const std::string& arg) {
  if (arg == "3-block" || arg == "builtin:3-block") return scenarios::three_block();
  if (arg == "3-block+tray" || arg == "builtin:3-block+tray") return scenarios::three_block_tray();
  return load_scenario(arg);
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

struct Common {
  std::string scenario = "3-block";
  std::string planner = "astar-exp";
  std::string graph = "partial";
  std::string bt = "online-action";
  std::uint64_t seed = 1;
  std::size_t seeds = 30;
  double latency_ms = -1;  // negative: keep the scenario's value
  std::string out = "out";
  double timeout_s = -1;
  unsigned jobs = 1;
};

void add_scenario(CLI::App* c, Common& o) {
  c->add_option("--scenario", o.scenario, "scenario JSON file, or 3-block / 3-block+tray");
}
void add_planner(CLI::App* c, Common& o) {
  c->add_option("--planner", o.planner, "astar-exp | astar | dijkstra");
  c->add_option("--graph", o.graph, "partial | full");
  c->add_option("--provider-latency-ms", o.latency_ms, "sleep per uncached cost call");
}

int cmd_plan(const Common& o) {
  auto sc = resolve_scenario(o.scenario);
  if (o.latency_ms >= 0) sc.provider_latency_ms = o.latency_ms;
  const auto cfg = sim::planner_config(normalize(o.planner), o.graph);
  auto ts = std::make_shared<const TransitionSystem>(sc.transition_system());
  const auto formula = ltl::parse_formula(sc.formula);
  ts->check_formula(formula);
  auto ba = std::make_shared<const ltl::BuchiAutomaton>(ltl::build_buchi(formula));
  Planner planner(cfg, ba, make_provider(sc.provider_latency_ms));
  Plan plan;
  try {
    plan = planner.plan(ts, sc.initial);
  } catch (const NoPlan& e) {
    std::cerr << "no plan: " << e.what() << "\n";
    return kNoPlan;
  }
  write_file(fs::path(o.out) / "plan.json", plan_to_json(plan).dump(2) + "\n");
  write_file(fs::path(o.out) / "stats.json", stats_to_json(plan).dump(2) + "\n");
  std::cout << plan.size() << " actions, cost " << plan.cost << " m\n";
  for (const auto& s : plan.steps) std::cout << "  " << s.action.name() << "  " << s.cost << "\n";
  return kOk;
}

int cmd_run(const Common& o, const std::string& script_path) {
  auto sc = resolve_scenario(o.scenario);
  sc.seed = o.seed;
  if (o.latency_ms >= 0) sc.provider_latency_ms = o.latency_ms;
  if (o.timeout_s > 0) sc.execution.timeout_s = o.timeout_s;
  sim::SessionConfig cfg;
  cfg.planner = sim::planner_config(normalize(o.planner), o.graph);
  cfg.bt = sim::parse_bt_variant(normalize(o.bt));
  std::vector<sim::InterventionEvent> script;
  if (!script_path.empty()) script = sim::load_script(script_path);
  sim::Session session(sc, cfg, script);
  const auto m = session.run();
  write_file(fs::path(o.out) / "trace.jsonl", session.trace_jsonl());
  write_file(fs::path(o.out) / "metrics.csv", sim::SessionMetrics::csv_header() + "\n" + m.csv_row() + "\n");
  if (const auto& p = session.current_plan()) write_file(fs::path(o.out) / "plan.json", plan_to_json(*p).dump(2) + "\n");
  std::cout << m.to_json().dump(2) << "\n";
  if (m.outcome == "timeout") return kTimeout;
  if (m.outcome == "infeasible") return kNoPlan;
  return kOk;
}

int cmd_bench_interventions(const Common& o, const std::vector<std::string>& planners,
                            const std::vector<std::string>& kinds, std::size_t events) {
  bench::InterventionBenchSpec spec;
  spec.scenario = resolve_scenario(o.scenario);
  spec.planners.clear();
  for (const auto& p : planners) spec.planners.push_back(normalize(p));
  spec.kinds = kinds;
  spec.bt = sim::parse_bt_variant(normalize(o.bt));
  spec.graph = o.graph;
  spec.seeds = o.seeds;
  spec.first_seed = o.seed;
  spec.events_per_seed = events;
  spec.provider_latency_ms = o.latency_ms >= 0 ? o.latency_ms : 1.0;
  if (o.timeout_s > 0) spec.timeout_s = o.timeout_s;
  spec.jobs = o.jobs;
  const auto runs = bench::run_intervention_bench(spec);
  const auto cells = bench::aggregate(runs);
  write_file(fs::path(o.out) / "runs.csv", bench::records_csv(runs));
  write_file(fs::path(o.out) / "metrics.csv", bench::aggregate_csv(cells));
  std::cout << bench::aggregate_table(cells);
  return kOk;
}

int cmd_bench_scaling(const Common& o, const bench::ScalingSpec& base) {
  auto spec = base;
  spec.first_seed = o.seed;
  if (o.latency_ms >= 0) spec.provider_latency_ms = o.latency_ms;
  const auto samples = bench::run_scaling(spec);
  write_file(fs::path(o.out) / "scaling.csv", bench::scaling_csv(samples));
  const auto curves = bench::scaling_curves_csv(samples);
  write_file(fs::path(o.out) / "curves.csv", curves);
  std::cout << curves;
  return kOk;
}

int cmd_bench_bt(const Common& o) {
  bench::BtBenchSpec spec;
  spec.planner = normalize(o.planner);
  spec.seeds = o.seeds;
  spec.first_seed = o.seed;
  spec.provider_latency_ms = o.latency_ms >= 0 ? o.latency_ms : 1.0;
  spec.jobs = o.jobs;
  const auto runs = bench::run_bt_bench(spec);
  const auto cells = bench::aggregate(runs);
  write_file(fs::path(o.out) / "bt_runs.csv", bench::records_csv(runs));
  write_file(fs::path(o.out) / "bt.csv", bench::aggregate_csv(cells));
  std::cout << std::left << std::setw(14) << "scenario" << std::setw(16) << "script" << std::setw(16) << "bt" << std::setw(10) << "success"
            << std::setw(22) << "bt changes" << std::setw(14) << "# replan" << "completion s\n";
  for (const auto& c : cells)
    std::cout << std::setw(14) << c.scenario << std::setw(16) << c.kind << std::setw(16) << c.bt << std::setw(10)
              << (std::to_string(c.successes) + "/" + std::to_string(c.runs)) << std::setw(22)
              << (std::to_string(c.bt_changes.mean) + " (" + std::to_string(static_cast<int>(c.bt_changes.median)) + ")")
              << std::setw(14) << c.replan_count.mean << c.completion_time.mean << " +- " << c.completion_time.ci95
              << "\n";
  return kOk;
}

int cmd_serve(const std::string& host, int port) {
  service::Service svc;
  std::cout << "listening on http://" << host << ":" << port << "/v1/sessions\n" << std::flush;
  if (!svc.listen(host, port)) {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    return kInputError;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reactive LTL task planning with behavior-tree execution"};
  app.require_subcommand(1);
  Common o;

  auto* plan = app.add_subcommand("plan", "plan once and write plan.json and stats.json");
  add_scenario(plan, o);
  add_planner(plan, o);
  plan->add_option("--out", o.out, "output directory");

  std::string script;
  auto* run = app.add_subcommand("run", "run one headless session");
  add_scenario(run, o);
  add_planner(run, o);
  run->add_option("--script", script, "intervention script JSON");
  run->add_option("--bt", o.bt, "online-action | online-state | offline-action");
  run->add_option("--seed", o.seed);
  run->add_option("--timeout-s", o.timeout_s);
  run->add_option("--out", o.out, "output directory");

  std::vector<std::string> planners{"astar-exp", "astar", "dijkstra"};
  std::vector<std::string> kinds{"relocate", "add", "remove"};
  std::size_t events = 1;
  auto* bi = app.add_subcommand("bench-interventions", "randomized intervention suite (table of medians and CIs)");
  o.scenario = "3-block+tray";
  add_scenario(bi, o);
  bi->add_option("--planner", planners, "planner variants")->delimiter(',');
  bi->add_option("--graph", o.graph, "partial | full");
  bi->add_option("--kinds", kinds, "relocate,add,remove")->delimiter(',');
  bi->add_option("--events", events, "interventions per seed");
  bi->add_option("--bt", o.bt);
  bi->add_option("--seed", o.seed, "first seed");
  bi->add_option("--seeds", o.seeds, "number of seeds");
  bi->add_option("--provider-latency-ms", o.latency_ms);
  bi->add_option("--timeout-s", o.timeout_s);
  bi->add_option("--jobs", o.jobs, "worker threads");
  bi->add_option("--out", o.out);

  bench::ScalingSpec scaling;
  auto* bs = app.add_subcommand("bench-scaling", "partial vs full graph construction over |O|");
  bs->add_option("--regions", scaling.n_regions);
  bs->add_option("--min-objects", scaling.min_objects);
  bs->add_option("--max-objects", scaling.max_objects);
  bs->add_option("--geometries", scaling.geometries);
  bs->add_option("--seed", o.seed, "first geometry seed");
  bs->add_option("--provider-latency-ms", o.latency_ms);
  bs->add_option("--out", o.out);

  auto* bb = app.add_subcommand("bench-bt", "BT variants on the unrelated-relocation script");
  bb->add_option("--planner", o.planner);
  bb->add_option("--seed", o.seed, "first seed");
  bb->add_option("--seeds", o.seeds);
  bb->add_option("--provider-latency-ms", o.latency_ms);
  bb->add_option("--jobs", o.jobs);
  bb->add_option("--out", o.out);

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP + server-sent events API");
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  std::string builtin;
  auto* scen = app.add_subcommand("scenario", "print a built-in scenario as JSON");
  scen->add_option("name", builtin, "3-block | 3-block+tray")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInputError;
  }

  try {
    if (*plan) {
      if (plan->count("--scenario") == 0) o.scenario = "3-block";
      return cmd_plan(o);
    }
    if (*run) {
      if (run->count("--scenario") == 0) o.scenario = "3-block";
      return cmd_run(o, script);
    }
    if (*bi) return cmd_bench_interventions(o, planners, kinds, events);
    if (*bs) return cmd_bench_scaling(o, scaling);
    if (*bb) {
      if (bb->count("--seeds") == 0) o.seeds = 10;
      return cmd_bench_bt(o);
    }
    if (*serve) return cmd_serve(host, port);
    if (*scen) {
      std::cout << scenario_to_json(resolve_scenario(builtin)).dump(2) << "\n";
      return kOk;
    }
  } catch (const ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kInputError;
  } catch (const NoPlan& e) {
    std::cerr << "no plan: " << e.what() << "\n";
    return kNoPlan;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kOk;
}
