#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "rtamp/bench/instances.hpp"
#include "rtamp/search/planner.hpp"
#include "test_support.hpp"

using namespace rtamp;

namespace {

std::shared_ptr<const ltl::BuchiAutomaton> buchi(const std::string& text) {
  return std::make_shared<const ltl::BuchiAutomaton>(ltl::build_buchi(ltl::parse_formula(text)));
}

std::shared_ptr<const TransitionSystem> system_of(const Scenario& sc) {
  return std::make_shared<const TransitionSystem>(sc.transition_system());
}

Scenario one_object() {
  Scenario sc;
  sc.geometry.home = {0, 0, 0.5};
  sc.geometry.regions["r1"] = FixedRegion{{0.3, 0, 0}, 0.1};
  sc.geometry.regions["r2"] = FixedRegion{{-0.3, 0, 0}, 0.1};
  sc.initial.assignment["o1"] = "r1";
  sc.macros = {"all_obj_in_r2"};
  return sc;
}

Scenario five_regions(int objects, std::uint64_t seed = 3) { return bench::random_instance(seed, objects, 5); }

// Word induced by executing the plan then idling in its final state.
ltl::LassoWord plan_word(const TransitionSystem& ts, const SymbolicState& start, const Plan& plan) {
  ltl::LassoWord w;
  SymbolicState s = start;
  for (const auto& step : plan.steps) {
    const auto l = ts.label(s);
    w.prefix.emplace_back(l.begin(), l.end());
    s = ts.apply_action(s, step.action);
  }
  const auto l = ts.label(s);
  w.cycle.emplace_back(l.begin(), l.end());
  return w;
}

}  // namespace

TEST(MotionCost, WorkedExample) {
  const auto sc = one_object();
  const double c = motion_cost_geometric(sc.geometry, sc.initial, ActionSpec::move_object("o1", "r2"));
  EXPECT_NEAR(c, std::sqrt(0.3 * 0.3 + 0.5 * 0.5) + 0.6, 1e-12);
  EXPECT_NEAR(c, 1.183, 5e-4);
}

TEST(MotionCost, MatchesOracleOnEveryEdge) {
  const auto sc = scenarios::three_block_tray();
  const auto ts = sc.transition_system();
  for (const auto& s : ts.enumerate_states())
    for (const auto& a : ts.enumerate_actions(s)) {
      const double c = motion_cost_geometric(sc.geometry, s, a);
      EXPECT_NEAR(c, test::oracle_motion_cost(sc.geometry, s, a), 1e-12);
      EXPECT_GE(c, minimum_place_leg(sc.geometry) - 1e-12);
    }
}

TEST(MotionCost, UniformScalingDoublesCostsAndKeepsPlan) {
  auto sc = bench::random_instance(11, 3, 4);
  auto scaled = sc;
  const auto scale = [](Vec3 v) { return 2.0 * v; };
  scaled.geometry.home = scale(sc.geometry.home);
  for (auto& [id, r] : scaled.geometry.regions) r.center = scale(r.center);
  const auto ba = buchi(sc.formula);
  Planner a(PlannerConfig{}, ba, make_provider(0));
  Planner b(PlannerConfig{}, ba, make_provider(0));
  const auto p = a.plan(system_of(sc), sc.initial);
  const auto q = b.plan(system_of(scaled), scaled.initial);
  EXPECT_NEAR(q.cost, 2 * p.cost, 1e-9);
  EXPECT_EQ(p.actions(), q.actions());
  const auto ts = sc.transition_system();
  for (const auto& s : ts.enumerate_states())
    for (const auto& act : ts.enumerate_actions(s))
      EXPECT_NEAR(motion_cost_geometric(scaled.geometry, s, act), 2 * motion_cost_geometric(sc.geometry, s, act), 1e-12);
}

TEST(LatencyProvider, DelayIsAdditive) {
  const auto sc = bench::random_instance(5, 3, 5);
  const auto ts = sc.transition_system();
  auto provider = latency_wrapped_provider(std::make_shared<GeometricCostProvider>(), std::chrono::milliseconds(1));
  std::vector<std::pair<SymbolicState, ActionSpec>> edges;
  for (const auto& s : ts.enumerate_states()) {
    for (const auto& a : ts.enumerate_actions(s)) {
      if (edges.size() == 100) break;
      edges.emplace_back(s, a);
    }
  }
  ASSERT_EQ(edges.size(), 100u);
  ExperienceCache cache;
  EdgeCoster coster(*provider, &cache);
  auto t0 = std::chrono::steady_clock::now();
  for (const auto& [s, a] : edges) coster(ts, encode_state(s), s, a);
  EXPECT_GE(std::chrono::steady_clock::now() - t0, std::chrono::milliseconds(100));
  EXPECT_EQ(provider->invocations(), 100u);

  t0 = std::chrono::steady_clock::now();
  for (const auto& [s, a] : edges) coster(ts, encode_state(s), s, a);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::milliseconds(20));
  EXPECT_EQ(provider->invocations(), 100u);
  EXPECT_EQ(coster.cache_hits(), 100u);
}

TEST(LatencyProvider, ZeroDelayIsIdentity) {
  const auto sc = scenarios::three_block_tray();
  const auto ts = sc.transition_system();
  GeometricCostProvider inner;
  auto wrapped = latency_wrapped_provider(std::make_shared<GeometricCostProvider>(), std::chrono::nanoseconds(0));
  for (const auto& s : ts.enumerate_states())
    for (const auto& a : ts.enumerate_actions(s)) EXPECT_EQ(wrapped->cost(sc.geometry, s, a), inner.cost(sc.geometry, s, a));
  EXPECT_EQ(wrapped->min_cost(sc.geometry), inner.min_cost(sc.geometry));
}

TEST(Successors, OneObjectExample) {
  const auto sc = one_object();
  const auto ts = system_of(sc);
  const auto ba = buchi("F G all_obj_in_r2");
  ProductGraph g(ts, ba);
  GeometricCostProvider provider;
  ExperienceCache cache;
  EdgeCoster coster(provider, &cache);
  const auto& key = g.add(ProductState{sc.initial, ba->initial});
  const auto edges = g.successors(key, coster);
  ASSERT_FALSE(edges.empty());
  bool moved = false;
  for (const auto& e : edges) {
    EXPECT_EQ(e.action, ActionSpec::move_object("o1", "r2"));
    moved = moved || g.node(e.target).state.ts.assignment.at("o1") == "r2";
  }
  EXPECT_TRUE(moved);

  const auto calls = provider.invocations();
  const auto again = g.successors(key, coster);
  EXPECT_EQ(provider.invocations(), calls);
  ASSERT_EQ(again.size(), edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    EXPECT_EQ(again[i].target, edges[i].target);
    EXPECT_EQ(again[i].cost, edges[i].cost);
  }
}

TEST(Successors, DeadStateHasNone) {
  Scenario sc;
  sc.geometry.regions["r1"] = FixedRegion{};
  const auto ba = buchi("G true");
  ProductGraph g(system_of(sc), ba);
  GeometricCostProvider provider;
  EdgeCoster coster(provider, nullptr);
  EXPECT_TRUE(g.successors(g.add(ProductState{{}, 0}), coster).empty());
}

TEST(Successors, PartialMatchesFullConstruction) {
  const auto sc = scenarios::three_block_tray();
  const auto ts = system_of(sc);
  const auto ba = buchi(sc.formula);
  GeometricCostProvider provider;
  EdgeCoster c1(provider, nullptr), c2(provider, nullptr);
  auto full = full_graph_construct(ts, ba, c1);
  ProductGraph lazy(ts, ba);
  for (const auto& s : ts->enumerate_states())
    for (int q = 0; q < static_cast<int>(ba->size()); ++q) {
      const auto& k = lazy.add(ProductState{s, q});
      const auto a = lazy.successors(k, c2);
      const auto& b = full.node(k).edges;
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].target, b[i].target);
        EXPECT_EQ(a[i].action, b[i].action);
      }
    }
}

TEST(Heuristic, Examples) {
  const auto ba = buchi("F G p");
  ASSERT_EQ(ba->size(), 2u);
  const BaDistanceHeuristic h(*ba, 0.2);
  int accepting = -1, other = -1;
  for (int q = 0; q < 2; ++q) (ba->accepting(q) ? accepting : other) = q;
  ASSERT_GE(accepting, 0);
  ASSERT_GE(other, 0);
  EXPECT_EQ(h(accepting, true), 0.0);
  EXPECT_EQ(h(other, true), 0.0);
  // Non-goal node whose automaton state is one hop from the accepting state.
  EXPECT_DOUBLE_EQ(h(other, false), 0.2);
}

TEST(Heuristic, AdmissibleAgainstExactDistances) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (const auto& formula : bench::optimality_formulas(4)) {
      auto sc = bench::random_instance(seed, 2, 4, formula);
      const auto ts = system_of(sc);
      const auto ba = buchi(formula);
      const double c_min = minimum_place_leg(sc.geometry);
      GeometricCostProvider provider;
      EdgeCoster coster(provider, nullptr);
      auto g = full_graph_construct(ts, ba, coster);
      for (const auto& s : ts->enumerate_states())
        for (int q = 0; q < static_cast<int>(ba->size()); ++q) {
          auto from_q = *ba;
          from_q.initial = q;
          const double exact = test::oracle_optimal_cost(*ts, from_q, s);
          const double h = heuristic_ba_distance(g, ProductState{s, q}.key(), c_min);
          if (std::isfinite(exact)) EXPECT_LE(h, exact + 1e-9) << formula << " " << encode_state(s) << " q" << q;
        }
    }
  }
}

TEST(Planner, SingleStepOptimum) {
  const auto sc = one_object();
  Planner p(PlannerConfig{}, buchi("F G all_obj_in_r2"), make_provider(0));
  const auto plan = p.plan(system_of(sc), sc.initial);
  ASSERT_EQ(plan.size(), 1u);
  EXPECT_EQ(plan.steps[0].action, ActionSpec::move_object("o1", "r2"));
  EXPECT_NEAR(plan.cost, motion_cost_geometric(sc.geometry, sc.initial, plan.steps[0].action), 1e-12);
}

TEST(Planner, AlreadySatisfiedGivesEmptyPlan) {
  auto sc = scenarios::three_block();
  for (auto& [o, r] : sc.initial.assignment) r = "r2";
  for (auto algo : {SearchAlgorithm::AStar, SearchAlgorithm::Dijkstra})
    for (auto mode : {GraphMode::Partial, GraphMode::Full}) {
      Planner p(PlannerConfig{algo, mode, true}, buchi(sc.formula), make_provider(0));
      const auto plan = p.plan(system_of(sc), sc.initial);
      EXPECT_TRUE(plan.empty());
      EXPECT_EQ(plan.cost, 0.0);
    }
}

TEST(Planner, ThreeBlockNeedsThreeMoves) {
  const auto sc = scenarios::three_block();
  Planner p(PlannerConfig{}, buchi(sc.formula), make_provider(0));
  const auto plan = p.plan(system_of(sc), sc.initial);
  EXPECT_EQ(plan.size(), 3u);
  const auto ts = sc.transition_system();
  EXPECT_NEAR(plan.cost, test::oracle_optimal_cost(ts, *buchi(sc.formula), sc.initial), 1e-9);
}

TEST(Planner, TrayPlanLoadsAllBlocks) {
  const auto sc = scenarios::three_block_tray();
  const auto ts = system_of(sc);
  const auto ba = buchi(sc.formula);
  Planner p(PlannerConfig{}, ba, make_provider(0));
  const auto plan = p.plan(ts, sc.initial);
  ASSERT_EQ(plan.size(), 7u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(plan.steps[i].action.destination, "r3");
  EXPECT_EQ(plan.steps[3].action, ActionSpec::move_region("r3", "d2"));
  for (int i = 4; i < 7; ++i) EXPECT_EQ(plan.steps[i].action.destination, "r2");
  const double no_tray =
      test::oracle_optimal_cost(*ts, *ba, sc.initial, [](const ActionSpec& a) { return a.kind == ActionSpec::Kind::MoveObject && a.destination != "r3"; });
  EXPECT_LT(plan.cost, no_tray - 1e-9);
  EXPECT_NEAR(plan.cost, test::oracle_optimal_cost(*ts, *ba, sc.initial), 1e-9);
}

TEST(Planner, UnreachableGoalThrowsNoPlan) {
  auto sc = one_object();
  Planner p(PlannerConfig{}, buchi("F G (o1r2 & o1r1)"), make_provider(0));
  EXPECT_THROW(p.plan(system_of(sc), sc.initial), NoPlan);
  Planner d(PlannerConfig{SearchAlgorithm::Dijkstra, GraphMode::Full, false}, buchi("G o1r2"), make_provider(0));
  EXPECT_THROW(d.plan(system_of(sc), sc.initial), NoPlan);
}

TEST(Planner, AStarMatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 20; ++i) {
    const int objects = 1 + static_cast<int>(rng() % 3);
    const int regions = 2 + static_cast<int>(rng() % 3);
    const auto formulas = bench::optimality_formulas(regions);
    const auto formula = formulas[rng() % formulas.size()];
    const auto sc = bench::random_instance(rng(), objects, regions, formula);
    const auto ts = system_of(sc);
    const auto ba = buchi(formula);
    Planner astar(PlannerConfig{SearchAlgorithm::AStar, GraphMode::Partial, false}, ba, make_provider(0));
    Planner dijkstra(PlannerConfig{SearchAlgorithm::Dijkstra, GraphMode::Full, false}, ba, make_provider(0));
    const auto a = astar.plan(ts, sc.initial);
    const auto d = dijkstra.plan(ts, sc.initial);
    const double oracle = test::oracle_optimal_cost(*ts, *ba, sc.initial);
    EXPECT_NEAR(a.cost, oracle, 1e-9 * std::max(1.0, oracle)) << formula;
    EXPECT_NEAR(d.cost, oracle, 1e-9 * std::max(1.0, oracle)) << formula;
    EXPECT_TRUE(ltl::formula_holds_on_lasso(ltl::parse_formula(formula), plan_word(*ts, sc.initial, a))) << formula;
    EXPECT_LE(a.stats.nodes_expanded, d.stats.nodes_expanded);
  }
}

TEST(FullGraph, NodeCountsForFiveRegions) {
  const std::size_t expected[] = {50, 250, 1250, 6250};
  for (int objects = 2; objects <= 5; ++objects) {
    const auto sc = five_regions(objects);
    const auto ba = buchi("F G all_obj_in_r2");
    GeometricCostProvider provider;
    EdgeCoster coster(provider, nullptr);
    const auto g = full_graph_construct(system_of(sc), ba, coster);
    EXPECT_EQ(g.node_count(), expected[objects - 2]);
    EXPECT_EQ(g.expanded_count(), g.node_count());
  }
}

TEST(FullGraph, NoObjects) {
  Scenario sc;
  sc.geometry.regions["r1"] = FixedRegion{};
  sc.geometry.regions["r2"] = FixedRegion{{1, 0, 0}, 0.15};
  sc.macros = {"all_obj_in_r2"};
  const auto ba = buchi("F G all_obj_in_r2");
  GeometricCostProvider provider;
  EdgeCoster coster(provider, nullptr);
  const auto g = full_graph_construct(system_of(sc), ba, coster);
  EXPECT_EQ(g.node_count(), ba->size());
  EXPECT_EQ(g.edge_count(), 0u);
}

TEST(FullGraph, BudgetExceeded) {
  const auto sc = five_regions(6);
  GeometricCostProvider provider;
  EdgeCoster coster(provider, nullptr);
  EXPECT_THROW(full_graph_construct(system_of(sc), buchi("F G all_obj_in_r2"), coster, 1000), GraphTooLarge);
}

TEST(Experience, CacheIsSoundAgainstRecomputation) {
  const auto sc = scenarios::three_block_tray();
  auto ts = system_of(sc);
  Planner p(PlannerConfig{}, buchi(sc.formula), make_provider(0));
  auto plan = p.plan(ts, sc.initial);
  // Replan from a perturbed state reuses entries; every cached value must equal a fresh evaluation.
  auto moved = sc.initial;
  moved.assignment["o2"] = "r2";
  plan = p.plan(std::make_shared<const TransitionSystem>(ts->with_initial(moved)), moved);
  EXPECT_GT(p.cache().size(), 0u);
  const auto vocab = ts->vocabulary();
  for (const auto& e : p.cache().entries()) {
    const auto s = decode_state(e.state_key, vocab);
    ActionSpec action;
    for (const auto& a : ts->enumerate_actions(s))
      if (a.name() == e.action) action = a;
    ASSERT_FALSE(action.entity.empty()) << e.action;
    EXPECT_EQ(e.cost, test::oracle_motion_cost(sc.geometry, s, action));
  }
}

TEST(Experience, ReplanSkipsEvaluatedEdges) {
  const auto sc = scenarios::three_block_tray();
  auto ts = system_of(sc);
  Planner p(PlannerConfig{}, buchi(sc.formula), make_provider(0));
  const auto first = p.plan(ts, sc.initial);
  EXPECT_GT(first.stats.provider_calls, 0u);
  const auto second = p.plan(ts, sc.initial);
  EXPECT_EQ(second.stats.provider_calls, 0u);
  EXPECT_EQ(second.cost, first.cost);
}

TEST(Experience, VersionChangeInvalidates) {
  const auto sc = scenarios::three_block();
  auto ts = system_of(sc);
  Planner p(PlannerConfig{}, buchi(sc.formula), make_provider(0));
  p.plan(ts, sc.initial);
  TsDelta d;
  d.added_objects["o4"] = "r1";
  auto observed = sc.initial;
  observed.assignment["o4"] = "r1";
  auto next = std::make_shared<const TransitionSystem>(ts->reconstruct(observed, d));
  const auto plan = p.plan(next, observed);
  EXPECT_EQ(plan.size(), 4u);
  EXPECT_GT(plan.stats.provider_calls, 0u);
  for (const auto& e : p.cache().entries()) EXPECT_EQ(e.version, next->version());
}

TEST(Planner, JsonExports) {
  const auto sc = scenarios::three_block();
  Planner p(PlannerConfig{}, buchi(sc.formula), make_provider(0));
  const auto plan = p.plan(system_of(sc), sc.initial);
  const auto j = plan_to_json(plan);
  EXPECT_EQ(j["schema"], "v1");
  EXPECT_EQ(j["steps"].size(), 3u);
  EXPECT_EQ(stats_to_json(plan)["plan_length"], 3u);
}
