#include <gtest/gtest.h>

#include <random>

#include "rtamp/domain/transition_system.hpp"
#include "rtamp/io/scenario.hpp"

using namespace rtamp;

namespace {

WorldGeometry two_regions(double r = 0.15) {
  WorldGeometry g;
  g.regions["r1"] = FixedRegion{{0.3, 0, 0}, r};
  g.regions["r2"] = FixedRegion{{-0.3, 0, 0}, r};
  return g;
}

WorldGeometry with_tray(WorldGeometry g) {
  Tray t;
  t.docks["d1"] = {0.3, 0.3, 0};
  t.docks["d2"] = {-0.3, 0.3, 0};
  t.dock = "d1";
  g.trays["r3"] = t;
  return g;
}

SymbolicState state(std::map<std::string, std::string> a, std::map<std::string, std::string> docks = {}) {
  return SymbolicState{std::move(a), std::move(docks)};
}

}  // namespace

TEST(RegionOf, CenterMapsToRegion) {
  const auto g = two_regions();
  EXPECT_EQ(region_of(g, {0.3, 0, 0}), "r1");
}

TEST(RegionOf, TieGoesToSmallestId) {
  const auto g = two_regions(0.5);
  EXPECT_EQ(region_of(g, {0, 0, 0}), "r1");
}

TEST(RegionOf, FarAwayThrows) {
  WorldGeometry g;
  g.regions["r1"] = FixedRegion{{0, 0, 0}, 0.15};
  g.regions["r2"] = FixedRegion{{0, 2, 0}, 0.15};
  EXPECT_THROW(region_of(g, {0, 1, 0.0}), NoRegion);
  EXPECT_THROW(region_of(g, {1, 0, 0}), NoRegion);
}

TEST(RegionOf, TrayFollowsDock) {
  auto g = with_tray(two_regions());
  EXPECT_EQ(region_of(g, {0.3, 0.3, 0}), "r3");
  g.trays["r3"].dock = "d2";
  EXPECT_THROW(region_of(g, {0.3, 0.3, 0}), NoRegion);
  EXPECT_EQ(region_of(g, {-0.3, 0.3, 0}), "r3");
}

TEST(Encode, Examples) {
  EXPECT_EQ(encode_state(state({{"o1", "r1"}, {"o2", "r3"}})), "o1r1_o2r3");
  EXPECT_EQ(encode_state(state({{"o1", "rhand"}, {"o2", "r1"}})), "o1rhand_o2r1");
  EXPECT_EQ(encode_state(state({{"o1", "r1"}, {"o2", "r1"}}, {{"r3", "d1"}})), "o1r1_o2r1_r3d1");
}

TEST(Encode, RandomRoundTrip) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    Vocabulary v;
    SymbolicState s;
    const int n_regions = 1 + static_cast<int>(rng() % 12);
    const int n_objects = static_cast<int>(rng() % 12);
    for (int r = 1; r <= n_regions; ++r) v.regions.insert("r" + std::to_string(r));
    const bool tray = rng() % 2;
    if (tray) {
      v.regions.insert("r" + std::to_string(n_regions + 1));
      v.tray_docks["r" + std::to_string(n_regions + 1)] = {"d1", "d2", "d3"};
    }
    std::vector<std::string> regions(v.regions.begin(), v.regions.end());
    bool held = false;
    for (int o = 1; o <= n_objects; ++o) {
      const std::string id = "o" + std::to_string(o);
      v.objects.insert(id);
      if (!held && rng() % 5 == 0) {
        s.assignment[id] = kHand;
        held = true;
      } else {
        s.assignment[id] = regions[rng() % regions.size()];
      }
    }
    for (const auto& [t, docks] : v.tray_docks) s.tray_docks[t] = "d" + std::to_string(1 + rng() % 3);
    EXPECT_EQ(decode_state(encode_state(s), v), s) << encode_state(s);
  }
}

TEST(Actions, SingleLegalMove) {
  TransitionSystem ts(two_regions(), state({{"o1", "r1"}}), {});
  const auto acts = ts.enumerate_actions(ts.initial());
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_EQ(acts[0], ActionSpec::move_object("o1", "r2"));
}

TEST(Actions, TwoObjectsWithTray) {
  TransitionSystem ts(with_tray(two_regions()), state({{"o1", "r1"}, {"o2", "r1"}}, {{"r3", "d1"}}), {});
  const auto acts = ts.enumerate_actions(ts.initial());
  const std::set<ActionSpec> got(acts.begin(), acts.end());
  const std::set<ActionSpec> want{ActionSpec::move_object("o1", "r2"), ActionSpec::move_object("o1", "r3"),
                                  ActionSpec::move_object("o2", "r2"), ActionSpec::move_object("o2", "r3"),
                                  ActionSpec::move_region("r3", "d2")};
  EXPECT_EQ(got, want);
  EXPECT_EQ(acts.size(), got.size());
}

TEST(Actions, NothingToMove) {
  WorldGeometry g;
  g.regions["r1"] = FixedRegion{};
  TransitionSystem ts(g, {}, {});
  EXPECT_TRUE(ts.enumerate_actions(ts.initial()).empty());
}

TEST(Apply, Examples) {
  TransitionSystem ts(with_tray(two_regions()), state({{"o1", "r1"}}, {{"r3", "d1"}}), {});
  EXPECT_EQ(ts.apply_action(state({{"o1", "r1"}}, {{"r3", "d1"}}), ActionSpec::move_object("o1", "r2")),
            state({{"o1", "r2"}}, {{"r3", "d1"}}));
  EXPECT_EQ(ts.apply_action(state({{"o1", "r3"}}, {{"r3", "d1"}}), ActionSpec::move_region("r3", "d2")),
            state({{"o1", "r3"}}, {{"r3", "d2"}}));
  EXPECT_THROW(ts.apply_action(state({{"o1", "r1"}}, {{"r3", "d1"}}), ActionSpec::move_object("o1", "r1")),
               IllegalAction);
  EXPECT_THROW(ts.apply_action(state({{"o1", "r1"}}, {{"r3", "d1"}}), ActionSpec::move_object("o1", "r9")),
               IllegalAction);
}

TEST(Apply, EveryEnumeratedActionChangesExactlyOneEntity) {
  TransitionSystem ts(with_tray(two_regions()), state({{"o1", "r1"}, {"o2", "r3"}}, {{"r3", "d1"}}), {});
  for (const auto& s : ts.enumerate_states()) {
    for (const auto& a : ts.enumerate_actions(s)) {
      const auto n = ts.apply_action(s, a);
      int changed = 0;
      for (const auto& [o, r] : s.assignment) changed += n.assignment.at(o) != r;
      for (const auto& [t, d] : s.tray_docks) changed += n.tray_docks.at(t) != d;
      EXPECT_EQ(changed, 1) << encode_state(s) << " " << a.name();
    }
  }
}

TEST(Label, Examples) {
  TransitionSystem ts(two_regions(), state({{"o1", "r1"}, {"o2", "r1"}}), {"all_obj_in_r2"});
  EXPECT_EQ(ts.label(state({{"o1", "r2"}, {"o2", "r2"}})), (Label{"o1r2", "o2r2", "all_obj_in_r2"}));
  EXPECT_EQ(ts.label(state({{"o1", "r1"}, {"o2", "r2"}})), (Label{"o1r1", "o2r2"}));
  TransitionSystem empty(two_regions(), {}, {"all_obj_in_r2"});
  EXPECT_EQ(empty.label({}), (Label{"all_obj_in_r2"}));
}

TEST(Label, UnknownMacroRejected) {
  EXPECT_THROW(TransitionSystem(two_regions(), {}, {"near_r2"}), UnknownAtom);
  TransitionSystem ts(two_regions(), state({{"o1", "r1"}}), {});
  EXPECT_THROW(ts.check_formula(ltl::parse_formula("F o7r1")), UnknownAtom);
  EXPECT_NO_THROW(ts.check_formula(ltl::parse_formula("F o1r2")));
}

TEST(Cardinality, MatchesEnumeration) {
  for (int n_regions = 1; n_regions <= 4; ++n_regions) {
    for (int n_objects = 0; n_objects <= 3; ++n_objects) {
      for (bool tray : {false, true}) {
        WorldGeometry g;
        for (int r = 1; r <= n_regions; ++r) g.regions["r" + std::to_string(r)] = FixedRegion{{double(r), 0, 0}, 0.1};
        if (tray) {
          Tray t;
          t.docks = {{"d1", {0, 1, 0}}, {"d2", {0, 2, 0}}};
          t.dock = "d1";
          g.trays["t"] = t;
        }
        SymbolicState s;
        for (int o = 1; o <= n_objects; ++o) s.assignment["o" + std::to_string(o)] = "r1";
        TransitionSystem ts(g, s, {});
        const auto states = ts.enumerate_states();
        const std::set<SymbolicState> distinct(states.begin(), states.end());
        std::size_t expect = 1;
        for (int o = 0; o < n_objects; ++o) expect *= n_regions + (tray ? 1 : 0);
        if (tray) expect *= 2;
        EXPECT_EQ(states.size(), expect);
        EXPECT_EQ(distinct.size(), expect);
        EXPECT_EQ(ts.state_count(), expect);
      }
    }
  }
}

TEST(Reconstruct, AddObjectGrowsStateSpace) {
  TransitionSystem ts(two_regions(), state({{"o1", "r1"}, {"o2", "r2"}}), {});
  EXPECT_EQ(ts.state_count(), 4u);
  TsDelta d;
  d.added_objects["o3"] = "r1";
  const auto next = ts.reconstruct(state({{"o1", "r1"}, {"o2", "r2"}, {"o3", "r1"}}), d);
  EXPECT_EQ(next.state_count(), 8u);
  EXPECT_GT(next.version(), ts.version());
}

TEST(Reconstruct, RemoveObjectDropsAtoms) {
  TransitionSystem ts(two_regions(), state({{"o1", "r1"}, {"o2", "r2"}}), {});
  TsDelta d;
  d.removed_objects.insert("o2");
  const auto next = ts.reconstruct(state({{"o1", "r1"}}), d);
  EXPECT_EQ(next.objects(), std::vector<std::string>{"o1"});
  for (const auto& a : next.atoms()) EXPECT_FALSE(a.starts_with("o2"));
}

TEST(Reconstruct, AddTrayDoublesAndAddsRegionMoves) {
  TransitionSystem ts(two_regions(), state({{"o1", "r1"}, {"o2", "r2"}}), {});
  TsDelta d;
  Tray t;
  t.docks = {{"d1", {0.3, 0.3, 0}}, {"d2", {-0.3, 0.3, 0}}};
  t.dock = "d1";
  d.added_trays["r3"] = t;
  const auto next = ts.reconstruct(state({{"o1", "r1"}, {"o2", "r2"}}, {{"r3", "d1"}}), d);
  EXPECT_EQ(next.state_count(), 3u * 3u * 2u);
  const auto acts = next.enumerate_actions(next.initial());
  EXPECT_TRUE(std::find(acts.begin(), acts.end(), ActionSpec::move_region("r3", "d2")) != acts.end());
}

TEST(Reconstruct, InconsistentObservation) {
  TransitionSystem ts(two_regions(), state({{"o1", "r1"}}), {});
  EXPECT_THROW(ts.reconstruct(state({{"o1", "r1"}, {"o9", "r1"}}), {}), InconsistentObservation);
  EXPECT_THROW(ts.reconstruct(state({}), {}), InconsistentObservation);
  TsDelta d;
  d.removed_regions.insert("r7");
  EXPECT_THROW(ts.reconstruct(state({{"o1", "r1"}}), d), InconsistentObservation);
}

TEST(Scenario, JsonRoundTrip) {
  for (const auto& sc : {scenarios::three_block(), scenarios::three_block_tray()}) {
    const auto doc = scenario_to_json(sc);
    const auto back = scenario_from_json(doc);
    EXPECT_EQ(scenario_to_json(back), doc);
    EXPECT_EQ(back.initial, sc.initial);
  }
}

TEST(Scenario, ValidationNamesField) {
  auto doc = scenario_to_json(scenarios::three_block());
  doc["regions"][1]["id"] = "r1";
  try {
    scenario_from_json(doc);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("regions[1].id"), std::string::npos) << e.what();
  }
}

TEST(Scenario, BadFormulaAndRegion) {
  auto doc = scenario_to_json(scenarios::three_block());
  doc["formula"] = "F (";
  doc["objects"][0]["region"] = "r9";
  try {
    scenario_from_json(doc);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("formula"), std::string::npos) << what;
    EXPECT_NE(what.find("objects[0].region"), std::string::npos) << what;
  }
}
