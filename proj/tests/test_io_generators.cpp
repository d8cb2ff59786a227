#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "test_support.hpp"

using namespace resalloc;
using namespace testing_support;

TEST(InstanceIO, RoundTripRandomRanked) {
  RandomInstanceOptions opt;
  opt.ranked = true;
  const auto doc = gen_random_instance(opt, 17);
  const auto back = instance_from_json(json::parse(dump_instance(doc)));
  EXPECT_EQ(back, doc);
}

TEST(InstanceIO, RoundTripWithInit) {
  const auto doc = gen_k5_cycle_instance(0.05);
  const auto j = instance_to_json(doc);
  EXPECT_EQ(j["budgets"][0], 20);
  EXPECT_EQ(j["edges"][0]["utility_ij"]["family"], "capped_quadratic");
  const auto back = instance_from_json(json::parse(j.dump()));
  EXPECT_EQ(back, doc);
  EXPECT_EQ(dump_instance(back), dump_instance(doc));
}

TEST(InstanceIO, RoundTripEveryFamily) {
  for (auto f : {UtilityFamily::linear, UtilityFamily::sqrt, UtilityFamily::log1p, UtilityFamily::power,
                 UtilityFamily::capped_quadratic}) {
    RandomInstanceOptions opt;
    opt.families = {f};
    const auto doc = gen_random_instance(opt, 5);
    EXPECT_EQ(instance_from_json(instance_to_json(doc)), doc) << family_name(f);
  }
}

TEST(InstanceIO, InvalidWeightsAreReported) {
  auto j = instance_to_json(gen_k5_cycle_instance(0.05));
  for (auto& e : j["edges"])
    if (e["i"] == 0) e["w_ij"] = e["w_ij"].get<double>() * 2.0;
  try {
    instance_from_json(j);
    FAIL() << "expected InvalidInstance";
  } catch (const InvalidInstance& e) {
    ASSERT_FALSE(e.report().ok());
    EXPECT_EQ(e.report().violations[0].message, "weights of player 0 sum to 2");
  }
}

TEST(InstanceIO, MalformedDocumentsThrow) {
  auto j = instance_to_json(gen_k5_cycle_instance(0.05));
  j.erase("eta");
  EXPECT_THROW(instance_from_json(j), json::exception);
  auto k = instance_to_json(gen_k5_cycle_instance(0.05));
  k["behaviors"][1] = "greedy";
  EXPECT_THROW(instance_from_json(k), std::invalid_argument);
  auto m = instance_to_json(gen_k5_cycle_instance(0.05));
  m["init"][0][0] = 100;
  EXPECT_THROW(instance_from_json(m), InfeasibleProfile);
  auto d = instance_to_json(gen_k5_cycle_instance(0.05));
  d["edges"][1]["i"] = d["edges"][0]["i"];
  d["edges"][1]["j"] = d["edges"][0]["j"];
  EXPECT_THROW(instance_from_json(d), std::invalid_argument);
}

TEST(InstanceIO, TraceLines) {
  const auto doc = gen_k5_cycle_instance(0.05);
  DynamicsConfig cfg;
  cfg.mode = DynamicsMode::simultaneous;
  const auto res = run_dynamics(doc.spec, *doc.suggested_init, cfg);
  std::ostringstream out;
  write_trace(out, doc.spec, res.trace, true);
  std::istringstream in(out.str());
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    EXPECT_EQ(j["t"], count);
    EXPECT_EQ(j["hash"].get<std::string>().size(), 16u);
    if (count > 0) {
      EXPECT_EQ(j["mover"], "all");
    }
    EXPECT_TRUE(j.contains("profile"));
    ++count;
  }
  EXPECT_EQ(count, res.trace.size());
}

TEST(Generators, TorusShape) {
  for (auto [w, h] : {std::pair<std::size_t, std::size_t>{10, 10}, {3, 3}, {4, 3}}) {
    const auto doc = gen_torus_grid(w, h, 100.0, 1.0, 1);
    const Graph& g = doc.spec.graph();
    EXPECT_EQ(g.num_players(), w * h);
    EXPECT_EQ(g.num_edges(), 2 * w * h);
    for (PlayerId i = 0; i < g.num_players(); ++i) {
      EXPECT_EQ(g.degree(i), 4u);
      EXPECT_EQ(doc.spec.budget_units(i), 100);
    }
    EXPECT_TRUE(validate_game(doc.spec).ok());
  }
  EXPECT_THROW(gen_torus_grid(2, 5, 100.0, 1.0, 1), std::invalid_argument);
}

TEST(Generators, TorusWeightsDependOnSeedOnly) {
  const auto a = gen_torus_grid(5, 5, 100.0, 1.0, 3);
  EXPECT_EQ(a, gen_torus_grid(5, 5, 100.0, 1.0, 3));
  EXPECT_NE(a.spec, gen_torus_grid(5, 5, 100.0, 1.0, 4).spec);
}

TEST(Generators, K5Weights) {
  const auto doc = gen_k5_cycle_instance(0.05);
  const auto& spec = doc.spec;
  const Graph& g = spec.graph();
  EXPECT_EQ(g.num_edges(), 10u);
  for (PlayerId i = 0; i < 5; ++i) {
    EXPECT_NEAR(spec.weight(*g.find_arc(i, (i + 1) % 5)), 0.3, 1e-15);
    EXPECT_NEAR(spec.weight(*g.find_arc(i, (i + 2) % 5)), 0.3, 1e-15);
    EXPECT_NEAR(spec.weight(*g.find_arc(i, (i + 3) % 5)), 0.2, 1e-15);
    EXPECT_NEAR(spec.weight(*g.find_arc(i, (i + 4) % 5)), 0.2, 1e-15);
  }
  EXPECT_TRUE(validate_game(spec).ok());
}

TEST(Generators, PoaGridLayout) {
  const auto inst = gen_poa_grid_instance(3, 4, 0.1, 1.0);
  const auto& spec = inst.doc.spec;
  const Graph& g = spec.graph();
  EXPECT_EQ(spec.eta(), 0.1);
  std::multiset<double> weights;
  for (ArcId a = 0; a < g.num_arcs(); ++a) {
    weights.insert(spec.weight(a));
    if (spec.weight(a) > 0.2) {
      EXPECT_EQ(inst.f_good[a], 4);
      EXPECT_EQ(inst.f_bad[a], 1);
    } else {
      EXPECT_EQ(inst.f_good[a], 1);
      EXPECT_EQ(inst.f_bad[a], 4);
    }
  }
  EXPECT_EQ(weights.count(0.1), g.num_arcs() / 2);
  EXPECT_EQ(weights.count(0.5 - 0.1), g.num_arcs() / 2);
  EXPECT_THROW(gen_poa_grid_instance(3, 3, 0.3, 1.0), std::invalid_argument);
}

TEST(Generators, RandomInstancesRespectOptions) {
  RandomInstanceOptions opt;
  opt.n = 15;
  opt.edge_prob = 0.8;
  opt.max_degree = 3;
  opt.min_budget_units = 5;
  opt.max_budget_units = 9;
  opt.behaviors = BehaviorMix::optimistic;
  opt.symmetric_utilities = true;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto doc = gen_random_instance(opt, s);
    EXPECT_TRUE(validate_game(doc.spec).ok());
    for (PlayerId i = 0; i < opt.n; ++i) {
      EXPECT_LE(doc.spec.graph().degree(i), 3u);
      EXPECT_GE(doc.spec.budget_units(i), 5);
      EXPECT_LE(doc.spec.budget_units(i), 9);
      EXPECT_EQ(doc.spec.behavior(i), Behavior::optimistic);
    }
    for (const auto& e : doc.spec.edges()) EXPECT_EQ(e.u_ij, e.u_ji);
  }
  EXPECT_EQ(gen_random_instance(opt, 3), gen_random_instance(opt, 3));
}

TEST(Generators, RankedInstancesArePotentialGames) {
  RandomInstanceOptions opt;
  opt.ranked = true;
  opt.symmetric_utilities = true;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto doc = gen_random_instance(opt, s);
    ASSERT_TRUE(doc.ranking.has_value());
    EXPECT_NO_THROW(require_potential_game(doc.spec, RankingSystem::make(doc.spec.graph(), *doc.ranking)));
  }
}
