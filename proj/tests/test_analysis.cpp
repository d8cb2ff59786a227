#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace resalloc;
using namespace testing_support;

TEST(Ranking, WeightsOnPath) {
  const Graph g(4, {{0, 1}, {1, 2}});
  const auto r = RankingSystem::make(g, {1, 2, 3, 4});
  EXPECT_EQ(r.neighbor_rank, (std::vector<std::int64_t>{2, 4, 2, 0}));
  const auto w = global_ranking_weights(g, r);
  EXPECT_DOUBLE_EQ(w.value(*g.find_arc(0, 1)), 1.0);
  EXPECT_DOUBLE_EQ(w.value(*g.find_arc(1, 0)), 0.25);
  EXPECT_DOUBLE_EQ(w.value(*g.find_arc(1, 2)), 0.75);
  EXPECT_DOUBLE_EQ(w.value(*g.find_arc(2, 1)), 1.0);
  EXPECT_EQ(w.isolated, std::vector<PlayerId>{3});
  EXPECT_THROW(RankingSystem::make(g, {1, 0, 1, 1}), std::invalid_argument);
  EXPECT_THROW(RankingSystem::make(g, {1, 1}), std::invalid_argument);
}

TEST(Ranking, PotentialOnSingleEdge) {
  const auto spec = single_edge(1.0, 4.0, 4.0, UtilitySpec::sqrt());
  const auto r = RankingSystem::make(spec.graph(), {1, 1});
  FrequencyProfile p(spec.graph());
  p[0] = p[1] = 4;
  EXPECT_DOUBLE_EQ(potential_value(spec, r, p), 4.0);
  p[1] = 1;
  EXPECT_DOUBLE_EQ(potential_value(spec, r, p), 2.0);
}

TEST(Ranking, PotentialNeedsInducedWeightsAndSymmetricUtilities) {
  const auto asym = GameSpec(2, 1.0, {1.0, 1.0}, {Behavior::pessimistic, Behavior::pessimistic},
                             {{0, 1, 1.0, 1.0, UtilitySpec::sqrt(), UtilitySpec::linear()}});
  EXPECT_THROW(require_potential_game(asym, RankingSystem::make(asym.graph(), {1, 1})), std::invalid_argument);
  const auto spec = path3(1.0, 2.0, UtilitySpec::sqrt(), 0.5);
  EXPECT_NO_THROW(require_potential_game(spec, RankingSystem::make(spec.graph(), {1, 1, 1})));
  EXPECT_THROW(require_potential_game(spec, RankingSystem::make(spec.graph(), {1, 1, 2})), std::invalid_argument);
}

TEST(Profiles, MatchDown) {
  const auto spec = single_edge(1.0, 5.0, 5.0, UtilitySpec::sqrt());
  const auto p = profile_from_rows(spec, {{0, 3}, {5, 0}});
  const auto m = match_down(spec, p);
  EXPECT_EQ(m, profile_from_rows(spec, {{0, 3}, {3, 0}}));
  EXPECT_DOUBLE_EQ(social_welfare(spec, m), social_welfare(spec, p));
}

TEST(Profiles, ConvexCombineAndSnap) {
  const auto spec = single_edge(1.0, 5.0, 5.0, UtilitySpec::sqrt());
  const auto a = profile_from_rows(spec, {{0, 4}, {4, 0}});
  const auto b = profile_from_rows(spec, {{0, 1}, {2, 0}});
  const auto mix = convex_combine(spec, a, b, 0.25);
  const Graph& g = spec.graph();
  EXPECT_DOUBLE_EQ(mix[*g.find_arc(0, 1)], 1.75);
  EXPECT_DOUBLE_EQ(mix[*g.find_arc(1, 0)], 2.5);
  EXPECT_EQ(snap_to_grid(spec, mix), profile_from_rows(spec, {{0, 1}, {2, 0}}));
  EXPECT_THROW(convex_combine(spec, a, b, 1.5), std::invalid_argument);
}

TEST(Profiles, MatchDownPreservesWelfareOnRandomProfiles) {
  std::mt19937_64 rng(41);
  for (std::uint64_t k = 0; k < 30; ++k) {
    const auto spec = gen_random_instance({}, 200 + k).spec;
    const auto p = random_profile(spec, rng);
    const auto m = match_down(spec, p);
    EXPECT_NEAR(social_welfare(spec, m), social_welfare(spec, p), 1e-12);
    const Graph& g = spec.graph();
    for (ArcId a = 0; a < g.num_arcs(); ++a) EXPECT_EQ(m[a], m[g.reverse(a)]);
    EXPECT_EQ(partition_players(spec, m).v2.size(), 0u);
  }
}

TEST(Optimum, SingleEdge) {
  const auto spec = single_edge(1.0, 4.0, 4.0, UtilitySpec::sqrt());
  const auto opt = global_optimum(spec);
  ASSERT_EQ(opt.profile.x.size(), 1u);
  EXPECT_NEAR(opt.profile.x[0], 4.0, 1e-6);
  EXPECT_NEAR(opt.welfare, 4.0, 1e-9);
  EXPECT_TRUE(opt.certified);
}

TEST(Optimum, InteriorCappedQuadratic) {
  const auto spec = single_edge(1.0, 10.0, 10.0, UtilitySpec::capped_quadratic(6.0));
  const auto opt = global_optimum(spec);
  // Flat beyond b/2, so any agreed amount in [3, 10] is optimal.
  EXPECT_GE(opt.profile.x[0], 3.0 - 1e-6);
  EXPECT_LE(opt.profile.x[0], 10.0 + 1e-9);
  EXPECT_NEAR(opt.welfare, 18.0, 1e-9);
}

TEST(Optimum, EmptyGame) {
  const GameSpec spec(2, 1.0, {1.0, 1.0}, {Behavior::pessimistic, Behavior::pessimistic}, {});
  const auto opt = global_optimum(spec);
  EXPECT_DOUBLE_EQ(opt.welfare, 0.0);
  EXPECT_TRUE(opt.profile.x.empty());
}

TEST(Optimum, TriangleAgreesWithExhaustiveSearch) {
  const auto tri = checks::triangle_instance();
  const auto opt = global_optimum(tri);
  const auto oracle = brute_force_optimum(tri);
  EXPECT_NEAR(oracle.welfare, 0.75, 1e-12);
  EXPECT_NEAR(opt.welfare, 0.75, 1e-9);
  for (double x : opt.profile.x) EXPECT_NEAR(x, 10.0, 1e-4);
}

TEST(OptimumProperty, NeverBelowGridOptimum) {
  for (std::uint64_t k = 0; k < 25; ++k) {
    RandomInstanceOptions opt;
    opt.n = 4;
    opt.edge_prob = 0.6;
    opt.eta = 0.1;
    opt.min_budget_units = 2;
    opt.max_budget_units = 8;
    const auto spec = gen_random_instance(opt, 600 + k).spec;
    const auto cont = global_optimum(spec);
    const auto grid = brute_force_optimum(spec);
    EXPECT_GE(cont.welfare, grid.welfare - 1e-7 * std::max(1.0, grid.welfare)) << "instance " << k;
    const auto real = to_profile(spec, cont.profile);
    EXPECT_FALSE(find_infeasible_player(spec, real).has_value());
  }
}

TEST(OptimumProperty, MatchedOptimumIsPessimisticEquilibrium) {
  for (std::uint64_t k = 0; k < 10; ++k) {
    RandomInstanceOptions opt;
    opt.n = 6;
    const auto spec = gen_random_instance(opt, 800 + k).spec;
    const auto best = global_optimum(spec);
    const auto profile = to_profile(spec, best.profile);
    EXPECT_EQ(classify_equilibrium(spec, profile, 1e-9).kind, EquilibriumClass::Kind::pessimistic) << k;
  }
}

TEST(Quality, Ratios) {
  EXPECT_DOUBLE_EQ(ne_quality(0.5, 2.0), 0.25);
  EXPECT_THROW(ne_quality(0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(ne_quality(1.0, 0.0), std::logic_error);
  const auto q = sample_quality({0.5, 0.8, 0.6});
  EXPECT_DOUBLE_EQ(q.poa, 2.0);
  EXPECT_DOUBLE_EQ(q.pos, 1.25);
  EXPECT_THROW(sample_quality({}), std::invalid_argument);
}

TEST(PoaGrid, ClosedFormRatios) {
  EXPECT_EQ(poa_grid_ratio(0.1, 1.0), 1.75);
  EXPECT_NEAR(poa_grid_ratio(0.05, 1.0), 0.2275 / 0.0675, 1e-12);
  EXPECT_NEAR(poa_grid_ratio(0.025, 1.0), 0.238125 / 0.035625, 1e-12);
  EXPECT_NEAR(poa_grid_ratio(0.0125, 1.0), 0.24390625 / 0.01828125, 1e-12);
  EXPECT_THROW(poa_grid_ratio(0.5, 1.0), std::invalid_argument);
  EXPECT_THROW(poa_grid_ratio(0.0, 1.0), std::invalid_argument);
}

TEST(PoaGrid, RatioGrowsAsEpsShrinks) {
  double prev = 0.0;
  for (double eps = 0.2; eps > 1e-4; eps /= 2.0) {
    const double r = poa_grid_ratio(eps, 1.0);
    EXPECT_GT(r, prev);
    EXPECT_GT(r, 0.1 / eps);
    prev = r;
  }
}

TEST(PoaGrid, ProfilesMatchClosedForm) {
  const auto inst = gen_poa_grid_instance(4, 3, 0.05, 1.0);
  const auto& spec = inst.doc.spec;
  const auto w = poa_grid_welfare_per_node(0.05, 1.0);
  EXPECT_NEAR(social_welfare(spec, inst.f_good), 12 * w.good, 1e-12);
  EXPECT_NEAR(social_welfare(spec, inst.f_bad), 12 * w.bad, 1e-12);
  EXPECT_EQ(classify_equilibrium(spec, inst.f_bad, 1e-9).kind, EquilibriumClass::Kind::pessimistic);
  EXPECT_EQ(classify_equilibrium(spec, inst.f_good, 1e-9).kind, EquilibriumClass::Kind::pessimistic);
  const auto opt = global_optimum(spec);
  EXPECT_GE(opt.welfare, social_welfare(spec, inst.f_good) - 1e-9);
}
