#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace resalloc;
using namespace testing_support;

TEST(BestResponse, K5AgainstGenerousNeighbors) {
  const auto spec = gen_k5_cycle_instance(0.05).spec;
  const Graph& g = spec.graph();
  FrequencyProfile p(g);
  for (ArcId a = 0; a < g.num_arcs(); ++a) p[a] = spec.budget_units(g.arc_tail(a));
  const auto br = best_response(spec, p, 0);
  // Neighbors 1, 2 carry weight 1/4 + eps, neighbors 3, 4 carry 1/4 - eps.
  EXPECT_EQ(br.proposals, (std::vector<std::int64_t>{6, 6, 4, 4}));
  EXPECT_EQ(br.slack_after, 0);
  EXPECT_NEAR(br.dual_level, 0.12, 1e-9);
}

TEST(BestResponse, IdealAllocationK5) {
  const auto spec = gen_k5_cycle_instance(0.05).spec;
  const auto ideal = ideal_allocation(spec, 2);
  ASSERT_EQ(ideal.allocation.size(), 4u);
  EXPECT_NEAR(ideal.allocation[0], 4.0, 1e-9);  // neighbor 0 = 2 + 3
  EXPECT_NEAR(ideal.allocation[1], 4.0, 1e-9);  // neighbor 1 = 2 + 4
  EXPECT_NEAR(ideal.allocation[2], 6.0, 1e-9);
  EXPECT_NEAR(ideal.allocation[3], 6.0, 1e-9);
  EXPECT_NEAR(ideal.opt_value, 2 * 0.3 * (0.3 - 0.09) + 2 * 0.2 * (0.2 - 0.04), 1e-12);
}

TEST(BestResponse, CappedByNeighborOffer) {
  const auto spec = single_edge(1.0, 5.0, 5.0, UtilitySpec::sqrt());
  const Graph& g = spec.graph();
  FrequencyProfile p(g);
  p[*g.find_arc(1, 0)] = 3;

  const auto pess = best_response(spec, p, 0, Behavior::pessimistic);
  EXPECT_EQ(pess.proposals, std::vector<std::int64_t>{3});
  EXPECT_EQ(pess.slack_after, 2);
  EXPECT_NEAR(pess.realized_utility, std::sqrt(3.0), 1e-12);

  const auto opt = best_response(spec, p, 0, Behavior::optimistic);
  EXPECT_EQ(opt.proposals, std::vector<std::int64_t>{5});
  EXPECT_EQ(opt.slack_after, 2);
  EXPECT_NEAR(opt.realized_utility, std::sqrt(3.0), 1e-12);
}

TEST(BestResponse, OptimisticSlackIsSpreadRoundRobin) {
  const auto u = UtilitySpec::sqrt();
  const GameSpec spec(3, 1.0, {10.0, 10.0, 10.0}, std::vector<Behavior>(3, Behavior::optimistic),
                      {{0, 1, 0.5, 1.0, u, u}, {0, 2, 0.5, 1.0, u, u}});
  const Graph& g = spec.graph();
  FrequencyProfile p(g);
  p[*g.find_arc(1, 0)] = 1;
  p[*g.find_arc(2, 0)] = 2;
  const auto br = best_response(spec, p, 0);
  // 7 spare units over two lose-set neighbors: 4 to the first, 3 to the second.
  EXPECT_EQ(br.proposals, (std::vector<std::int64_t>{5, 5}));
  EXPECT_EQ(br.slack_after, 7);
}

TEST(BestResponse, IsolatedPlayerKeepsBudget) {
  const GameSpec spec(1, 1.0, {3.0}, {Behavior::optimistic}, {});
  const auto br = best_response(spec, FrequencyProfile(spec.graph()), 0);
  EXPECT_TRUE(br.proposals.empty());
  EXPECT_EQ(br.slack_after, 3);
  EXPECT_DOUBLE_EQ(br.realized_utility, 0.0);
}

TEST(BestResponse, RealProfileVariant) {
  const auto spec = single_edge(1.0, 5.0, 5.0, UtilitySpec::log1p());
  const Graph& g = spec.graph();
  RealProfile p(g);
  p[*g.find_arc(1, 0)] = 2.5;
  const auto br = best_response(spec, p, 0, Behavior::pessimistic);
  ASSERT_EQ(br.proposals.size(), 1u);
  EXPECT_NEAR(br.proposals[0], 2.5, 1e-9);
  EXPECT_NEAR(br.realized_utility, std::log1p(2.5), 1e-9);
}

TEST(Quantize, FloorsThenHandsOutByGain) {
  const std::vector<double> targets{1.5, 1.5};
  const std::vector<std::int64_t> caps{10, 10};
  const auto flat = quantize_allocation(targets, caps, 3, [](std::size_t, std::int64_t) { return 1.0; });
  EXPECT_EQ(flat, (std::vector<std::int64_t>{2, 1}));
  const auto tilted =
      quantize_allocation(targets, caps, 3, [](std::size_t k, std::int64_t) { return k == 1 ? 2.0 : 1.0; });
  EXPECT_EQ(tilted, (std::vector<std::int64_t>{1, 2}));
}

TEST(Quantize, RespectsCapsAndZeroGain) {
  const std::vector<double> targets{0.0, 0.0, 0.0};
  const std::vector<std::int64_t> caps{1, 2, 10};
  const auto zero = [](std::size_t, std::int64_t) { return 0.0; };
  EXPECT_EQ(quantize_allocation(targets, caps, 5, zero), (std::vector<std::int64_t>{1, 2, 2}));
  EXPECT_EQ(quantize_allocation(targets, caps, 5, zero, false), (std::vector<std::int64_t>{0, 0, 0}));
  EXPECT_EQ(quantize_allocation(targets, caps, 0, zero), (std::vector<std::int64_t>{0, 0, 0}));
  const std::vector<std::int64_t> tight{1, 1, 1};
  EXPECT_EQ(quantize_allocation(targets, tight, 9, [](std::size_t, std::int64_t) { return 1.0; }),
            (std::vector<std::int64_t>{1, 1, 1}));
}

TEST(BruteForce, RefusesLargeSearch) {
  const auto spec = gen_k5_cycle_instance(0.001).spec;  // 1000 units over 4 neighbors
  EXPECT_THROW(brute_force_best_response(spec, FrequencyProfile(spec.graph()), 0), InstanceTooLarge);
}

namespace {

RandomInstanceOptions small_options() {
  RandomInstanceOptions opt;
  opt.n = 6;
  opt.edge_prob = 0.5;
  opt.max_degree = 3;
  opt.eta = 0.1;
  opt.min_budget_units = 0;
  opt.max_budget_units = 12;
  return opt;
}

}  // namespace

TEST(BestResponseProperty, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(31);
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 60; ++k) {
    const auto spec = gen_random_instance(small_options(), 500 + k).spec;
    for (int rep = 0; rep < 3; ++rep) {
      const auto p = random_profile(spec, rng);
      for (PlayerId i = 0; i < spec.num_players(); ++i) {
        const auto br = best_response(spec, p, i);
        const auto bf = brute_force_best_response(spec, p, i);
        EXPECT_GE(br.realized_utility, bf.utility - 1e-9 * std::max(1.0, bf.utility));
        worst = std::max(worst, bf.utility - br.realized_utility);
      }
    }
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(BestResponseProperty, ResponseIsFeasibleAndNotWorse) {
  std::mt19937_64 rng(32);
  for (std::uint64_t k = 0; k < 40; ++k) {
    RandomInstanceOptions opt;
    opt.n = 12;
    const auto spec = gen_random_instance(opt, 700 + k).spec;
    const auto p = random_profile(spec, rng);
    for (PlayerId i = 0; i < spec.num_players(); ++i) {
      const auto br = best_response(spec, p, i);
      const auto q = apply_response(spec, p, i, br);
      EXPECT_FALSE(find_infeasible_player(spec, q).has_value());
      EXPECT_NEAR(player_utility(spec, q, i), br.realized_utility, 1e-12);
      EXPECT_GE(br.realized_utility, player_utility(spec, p, i) - 1e-12);
      EXPECT_TRUE(is_best_response(spec, q, i, kDefaultUtilityTol).is_best);
      EXPECT_EQ(player_slack(spec, q, i), br.slack_after);
    }
  }
}

TEST(BestResponseProperty, NoSlackWhileOutProposed) {
  std::mt19937_64 rng(33);
  for (std::uint64_t k = 0; k < 40; ++k) {
    RandomInstanceOptions opt;
    opt.n = 10;
    const auto spec = gen_random_instance(opt, 900 + k).spec;
    const auto p = random_profile(spec, rng);
    for (PlayerId i = 0; i < spec.num_players(); ++i) {
      const auto q = apply_response(spec, p, i, best_response(spec, p, i));
      EXPECT_FALSE(player_slack(spec, q, i) >= 1 && !has_empty_win_set(spec, q, i))
          << "instance " << k << " player " << i;
    }
  }
}

TEST(BestResponseProperty, UtilityBoundedByIdeal) {
  std::mt19937_64 rng(34);
  for (std::uint64_t k = 0; k < 30; ++k) {
    const auto spec = gen_random_instance({}, 1100 + k).spec;
    const auto p = random_profile(spec, rng);
    for (PlayerId i = 0; i < spec.num_players(); ++i)
      EXPECT_LE(best_response(spec, p, i).realized_utility, ideal_allocation(spec, i).opt_value + 1e-9);
  }
}
