#pragma once

#include <random>
#include <vector>

#include "resalloc/resalloc.hpp"

namespace testing_support {

using namespace resalloc;

inline GameSpec single_edge(double eta, double b0, double b1, UtilitySpec u, Behavior behavior = Behavior::pessimistic,
                            double w01 = 1.0, double w10 = 1.0) {
  return GameSpec(2, eta, {b0, b1}, {behavior, behavior}, {{0, 1, w01, w10, u, u}});
}

// Path 0 - 1 - 2 with the middle player splitting its weight.
inline GameSpec path3(double eta, double beta, UtilitySpec u, double w10 = 0.5) {
  return GameSpec(3, eta, {beta, beta, beta}, std::vector<Behavior>(3, Behavior::pessimistic),
                  {{0, 1, 1.0, w10, u, u}, {1, 2, 1.0 - w10, 1.0, u, u}});
}

// Arbitrary feasible profile: every player spends a random share of its
// budget over random splits.
inline FrequencyProfile random_profile(const GameSpec& spec, std::mt19937_64& rng) {
  const Graph& g = spec.graph();
  FrequencyProfile p(g);
  for (PlayerId i = 0; i < spec.num_players(); ++i) {
    std::int64_t left = spec.budget_units(i) == 0 ? 0 : static_cast<std::int64_t>(rng() % (spec.budget_units(i) + 1));
    for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a) {
      const std::int64_t x = left == 0 ? 0 : static_cast<std::int64_t>(rng() % (left + 1));
      p[a] = x;
      left -= x;
    }
  }
  return p;
}

inline FrequencyProfile profile_from_rows(const GameSpec& spec, const std::vector<std::vector<std::int64_t>>& rows) {
  const Graph& g = spec.graph();
  FrequencyProfile p(g);
  for (ArcId a = 0; a < g.num_arcs(); ++a) p[a] = rows[g.arc_tail(a)][g.arc_head(a)];
  return p;
}

}  // namespace testing_support
