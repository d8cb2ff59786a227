#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "resalloc/game.hpp"

namespace resalloc {

// Global social ranks R(i) >= 1 and the neighborhood sums NR(i).
struct RankingSystem {
  std::vector<std::int64_t> rank;
  std::vector<std::int64_t> neighbor_rank;

  static RankingSystem make(const Graph& g, std::vector<std::int64_t> ranks) {
    if (ranks.size() != g.num_players()) throw std::invalid_argument("one rank per player is required");
    for (auto r : ranks)
      if (r < 1) throw std::invalid_argument("ranks must be positive integers");
    RankingSystem out{std::move(ranks), std::vector<std::int64_t>(g.num_players(), 0)};
    for (PlayerId i = 0; i < g.num_players(); ++i)
      for (PlayerId j : g.neighbors(i)) out.neighbor_rank[i] += out.rank[j];
    return out;
  }
};

// Weights w_ij = R(j) / NR(i) kept as exact fractions per arc.
struct RankingWeights {
  std::vector<std::int64_t> numerator;
  std::vector<std::int64_t> denominator;
  std::vector<PlayerId> isolated;  // players without neighbors get no weights

  double value(ArcId a) const { return static_cast<double>(numerator[a]) / static_cast<double>(denominator[a]); }
};

inline RankingWeights global_ranking_weights(const Graph& g, const RankingSystem& r) {
  RankingWeights w;
  w.numerator.resize(g.num_arcs());
  w.denominator.resize(g.num_arcs());
  for (PlayerId i = 0; i < g.num_players(); ++i) {
    if (g.degree(i) == 0) {
      w.isolated.push_back(i);
      continue;
    }
    for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a) {
      w.numerator[a] = r.rank[g.arc_head(a)];
      w.denominator[a] = r.neighbor_rank[i];
    }
  }
  return w;
}

/// Checks the hypotheses under which the potential exists: weights induced by
/// the ranking and u_ij == u_ji on every edge. Throws std::invalid_argument
/// otherwise.
inline void require_potential_game(const GameSpec& spec, const RankingSystem& r) {
  const Graph& g = spec.graph();
  if (r.rank.size() != spec.num_players()) throw std::invalid_argument("ranking does not match the game");
  for (const auto& e : spec.edges())
    if (!(e.u_ij == e.u_ji))
      throw std::invalid_argument(detail::concat("asymmetric utilities on edge ", e.i, "-", e.j));
  for (ArcId a = 0; a < g.num_arcs(); ++a) {
    const double expected =
        static_cast<double>(r.rank[g.arc_head(a)]) / static_cast<double>(r.neighbor_rank[g.arc_tail(a)]);
    if (std::abs(spec.weight(a) - expected) > 1e-12)
      throw std::invalid_argument(detail::concat("weight of arc ", g.arc_tail(a), "->", g.arc_head(a),
                                                 " is not induced by the ranking"));
  }
}

/// Weighted potential sum_i R(i) NR(i) u_i(f), evaluated as
/// sum_i R(i) sum_j R(j) u_ij(f*_ij).
template <typename Amount>
double potential_value(const GameSpec& spec, const RankingSystem& r, const BasicProfile<Amount>& profile) {
  require_potential_game(spec, r);
  const Graph& g = spec.graph();
  double phi = 0.0;
  for (PlayerId i = 0; i < spec.num_players(); ++i) {
    double inner = 0.0;
    for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a)
      inner += static_cast<double>(r.rank[g.arc_head(a)]) *
               eval(spec.utility(a), static_cast<double>(agreed(profile, g, a)) * spec.eta());
    phi += static_cast<double>(r.rank[i]) * inner;
  }
  return phi;
}

}  // namespace resalloc
