#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "resalloc/dynamics.hpp"
#include "resalloc/game.hpp"
#include "resalloc/instance_io.hpp"
#include "resalloc/ranking.hpp"
#include "resalloc/utility.hpp"

namespace resalloc {

namespace detail {

inline std::vector<double> budgets_from_units(std::size_t n, std::int64_t units, double eta) {
  return std::vector<double>(n, static_cast<double>(units) * eta);
}

inline std::int64_t exact_units(double amount, double eta, const char* what) {
  const double units = amount / eta;
  const double rounded = std::round(units);
  if (std::abs(units - rounded) > 1e-9 * std::max(1.0, rounded))
    throw std::invalid_argument(concat(what, " must be a multiple of eta"));
  return static_cast<std::int64_t>(rounded);
}

// Torus edges: right and down neighbor of every cell.
inline std::vector<std::pair<PlayerId, PlayerId>> torus_pairs(std::size_t width, std::size_t height) {
  std::vector<std::pair<PlayerId, PlayerId>> pairs;
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      const PlayerId i = r * width + c;
      pairs.emplace_back(i, r * width + (c + 1) % width);
      pairs.emplace_back(i, ((r + 1) % height) * width + c);
    }
  return pairs;
}

}  // namespace detail

/// width x height grid with wrap-around, so every node has degree 4. Each
/// directed weight is drawn uniform(0, 1) and normalized per node.
inline InstanceDocument gen_torus_grid(std::size_t width, std::size_t height, double beta, double eta,
                                       std::uint64_t weight_seed, UtilitySpec utility = UtilitySpec::sqrt(),
                                       Behavior behavior = Behavior::pessimistic) {
  if (width < 3 || height < 3) throw std::invalid_argument("torus sides must be at least 3");
  const std::size_t n = width * height;
  const std::int64_t units = detail::exact_units(beta, eta, "budget");
  const auto pairs = detail::torus_pairs(width, height);
  const Graph g(n, pairs);

  std::mt19937_64 rng = make_rng(weight_seed, RngStream::weights);
  std::vector<double> raw(g.num_arcs());
  for (auto& w : raw) w = uniform01(rng);
  std::vector<double> w(g.num_arcs());
  for (PlayerId i = 0; i < n; ++i) {
    double sum = 0.0;
    for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a) sum += raw[a];
    for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a) w[a] = raw[a] / sum;
  }

  std::vector<EdgeSpec> edges;
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const auto [fwd, bwd] = g.edge_arcs(e);
    edges.push_back({pairs[e].first, pairs[e].second, w[fwd], w[bwd], utility, utility});
  }
  return {GameSpec(n, eta, detail::budgets_from_units(n, units, eta), std::vector<Behavior>(n, behavior),
                   std::move(edges)),
          std::nullopt, std::nullopt};
}

/// Five players on a complete graph whose simultaneous best responses cycle
/// with period 2. eta = eps, budgets 1, u(x) = x(1 - x), all optimistic. The
/// suggested start proposes exactly the weights.
inline InstanceDocument gen_k5_cycle_instance(double eps) {
  if (!(eps > 0.0 && eps < 0.25)) throw std::invalid_argument("eps must lie in (0, 1/4)");
  const double eta = eps;
  const std::int64_t quarter = detail::exact_units(0.25, eta, "1/4");
  const std::int64_t budget = 4 * quarter;
  const std::size_t n = 5;
  auto weight = [&](PlayerId i, PlayerId j) {
    const std::size_t step = (j + n - i) % n;
    return step <= 2 ? 0.25 + eps : 0.25 - eps;
  };
  auto units = [&](PlayerId i, PlayerId j) {
    const std::size_t step = (j + n - i) % n;
    return step <= 2 ? quarter + 1 : quarter - 1;
  };
  const auto u = UtilitySpec::capped_quadratic(1.0);
  std::vector<EdgeSpec> edges;
  for (PlayerId i = 0; i < n; ++i)
    for (PlayerId j = i + 1; j < n; ++j) edges.push_back({i, j, weight(i, j), weight(j, i), u, u});
  GameSpec spec(n, eta, detail::budgets_from_units(n, budget, eta), std::vector<Behavior>(n, Behavior::optimistic),
                std::move(edges));
  const Graph& g = spec.graph();
  FrequencyProfile init(g);
  for (ArcId a = 0; a < g.num_arcs(); ++a) init[a] = units(g.arc_tail(a), g.arc_head(a));
  return {std::move(spec), std::nullopt, std::move(init)};
}

struct PoaGridInstance {
  InstanceDocument doc;
  FrequencyProfile f_good;
  FrequencyProfile f_bad;
};

/// Torus with heavy vertical weights 1/2 - eps and light horizontal weights
/// eps, u(x) = x(beta - x), eta = eps. f_good spends beta/2 - eps vertically
/// and eps horizontally; f_bad does the reverse and is still an equilibrium.
inline PoaGridInstance gen_poa_grid_instance(std::size_t width, std::size_t height, double eps, double beta) {
  if (width < 3 || height < 3) throw std::invalid_argument("torus sides must be at least 3");
  if (!(eps > 0.0) || !(eps < 0.5) || !(eps < 0.5 * beta))
    throw std::invalid_argument("eps must lie in (0, min(1/2, beta/2))");
  const double eta = eps;
  const std::int64_t budget = detail::exact_units(beta, eta, "beta");
  if (budget % 2 != 0) throw std::invalid_argument("beta/2 must be a multiple of eps");
  const std::int64_t heavy = budget / 2 - 1;  // (beta/2 - eps) / eta
  const std::size_t n = width * height;
  const auto pairs = detail::torus_pairs(width, height);
  const auto u = UtilitySpec::capped_quadratic(beta);

  std::vector<EdgeSpec> edges;
  std::vector<char> vertical;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const bool is_vertical = k % 2 == 1;  // second pair of each cell points down
    const double w = is_vertical ? 0.5 - eps : eps;
    edges.push_back({pairs[k].first, pairs[k].second, w, w, u, u});
    vertical.push_back(is_vertical);
  }
  GameSpec spec(n, eta, detail::budgets_from_units(n, budget, eta), std::vector<Behavior>(n, Behavior::pessimistic),
                std::move(edges));
  const Graph& g = spec.graph();
  PoaGridInstance out{{spec, std::nullopt, std::nullopt}, FrequencyProfile(g), FrequencyProfile(g)};
  for (ArcId a = 0; a < g.num_arcs(); ++a) {
    const bool v = vertical[g.arc_edge(a)];
    out.f_good[a] = v ? heavy : 1;
    out.f_bad[a] = v ? 1 : heavy;
  }
  return out;
}

enum class BehaviorMix { pessimistic, optimistic, mixed };

struct RandomInstanceOptions {
  std::size_t n = 10;
  double edge_prob = 0.4;
  std::size_t max_degree = 0;  // 0: unbounded
  double eta = 0.01;
  std::int64_t min_budget_units = 100;
  std::int64_t max_budget_units = 100;
  std::vector<UtilityFamily> families{UtilityFamily::linear, UtilityFamily::sqrt, UtilityFamily::log1p,
                                      UtilityFamily::power, UtilityFamily::capped_quadratic};
  bool symmetric_utilities = false;  // u_ij == u_ji on every edge
  BehaviorMix behaviors = BehaviorMix::mixed;
  bool ranked = false;  // weights induced by random ranks in [1, max_rank]
  std::int64_t max_rank = 5;
};

namespace detail {

inline UtilitySpec random_utility(std::mt19937_64& rng, const std::vector<UtilityFamily>& families,
                                  double typical_amount) {
  const auto f = families[uniform_index(rng, families.size())];
  switch (f) {
    case UtilityFamily::linear: return UtilitySpec::linear();
    case UtilityFamily::sqrt: return UtilitySpec::sqrt();
    case UtilityFamily::log1p: return UtilitySpec::log1p();
    case UtilityFamily::power: return UtilitySpec::power(0.2 + 0.8 * uniform01(rng));
    case UtilityFamily::capped_quadratic:
      return UtilitySpec::capped_quadratic(typical_amount * (0.5 + 1.5 * uniform01(rng)));
  }
  return UtilitySpec::sqrt();
}

}  // namespace detail

/// Erdos-Renyi style instance for property tests.
inline InstanceDocument gen_random_instance(const RandomInstanceOptions& opt, std::uint64_t seed) {
  if (opt.families.empty()) throw std::invalid_argument("at least one utility family is required");
  if (opt.min_budget_units < 0 || opt.max_budget_units < opt.min_budget_units)
    throw std::invalid_argument("bad budget range");
  std::mt19937_64 rng = make_rng(seed, RngStream::instance);
  const std::size_t n = opt.n;

  std::vector<std::pair<PlayerId, PlayerId>> pairs;
  std::vector<std::size_t> deg(n, 0);
  for (PlayerId i = 0; i < n; ++i)
    for (PlayerId j = i + 1; j < n; ++j) {
      if (uniform01(rng) >= opt.edge_prob) continue;
      if (opt.max_degree != 0 && (deg[i] >= opt.max_degree || deg[j] >= opt.max_degree)) continue;
      pairs.emplace_back(i, j);
      ++deg[i];
      ++deg[j];
    }
  const Graph g(n, pairs);

  std::vector<double> budgets(n);
  double mean_budget = 0.0;
  for (PlayerId i = 0; i < n; ++i) {
    const auto span = static_cast<std::uint64_t>(opt.max_budget_units - opt.min_budget_units + 1);
    const auto units = opt.min_budget_units + static_cast<std::int64_t>(uniform_index(rng, span));
    budgets[i] = static_cast<double>(units) * opt.eta;
    mean_budget += budgets[i] / static_cast<double>(std::max<std::size_t>(n, 1));
  }

  std::vector<Behavior> behaviors(n);
  for (auto& b : behaviors) {
    switch (opt.behaviors) {
      case BehaviorMix::pessimistic: b = Behavior::pessimistic; break;
      case BehaviorMix::optimistic: b = Behavior::optimistic; break;
      case BehaviorMix::mixed: b = (rng() & 1) ? Behavior::optimistic : Behavior::pessimistic; break;
    }
  }

  std::vector<double> w(g.num_arcs());
  std::optional<std::vector<std::int64_t>> ranking;
  if (opt.ranked) {
    std::vector<std::int64_t> ranks(n);
    for (auto& r : ranks) r = 1 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(opt.max_rank)));
    const auto rs = RankingSystem::make(g, ranks);
    const auto rw = global_ranking_weights(g, rs);
    for (ArcId a = 0; a < g.num_arcs(); ++a) w[a] = g.degree(g.arc_tail(a)) ? rw.value(a) : 0.0;
    ranking = std::move(ranks);
  } else {
    for (auto& x : w) x = 0.05 + uniform01(rng);
    for (PlayerId i = 0; i < n; ++i) {
      double sum = 0.0;
      for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a) sum += w[a];
      for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a) w[a] /= sum;
    }
  }

  const double typical = std::max(mean_budget, opt.eta) / 2.0;
  std::vector<EdgeSpec> edges;
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const auto [fwd, bwd] = g.edge_arcs(e);
    const UtilitySpec u_ij = detail::random_utility(rng, opt.families, typical);
    const UtilitySpec u_ji = opt.symmetric_utilities ? u_ij : detail::random_utility(rng, opt.families, typical);
    edges.push_back({pairs[e].first, pairs[e].second, w[fwd], w[bwd], u_ij, u_ji});
  }
  return {GameSpec(n, opt.eta, std::move(budgets), std::move(behaviors), std::move(edges)), std::move(ranking),
          std::nullopt};
}

}  // namespace resalloc
