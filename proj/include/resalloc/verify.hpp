#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "resalloc/analysis.hpp"
#include "resalloc/dynamics.hpp"
#include "resalloc/experiment.hpp"
#include "resalloc/generators.hpp"
#include "resalloc/ranking.hpp"

namespace resalloc {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Each check either passes or explains the first failure in `detail`.
namespace checks {

using detail::concat;

using MatchDownFn = std::function<RealProfile(const GameSpec&, const RealProfile&)>;

inline MatchDownFn default_match_down() {
  return [](const GameSpec& s, const RealProfile& p) { return match_down(s, p); };
}

template <typename Fn>
CheckResult timed(std::string name, Fn&& body) {
  CheckResult r;
  r.name = std::move(name);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// Five-player simultaneous cycle: period 2 from the weight-matching start, the
// first step flips every +eps/-eps entry, agreed amounts are unchanged.
inline CheckResult k5_cycle() {
  return timed("k5-cycle", [](CheckResult& r) {
    const double eps = 0.05;
    const auto doc = gen_k5_cycle_instance(eps);
    const GameSpec& spec = doc.spec;
    const Graph& g = spec.graph();
    DynamicsConfig cfg;
    cfg.mode = DynamicsMode::simultaneous;
    cfg.max_rounds = 100;
    const auto res = run_simultaneous(spec, *doc.suggested_init, cfg);
    const auto& recs = res.trace.records();
    if (res.status.kind != TerminationStatus::Kind::cycle_detected || res.status.period != 2 ||
        res.status.start != 0 || recs.size() < 3) {
      r.detail = concat("status ", status_name(res.status.kind), " start ", res.status.start, " period ",
                        res.status.period);
      return;
    }
    const auto& f0 = *recs[0].profile;
    const auto& f1 = *recs[1].profile;
    const auto& f2 = *recs[2].profile;
    // Row i of F(1): 1/4 - eps towards i+1, i+2 and 1/4 + eps towards i+3, i+4.
    for (ArcId a = 0; a < g.num_arcs(); ++a) {
      const std::size_t step = (g.arc_head(a) + 5 - g.arc_tail(a)) % 5;
      const std::int64_t expected = step <= 2 ? 4 : 6;
      if (f1[a] != expected) {
        r.detail = concat("F(1) entry ", g.arc_tail(a), "->", g.arc_head(a), " is ", f1[a], " expected ", expected);
        return;
      }
      if (agreed(f1, g, a) != agreed(f0, g, a)) {
        r.detail = "agreed amounts changed between F(0) and F(1)";
        return;
      }
    }
    if (!(f2 == f0)) {
      r.detail = "F(2) differs from F(0)";
      return;
    }
    r.passed = true;
    r.detail = concat("cycle start ", res.status.start, " period ", res.status.period);
  });
}

inline RandomInstanceOptions convergence_options(std::mt19937_64& rng) {
  RandomInstanceOptions opt;
  opt.n = 2 + uniform_index(rng, 19);
  opt.edge_prob = 0.4;
  opt.eta = 0.01;
  opt.min_budget_units = opt.max_budget_units = 100;
  opt.behaviors = BehaviorMix::mixed;
  return opt;
}

// Sequential dynamics from random starts always converge, total slack never
// rises and the empty-win-set players only grow while slack is constant.
inline CheckResult sequential_convergence(std::size_t instances) {
  return timed("sequential-convergence", [instances](CheckResult& r) {
    std::mt19937_64 rng = make_rng(2024, RngStream::instance);
    std::size_t moves = 0;
    for (std::size_t k = 0; k < instances; ++k) {
      const auto doc = gen_random_instance(convergence_options(rng), 1000 + k);
      const GameSpec& spec = doc.spec;
      DynamicsConfig cfg;
      cfg.order = k % 2 ? OrderPolicy::random_seeded(k) : OrderPolicy::round_robin();
      cfg.max_rounds = 1'000'000;
      cfg.check_invariants = true;
      cfg.record_trace = true;
      const auto res = run_sequential(spec, init_profile(spec, InitPolicy::random_feasible(k)), cfg);
      if (res.status.kind != TerminationStatus::Kind::converged) {
        r.detail = concat("instance ", k, " ended with ", status_name(res.status.kind));
        return;
      }
      const auto& recs = res.trace.records();
      for (std::size_t t = 1; t < recs.size(); ++t)
        if (recs[t].total_slack > recs[t - 1].total_slack) {
          r.detail = concat("instance ", k, ": slack rose at round ", t);
          return;
        }
      // V1 monotone on the constant-slack suffix.
      std::size_t s = recs.size() - 1;
      while (s > 0 && recs[s - 1].total_slack == recs.back().total_slack) --s;
      for (std::size_t t = s + 1; t < recs.size(); ++t) {
        const auto& a = recs[t - 1].v1_set;
        const auto& b = recs[t].v1_set;
        if (!std::includes(b.begin(), b.end(), a.begin(), a.end())) {
          r.detail = concat("instance ", k, ": V1 shrank at round ", t);
          return;
        }
      }
      if (classify_equilibrium(spec, res.final_profile, cfg.tol).kind == EquilibriumClass::Kind::not_equilibrium) {
        r.detail = concat("instance ", k, ": converged profile is not an equilibrium");
        return;
      }
      moves += res.status.t;
    }
    r.passed = true;
    r.detail = concat(instances, " instances converged, ", moves, " moves in total");
  });
}

// Every best-response move in a ranking game changes the potential by
// 2 R(i) NR(i) times the mover's gain.
inline CheckResult potential_identity(std::size_t instances) {
  return timed("potential-identity", [instances](CheckResult& r) {
    std::mt19937_64 rng = make_rng(77, RngStream::instance);
    std::size_t moves = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k < instances; ++k) {
      RandomInstanceOptions opt;
      opt.n = 3 + uniform_index(rng, 13);
      opt.edge_prob = 0.5;
      opt.eta = 0.01;
      opt.ranked = true;
      opt.symmetric_utilities = true;
      opt.behaviors = BehaviorMix::mixed;
      const auto doc = gen_random_instance(opt, 5000 + k);
      const GameSpec& spec = doc.spec;
      const auto ranking = RankingSystem::make(spec.graph(), *doc.ranking);
      DynamicsConfig cfg;
      cfg.order = OrderPolicy::random_seeded(k);
      cfg.ranking = ranking;
      const auto res = run_sequential(spec, init_profile(spec, InitPolicy::random_feasible(k)), cfg);
      if (res.status.kind != TerminationStatus::Kind::converged) {
        r.detail = concat("instance ", k, " did not converge");
        return;
      }
      const auto& recs = res.trace.records();
      for (std::size_t t = 1; t < recs.size(); ++t) {
        const PlayerId i = *recs[t].mover;
        const double du = player_utility(spec, *recs[t].profile, i) - player_utility(spec, *recs[t - 1].profile, i);
        const double dphi = *recs[t].potential - *recs[t - 1].potential;
        const double expected = 2.0 * static_cast<double>(ranking.rank[i] * ranking.neighbor_rank[i]) * du;
        const double err = std::abs(dphi - expected);
        worst = std::max(worst, err / std::max(1.0, std::abs(dphi)));
        if (err > 1e-9 * std::max(1.0, std::abs(dphi))) {
          r.detail = concat("instance ", k, " round ", t, ": dPhi ", dphi, " vs ", expected);
          return;
        }
        if (dphi < 0.0) {
          r.detail = concat("instance ", k, " round ", t, ": potential decreased by ", -dphi);
          return;
        }
        ++moves;
      }
    }
    r.passed = true;
    r.detail = concat(moves, " moves checked, worst relative error ", worst);
  });
}

inline GameSpec triangle_instance() {
  const auto u = UtilitySpec::capped_quadratic(1.0);
  return GameSpec(3, 0.05, {1.0, 1.0, 1.0}, std::vector<Behavior>(3, Behavior::pessimistic),
                  {{0, 1, 0.5, 0.5, u, u}, {0, 2, 0.5, 0.5, u, u}, {1, 2, 0.5, 0.5, u, u}});
}

// The optimum, matched down, is a pessimistic equilibrium with the same
// welfare; the optimizer agrees with exhaustive search on the triangle.
inline CheckResult price_of_stability(std::size_t instances, const MatchDownFn& md = default_match_down()) {
  return timed("price-of-stability", [instances, &md](CheckResult& r) {
    std::mt19937_64 rng = make_rng(31, RngStream::instance);
    for (std::size_t k = 0; k < instances; ++k) {
      RandomInstanceOptions opt;
      opt.n = 3 + uniform_index(rng, 10);
      opt.edge_prob = 0.4;
      opt.eta = 0.01;
      const auto doc = gen_random_instance(opt, 9000 + k);
      const GameSpec& spec = doc.spec;
      const auto best = global_optimum(spec);
      const RealProfile matched = md(spec, to_profile(spec, best.profile));
      const auto cls = classify_equilibrium(spec, matched, 1e-9);
      if (cls.kind != EquilibriumClass::Kind::pessimistic) {
        r.detail = concat("instance ", k, ": matched optimum classified ", equilibrium_name(cls.kind));
        return;
      }
      const double sw = social_welfare(spec, matched);
      if (std::abs(sw - best.welfare) > 1e-6 * std::max(1.0, std::abs(best.welfare))) {
        r.detail = concat("instance ", k, ": welfare ", sw, " vs optimum ", best.welfare);
        return;
      }
    }
    const GameSpec tri = triangle_instance();
    const auto opt = global_optimum(tri);
    const auto oracle = brute_force_optimum(tri);
    if (std::abs(opt.welfare - oracle.welfare) > 1e-6 * std::abs(oracle.welfare)) {
      r.detail = concat("triangle: optimizer ", opt.welfare, " vs exhaustive ", oracle.welfare);
      return;
    }
    for (std::size_t e = 0; e < 3; ++e)
      if (std::abs(opt.profile.x[e] - oracle.profile.x[e]) > 1.0) {
        r.detail = concat("triangle edge ", e, ": ", opt.profile.x[e], " vs ", oracle.profile.x[e]);
        return;
      }
    r.passed = true;
    r.detail = concat(instances, " optima matched down; triangle welfare ", opt.welfare);
  });
}

// Closed-form ratio, its growth as eps halves, the emitted profiles' welfare
// and the bad profile's equilibrium status.
inline CheckResult poa_divergence() {
  return timed("poa-divergence", [](CheckResult& r) {
    if (poa_grid_ratio(0.1, 1.0) != 1.75) {
      r.detail = concat("ratio at eps 0.1 is ", poa_grid_ratio(0.1, 1.0));
      return;
    }
    const double eps_list[] = {0.1, 0.05, 0.025, 0.0125};
    double prev = 0.0;
    std::string ratios;
    for (double eps : eps_list) {
      const double ratio = poa_grid_ratio(eps, 1.0);
      if (!(ratio > prev)) {
        r.detail = concat("ratio does not grow at eps ", eps);
        return;
      }
      prev = ratio;
      ratios += concat(ratios.empty() ? "" : " ", ratio);

      const auto inst = gen_poa_grid_instance(5, 5, eps, 1.0);
      const GameSpec& spec = inst.doc.spec;
      const auto closed = poa_grid_welfare_per_node(eps, 1.0);
      const double n = static_cast<double>(spec.num_players());
      const double good = social_welfare(spec, inst.f_good);
      const double bad = social_welfare(spec, inst.f_bad);
      if (std::abs(good - n * closed.good) > 1e-9 || std::abs(bad - n * closed.bad) > 1e-9) {
        r.detail = concat("eps ", eps, ": welfare ", good, "/", bad, " vs ", n * closed.good, "/", n * closed.bad);
        return;
      }
      const auto cls = classify_equilibrium(spec, inst.f_bad, 1e-9);
      if (cls.kind != EquilibriumClass::Kind::pessimistic) {
        r.detail = concat("eps ", eps, ": f_bad classified ", equilibrium_name(cls.kind));
        return;
      }
    }
    r.passed = true;
    r.detail = "ratios " + ratios;
  });
}

inline double oracle_tolerance(const GameSpec& spec, PlayerId i) {
  const Graph& g = spec.graph();
  double m = 0.0;
  for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a) m = std::max(m, spec.weight(a) * marginal(spec.utility(a), 0.0));
  return static_cast<double>(g.degree(i)) * spec.eta() * m;
}

// Solver against exhaustive search on small instances.
inline CheckResult best_response_oracle(std::size_t instances) {
  return timed("best-response-oracle", [instances](CheckResult& r) {
    std::mt19937_64 rng = make_rng(11, RngStream::instance);
    std::size_t checked = 0;
    double worst_gap = 0.0;
    for (std::size_t k = 0; k < instances; ++k) {
      RandomInstanceOptions opt;
      opt.n = 2 + uniform_index(rng, 7);
      opt.edge_prob = 0.6;
      opt.max_degree = 3;
      opt.eta = 0.1;
      opt.min_budget_units = 0;
      opt.max_budget_units = 12;
      const auto doc = gen_random_instance(opt, 700 + k);
      const GameSpec& spec = doc.spec;
      for (std::uint64_t p = 0; p < 4; ++p) {
        const auto profile = p == 0 ? FrequencyProfile(spec.graph())
                                    : init_profile(spec, InitPolicy::random_feasible(k * 10 + p));
        for (PlayerId i = 0; i < spec.num_players(); ++i) {
          const double fast = best_response(spec, profile, i).realized_utility;
          const double exact = brute_force_best_response(spec, profile, i).utility;
          const double tau = oracle_tolerance(spec, i);
          worst_gap = std::max(worst_gap, std::abs(fast - exact));
          if (!(std::abs(fast - exact) <= tau)) {
            r.detail = concat("instance ", k, " player ", i, ": solver ", fast, " vs exhaustive ", exact);
            return;
          }
          ++checked;
        }
      }
    }
    r.passed = true;
    r.detail = concat(checked, " best responses checked, largest gap ", worst_gap);
  });
}

inline GameSpec geometry_instance(Behavior b, UtilityFamily family) {
  RandomInstanceOptions opt;
  opt.n = 10;
  opt.edge_prob = 0.4;
  opt.eta = 0.01;
  opt.families = {family};
  opt.behaviors = b == Behavior::optimistic ? BehaviorMix::optimistic : BehaviorMix::pessimistic;
  return gen_random_instance(opt, 4242).spec;
}

// Pessimistic equilibria form a convex set; an optimistic equilibrium is
// joined to its matched-down version through equilibria.
inline CheckResult equilibrium_geometry(std::size_t pairs, std::size_t optimistic_count) {
  return timed("equilibrium-geometry", [pairs, optimistic_count](CheckResult& r) {
    const double tol = 1e-9;
    {
      const GameSpec spec = geometry_instance(Behavior::pessimistic, UtilityFamily::sqrt);
      std::vector<FrequencyProfile> ne;
      for (std::size_t s = 0; s <= pairs; ++s) {
        DynamicsConfig cfg;
        cfg.order = OrderPolicy::random_seeded(s);
        cfg.record_trace = false;
        const auto res = run_sequential(spec, init_profile(spec, InitPolicy::random_feasible(s)), cfg);
        if (res.status.kind != TerminationStatus::Kind::converged) {
          r.detail = concat("seed ", s, " did not converge");
          return;
        }
        ne.push_back(match_down(spec, res.final_profile));
      }
      for (std::size_t p = 0; p < pairs; ++p) {
        if (ne[p] == ne[p + 1]) {
          r.detail = concat("seeds ", p, " and ", p + 1, " reached the same equilibrium");
          return;
        }
        for (int a = 1; a <= 9; ++a) {
          const auto mix = convex_combine(spec, ne[p], ne[p + 1], a / 10.0);
          const auto cls = classify_equilibrium(spec, mix, tol);
          if (cls.kind != EquilibriumClass::Kind::pessimistic) {
            r.detail = concat("pair ", p, " alpha ", a / 10.0, ": ", equilibrium_name(cls.kind));
            return;
          }
        }
      }
    }

    // Linear utilities keep grid equilibria exact in the continuous game.
    const GameSpec spec = geometry_instance(Behavior::optimistic, UtilityFamily::linear);
    std::size_t found = 0;
    for (std::uint64_t s = 0; s < 2000 && found < optimistic_count; ++s) {
      DynamicsConfig cfg;
      cfg.order = OrderPolicy::random_seeded(s);
      cfg.record_trace = false;
      const auto res = run_sequential(spec, init_profile(spec, InitPolicy::random_feasible(s)), cfg);
      if (res.status.kind != TerminationStatus::Kind::converged) continue;
      const RealProfile f = to_real(res.final_profile);
      if (classify_equilibrium(spec, f, tol).kind != EquilibriumClass::Kind::optimistic) continue;
      const RealProfile down = match_down(spec, f);
      for (int a = 1; a <= 9; ++a) {
        const auto mix = convex_combine(spec, f, down, a / 10.0);
        const auto cls = classify_equilibrium(spec, mix, tol);
        if (cls.kind == EquilibriumClass::Kind::not_equilibrium) {
          r.detail = concat("optimistic seed ", s, " alpha ", a / 10.0, ": player ", *cls.witness, " gains ",
                            cls.improvement);
          return;
        }
      }
      ++found;
    }
    if (found < optimistic_count) {
      r.detail = concat("only ", found, " optimistic equilibria found");
      return;
    }
    r.passed = true;
    r.detail = concat(pairs, " pessimistic pairs, ", found, " optimistic paths");
  });
}

struct ExperimentCheckResult {
  CheckResult check;
  PairedReport report;
};

// Optimistic players end closer to the optimum, with less spread, and both
// distributions have a single mode.
inline ExperimentCheckResult grid_experiment(std::size_t runs) {
  ExperimentCheckResult out;
  out.check = timed("grid-experiment", [&](CheckResult& r) {
    ExperimentConfig cfg;
    cfg.runs = runs;
    out.report = run_paired_experiment(cfg);
    const auto& o = out.report.optimistic;
    const auto& p = out.report.pessimistic;
    r.detail = concat("mu_o ", o.mean, " mu_p ", p.mean, " sigma_o ", o.stddev, " sigma_p ", p.stddev, " modes ",
                      o.mode_count, "/", p.mode_count, " non-converged ", o.non_converged_count, "/",
                      p.non_converged_count, " (reference mu_o 0.908 mu_p 0.806 sigma_o 0.011 sigma_p 0.017)");
    double top = 0.0;
    for (const auto* rep : {&o, &p})
      for (const auto& run : rep->runs) top = std::max(top, run.ratio);
    r.passed = o.mean - p.mean >= 0.03 && o.stddev <= p.stddev && o.mode_count == 1 && p.mode_count == 1 &&
               o.non_converged_count == 0 && p.non_converged_count == 0 && top <= 1.0 + 1e-6;
  });
  return out;
}

}  // namespace checks

/// Regression suite over the main results. Sizes are reduced relative to the
/// acceptance binary so that it runs in a few seconds.
inline std::vector<CheckResult> verify_suite(
    const checks::MatchDownFn& md = checks::default_match_down()) {
  return {checks::k5_cycle(),
          checks::poa_divergence(),
          checks::potential_identity(10),
          checks::price_of_stability(5, md),
          checks::best_response_oracle(30),
          checks::equilibrium_geometry(10, 5)};
}

}  // namespace resalloc
