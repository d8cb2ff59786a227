#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "resalloc/best_response.hpp"
#include "resalloc/dynamics.hpp"
#include "resalloc/game.hpp"
#include "resalloc/utility.hpp"

namespace resalloc {

/// Lowers every over-matched proposal to the neighbor's offer. Agreed amounts,
/// and hence welfare, are untouched; the result is matched on every edge.
template <typename Amount>
BasicProfile<Amount> match_down(const GameSpec& spec, const BasicProfile<Amount>& profile) {
  require_feasible(spec, profile);
  const Graph& g = spec.graph();
  BasicProfile<Amount> out = profile;
  for (ArcId a = 0; a < g.num_arcs(); ++a) out[a] = agreed(profile, g, a);
  return out;
}

/// alpha * a + (1 - alpha) * b, arc by arc.
template <typename A, typename B>
RealProfile convex_combine(const GameSpec& spec, const BasicProfile<A>& a, const BasicProfile<B>& b, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (a.size() != spec.graph().num_arcs() || b.size() != spec.graph().num_arcs())
    throw std::invalid_argument("profiles do not belong to the same game");
  require_feasible(spec, a);
  require_feasible(spec, b);
  std::vector<double> v(a.size());
  for (ArcId k = 0; k < a.size(); ++k)
    v[k] = alpha * static_cast<double>(a[k]) + (1.0 - alpha) * static_cast<double>(b[k]);
  return RealProfile(std::move(v));
}

/// Rounds a real profile down onto the eta grid. Matched edges stay matched
/// and feasibility is preserved.
inline FrequencyProfile snap_to_grid(const GameSpec& spec, const RealProfile& p) {
  require_feasible(spec, p);
  std::vector<std::int64_t> v(p.size());
  for (ArcId a = 0; a < p.size(); ++a) v[a] = static_cast<std::int64_t>(std::floor(p[a] + 1e-9));
  FrequencyProfile out(std::move(v));
  require_feasible(spec, out);
  return out;
}

// Agreed amount per edge (eta units) of a matched profile.
struct SymmetricProfile {
  std::vector<double> x;
};

inline RealProfile to_profile(const GameSpec& spec, const SymmetricProfile& s) {
  const Graph& g = spec.graph();
  if (s.x.size() != g.num_edges()) throw std::invalid_argument("symmetric profile does not match the game");
  RealProfile p(g);
  for (ArcId a = 0; a < g.num_arcs(); ++a) p[a] = s.x[g.arc_edge(a)];
  return p;
}

struct OptimizerConfig {
  double step_size = 1.0;  // initial step, in eta units per unit of gradient
  std::size_t max_iters = 20'000;
  double grad_tol = 1e-10;  // relative to the largest budget
  std::size_t projection_iters = 2'000;
  std::uint64_t seed = 0;  // 0: deterministic interior start, otherwise a random one
};

struct OptimumResult {
  SymmetricProfile profile;
  double welfare = 0.0;
  bool certified = false;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
};

namespace detail {

struct EdgeTerms {
  double w_ij, w_ji;
  UtilitySpec u_ij, u_ji;
  PlayerId i, j;
};

inline std::vector<EdgeTerms> edge_terms(const GameSpec& spec) {
  const Graph& g = spec.graph();
  std::vector<EdgeTerms> out;
  out.reserve(g.num_edges());
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const auto [fwd, bwd] = g.edge_arcs(e);
    out.push_back({spec.weight(fwd), spec.weight(bwd), spec.utility(fwd), spec.utility(bwd), g.arc_tail(fwd),
                   g.arc_head(fwd)});
  }
  return out;
}

inline double symmetric_welfare(const std::vector<EdgeTerms>& terms, const std::vector<double>& x, double eta) {
  double total = 0.0;
  for (std::size_t e = 0; e < terms.size(); ++e) {
    const double amount = std::max(0.0, x[e]) * eta;
    total += terms[e].w_ij * eval(terms[e].u_ij, amount) + terms[e].w_ji * eval(terms[e].u_ji, amount);
  }
  return total;
}

// Euclidean projection onto {y >= 0, sum y <= cap}.
inline void project_capped_simplex(std::vector<double>& y, double cap) {
  double sum = 0.0;
  for (double& v : y) {
    v = std::max(0.0, v);
    sum += v;
  }
  if (sum <= cap) return;
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    prefix += sorted[k];
    const double t = (prefix - cap) / static_cast<double>(k + 1);
    if (k + 1 == sorted.size() || sorted[k + 1] <= t) {
      tau = t;
      break;
    }
  }
  for (double& v : y) v = std::max(0.0, v - tau);
}

// Per-node constraint sets and Dykstra's alternating projection onto their
// intersection.
class NodePolytope {
 public:
  NodePolytope(const GameSpec& spec) : budgets_(spec.num_players()), incident_(spec.num_players()) {
    const Graph& g = spec.graph();
    for (PlayerId i = 0; i < spec.num_players(); ++i) {
      budgets_[i] = static_cast<double>(spec.budget_units(i));
      for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a) incident_[i].push_back(g.arc_edge(a));
    }
  }

  bool feasible(const std::vector<double>& x, double tol) const {
    for (double v : x)
      if (v < 0.0) return false;
    for (PlayerId i = 0; i < budgets_.size(); ++i) {
      double s = 0.0;
      for (EdgeId e : incident_[i]) s += x[e];
      if (s > budgets_[i] + tol) return false;
    }
    return true;
  }

  void project(std::vector<double>& x, std::size_t sweeps) const {
    for (double& v : x) v = std::max(0.0, v);
    if (feasible(x, 0.0)) return;
    std::vector<std::vector<double>> inc(budgets_.size());
    for (PlayerId i = 0; i < budgets_.size(); ++i) inc[i].assign(incident_[i].size(), 0.0);
    std::vector<double> y;
    for (std::size_t s = 0; s < sweeps; ++s) {
      double change = 0.0;
      for (PlayerId i = 0; i < budgets_.size(); ++i) {
        const auto& idx = incident_[i];
        y.resize(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) y[k] = x[idx[k]] + inc[i][k];
        std::vector<double> z = y;
        project_capped_simplex(z, budgets_[i]);
        for (std::size_t k = 0; k < idx.size(); ++k) {
          change = std::max(change, std::abs(z[k] - x[idx[k]]));
          inc[i][k] = y[k] - z[k];
          x[idx[k]] = z[k];
        }
      }
      if (change <= 1e-14 * std::max(1.0, scale())) break;
    }
  }

  // Scales each node's edges down so that every budget holds.
  void repair(std::vector<double>& x) const {
    std::vector<double> factor(budgets_.size(), 1.0);
    for (double& v : x) v = std::max(0.0, v);
    for (PlayerId i = 0; i < budgets_.size(); ++i) {
      double s = 0.0;
      for (EdgeId e : incident_[i]) s += x[e];
      if (s > budgets_[i]) factor[i] = s > 0.0 ? budgets_[i] / s : 0.0;
    }
    std::vector<double> f(x.size(), 1.0);
    for (PlayerId i = 0; i < budgets_.size(); ++i)
      for (EdgeId e : incident_[i]) f[e] = std::min(f[e], factor[i]);
    for (std::size_t e = 0; e < x.size(); ++e) x[e] *= f[e];
  }

  double scale() const {
    double m = 0.0;
    for (double b : budgets_) m = std::max(m, b);
    return m;
  }

 private:
  std::vector<double> budgets_;
  std::vector<std::vector<EdgeId>> incident_;
};

}  // namespace detail

/// Maximizes welfare over matched profiles,
///   sum over edges of w_ij u_ij(x_e) + w_ji u_ji(x_e)
/// subject to x >= 0 and each node's incident total within its budget, by
/// projected gradient ascent with backtracking. Restricting to matched profiles
/// loses nothing: matching down never changes welfare.
inline OptimumResult global_optimum(const GameSpec& spec, const OptimizerConfig& cfg = {}) {
  if (!(cfg.step_size > 0.0) || cfg.max_iters == 0 || !(cfg.grad_tol > 0.0) || cfg.projection_iters == 0)
    throw std::invalid_argument("optimizer settings must be positive");
  const Graph& g = spec.graph();
  const double eta = spec.eta();
  const auto terms = detail::edge_terms(spec);
  const detail::NodePolytope poly(spec);
  const std::size_t m = g.num_edges();
  const double scale = std::max(1.0, poly.scale());

  OptimumResult out;
  out.profile.x.assign(m, 0.0);
  if (m == 0) {
    out.certified = true;
    return out;
  }

  std::vector<double> x(m);
  std::mt19937_64 rng = make_rng(cfg.seed, RngStream::optimizer);
  for (EdgeId e = 0; e < m; ++e) {
    const auto [i, j] = g.edge(e);
    const double share = std::min(static_cast<double>(spec.budget_units(i)) / static_cast<double>(g.degree(i)),
                                  static_cast<double>(spec.budget_units(j)) / static_cast<double>(g.degree(j)));
    const double jitter = cfg.seed == 0 ? 0.5 : uniform01(rng);
    x[e] = jitter * share;
  }
  poly.repair(x);

  // Marginals are infinite at zero for some families; a tiny floor keeps the
  // gradient finite while still pushing such edges off zero.
  const double floor_amount = 1e-12 * scale * eta;
  auto gradient = [&](const std::vector<double>& at, std::vector<double>& grad) {
    grad.resize(m);
    for (EdgeId e = 0; e < m; ++e) {
      const double amount = std::max(at[e] * eta, floor_amount);
      grad[e] = eta * (terms[e].w_ij * marginal(terms[e].u_ij, amount) + terms[e].w_ji * marginal(terms[e].u_ji, amount));
    }
  };
  auto welfare = [&](const std::vector<double>& at) { return detail::symmetric_welfare(terms, at, eta); };

  double fx = welfare(x);
  std::vector<double> best = x;
  double best_f = fx;
  double step = cfg.step_size;
  std::vector<double> grad, trial(m), probe(m);
  std::size_t it = 0;
  for (; it < cfg.max_iters; ++it) {
    gradient(x, grad);

    // Projected-gradient stationarity measure at unit step.
    for (EdgeId e = 0; e < m; ++e) probe[e] = x[e] + std::min(grad[e], scale);
    poly.project(probe, cfg.projection_iters);
    double pg = 0.0;
    for (EdgeId e = 0; e < m; ++e) pg = std::max(pg, std::abs(probe[e] - x[e]));
    out.grad_norm = pg;
    if (pg <= cfg.grad_tol * scale) {
      out.certified = true;
      break;
    }

    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (EdgeId e = 0; e < m; ++e) trial[e] = x[e] + step * grad[e];
      poly.project(trial, cfg.projection_iters);
      poly.repair(trial);
      double dot = 0.0, dist2 = 0.0;
      for (EdgeId e = 0; e < m; ++e) {
        const double d = trial[e] - x[e];
        dot += grad[e] * d;
        dist2 += d * d;
      }
      const double ft = welfare(trial);
      if (ft >= fx + 1e-4 * dot - 1e-15 * std::abs(fx) && dist2 > 0.0) {
        x.swap(trial);
        fx = ft;
        accepted = true;
        step *= 1.5;
        break;
      }
      step *= 0.5;
    }
    if (fx > best_f) {
      best_f = fx;
      best = x;
    }
    if (!accepted) {
      // No ascent step exists at machine precision.
      out.certified = pg <= 1e-6 * scale;
      break;
    }
  }
  out.iterations = it;
  out.profile.x = best;
  out.welfare = social_welfare(spec, to_profile(spec, out.profile));
  return out;
}

struct BruteForceOptimum {
  SymmetricProfile profile;  // integer eta counts stored as doubles
  double welfare = 0.0;
};

/// Exhaustive search over matched grid profiles (verification oracle).
inline BruteForceOptimum brute_force_optimum(const GameSpec& spec) {
  const Graph& g = spec.graph();
  const std::size_t m = g.num_edges();
  std::vector<std::int64_t> upper(m);
  double estimate = 1.0;
  for (EdgeId e = 0; e < m; ++e) {
    const auto [i, j] = g.edge(e);
    upper[e] = std::min(spec.budget_units(i), spec.budget_units(j));
    estimate *= static_cast<double>(upper[e] + 1);
  }
  if (estimate > kBruteForceLimit)
    throw InstanceTooLarge(estimate, detail::concat("brute-force optimum needs up to ", estimate,
                                                    " evaluations (limit ", kBruteForceLimit, ")"));
  const auto terms = detail::edge_terms(spec);
  const double eta = spec.eta();
  std::vector<std::int64_t> left(spec.num_players());
  for (PlayerId i = 0; i < spec.num_players(); ++i) left[i] = spec.budget_units(i);
  std::vector<double> x(m, 0.0);

  BruteForceOptimum best;
  best.welfare = -std::numeric_limits<double>::infinity();
  best.profile.x.assign(m, 0.0);
  auto recurse = [&](auto&& self, EdgeId e) -> void {
    if (e == m) {
      const double v = detail::symmetric_welfare(terms, x, eta);
      if (v > best.welfare) {
        best.welfare = v;
        best.profile.x = x;
      }
      return;
    }
    const PlayerId i = terms[e].i, j = terms[e].j;
    const std::int64_t top = std::min(left[i], left[j]);
    for (std::int64_t k = 0; k <= top; ++k) {
      x[e] = static_cast<double>(k);
      left[i] -= k;
      left[j] -= k;
      self(self, e + 1);
      left[i] += k;
      left[j] += k;
    }
    x[e] = 0.0;
  };
  recurse(recurse, 0);
  if (m == 0) best.welfare = 0.0;
  return best;
}

/// SW(profile) / opt_sw for one equilibrium.
inline double ne_quality(double welfare, double opt_sw) {
  if (!(opt_sw > 0.0)) {
    if (welfare > 0.0) throw std::logic_error("positive welfare against a zero optimum");
    throw std::invalid_argument("optimum welfare must be positive");
  }
  return welfare / opt_sw;
}

template <typename Amount>
double ne_quality(const GameSpec& spec, const BasicProfile<Amount>& profile, double opt_sw) {
  return ne_quality(social_welfare(spec, profile), opt_sw);
}

struct SampleQuality {
  double poa = 1.0;  // 1 / worst ratio
  double pos = 1.0;  // 1 / best ratio
};

inline SampleQuality sample_quality(const std::vector<double>& ratios) {
  if (ratios.empty()) throw std::invalid_argument("no equilibria in the sample");
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  return {1.0 / *lo, 1.0 / *hi};
}

// Per-node welfare of the two reference profiles on the bad-PoA torus:
// vertical weight 1/2 - eps, horizontal eps, u(x) = x(beta - x).
struct PoaGridWelfare {
  double good = 0.0;
  double bad = 0.0;
};

inline PoaGridWelfare poa_grid_welfare_per_node(double eps, double beta) {
  if (!(eps > 0.0) || !(eps < 0.5) || !(eps < 0.5 * beta))
    throw std::invalid_argument("eps must lie in (0, min(1/2, beta/2))");
  const double hi = 0.5 * beta - eps;
  PoaGridWelfare w;
  w.good = 2.0 * (0.5 - eps) * hi * (0.5 * beta + eps) + 2.0 * eps * eps * (beta - eps);
  w.bad = 2.0 * eps * hi * (0.5 * beta + eps) + 2.0 * (0.5 - eps) * eps * (beta - eps);
  return w;
}

/// SW(f_good) / SW(f_bad), a lower bound on the price of anarchy of the
/// construction; the node count cancels.
inline double poa_grid_ratio(double eps, double beta) {
  const auto w = poa_grid_welfare_per_node(eps, beta);
  return w.good / w.bad;
}

}  // namespace resalloc
