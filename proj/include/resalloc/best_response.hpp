#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "resalloc/game.hpp"
#include "resalloc/utility.hpp"

namespace resalloc {

inline constexpr std::int64_t kUnboundedUnits = std::numeric_limits<std::int64_t>::max() / 4;

// Dual multipliers of the best-response program for one neighbor j:
// `own` prices the player's own proposal (f*_ij <= f_ij), `cap` prices the
// neighbor's proposal (f*_ij <= f_ji).
struct NeighborDuals {
  double own = 0.0;
  double cap = 0.0;
};

template <typename Amount>
struct BasicBRResult {
  std::vector<Amount> proposals;  // per neighbor, ascending neighbor index
  double dual_level = 0.0;        // budget multiplier
  std::vector<NeighborDuals> duals;
  double realized_utility = 0.0;  // evaluated at the agreed amounts
  Amount slack_after{0};
};

using BRResult = BasicBRResult<std::int64_t>;
using RealBRResult = BasicBRResult<double>;

struct BRCheck {
  bool is_best = true;
  double improvement = 0.0;
};

struct IdealAllocation {
  std::vector<double> allocation;  // eta units, per neighbor
  double opt_value = 0.0;
};

struct BruteForceBR {
  std::vector<std::int64_t> proposals;
  double utility = 0.0;
};

class InstanceTooLarge : public std::length_error {
 public:
  InstanceTooLarge(double estimate, const std::string& what) : std::length_error(what), estimate_(estimate) {}
  double estimate() const { return estimate_; }

 private:
  double estimate_;
};

inline constexpr double kBruteForceLimit = 1e7;

namespace detail {

struct NeighborTerm {
  double weight;
  UtilitySpec utility;
  double cap;  // eta units, may be infinite
};

struct WaterLevel {
  std::vector<double> targets;  // eta units
  double level = 0.0;
};

inline double term_target(const NeighborTerm& t, double level, double eta) {
  if (t.cap <= 0.0) return 0.0;
  if (t.weight <= 0.0) return 0.0;
  const double x = inverse_marginal(t.utility, level / t.weight);
  return std::min(t.cap, x / eta);
}

inline double total_target(std::span<const NeighborTerm> terms, double level, double eta) {
  double sum = 0.0;
  for (const auto& t : terms) sum += term_target(t, level, eta);
  return sum;
}

// Continuous water-filling: equalize weighted marginals at a common level,
// respecting per-neighbor caps, so that the targets exhaust `budget` (or the
// level is zero and the budget is not binding).
inline WaterLevel water_fill(std::span<const NeighborTerm> terms, double budget, double eta) {
  WaterLevel out;
  out.targets.assign(terms.size(), 0.0);
  if (terms.empty() || budget <= 0.0) return out;

  if (total_target(terms, 0.0, eta) <= budget * (1.0 + 1e-15)) {
    for (std::size_t k = 0; k < terms.size(); ++k) out.targets[k] = term_target(terms[k], 0.0, eta);
    return out;
  }

  double hi = 0.0;
  for (const auto& t : terms)
    if (t.cap > 0.0 && t.weight > 0.0) hi = std::max(hi, t.weight * marginal(t.utility, 0.0));
  if (!std::isfinite(hi)) {
    hi = 1.0;
    for (int guard = 0; guard < 4000 && total_target(terms, hi, eta) > budget; ++guard) hi *= 2.0;
  }
  double lo = 0.0;
  const double width0 = hi - lo;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * width0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (total_target(terms, mid, eta) > budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (total_target(terms, hi, eta) > budget) throw std::logic_error("water-filling lost its bracket");

  double used = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    out.targets[k] = term_target(terms[k], hi, eta);
    used += out.targets[k];
  }
  // Neighbors whose target jumps between lo and hi (flat marginals, e.g.
  // linear ties) absorb what is left, in ascending neighbor order.
  double remaining = budget - used;
  for (std::size_t k = 0; k < terms.size() && remaining > 0.0; ++k) {
    const double upper = term_target(terms[k], lo, eta);
    const double extra = std::min(upper - out.targets[k], remaining);
    if (extra > 0.0) {
      out.targets[k] += extra;
      remaining -= extra;
    }
  }
  out.level = hi;
  return out;
}

// Utility gained by raising the agreed amount on a neighbor by one eta unit.
inline double unit_gain(const NeighborTerm& t, std::int64_t units, double eta) {
  const double x = static_cast<double>(units) * eta;
  return t.weight * (eval(t.utility, x + eta) - eval(t.utility, x));
}

template <typename Amount>
std::vector<NeighborTerm> neighbor_terms(const GameSpec& spec, const BasicProfile<Amount>& profile, PlayerId i) {
  const Graph& g = spec.graph();
  std::vector<NeighborTerm> terms;
  terms.reserve(g.degree(i));
  for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a)
    terms.push_back({spec.weight(a), spec.utility(a), static_cast<double>(profile[g.reverse(a)])});
  return terms;
}

inline double compositions_estimate(std::int64_t budget, std::size_t parts) {
  // Number of x in N^parts with sum <= budget: C(budget + parts, parts).
  double count = 1.0;
  for (std::size_t k = 1; k <= parts; ++k)
    count = count * static_cast<double>(budget + static_cast<std::int64_t>(k)) / static_cast<double>(k);
  return count;
}

}  // namespace detail

/// Rounds continuous targets (eta units) onto the integer grid: floor every
/// target, then hand out the remaining units one at a time to the neighbor
/// whose next unit gains the most, subject to caps and the budget. Ties go to
/// the lower index. With `fill_zero_gain` the loop keeps going through
/// zero-gain units until the budget or every cap is exhausted.
template <typename GainFn>
std::vector<std::int64_t> quantize_allocation(std::span<const double> targets, std::span<const std::int64_t> caps,
                                              std::int64_t budget, GainFn&& gain, bool fill_zero_gain = true) {
  const std::size_t d = targets.size();
  std::vector<std::int64_t> x(d, 0);
  if (budget <= 0) return x;
  std::int64_t used = 0;
  for (std::size_t k = 0; k < d; ++k) {
    const double t = std::isfinite(targets[k]) ? std::floor(targets[k] + 1e-9) : static_cast<double>(budget);
    x[k] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::max(0.0, t)), 0, std::max<std::int64_t>(0, caps[k]));
    used += x[k];
  }
  // Floors of a feasible target vector cannot overshoot; guard anyway against
  // callers passing slightly infeasible targets.
  for (std::size_t k = d; used > budget && k-- > 0;) {
    const std::int64_t cut = std::min(x[k], used - budget);
    x[k] -= cut;
    used -= cut;
  }
  while (used < budget) {
    std::size_t best = d;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < d; ++k) {
      if (x[k] >= caps[k]) continue;
      const double gk = gain(k, x[k]);
      if (gk > best_gain) {
        best_gain = gk;
        best = k;
      }
    }
    if (best == d) break;
    if (best_gain <= 0.0) {
      if (!fill_zero_gain) break;
      // Everything left is flat: fill in ascending order.
      for (std::size_t k = 0; k < d && used < budget; ++k) {
        const std::int64_t room = std::min(caps[k] - x[k], budget - used);
        if (room > 0) {
          x[k] += room;
          used += room;
        }
      }
      break;
    }
    ++x[best];
    ++used;
  }
  return x;
}

/// Best response of player i to the rest of `profile`.
///
/// The continuous program is solved by water-filling on the budget
/// multiplier; integer profiles are then rounded with quantize_allocation.
/// Among utility-maximizing responses the one with the largest agreed total is
/// chosen (flat regions are filled up to the neighbors' offers). Slack that
/// remains is kept by pessimistic players and spread round-robin over the lose
/// set by optimistic ones.
template <typename Amount>
BasicBRResult<Amount> best_response(const GameSpec& spec, const BasicProfile<Amount>& profile, PlayerId i,
                                    Behavior behavior) {
  const Graph& g = spec.graph();
  const double eta = spec.eta();
  const std::size_t d = g.degree(i);
  const Amount budget = budget_amount<Amount>(spec, i);

  BasicBRResult<Amount> out;
  out.proposals.assign(d, Amount{0});
  out.duals.assign(d, NeighborDuals{});
  out.slack_after = budget;
  if (d == 0) return out;

  const auto terms = detail::neighbor_terms(spec, profile, i);
  const auto water = detail::water_fill(terms, static_cast<double>(budget), eta);
  out.dual_level = water.level;

  std::vector<Amount> caps(d);
  for (std::size_t k = 0; k < d; ++k) caps[k] = profile[g.reverse(g.arc_begin(i) + k)];

  if constexpr (std::is_integral_v<Amount>) {
    out.proposals = quantize_allocation(
        water.targets, caps, budget, [&](std::size_t k, std::int64_t x) { return detail::unit_gain(terms[k], x, eta); });
  } else {
    out.proposals = water.targets;
    double remaining = budget;
    for (double t : out.proposals) remaining -= t;
    for (std::size_t k = 0; k < d && remaining > 0.0; ++k) {
      const double room = std::min(caps[k] - out.proposals[k], remaining);
      if (room > 0.0) {
        out.proposals[k] += room;
        remaining -= room;
      }
    }
  }

  Amount used{0};
  for (std::size_t k = 0; k < d; ++k) used += std::min(out.proposals[k], caps[k]);
  out.slack_after = std::max(Amount{0}, budget - used);

  if (behavior == Behavior::optimistic && out.slack_after > Amount{0}) {
    std::vector<std::size_t> lose;
    for (std::size_t k = 0; k < d; ++k)
      if (out.proposals[k] >= caps[k]) lose.push_back(k);
    if (!lose.empty()) {
      Amount spent{0};
      for (Amount p : out.proposals) spent += p;
      const Amount spare = budget - spent;
      if constexpr (std::is_integral_v<Amount>) {
        const auto count = static_cast<Amount>(lose.size());
        const Amount each = spare / count;
        const Amount extra = spare % count;
        for (std::size_t r = 0; r < lose.size(); ++r)
          out.proposals[lose[r]] += each + (static_cast<Amount>(r) < extra ? 1 : 0);
      } else {
        for (std::size_t k : lose) out.proposals[k] += spare / static_cast<double>(lose.size());
      }
    }
  }

  for (std::size_t k = 0; k < d; ++k) {
    const ArcId a = g.arc_begin(i) + k;
    const Amount realized = std::min(out.proposals[k], caps[k]);
    out.realized_utility += spec.weight(a) * eval(spec.utility(a), static_cast<double>(realized) * eta);
    if (realized > Amount{0}) {
      out.duals[k].own = out.dual_level;
      const double m = spec.weight(a) * marginal(spec.utility(a), static_cast<double>(realized) * eta);
      out.duals[k].cap = std::max(0.0, m - out.dual_level);
    }
  }
  return out;
}

template <typename Amount>
BasicBRResult<Amount> best_response(const GameSpec& spec, const BasicProfile<Amount>& profile, PlayerId i) {
  return best_response(spec, profile, i, spec.behavior(i));
}

/// Writes a best response into a copy of the profile.
template <typename Amount>
BasicProfile<Amount> apply_response(const GameSpec& spec, BasicProfile<Amount> profile, PlayerId i,
                                    const BasicBRResult<Amount>& br) {
  const Graph& g = spec.graph();
  for (std::size_t k = 0; k < br.proposals.size(); ++k) profile[g.arc_begin(i) + k] = br.proposals[k];
  return profile;
}

template <typename Amount>
BRCheck is_best_response(const GameSpec& spec, const BasicProfile<Amount>& profile, PlayerId i, double tol) {
  const auto br = best_response(spec, profile, i);
  const double improvement = br.realized_utility - player_utility(spec, profile, i);
  return {improvement <= tol, improvement};
}

/// Exhaustive search over all grid allocations of player i (verification
/// oracle). Ties resolve to the lexicographically smallest allocation.
inline BruteForceBR brute_force_best_response(const GameSpec& spec, const FrequencyProfile& profile, PlayerId i) {
  const Graph& g = spec.graph();
  const std::size_t d = g.degree(i);
  const std::int64_t budget = spec.budget_units(i);
  const double estimate = detail::compositions_estimate(budget, d);
  if (estimate > kBruteForceLimit)
    throw InstanceTooLarge(estimate, detail::concat("brute-force best response needs ~", estimate,
                                                    " evaluations (limit ", kBruteForceLimit, ")"));
  const double eta = spec.eta();
  std::vector<std::int64_t> caps(d);
  for (std::size_t k = 0; k < d; ++k) caps[k] = profile[g.reverse(g.arc_begin(i) + k)];

  BruteForceBR best;
  best.proposals.assign(d, 0);
  best.utility = -std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> x(d, 0);

  auto value = [&] {
    double total = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const ArcId a = g.arc_begin(i) + k;
      total += spec.weight(a) * eval(spec.utility(a), static_cast<double>(std::min(x[k], caps[k])) * eta);
    }
    return total;
  };
  auto recurse = [&](auto&& self, std::size_t k, std::int64_t left) -> void {
    if (k == d) {
      const double v = value();
      if (v > best.utility) {
        best.utility = v;
        best.proposals = x;
      }
      return;
    }
    for (std::int64_t units = 0; units <= left; ++units) {
      x[k] = units;
      self(self, k + 1, left - units);
    }
    x[k] = 0;
  };
  recurse(recurse, 0, budget);
  if (d == 0) best.utility = 0.0;
  return best;
}

/// Allocation player i would choose if no neighbor constrained it; its value
/// bounds any utility it can reach.
inline IdealAllocation ideal_allocation(const GameSpec& spec, PlayerId i) {
  const Graph& g = spec.graph();
  std::vector<detail::NeighborTerm> terms;
  for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a)
    terms.push_back({spec.weight(a), spec.utility(a), kInfiniteAmount});
  const auto water = detail::water_fill(terms, static_cast<double>(spec.budget_units(i)), spec.eta());
  IdealAllocation out;
  out.allocation = water.targets;
  for (std::size_t k = 0; k < terms.size(); ++k)
    out.opt_value += terms[k].weight * eval(terms[k].utility, out.allocation[k] * spec.eta());
  return out;
}

}  // namespace resalloc
