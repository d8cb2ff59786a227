#pragma once

#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "resalloc/best_response.hpp"
#include "resalloc/game.hpp"
#include "resalloc/ranking.hpp"

namespace resalloc {

// Portable uniform draw in [0, 1) from a 64-bit engine.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Independent streams per purpose, so that equal seeds used for different
// things (weights, starts, orders) do not produce correlated draws.
enum class RngStream : std::uint32_t { weights = 1, init = 2, order = 3, instance = 4, optimizer = 5 };

inline std::mt19937_64 make_rng(std::uint64_t seed, RngStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound) {
  // Rejection sampling keeps the draw unbiased and independent of the stdlib.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <typename Amount>
std::uint64_t profile_hash(const BasicProfile<Amount>& p) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (Amount v : p.values()) {
    std::uint64_t x;
    if constexpr (std::is_integral_v<Amount>) {
      x = static_cast<std::uint64_t>(v);
    } else {
      static_assert(sizeof(double) == sizeof(std::uint64_t));
      std::memcpy(&x, &v, sizeof x);
    }
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    x ^= x >> 31;
    h = (h ^ x) * 0x100000001b3ull;
  }
  return h;
}

struct InitPolicy {
  enum class Kind { zero, random_feasible, given };
  Kind kind = Kind::zero;
  std::uint64_t seed = 0;
  FrequencyProfile given;

  static InitPolicy zero() { return {}; }
  static InitPolicy random_feasible(std::uint64_t seed) { return {Kind::random_feasible, seed, {}}; }
  static InitPolicy from(FrequencyProfile p) { return {Kind::given, 0, std::move(p)}; }
};

/// Initial proposals. RandomFeasible draws uniform shares per neighbor,
/// scales them to the budget and rounds onto the grid.
inline FrequencyProfile init_profile(const GameSpec& spec, const InitPolicy& policy) {
  const Graph& g = spec.graph();
  switch (policy.kind) {
    case InitPolicy::Kind::zero:
      return FrequencyProfile(g);
    case InitPolicy::Kind::given:
      require_feasible(spec, policy.given);
      return policy.given;
    case InitPolicy::Kind::random_feasible: {
      std::mt19937_64 rng = make_rng(policy.seed, RngStream::init);
      FrequencyProfile p(g);
      for (PlayerId i = 0; i < spec.num_players(); ++i) {
        const std::size_t d = g.degree(i);
        if (d == 0) continue;
        std::vector<double> share(d);
        double total = 0.0;
        for (auto& s : share) {
          s = uniform01(rng);
          total += s;
        }
        const std::int64_t budget = spec.budget_units(i);
        std::vector<double> targets(d);
        for (std::size_t k = 0; k < d; ++k)
          targets[k] = total > 0.0 ? static_cast<double>(budget) * share[k] / total : 0.0;
        std::vector<std::int64_t> caps(d, budget);
        const auto terms = detail::neighbor_terms(spec, p, i);
        const auto x = quantize_allocation(targets, caps, budget, [&](std::size_t k, std::int64_t units) {
          return detail::unit_gain(terms[k], units, spec.eta());
        });
        for (std::size_t k = 0; k < d; ++k) p[g.arc_begin(i) + k] = x[k];
      }
      return p;
    }
  }
  return FrequencyProfile(g);
}

enum class DynamicsMode { sequential, simultaneous };

struct OrderPolicy {
  enum class Kind { round_robin, random_seeded, explicit_list };
  Kind kind = Kind::round_robin;
  std::uint64_t seed = 0;
  std::vector<PlayerId> list;

  static OrderPolicy round_robin() { return {}; }
  static OrderPolicy random_seeded(std::uint64_t seed) { return {Kind::random_seeded, seed, {}}; }
  static OrderPolicy explicit_list(std::vector<PlayerId> order) { return {Kind::explicit_list, 0, std::move(order)}; }
};

// Utility tolerance used by "Converged" and by the best-response test.
inline constexpr double kDefaultUtilityTol = 1e-9;

struct DynamicsConfig {
  DynamicsMode mode = DynamicsMode::sequential;
  OrderPolicy order;
  std::size_t max_rounds = 1'000'000;
  double tol = kDefaultUtilityTol;
  bool check_invariants = false;
  bool record_trace = true;
  std::optional<RankingSystem> ranking;  // attaches the potential to each record
};

struct RoundRecord {
  std::size_t t = 0;
  std::optional<PlayerId> mover;  // empty: all players moved
  std::optional<FrequencyProfile> profile;
  std::uint64_t profile_hash = 0;
  std::int64_t total_slack = 0;
  double welfare = 0.0;
  std::optional<double> potential;
  std::vector<PlayerId> v1_set;
};

// Per-round records. Full profiles are kept for the first kFullRounds rounds;
// longer traces keep only hashes except for the first and last kKeptEnds.
class Trace {
 public:
  static constexpr std::size_t kFullRounds = 10'000;
  static constexpr std::size_t kKeptEnds = 100;

  void push(RoundRecord r) {
    records_.push_back(std::move(r));
    const std::size_t n = records_.size();
    if (n == kFullRounds + 1) {
      for (std::size_t k = kKeptEnds; k + kKeptEnds < n; ++k) records_[k].profile.reset();
    } else if (n > kFullRounds + 1) {
      records_[n - kKeptEnds - 1].profile.reset();
    }
  }
  const std::vector<RoundRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const RoundRecord& back() const { return records_.back(); }

 private:
  std::vector<RoundRecord> records_;
};

struct TerminationStatus {
  enum class Kind { converged, cycle_detected, max_rounds_exceeded };
  Kind kind = Kind::converged;
  std::size_t t = 0;       // rounds executed
  std::size_t start = 0;   // cycle start (cycle_detected)
  std::size_t period = 0;  // cycle length (cycle_detected)
};

inline std::string_view status_name(TerminationStatus::Kind k) {
  switch (k) {
    case TerminationStatus::Kind::converged: return "converged";
    case TerminationStatus::Kind::cycle_detected: return "cycle_detected";
    case TerminationStatus::Kind::max_rounds_exceeded: return "max_rounds_exceeded";
  }
  return "unknown";
}

struct DynamicsResult {
  FrequencyProfile final_profile;
  Trace trace;
  TerminationStatus status;
  // Smallest strictly positive utility gain seen per mover (infinity if the
  // player never moved); an observed lower bound for the minimum increment.
  std::vector<double> min_increment;
  // With check_invariants: times a player with a non-empty win set lost
  // utility after the last slack decrease. Usually zero, but not guaranteed.
  std::size_t suffix_v2_utility_drops = 0;
};

class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

inline RoundRecord make_record(const GameSpec& spec, const FrequencyProfile& p, std::size_t t,
                               std::optional<PlayerId> mover, const DynamicsConfig& cfg) {
  RoundRecord r;
  r.t = t;
  r.mover = mover;
  r.profile = p;
  r.profile_hash = profile_hash(p);
  r.total_slack = total_slack(spec, p);
  r.welfare = social_welfare(spec, p);
  if (cfg.ranking) r.potential = potential_value(spec, *cfg.ranking, p);
  r.v1_set = partition_players(spec, p).v1;
  return r;
}

struct CachedCheck {
  BRResult br;
  double improvement = 0.0;
  bool best = true;
  bool stale = true;
};

// Online checks of the slack argument: total slack never increases, a mover
// never loses utility, and while slack stays constant the empty-win-set players
// form a growing set. The last one only has to hold on the suffix after the
// final slack decrease, so violations are held as pending and forgiven whenever
// slack later drops. Utility losses of players with a non-empty win set on that
// suffix are counted, not treated as failures: a neighbor may lower its offer to
// such a player while the total slack stays put.
class SlackMonitor {
 public:
  SlackMonitor(const GameSpec& spec, const FrequencyProfile& p) : spec_(spec) {
    slack_ = total_slack(spec, p);
    empty_win_.resize(spec.num_players());
    for (PlayerId i = 0; i < spec.num_players(); ++i) empty_win_[i] = has_empty_win_set(spec, p, i);
  }

  // Utilities of the mover and its neighbors, captured before the move.
  std::vector<double> snapshot(const FrequencyProfile& p, PlayerId mover) const {
    std::vector<double> u;
    u.push_back(player_utility(spec_, p, mover));
    for (PlayerId j : spec_.graph().neighbors(mover)) u.push_back(player_utility(spec_, p, j));
    return u;
  }

  void after_move(const FrequencyProfile& p, PlayerId mover, const std::vector<double>& before, std::size_t t) {
    const std::int64_t slack = total_slack(spec_, p);
    if (slack > slack_)
      throw InvariantViolation(concat("total slack increased from ", slack_, " to ", slack, " at round ", t));
    const double u_mover = player_utility(spec_, p, mover);
    if (u_mover < before[0] - 1e-12)
      throw InvariantViolation(concat("player ", mover, " lost utility in their own move at round ", t));

    std::vector<PlayerId> touched{mover};
    for (PlayerId j : spec_.graph().neighbors(mover)) touched.push_back(j);
    if (slack < slack_) {
      pending_.clear();
      v2_drops_ = 0;
    } else {
      for (std::size_t k = 0; k < touched.size(); ++k) {
        const PlayerId j = touched[k];
        const bool now_empty = has_empty_win_set(spec_, p, j);
        if (empty_win_[j] && !now_empty) pending_.push_back(concat("player ", j, " left V1 at round ", t));
        if (!empty_win_[j] && player_utility(spec_, p, j) < before[k] - 1e-12)
          ++v2_drops_;
      }
    }
    for (PlayerId j : touched) empty_win_[j] = has_empty_win_set(spec_, p, j);
    slack_ = slack;
  }

  void finish() const {
    if (!pending_.empty()) throw InvariantViolation(pending_.front());
  }

  std::size_t v2_utility_drops() const { return v2_drops_; }

 private:
  const GameSpec& spec_;
  std::int64_t slack_ = 0;
  std::vector<char> empty_win_;
  std::vector<std::string> pending_;
  std::size_t v2_drops_ = 0;
};

}  // namespace detail

/// Sequential best-response dynamics: one non-best-responding player moves per
/// round until every player best-responds.
inline DynamicsResult run_sequential(const GameSpec& spec, const FrequencyProfile& init, const DynamicsConfig& cfg) {
  if (cfg.max_rounds < 1) throw std::invalid_argument("max_rounds must be at least 1");
  if (cfg.tol < 0.0) throw std::invalid_argument("tolerance must be non-negative");
  require_feasible(spec, init);
  const std::size_t n = spec.num_players();
  const Graph& g = spec.graph();
  if (cfg.order.kind == OrderPolicy::Kind::explicit_list) {
    std::vector<char> seen(n, 0);
    for (PlayerId i : cfg.order.list) {
      if (i >= n) throw std::invalid_argument("explicit order names an unknown player");
      seen[i] = 1;
    }
    for (PlayerId i = 0; i < n; ++i)
      if (!seen[i]) throw std::invalid_argument("explicit order must list every player");
  }

  DynamicsResult out;
  out.final_profile = init;
  out.min_increment.assign(n, std::numeric_limits<double>::infinity());
  FrequencyProfile& p = out.final_profile;

  std::vector<detail::CachedCheck> cache(n);
  auto refresh = [&](PlayerId i) {
    auto& c = cache[i];
    if (!c.stale) return;
    c.br = best_response(spec, p, i);
    c.improvement = c.br.realized_utility - player_utility(spec, p, i);
    c.best = c.improvement <= cfg.tol;
    c.stale = false;
  };

  std::optional<detail::SlackMonitor> monitor;
  if (cfg.check_invariants) monitor.emplace(spec, p);
  if (cfg.record_trace) out.trace.push(detail::make_record(spec, p, 0, std::nullopt, cfg));

  std::mt19937_64 rng = make_rng(cfg.order.seed, RngStream::order);
  std::size_t cursor = 0;
  std::vector<PlayerId> candidates;
  std::size_t t = 0;
  for (;;) {
    candidates.clear();
    for (PlayerId i = 0; i < n; ++i) {
      refresh(i);
      if (!cache[i].best) candidates.push_back(i);
    }
    if (candidates.empty()) {
      out.status = {TerminationStatus::Kind::converged, t, 0, 0};
      break;
    }
    if (t >= cfg.max_rounds) {
      out.status = {TerminationStatus::Kind::max_rounds_exceeded, t, 0, 0};
      break;
    }

    PlayerId mover = candidates.front();
    switch (cfg.order.kind) {
      case OrderPolicy::Kind::round_robin:
        for (std::size_t k = 0; k < n; ++k) {
          const PlayerId i = (cursor + k) % n;
          if (!cache[i].best) {
            mover = i;
            break;
          }
        }
        cursor = (mover + 1) % n;
        break;
      case OrderPolicy::Kind::random_seeded:
        mover = candidates[uniform_index(rng, candidates.size())];
        break;
      case OrderPolicy::Kind::explicit_list: {
        const auto& list = cfg.order.list;
        for (std::size_t k = 0; k < list.size(); ++k) {
          const std::size_t pos = (cursor + k) % list.size();
          if (!cache[list[pos]].best) {
            mover = list[pos];
            cursor = (pos + 1) % list.size();
            break;
          }
        }
        break;
      }
    }

    std::vector<double> before;
    if (monitor) before = monitor->snapshot(p, mover);
    const double gain = cache[mover].improvement;
    p = apply_response(spec, std::move(p), mover, cache[mover].br);
    if (gain > 0.0) out.min_increment[mover] = std::min(out.min_increment[mover], gain);
    cache[mover].stale = true;
    for (PlayerId j : g.neighbors(mover)) cache[j].stale = true;
    ++t;
    if (monitor) monitor->after_move(p, mover, before, t);
    if (cfg.record_trace) out.trace.push(detail::make_record(spec, p, t, mover, cfg));
  }
  if (monitor) {
    out.suffix_v2_utility_drops = monitor->v2_utility_drops();
    if (out.status.kind == TerminationStatus::Kind::converged) monitor->finish();
  }
  return out;
}

/// Simultaneous best-response dynamics: every player that is not already
/// best-responding switches to its best response against the previous round.
/// Revisited profiles are detected exactly.
inline DynamicsResult run_simultaneous(const GameSpec& spec, const FrequencyProfile& init,
                                       const DynamicsConfig& cfg) {
  if (cfg.max_rounds < 1) throw std::invalid_argument("max_rounds must be at least 1");
  require_feasible(spec, init);
  const std::size_t n = spec.num_players();

  DynamicsResult out;
  out.final_profile = init;
  out.min_increment.assign(n, std::numeric_limits<double>::infinity());
  FrequencyProfile& p = out.final_profile;

  std::vector<FrequencyProfile> history{p};
  std::unordered_multimap<std::uint64_t, std::size_t> seen{{profile_hash(p), 0}};
  if (cfg.record_trace) out.trace.push(detail::make_record(spec, p, 0, std::nullopt, cfg));

  std::size_t t = 0;
  for (;;) {
    FrequencyProfile next = p;
    bool moved = false;
    for (PlayerId i = 0; i < n; ++i) {
      const auto br = best_response(spec, p, i);
      const double improvement = br.realized_utility - player_utility(spec, p, i);
      if (improvement <= cfg.tol) continue;
      moved = true;
      next = apply_response(spec, std::move(next), i, br);
      out.min_increment[i] = std::min(out.min_increment[i], improvement);
    }
    if (!moved) {
      out.status = {TerminationStatus::Kind::converged, t, 0, 0};
      break;
    }
    if (t >= cfg.max_rounds) {
      out.status = {TerminationStatus::Kind::max_rounds_exceeded, t, 0, 0};
      break;
    }
    p = std::move(next);
    ++t;
    if (cfg.record_trace) out.trace.push(detail::make_record(spec, p, t, std::nullopt, cfg));

    const std::uint64_t h = profile_hash(p);
    std::optional<std::size_t> earlier;
    const auto [lo, hi] = seen.equal_range(h);
    for (auto it = lo; it != hi; ++it)
      if (history[it->second] == p) earlier = it->second;
    if (earlier) {
      out.status = {TerminationStatus::Kind::cycle_detected, t, *earlier, t - *earlier};
      break;
    }
    seen.emplace(h, history.size());
    history.push_back(p);
  }
  return out;
}

inline DynamicsResult run_dynamics(const GameSpec& spec, const FrequencyProfile& init, const DynamicsConfig& cfg) {
  return cfg.mode == DynamicsMode::sequential ? run_sequential(spec, init, cfg) : run_simultaneous(spec, init, cfg);
}

struct EquilibriumClass {
  enum class Kind { not_equilibrium, pessimistic, optimistic };
  Kind kind = Kind::not_equilibrium;
  std::optional<PlayerId> witness;
  double improvement = 0.0;
};

inline std::string_view equilibrium_name(EquilibriumClass::Kind k) {
  switch (k) {
    case EquilibriumClass::Kind::not_equilibrium: return "not_equilibrium";
    case EquilibriumClass::Kind::pessimistic: return "pessimistic_ne";
    case EquilibriumClass::Kind::optimistic: return "optimistic_ne";
  }
  return "unknown";
}

/// Nash test for every player, then the pessimistic/optimistic split by exact
/// proposal matching on every edge.
template <typename Amount>
EquilibriumClass classify_equilibrium(const GameSpec& spec, const BasicProfile<Amount>& profile, double tol) {
  require_feasible(spec, profile);
  for (PlayerId i = 0; i < spec.num_players(); ++i) {
    const auto check = is_best_response(spec, profile, i, tol);
    if (!check.is_best) return {EquilibriumClass::Kind::not_equilibrium, i, check.improvement};
  }
  const Graph& g = spec.graph();
  for (ArcId a = 0; a < g.num_arcs(); ++a)
    if (profile[a] != profile[g.reverse(a)]) return {EquilibriumClass::Kind::optimistic, std::nullopt, 0.0};
  return {EquilibriumClass::Kind::pessimistic, std::nullopt, 0.0};
}

}  // namespace resalloc
