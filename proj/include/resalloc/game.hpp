#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "resalloc/utility.hpp"

namespace resalloc {

using PlayerId = std::size_t;
using ArcId = std::size_t;   // directed edge (i -> j)
using EdgeId = std::size_t;  // unordered edge {i, j}

enum class Behavior { pessimistic, optimistic };

inline std::string_view behavior_name(Behavior b) {
  return b == Behavior::pessimistic ? "pessimistic" : "optimistic";
}

inline Behavior parse_behavior(std::string_view s) {
  if (s == "pessimistic") return Behavior::pessimistic;
  if (s == "optimistic") return Behavior::optimistic;
  throw std::invalid_argument("unknown behavior '" + std::string(s) + "'");
}

// Undirected interaction graph in compressed adjacency form. Each player's
// arcs are contiguous and ordered by ascending neighbor index, so "ascending
// neighbor index" tie-breaking is plain iteration order.
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t n, const std::vector<std::pair<PlayerId, PlayerId>>& edges)
      : n_(n), edges_(edges), offsets_(n + 1, 0) {
    for (const auto& [i, j] : edges_) {
      if (i >= n || j >= n) throw std::invalid_argument("edge endpoint out of range");
      if (i == j) throw std::invalid_argument("self-loops are not allowed");
      ++offsets_[i + 1];
      ++offsets_[j + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());

    struct Slot {
      PlayerId head;
      EdgeId edge;
    };
    std::vector<Slot> slots(offsets_[n]);
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (EdgeId e = 0; e < edges_.size(); ++e) {
      const auto [i, j] = edges_[e];
      slots[fill[i]++] = {j, e};
      slots[fill[j]++] = {i, e};
    }
    for (PlayerId i = 0; i < n; ++i) {
      auto first = slots.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
      auto last = slots.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
      std::sort(first, last, [](const Slot& a, const Slot& b) { return a.head < b.head; });
      for (auto it = first; it != last && it + 1 != last; ++it)
        if (it->head == (it + 1)->head) throw std::invalid_argument("duplicate edge");
    }

    heads_.resize(slots.size());
    tails_.resize(slots.size());
    arc_edge_.resize(slots.size());
    reverse_.resize(slots.size());
    edge_arcs_.assign(edges_.size(), {0, 0});
    for (PlayerId i = 0; i < n; ++i) {
      for (ArcId a = offsets_[i]; a < offsets_[i + 1]; ++a) {
        heads_[a] = slots[a].head;
        tails_[a] = i;
        arc_edge_[a] = slots[a].edge;
        auto& ends = edge_arcs_[slots[a].edge];
        (edges_[slots[a].edge].first == i ? ends.first : ends.second) = a;
      }
    }
    for (EdgeId e = 0; e < edges_.size(); ++e) {
      reverse_[edge_arcs_[e].first] = edge_arcs_[e].second;
      reverse_[edge_arcs_[e].second] = edge_arcs_[e].first;
    }
  }

  std::size_t num_players() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_arcs() const { return heads_.size(); }

  std::size_t degree(PlayerId i) const { return offsets_[i + 1] - offsets_[i]; }
  ArcId arc_begin(PlayerId i) const { return offsets_[i]; }
  ArcId arc_end(PlayerId i) const { return offsets_[i + 1]; }
  std::span<const PlayerId> neighbors(PlayerId i) const {
    return {heads_.data() + offsets_[i], degree(i)};
  }

  PlayerId arc_tail(ArcId a) const { return tails_[a]; }
  PlayerId arc_head(ArcId a) const { return heads_[a]; }
  ArcId reverse(ArcId a) const { return reverse_[a]; }
  EdgeId arc_edge(ArcId a) const { return arc_edge_[a]; }

  // Endpoints in the orientation the edge was declared with.
  std::pair<PlayerId, PlayerId> edge(EdgeId e) const { return edges_[e]; }
  // Arcs (first -> second) and (second -> first) of edge e.
  std::pair<ArcId, ArcId> edge_arcs(EdgeId e) const { return edge_arcs_[e]; }

  std::optional<ArcId> find_arc(PlayerId i, PlayerId j) const {
    const auto nb = neighbors(i);
    const auto it = std::lower_bound(nb.begin(), nb.end(), j);
    if (it == nb.end() || *it != j) return std::nullopt;
    return offsets_[i] + static_cast<std::size_t>(it - nb.begin());
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::pair<PlayerId, PlayerId>> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<PlayerId> heads_;
  std::vector<PlayerId> tails_;
  std::vector<EdgeId> arc_edge_;
  std::vector<ArcId> reverse_;
  std::vector<std::pair<ArcId, ArcId>> edge_arcs_;
};

struct EdgeSpec {
  PlayerId i = 0;
  PlayerId j = 0;
  double w_ij = 0.0;
  double w_ji = 0.0;
  UtilitySpec u_ij;
  UtilitySpec u_ji;

  friend bool operator==(const EdgeSpec&, const EdgeSpec&) = default;
};

// A game instance. Structural errors (bad endpoints, size mismatches,
// non-positive eta) throw on construction; the numeric invariants are
// reported by validate_game so that broken instances can still be inspected.
class GameSpec {
 public:
  GameSpec() = default;

  GameSpec(std::size_t n, double eta, std::vector<double> budgets, std::vector<Behavior> behaviors,
           std::vector<EdgeSpec> edges)
      : eta_(eta), budgets_(std::move(budgets)), behaviors_(std::move(behaviors)), edges_(std::move(edges)) {
    if (!(eta_ > 0.0) || !std::isfinite(eta_)) throw std::invalid_argument("eta must be positive and finite");
    if (budgets_.size() != n) throw std::invalid_argument("budget count does not match player count");
    if (behaviors_.size() != n) throw std::invalid_argument("behavior count does not match player count");
    std::vector<std::pair<PlayerId, PlayerId>> pairs;
    pairs.reserve(edges_.size());
    for (const auto& e : edges_) pairs.emplace_back(e.i, e.j);
    graph_ = Graph(n, pairs);

    weights_.resize(graph_.num_arcs());
    utilities_.resize(graph_.num_arcs());
    for (EdgeId e = 0; e < edges_.size(); ++e) {
      const auto [fwd, bwd] = graph_.edge_arcs(e);
      weights_[fwd] = edges_[e].w_ij;
      weights_[bwd] = edges_[e].w_ji;
      utilities_[fwd] = edges_[e].u_ij;
      utilities_[bwd] = edges_[e].u_ji;
    }
    budget_units_.resize(n);
    for (PlayerId i = 0; i < n; ++i) budget_units_[i] = std::llround(budgets_[i] / eta_);
  }

  const Graph& graph() const { return graph_; }
  std::size_t num_players() const { return graph_.num_players(); }
  double eta() const { return eta_; }

  double budget(PlayerId i) const { return budgets_[i]; }
  // Budget in eta units; exact when the budget is a multiple of eta.
  std::int64_t budget_units(PlayerId i) const { return budget_units_[i]; }
  Behavior behavior(PlayerId i) const { return behaviors_[i]; }

  double weight(ArcId a) const { return weights_[a]; }
  const UtilitySpec& utility(ArcId a) const { return utilities_[a]; }

  const std::vector<EdgeSpec>& edges() const { return edges_; }
  const std::vector<double>& budgets() const { return budgets_; }
  const std::vector<Behavior>& behaviors() const { return behaviors_; }

  GameSpec with_behaviors(std::vector<Behavior> behaviors) const {
    return GameSpec(num_players(), eta_, budgets_, std::move(behaviors), edges_);
  }
  GameSpec with_uniform_behavior(Behavior b) const {
    return with_behaviors(std::vector<Behavior>(num_players(), b));
  }

  friend bool operator==(const GameSpec& a, const GameSpec& b) {
    return a.num_players() == b.num_players() && a.eta_ == b.eta_ && a.budgets_ == b.budgets_ &&
           a.behaviors_ == b.behaviors_ && a.edges_ == b.edges_;
  }

 private:
  Graph graph_;
  double eta_ = 1.0;
  std::vector<double> budgets_;
  std::vector<Behavior> behaviors_;
  std::vector<EdgeSpec> edges_;
  std::vector<double> weights_;
  std::vector<UtilitySpec> utilities_;
  std::vector<std::int64_t> budget_units_;
};

inline constexpr double kWeightSumTolerance = 1e-9;

struct Violation {
  std::string message;
  std::optional<PlayerId> player;
  std::optional<EdgeId> edge;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

namespace detail {
template <typename... Parts>
std::string concat(const Parts&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  return os.str();
}

inline bool utility_params_valid(const UtilitySpec& u) {
  switch (u.family) {
    case UtilityFamily::power: return u.param > 0.0 && u.param <= 1.0;
    case UtilityFamily::capped_quadratic: return u.param > 0.0;
    default: return true;
  }
}
}  // namespace detail

inline ValidationReport validate_game(const GameSpec& spec) {
  ValidationReport report;
  const Graph& g = spec.graph();
  for (PlayerId i = 0; i < spec.num_players(); ++i) {
    const double beta = spec.budget(i);
    if (!(beta >= 0.0) || !std::isfinite(beta))
      report.violations.push_back({detail::concat("budget of player ", i, " is negative"), i, {}});
    const double units = beta / spec.eta();
    if (std::abs(units - std::round(units)) > 1e-9 * std::max(1.0, std::abs(units)))
      report.violations.push_back({detail::concat("budget of player ", i, " not multiple of eta"), i, {}});
    if (g.degree(i) == 0) continue;
    double sum = 0.0;
    for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a) sum += spec.weight(a);
    if (std::abs(sum - 1.0) > kWeightSumTolerance)
      report.violations.push_back({detail::concat("weights of player ", i, " sum to ", sum), i, {}});
  }
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const auto& es = spec.edges()[e];
    if (!(es.w_ij >= 0.0) || !(es.w_ji >= 0.0))
      report.violations.push_back({detail::concat("negative weight on edge ", es.i, "-", es.j), {}, e});
    if (!detail::utility_params_valid(es.u_ij) || !detail::utility_params_valid(es.u_ji))
      report.violations.push_back({detail::concat("invalid utility parameter on edge ", es.i, "-", es.j), {}, e});
  }
  return report;
}

// Proposal profile f_ij, indexed by arc, in eta units. The integer
// instantiation is the grid state of the dynamics; the real instantiation
// carries convex combinations and optimizer output.
template <typename Amount>
class BasicProfile {
  static_assert(std::is_arithmetic_v<Amount>);

 public:
  using amount_type = Amount;

  BasicProfile() = default;
  explicit BasicProfile(const Graph& g) : prop_(g.num_arcs(), Amount{0}) {}
  explicit BasicProfile(std::vector<Amount> proposals) : prop_(std::move(proposals)) {}

  Amount operator[](ArcId a) const { return prop_[a]; }
  Amount& operator[](ArcId a) { return prop_[a]; }
  std::size_t size() const { return prop_.size(); }
  std::span<const Amount> values() const { return prop_; }

  friend bool operator==(const BasicProfile&, const BasicProfile&) = default;

 private:
  std::vector<Amount> prop_;
};

using FrequencyProfile = BasicProfile<std::int64_t>;
using RealProfile = BasicProfile<double>;

template <typename Amount>
RealProfile to_real(const BasicProfile<Amount>& p) {
  std::vector<double> v(p.values().begin(), p.values().end());
  return RealProfile(std::move(v));
}

// Budget of player i expressed in the profile's amount type.
template <typename Amount>
Amount budget_amount(const GameSpec& spec, PlayerId i) {
  return static_cast<Amount>(spec.budget_units(i));
}

template <typename Amount>
constexpr Amount feasibility_slack(Amount budget) {
  if constexpr (std::is_integral_v<Amount>) {
    return 0;
  } else {
    return 1e-9 * std::max<Amount>(1, budget);
  }
}

class InfeasibleProfile : public std::invalid_argument {
 public:
  InfeasibleProfile(PlayerId player, const std::string& what) : std::invalid_argument(what), player_(player) {}
  PlayerId player() const { return player_; }

 private:
  PlayerId player_;
};

// First player whose proposals are negative or exceed their budget.
template <typename Amount>
std::optional<PlayerId> find_infeasible_player(const GameSpec& spec, const BasicProfile<Amount>& profile) {
  const Graph& g = spec.graph();
  if (profile.size() != g.num_arcs()) return spec.num_players() == 0 ? std::nullopt : std::optional<PlayerId>(0);
  for (PlayerId i = 0; i < spec.num_players(); ++i) {
    Amount sum{0};
    for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a) {
      if (profile[a] < Amount{0}) return i;
      sum += profile[a];
    }
    const Amount beta = budget_amount<Amount>(spec, i);
    if (sum > beta + feasibility_slack(beta)) return i;
  }
  return std::nullopt;
}

template <typename Amount>
void require_feasible(const GameSpec& spec, const BasicProfile<Amount>& profile) {
  if (profile.size() != spec.graph().num_arcs())
    throw std::invalid_argument("profile does not match the game's edge set");
  if (auto bad = find_infeasible_player(spec, profile))
    throw InfeasibleProfile(*bad, detail::concat("proposals of player ", *bad, " are infeasible"));
}

template <typename Amount>
Amount agreed(const BasicProfile<Amount>& p, const Graph& g, ArcId a) {
  return std::min(p[a], p[g.reverse(a)]);
}

template <typename Amount>
struct BasicOutcomeSummary {
  std::vector<Amount> agreed;  // per edge
  std::vector<Amount> slack;   // per player
  Amount total_slack{0};
  std::vector<std::vector<PlayerId>> win;   // j with f_ij < f_ji
  std::vector<std::vector<PlayerId>> lose;  // j with f_ij >= f_ji
};

using OutcomeSummary = BasicOutcomeSummary<std::int64_t>;

template <typename Amount>
BasicOutcomeSummary<Amount> outcome_summary(const GameSpec& spec, const BasicProfile<Amount>& profile) {
  require_feasible(spec, profile);
  const Graph& g = spec.graph();
  BasicOutcomeSummary<Amount> out;
  out.agreed.resize(g.num_edges());
  for (EdgeId e = 0; e < g.num_edges(); ++e) out.agreed[e] = agreed(profile, g, g.edge_arcs(e).first);
  out.slack.resize(spec.num_players());
  out.win.resize(spec.num_players());
  out.lose.resize(spec.num_players());
  for (PlayerId i = 0; i < spec.num_players(); ++i) {
    Amount used{0};
    for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a) {
      used += out.agreed[g.arc_edge(a)];
      (profile[a] < profile[g.reverse(a)] ? out.win : out.lose)[i].push_back(g.arc_head(a));
    }
    out.slack[i] = std::max(Amount{0}, budget_amount<Amount>(spec, i) - used);
    out.total_slack += out.slack[i];
  }
  return out;
}

template <typename Amount>
Amount player_slack(const GameSpec& spec, const BasicProfile<Amount>& profile, PlayerId i) {
  const Graph& g = spec.graph();
  Amount used{0};
  for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a) used += agreed(profile, g, a);
  return budget_amount<Amount>(spec, i) - used;
}

template <typename Amount>
Amount total_slack(const GameSpec& spec, const BasicProfile<Amount>& profile) {
  Amount sum{0};
  for (PlayerId i = 0; i < spec.num_players(); ++i) sum += player_slack(spec, profile, i);
  return sum;
}

template <typename Amount>
bool has_empty_win_set(const GameSpec& spec, const BasicProfile<Amount>& profile, PlayerId i) {
  const Graph& g = spec.graph();
  for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a)
    if (profile[a] < profile[g.reverse(a)]) return false;
  return true;
}

/// Utility of player i: weighted sum of edge utilities at the agreed amounts.
/// Slack carries no utility.
template <typename Amount>
double player_utility(const GameSpec& spec, const BasicProfile<Amount>& profile, PlayerId i) {
  const Graph& g = spec.graph();
  double total = 0.0;
  for (ArcId a = g.arc_begin(i); a < g.arc_end(i); ++a)
    total += spec.weight(a) * eval(spec.utility(a), static_cast<double>(agreed(profile, g, a)) * spec.eta());
  return total;
}

template <typename Amount>
double social_welfare(const GameSpec& spec, const BasicProfile<Amount>& profile) {
  double total = 0.0;
  for (PlayerId i = 0; i < spec.num_players(); ++i) total += player_utility(spec, profile, i);
  return total;
}

struct PlayerPartition {
  std::vector<PlayerId> v1;  // players with an empty win set
  std::vector<PlayerId> v2;  // everyone else
};

/// Splits players by whether any neighbor out-proposes them.
template <typename Amount>
PlayerPartition partition_players(const GameSpec& spec, const BasicProfile<Amount>& profile) {
  require_feasible(spec, profile);
  PlayerPartition out;
  for (PlayerId i = 0; i < spec.num_players(); ++i)
    (has_empty_win_set(spec, profile, i) ? out.v1 : out.v2).push_back(i);
  return out;
}

}  // namespace resalloc
