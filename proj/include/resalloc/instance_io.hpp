#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "resalloc/dynamics.hpp"
#include "resalloc/game.hpp"
#include "resalloc/utility.hpp"

namespace resalloc {

using json = nlohmann::ordered_json;

struct InstanceDocument {
  GameSpec spec;
  std::optional<std::vector<std::int64_t>> ranking;
  std::optional<FrequencyProfile> suggested_init;

  friend bool operator==(const InstanceDocument&, const InstanceDocument&) = default;
};

class InvalidInstance : public std::runtime_error {
 public:
  InvalidInstance(ValidationReport report, const std::string& what)
      : std::runtime_error(what), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

inline json utility_to_json(const UtilitySpec& u) {
  json j = {{"family", std::string(family_name(u.family))}};
  if (has_param(u.family)) j["param"] = u.param;
  return j;
}

inline UtilitySpec utility_from_json(const json& j) {
  const auto family = parse_family(j.at("family").get<std::string>());
  switch (family) {
    case UtilityFamily::linear: return UtilitySpec::linear();
    case UtilityFamily::sqrt: return UtilitySpec::sqrt();
    case UtilityFamily::log1p: return UtilitySpec::log1p();
    case UtilityFamily::power: return UtilitySpec::power(j.at("param").get<double>());
    case UtilityFamily::capped_quadratic: return UtilitySpec::capped_quadratic(j.at("param").get<double>());
  }
  throw std::invalid_argument("unknown utility family");
}

// Proposals as [f_ij, f_ji] pairs aligned with the edge list.
inline json profile_to_json(const GameSpec& spec, const FrequencyProfile& p) {
  const Graph& g = spec.graph();
  json out = json::array();
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const auto [fwd, bwd] = g.edge_arcs(e);
    out.push_back(json::array({p[fwd], p[bwd]}));
  }
  return out;
}

inline FrequencyProfile profile_from_json(const GameSpec& spec, const json& j) {
  const Graph& g = spec.graph();
  if (!j.is_array() || j.size() != g.num_edges())
    throw std::invalid_argument("profile must list one [f_ij, f_ji] pair per edge");
  FrequencyProfile p(g);
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const auto [fwd, bwd] = g.edge_arcs(e);
    p[fwd] = j[e].at(0).get<std::int64_t>();
    p[bwd] = j[e].at(1).get<std::int64_t>();
  }
  return p;
}

inline json instance_to_json(const InstanceDocument& doc) {
  const GameSpec& spec = doc.spec;
  json j;
  j["n"] = spec.num_players();
  j["eta"] = spec.eta();
  json budgets = json::array();
  for (PlayerId i = 0; i < spec.num_players(); ++i) {
    const double units = spec.budget(i) / spec.eta();
    if (std::abs(units - std::round(units)) > 1e-9 * std::max(1.0, std::abs(units)))
      throw std::invalid_argument(detail::concat("budget of player ", i, " is not a multiple of eta"));
    budgets.push_back(spec.budget_units(i));
  }
  j["budgets"] = budgets;
  json behaviors = json::array();
  for (Behavior b : spec.behaviors()) behaviors.push_back(std::string(behavior_name(b)));
  j["behaviors"] = behaviors;
  json edges = json::array();
  for (const auto& e : spec.edges())
    edges.push_back({{"i", e.i},
                     {"j", e.j},
                     {"w_ij", e.w_ij},
                     {"w_ji", e.w_ji},
                     {"utility_ij", utility_to_json(e.u_ij)},
                     {"utility_ji", utility_to_json(e.u_ji)}});
  j["edges"] = edges;
  if (doc.ranking) j["ranking"] = *doc.ranking;
  if (doc.suggested_init) j["init"] = profile_to_json(spec, *doc.suggested_init);
  return j;
}

/// Parses and validates an instance document. Malformed documents throw
/// std::invalid_argument (or a json exception); documents that parse but break
/// a game invariant throw InvalidInstance carrying the full report.
inline InstanceDocument instance_from_json(const json& j) {
  const auto n = j.at("n").get<std::size_t>();
  const auto eta = j.at("eta").get<double>();
  std::vector<double> budgets;
  for (const auto& b : j.at("budgets")) budgets.push_back(static_cast<double>(b.get<std::int64_t>()) * eta);
  std::vector<Behavior> behaviors;
  for (const auto& b : j.at("behaviors")) behaviors.push_back(parse_behavior(b.get<std::string>()));
  std::vector<EdgeSpec> edges;
  for (const auto& e : j.at("edges"))
    edges.push_back({e.at("i").get<PlayerId>(), e.at("j").get<PlayerId>(), e.at("w_ij").get<double>(),
                     e.at("w_ji").get<double>(), utility_from_json(e.at("utility_ij")),
                     utility_from_json(e.at("utility_ji"))});

  InstanceDocument doc{GameSpec(n, eta, std::move(budgets), std::move(behaviors), std::move(edges)), std::nullopt,
                       std::nullopt};
  auto report = validate_game(doc.spec);
  if (!report.ok())
    throw InvalidInstance(report, "instance failed validation: " + report.violations.front().message);
  if (j.contains("ranking")) doc.ranking = j.at("ranking").get<std::vector<std::int64_t>>();
  if (j.contains("init")) {
    doc.suggested_init = profile_from_json(doc.spec, j.at("init"));
    require_feasible(doc.spec, *doc.suggested_init);
  }
  return doc;
}

inline std::string dump_instance(const InstanceDocument& doc) { return instance_to_json(doc).dump(2) + "\n"; }

inline void save_instance(const std::string& path, const InstanceDocument& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << dump_instance(doc);
}

inline InstanceDocument load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return instance_from_json(json::parse(in));
}

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

/// One trace line. With `full_profile` the proposals are included whenever the
/// record still carries them.
inline json record_to_json(const GameSpec& spec, const RoundRecord& r, bool full_profile) {
  json j;
  j["t"] = r.t;
  if (r.mover) {
    j["mover"] = *r.mover;
  } else {
    j["mover"] = "all";
  }
  j["hash"] = hash_hex(r.profile_hash);
  j["total_slack"] = r.total_slack;
  j["welfare"] = r.welfare;
  if (r.potential) j["potential"] = *r.potential;
  j["v1"] = r.v1_set;
  if (full_profile && r.profile) j["profile"] = profile_to_json(spec, *r.profile);
  return j;
}

inline void write_trace(std::ostream& out, const GameSpec& spec, const Trace& trace, bool full_profile) {
  for (const auto& r : trace.records()) out << record_to_json(spec, r, full_profile).dump() << "\n";
}

}  // namespace resalloc
