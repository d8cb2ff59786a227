// Command-line front end: instance generation, single runs, optimum,
// batch experiments and the regression suite.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "resalloc/resalloc.hpp"

namespace {

using namespace resalloc;

enum ExitCode { kOk = 0, kError = 1, kMaxRounds = 2, kCycle = 3, kInvalid = 4, kVerifyFailed = 5 };

struct UtilityArgs {
  std::string family = "sqrt";
  double param = 0.0;

  UtilitySpec spec() const {
    const auto f = parse_family(family);
    switch (f) {
      case UtilityFamily::linear: return UtilitySpec::linear();
      case UtilityFamily::sqrt: return UtilitySpec::sqrt();
      case UtilityFamily::log1p: return UtilitySpec::log1p();
      case UtilityFamily::power: return UtilitySpec::power(param);
      case UtilityFamily::capped_quadratic: return UtilitySpec::capped_quadratic(param);
    }
    return UtilitySpec::sqrt();
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  std::string kind = "torus";
  std::size_t width = 10, height = 10;
  double beta = 1000.0, eta = 1.0, eps = 0.05;
  std::uint64_t seed = 1;
  UtilityArgs utility;
  std::string behavior = "pessimistic";
  std::string profile = "bad";
  std::size_t n = 10;
  double edge_prob = 0.4;
  bool ranked = false;
  std::string out = "-";
};

int run_gen(const GenArgs& a) {
  InstanceDocument doc;
  if (a.kind == "torus") {
    doc = gen_torus_grid(a.width, a.height, a.beta, a.eta, a.seed, a.utility.spec(), parse_behavior(a.behavior));
  } else if (a.kind == "k5") {
    doc = gen_k5_cycle_instance(a.eps);
  } else if (a.kind == "poa-grid") {
    auto inst = gen_poa_grid_instance(a.width, a.height, a.eps, a.beta);
    doc = inst.doc;
    doc.suggested_init = a.profile == "good" ? inst.f_good : inst.f_bad;
  } else if (a.kind == "random") {
    RandomInstanceOptions opt;
    opt.n = a.n;
    opt.edge_prob = a.edge_prob;
    opt.eta = a.eta;
    const auto units = detail::exact_units(a.beta, a.eta, "budget");
    opt.min_budget_units = opt.max_budget_units = units;
    opt.ranked = a.ranked;
    opt.symmetric_utilities = a.ranked;
    opt.behaviors = a.behavior == "mixed"         ? BehaviorMix::mixed
                    : a.behavior == "optimistic" ? BehaviorMix::optimistic
                                                 : BehaviorMix::pessimistic;
    doc = gen_random_instance(opt, a.seed);
  } else {
    throw std::invalid_argument("unknown generator '" + a.kind + "'");
  }
  write_text(a.out, dump_instance(doc));
  return kOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string instance;
  std::string init = "zero";
  std::uint64_t seed = 0;
  std::string mode = "seq";
  std::string order = "rr";
  std::size_t max_rounds = 1'000'000;
  double tol = kDefaultUtilityTol;
  bool check_invariants = false;
  std::string trace_out;
  std::string trace_mode = "full";
};

int run_simulate(const SimulateArgs& a) {
  const auto doc = load_instance(a.instance);
  const GameSpec& spec = doc.spec;

  InitPolicy init;
  if (a.init == "zero") {
    init = InitPolicy::zero();
  } else if (a.init == "random") {
    init = InitPolicy::random_feasible(a.seed);
  } else if (a.init == "given") {
    if (!doc.suggested_init) throw std::invalid_argument("instance has no suggested start");
    init = InitPolicy::from(*doc.suggested_init);
  } else {
    throw std::invalid_argument("unknown init policy '" + a.init + "'");
  }

  DynamicsConfig cfg;
  cfg.mode = a.mode == "sim" ? DynamicsMode::simultaneous : DynamicsMode::sequential;
  if (a.mode != "sim" && a.mode != "seq") throw std::invalid_argument("mode must be seq or sim");
  cfg.order = a.order == "random" ? OrderPolicy::random_seeded(a.seed) : OrderPolicy::round_robin();
  if (a.order != "random" && a.order != "rr") throw std::invalid_argument("order must be rr or random");
  cfg.max_rounds = a.max_rounds;
  cfg.tol = a.tol;
  cfg.check_invariants = a.check_invariants;
  cfg.record_trace = true;
  if (doc.ranking) {
    try {
      const auto r = RankingSystem::make(spec.graph(), *doc.ranking);
      require_potential_game(spec, r);
      cfg.ranking = r;
    } catch (const std::invalid_argument&) {
      // The ranking does not induce this game's weights; skip the potential.
    }
  }

  const auto res = run_dynamics(spec, init_profile(spec, init), cfg);
  if (!a.trace_out.empty()) {
    std::ofstream out(a.trace_out);
    if (!out) throw std::runtime_error("cannot write " + a.trace_out);
    write_trace(out, spec, res.trace, a.trace_mode == "full");
  }

  json summary;
  summary["status"] = std::string(status_name(res.status.kind));
  summary["rounds"] = res.status.t;
  if (res.status.kind == TerminationStatus::Kind::cycle_detected) {
    summary["cycle_start"] = res.status.start;
    summary["cycle_period"] = res.status.period;
  }
  summary["welfare"] = social_welfare(spec, res.final_profile);
  summary["total_slack"] = total_slack(spec, res.final_profile);
  summary["equilibrium"] = std::string(equilibrium_name(classify_equilibrium(spec, res.final_profile, cfg.tol).kind));
  if (a.check_invariants) summary["suffix_v2_utility_drops"] = res.suffix_v2_utility_drops;
  summary["final_profile"] = profile_to_json(spec, res.final_profile);
  std::cout << summary.dump(2) << "\n";

  switch (res.status.kind) {
    case TerminationStatus::Kind::converged: return kOk;
    case TerminationStatus::Kind::max_rounds_exceeded: return kMaxRounds;
    case TerminationStatus::Kind::cycle_detected: return kCycle;
  }
  return kOk;
}

// ---- optimum ---------------------------------------------------------------

struct OptimumArgs {
  std::string instance;
  OptimizerConfig opt;
};

int run_optimum(const OptimumArgs& a) {
  const auto doc = load_instance(a.instance);
  const auto res = global_optimum(doc.spec, a.opt);
  json out;
  out["welfare"] = res.welfare;
  out["certified"] = res.certified;
  out["iterations"] = res.iterations;
  out["projected_gradient"] = res.grad_norm;
  json x = json::array();
  for (double v : res.profile.x) x.push_back(v);
  out["x"] = x;  // eta units per edge, in instance edge order
  std::cout << out.dump(2) << "\n";
  return kOk;
}

// ---- experiment ------------------------------------------------------------

struct ExperimentArgs {
  std::string config;
  ExperimentConfig cfg;
  UtilityArgs utility;
  std::string instance;
  std::string behavior = "paired";
  std::string out_prefix = "experiment";
};

void apply_config_file(ExperimentArgs& a) {
  std::ifstream in(a.config);
  if (!in) throw std::runtime_error("cannot read " + a.config);
  const json j = json::parse(in);
  auto& c = a.cfg;
  if (j.contains("runs")) c.runs = j["runs"].get<std::size_t>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("bins")) c.bins = j["bins"].get<std::size_t>();
  if (j.contains("threads")) c.threads = j["threads"].get<std::size_t>();
  if (j.contains("max_rounds")) c.max_rounds = j["max_rounds"].get<std::size_t>();
  if (j.contains("tol")) c.tol = j["tol"].get<double>();
  if (j.contains("width")) c.torus.width = j["width"].get<std::size_t>();
  if (j.contains("height")) c.torus.height = j["height"].get<std::size_t>();
  if (j.contains("beta")) c.torus.beta = j["beta"].get<double>();
  if (j.contains("eta")) c.torus.eta = j["eta"].get<double>();
  if (j.contains("weight_seed")) c.torus.weight_seed = j["weight_seed"].get<std::uint64_t>();
  if (j.contains("utility")) c.torus.utility = utility_from_json(j["utility"]);
  if (j.contains("instance")) a.instance = j["instance"].get<std::string>();
  if (j.contains("behavior")) a.behavior = j["behavior"].get<std::string>();
}

void write_report(const std::string& prefix, const HistogramReport& r) {
  std::ofstream hist(prefix + "_hist.csv");
  write_histogram_csv(hist, r);
  std::ofstream runs(prefix + "_runs.csv");
  write_runs_csv(runs, r);
  std::ofstream summary(prefix + "_summary.json");
  summary << summary_json(r).dump(2) << "\n";
  if (!hist || !runs || !summary) throw std::runtime_error("cannot write report files under " + prefix);
}

int run_experiment(ExperimentArgs a, bool utility_given) {
  if (!a.config.empty()) apply_config_file(a);
  if (utility_given) a.cfg.torus.utility = a.utility.spec();
  if (!a.instance.empty()) a.cfg.instance_file = a.instance;

  json out;
  if (a.behavior == "paired") {
    const auto rep = run_paired_experiment(a.cfg);
    write_report(a.out_prefix + "_optimistic", rep.optimistic);
    write_report(a.out_prefix + "_pessimistic", rep.pessimistic);
    out["optimistic"] = summary_json(rep.optimistic);
    out["pessimistic"] = summary_json(rep.pessimistic);
    out["opt_certified"] = rep.opt_certified;
  } else {
    if (a.behavior == "pessimistic") {
      a.cfg.behavior = BehaviorSetting::all_pessimistic;
    } else if (a.behavior == "optimistic") {
      a.cfg.behavior = BehaviorSetting::all_optimistic;
    } else if (a.behavior == "per-player") {
      a.cfg.behavior = BehaviorSetting::per_player;
    } else {
      throw std::invalid_argument("unknown behavior setting '" + a.behavior + "'");
    }
    const auto rep = run_batch_experiment(a.cfg);
    write_report(a.out_prefix, rep);
    out = summary_json(rep);
  }
  std::cout << out.dump(2) << "\n";
  return kOk;
}

// ---- verify ----------------------------------------------------------------

int run_verify() {
  bool all = true;
  for (const auto& r : verify_suite()) {
    all = all && r.passed;
    std::printf("%s %s (%.2f s): %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds, r.detail.c_str());
  }
  return all ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resource-allocation network game: simulation and analysis"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Emit an instance document");
  g->add_option("--kind", gen.kind, "torus | k5 | poa-grid | random")->capture_default_str();
  g->add_option("--width", gen.width)->capture_default_str();
  g->add_option("--height", gen.height)->capture_default_str();
  g->add_option("--beta", gen.beta, "Budget per player")->capture_default_str();
  g->add_option("--eta", gen.eta, "Resource unit")->capture_default_str();
  g->add_option("--eps", gen.eps, "Weight offset for k5 and poa-grid")->capture_default_str();
  g->add_option("--seed", gen.seed, "Weight / instance seed")->capture_default_str();
  g->add_option("--utility", gen.utility.family, "linear | sqrt | log1p | power | capped_quadratic")
      ->capture_default_str();
  g->add_option("--param", gen.utility.param, "Exponent or scale of the utility family");
  g->add_option("--behavior", gen.behavior, "pessimistic | optimistic | mixed (random only)")->capture_default_str();
  g->add_option("--profile", gen.profile, "poa-grid start stored in the document: good | bad")->capture_default_str();
  g->add_option("--n", gen.n, "Players (random)")->capture_default_str();
  g->add_option("--edge-prob", gen.edge_prob, "Edge probability (random)")->capture_default_str();
  g->add_flag("--ranked", gen.ranked, "Ranking-induced weights and symmetric utilities (random)");
  g->add_option("--out", gen.out, "Output path, - for stdout")->capture_default_str();

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run best-response dynamics once");
  s->add_option("--instance", sim.instance)->required();
  s->add_option("--init", sim.init, "zero | random | given")->capture_default_str();
  s->add_option("--seed", sim.seed)->capture_default_str();
  s->add_option("--mode", sim.mode, "seq | sim")->capture_default_str();
  s->add_option("--order", sim.order, "rr | random")->capture_default_str();
  s->add_option("--max-rounds", sim.max_rounds)->capture_default_str();
  s->add_option("--tol", sim.tol, "Utility tolerance of the best-response test")->capture_default_str();
  s->add_flag("--check-invariants", sim.check_invariants);
  s->add_option("--trace-out", sim.trace_out, "JSON-lines trace file");
  s->add_option("--trace-mode", sim.trace_mode, "full | hash")->capture_default_str();

  OptimumArgs opt;
  auto* o = app.add_subcommand("optimum", "Compute the welfare-maximizing matched profile");
  o->add_option("--instance", opt.instance)->required();
  o->add_option("--step-size", opt.opt.step_size)->capture_default_str();
  o->add_option("--max-iters", opt.opt.max_iters)->capture_default_str();
  o->add_option("--grad-tol", opt.opt.grad_tol)->capture_default_str();
  o->add_option("--projection-iters", opt.opt.projection_iters)->capture_default_str();
  o->add_option("--seed", opt.opt.seed)->capture_default_str();

  ExperimentArgs ex;
  auto* e = app.add_subcommand("experiment", "Batch of seeded runs with histogram output");
  e->add_option("--config", ex.config, "JSON file with the same keys as the flags");
  e->add_option("--runs", ex.cfg.runs)->capture_default_str();
  e->add_option("--seed", ex.cfg.seed, "Base seed; run r uses seed + r")->capture_default_str();
  e->add_option("--behavior", ex.behavior, "paired | pessimistic | optimistic | per-player")->capture_default_str();
  e->add_option("--instance", ex.instance, "Instance file instead of the torus generator");
  e->add_option("--width", ex.cfg.torus.width)->capture_default_str();
  e->add_option("--height", ex.cfg.torus.height)->capture_default_str();
  e->add_option("--beta", ex.cfg.torus.beta)->capture_default_str();
  e->add_option("--eta", ex.cfg.torus.eta)->capture_default_str();
  e->add_option("--weight-seed", ex.cfg.torus.weight_seed)->capture_default_str();
  auto* util_opt = e->add_option("--utility", ex.utility.family);
  e->add_option("--param", ex.utility.param);
  e->add_option("--bins", ex.cfg.bins)->capture_default_str();
  e->add_option("--threads", ex.cfg.threads, "0 uses all cores")->capture_default_str();
  e->add_option("--max-rounds", ex.cfg.max_rounds)->capture_default_str();
  e->add_option("--out-prefix", ex.out_prefix)->capture_default_str();

  auto* v = app.add_subcommand("verify", "Run the regression suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? kOk : kInvalid;  // --help exits cleanly
  }

  try {
    if (*g) return run_gen(gen);
    if (*s) return run_simulate(sim);
    if (*o) return run_optimum(opt);
    if (*e) return run_experiment(ex, util_opt->count() > 0);
    if (*v) return run_verify();
  } catch (const InvalidInstance& err) {
    std::cerr << "error: " << err.what() << "\n";
    for (const auto& viol : err.report().violations) std::cerr << "  " << viol.message << "\n";
    return kInvalid;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kInvalid;
  } catch (const json::exception& err) {
    std::cerr << "error: malformed document: " << err.what() << "\n";
    return kInvalid;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kError;
  }
  return kOk;
}
