#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "resalloc/analysis.hpp"
#include "resalloc/dynamics.hpp"
#include "resalloc/generators.hpp"
#include "resalloc/instance_io.hpp"

namespace resalloc {

enum class BehaviorSetting { all_pessimistic, all_optimistic, per_player };

struct TorusSource {
  std::size_t width = 10;
  std::size_t height = 10;
  double beta = 1000.0;
  double eta = 1.0;
  std::uint64_t weight_seed = 1;
  UtilitySpec utility = UtilitySpec::sqrt();
};

struct ExperimentConfig {
  TorusSource torus;
  std::optional<std::string> instance_file;  // overrides the generator when set
  std::size_t runs = 1000;
  std::uint64_t seed = 1;  // run r uses seed + r
  BehaviorSetting behavior = BehaviorSetting::all_pessimistic;
  std::size_t max_rounds = 1'000'000;
  double tol = kDefaultUtilityTol;
  std::size_t bins = 40;
  std::size_t threads = 0;  // 0: hardware concurrency
  OptimizerConfig optimizer;
};

struct RunRecord {
  std::uint64_t seed = 0;
  double welfare = 0.0;
  double ratio = 0.0;
  std::size_t rounds = 0;
  bool converged = false;
};

struct HistogramReport {
  std::vector<double> bin_edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t mode_count = 0;
  std::size_t non_converged_count = 0;
  double opt_welfare = 0.0;
  std::vector<RunRecord> runs;
};

/// Number of modes: 3-bin moving average, then maximal runs of equal values
/// that are strictly higher than both neighboring bins (the ends count as
/// lower).
inline std::size_t smoothed_mode_count(const std::vector<std::size_t>& counts) {
  const std::size_t k = counts.size();
  if (k == 0) return 0;
  std::vector<double> s(k);
  for (std::size_t b = 0; b < k; ++b) {
    double sum = 0.0;
    int used = 0;
    for (std::size_t c = (b == 0 ? 0 : b - 1); c <= std::min(k - 1, b + 1); ++c) {
      sum += static_cast<double>(counts[c]);
      ++used;
    }
    s[b] = sum / used;
  }
  std::size_t modes = 0;
  for (std::size_t b = 0; b < k;) {
    std::size_t e = b;
    while (e + 1 < k && s[e + 1] == s[b]) ++e;
    const bool left_lower = b == 0 || s[b - 1] < s[b];
    const bool right_lower = e + 1 == k || s[e + 1] < s[b];
    if (left_lower && right_lower) ++modes;
    b = e + 1;
  }
  return modes;
}

/// Histogram with `bins` equal bins over [min ratio, max(1, max ratio)].
inline void fill_histogram(HistogramReport& report, std::size_t bins) {
  if (bins < 2) throw std::invalid_argument("at least two bins are required");
  std::vector<double> ratios;
  for (const auto& r : report.runs)
    if (r.converged) ratios.push_back(r.ratio);
  report.counts.assign(bins, 0);
  report.bin_edges.assign(bins + 1, 0.0);
  report.mean = report.stddev = 0.0;
  report.mode_count = 0;
  if (ratios.empty()) return;

  const auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
  double lo = *mn;
  double hi = std::max(1.0, *mx);
  if (!(hi > lo)) lo = hi - 1e-9;
  for (std::size_t b = 0; b <= bins; ++b) report.bin_edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
  report.bin_edges[bins] = hi;
  for (double r : ratios) {
    auto b = static_cast<std::size_t>((r - lo) / (hi - lo) * static_cast<double>(bins));
    ++report.counts[std::min(b, bins - 1)];
  }

  double sum = 0.0;
  for (double r : ratios) sum += r;
  report.mean = sum / static_cast<double>(ratios.size());
  double ss = 0.0;
  for (double r : ratios) ss += (r - report.mean) * (r - report.mean);
  report.stddev = ratios.size() > 1 ? std::sqrt(ss / static_cast<double>(ratios.size() - 1)) : 0.0;
  report.mode_count = smoothed_mode_count(report.counts);
}

inline InstanceDocument experiment_instance(const ExperimentConfig& cfg) {
  if (cfg.instance_file) return load_instance(*cfg.instance_file);
  const auto& t = cfg.torus;
  return gen_torus_grid(t.width, t.height, t.beta, t.eta, t.weight_seed, t.utility);
}

inline GameSpec apply_behavior(const GameSpec& spec, BehaviorSetting b) {
  switch (b) {
    case BehaviorSetting::all_pessimistic: return spec.with_uniform_behavior(Behavior::pessimistic);
    case BehaviorSetting::all_optimistic: return spec.with_uniform_behavior(Behavior::optimistic);
    case BehaviorSetting::per_player: return spec;
  }
  return spec;
}

/// One sequential run per seed from a random start with a random order.
/// Runs are spread over threads; results are stored by run index.
inline HistogramReport run_batch_experiment(const GameSpec& spec, double opt_welfare, const ExperimentConfig& cfg) {
  if (cfg.runs < 1) throw std::invalid_argument("runs must be at least 1");
  if (cfg.bins < 2) throw std::invalid_argument("at least two bins are required");
  HistogramReport report;
  report.opt_welfare = opt_welfare;
  report.runs.resize(cfg.runs);

  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cfg.runs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto worker = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= cfg.runs) return;
      try {
        const std::uint64_t seed = cfg.seed + r;
        DynamicsConfig dyn;
        dyn.order = OrderPolicy::random_seeded(seed);
        dyn.max_rounds = cfg.max_rounds;
        dyn.tol = cfg.tol;
        dyn.record_trace = false;
        const auto init = init_profile(spec, InitPolicy::random_feasible(seed));
        const auto result = run_sequential(spec, init, dyn);
        RunRecord& rec = report.runs[r];
        rec.seed = seed;
        rec.rounds = result.status.t;
        rec.converged = result.status.kind == TerminationStatus::Kind::converged;
        rec.welfare = social_welfare(spec, result.final_profile);
        rec.ratio = ne_quality(rec.welfare, opt_welfare);
      } catch (...) {
        std::lock_guard lock(failure_lock);
        if (!failure) failure = std::current_exception();
        next = cfg.runs;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (const auto& r : report.runs)
    if (!r.converged) ++report.non_converged_count;
  fill_histogram(report, cfg.bins);
  return report;
}

inline HistogramReport run_batch_experiment(const ExperimentConfig& cfg) {
  const auto doc = experiment_instance(cfg);
  const GameSpec spec = apply_behavior(doc.spec, cfg.behavior);
  const auto opt = global_optimum(spec, cfg.optimizer);
  return run_batch_experiment(spec, opt.welfare, cfg);
}

struct PairedReport {
  HistogramReport optimistic;
  HistogramReport pessimistic;
  double opt_welfare = 0.0;
  bool opt_certified = false;
};

/// Optimistic and pessimistic batches on the same instance and seeds.
inline PairedReport run_paired_experiment(const ExperimentConfig& cfg) {
  const auto doc = experiment_instance(cfg);
  const auto opt = global_optimum(doc.spec, cfg.optimizer);
  PairedReport out;
  out.opt_welfare = opt.welfare;
  out.opt_certified = opt.certified;
  out.optimistic = run_batch_experiment(apply_behavior(doc.spec, BehaviorSetting::all_optimistic), opt.welfare, cfg);
  out.pessimistic =
      run_batch_experiment(apply_behavior(doc.spec, BehaviorSetting::all_pessimistic), opt.welfare, cfg);
  return out;
}

inline void write_histogram_csv(std::ostream& out, const HistogramReport& r) {
  out << "bin_lo,bin_hi,count\n";
  out.precision(17);
  for (std::size_t b = 0; b < r.counts.size(); ++b)
    out << r.bin_edges[b] << "," << r.bin_edges[b + 1] << "," << r.counts[b] << "\n";
}

inline json summary_json(const HistogramReport& r) {
  return {{"mu", r.mean},
          {"sigma", r.stddev},
          {"mode_count", r.mode_count},
          {"non_converged_count", r.non_converged_count},
          {"runs", r.runs.size()},
          {"opt_welfare", r.opt_welfare}};
}

inline void write_runs_csv(std::ostream& out, const HistogramReport& r) {
  out << "seed,welfare,ratio,rounds,converged\n";
  out.precision(17);
  for (const auto& run : r.runs)
    out << run.seed << "," << run.welfare << "," << run.ratio << "," << run.rounds << "," << (run.converged ? 1 : 0)
        << "\n";
}

}  // namespace resalloc
