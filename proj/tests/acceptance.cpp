// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <cstdio>
#include <vector>

#include "resalloc/resalloc.hpp"

namespace {

struct Criterion {
  int id;
  resalloc::CheckResult result;
  double budget_seconds;
};

}  // namespace

int main() {
  using namespace resalloc;
  std::vector<Criterion> rows;
  rows.push_back({1, checks::k5_cycle(), 1.0});
  rows.push_back({2, checks::sequential_convergence(200), 60.0});
  rows.push_back({3, checks::potential_identity(50), 30.0});
  rows.push_back({4, checks::price_of_stability(20), 0.0});
  rows.push_back({5, checks::poa_divergence(), 0.0});
  rows.push_back({6, checks::best_response_oracle(100), 0.0});
  rows.push_back({7, checks::equilibrium_geometry(50, 20), 0.0});
  rows.push_back({8, checks::grid_experiment(1000).check, 600.0});

  bool all = true;
  for (auto& row : rows) {
    auto& r = row.result;
    if (row.budget_seconds > 0.0 && r.seconds > row.budget_seconds) {
      r.passed = false;
      r.detail += detail::concat(" [over time budget of ", row.budget_seconds, " s]");
    }
    all = all && r.passed;
    std::printf("%s criterion %d %s (%.2f s): %s\n", r.passed ? "PASS" : "FAIL", row.id, r.name.c_str(), r.seconds,
                r.detail.c_str());
  }
  std::fflush(stdout);
  return all ? 0 : 1;
}
