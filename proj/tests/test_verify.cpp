#include <gtest/gtest.h>

#include "resalloc/resalloc.hpp"

using namespace resalloc;

TEST(VerifySuite, AllChecksPass) {
  for (const auto& r : verify_suite()) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}

TEST(VerifySuite, BrokenMatchDownIsCaught) {
  const checks::MatchDownFn broken = [](const GameSpec& spec, const RealProfile& p) {
    RealProfile out = match_down(spec, p);
    if (out.size() > 0) out[0] = 0.0;
    return out;
  };
  const auto r = checks::price_of_stability(5, broken);
  EXPECT_FALSE(r.passed);
  EXPECT_NE(r.detail.find("classified"), std::string::npos) << r.detail;
}

TEST(VerifySuite, SequentialConvergenceOnFewInstances) {
  const auto r = checks::sequential_convergence(20);
  EXPECT_TRUE(r.passed) << r.detail;
}
