#include <gtest/gtest.h>

#include <cmath>

#include "rescue_sfs/random.hpp"
#include "rescue_sfs/stats.hpp"

using namespace rescue_sfs;
using namespace rescue_sfs::stats;

TEST(RunningStats, MatchesTwoPassAndMerges) {
  CounterRng rng(1);
  std::vector<double> xs;
  for (int k = 0; k < 1000; ++k) xs.push_back(rng.exponential(0.5) + 1e6);  // large offset
  RunningStats all;
  for (double x : xs) all.add(x);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= xs.size() - 1;
  EXPECT_NEAR(all.mean(), mean, 1e-8);
  EXPECT_NEAR(all.variance() / var, 1.0, 1e-9);

  // any grouping gives the same moments
  for (std::size_t split : {1u, 17u, 500u, 999u}) {
    RunningStats a, b;
    for (std::size_t k = 0; k < xs.size(); ++k) (k < split ? a : b).add(xs[k]);
    RunningStats ab = a;
    ab.merge(b);
    EXPECT_EQ(ab.count(), all.count());
    EXPECT_NEAR(ab.mean(), all.mean(), 1e-8);
    EXPECT_NEAR(ab.variance() / all.variance(), 1.0, 1e-9);
  }
  RunningStats empty;
  empty.merge(all);
  EXPECT_EQ(empty.mean(), all.mean());
  RunningStats one;
  one.add(1.0);
  EXPECT_THROW(one.ci_half_width(), std::logic_error);
}

TEST(RunningStats, CiCoverage) {
  // 95% CI for the mean of Exp(1) samples of size 200
  int covered = 0;
  for (int e = 0; e < 1000; ++e) {
    CounterRng rng = CounterRng::split(2, e);
    RunningStats s;
    for (int k = 0; k < 200; ++k) s.add(rng.exponential(1.0));
    covered += std::abs(s.mean() - 1.0) <= s.ci_half_width();
  }
  EXPECT_GE(covered, 930);
}

TEST(ChiSquare, SelfConsistentGeometric) {
  CounterRng rng(3);
  const double x = 0.656591;
  std::vector<std::uint64_t> g;
  for (int k = 0; k < 100000; ++k) {
    std::uint64_t v = 1;
    while (!rng.bernoulli(x)) ++v;
    g.push_back(v);
  }
  EXPECT_GT(gof_geometric(g, x).p_value, 1e-3);
  EXPECT_LT(gof_geometric(g, 0.62).p_value, 1e-6);
}

TEST(ChiSquare, PoolingAndErrors) {
  // tail bins with tiny expectations are pooled
  const auto r = chi_square({10, 10, 1, 0, 1}, {10, 10, 1, 0.5, 0.5});
  EXPECT_EQ(r.bins, 2u);
  EXPECT_THROW(chi_square({1, 2}, {1}), std::invalid_argument);
  EXPECT_THROW(gof_geometric(std::vector<std::uint64_t>(200, 1), 0.5), DegenerateSample);
  EXPECT_THROW(gof_geometric(std::vector<std::uint64_t>(10, 1), 0.5), std::invalid_argument);
  EXPECT_NEAR(chi_square_sf(3.841458820694124, 1), 0.05, 1e-12);
}

TEST(Ks, SelfConsistentExponential) {
  CounterRng rng(4);
  std::vector<double> t;
  for (int k = 0; k < 100000; ++k) t.push_back(rng.exponential(1.969773));
  const auto r = gof_exponential(t, 1.969773);
  EXPECT_GT(r.p_value, 1e-3);
  EXPECT_LT(r.statistic, 0.01);
  EXPECT_LT(gof_exponential(t, 1.9).p_value, 1e-6);
  EXPECT_THROW(gof_exponential(std::vector<double>(200, 1.0), 1.0), DegenerateSample);
}

TEST(Ks, KolmogorovTail) {
  // P(sqrt(n) D > 1.358) ~ 0.05 for large n
  EXPECT_NEAR(kolmogorov_sf(1.358 / std::sqrt(1e6), 1000000), 0.05, 1e-3);
  EXPECT_EQ(kolmogorov_sf(0.0, 100), 1.0);
}
