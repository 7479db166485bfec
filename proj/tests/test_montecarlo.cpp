#include <gtest/gtest.h>

#include <cmath>

#include "rescue_sfs/montecarlo.hpp"

using namespace rescue_sfs;
using namespace rescue_sfs::mc;

namespace {

ReplicateOptions small_options(unsigned workers, std::uint64_t chunk) {
  ReplicateOptions ro;
  ro.t_obs = 3.0;
  ro.replicates = 300;
  ro.seed = 123;
  ro.max_i = 8;
  ro.window_x = {0.5, 1.0};
  ro.workers = workers;
  ro.chunk_size = chunk;
  return ro;
}

ModelParams small_params() {
  auto p = reference_params();
  p.n_init = 100;
  p.gamma_n_override = 0.05;
  return p;
}

}  // namespace

TEST(MonteCarlo, WorkerCountDoesNotChangeResults) {
  const auto p = small_params();
  const auto a = replicate_sfs(p, small_options(1, 64));
  const auto b = replicate_sfs(p, small_options(3, 64));
  ASSERT_EQ(a.replicates(), 300u);
  for (std::size_t i = 0; i < a.max_i; ++i) {
    EXPECT_EQ(a.total[i].mean(), b.total[i].mean());
    EXPECT_EQ(a.total[i].variance(), b.total[i].variance());
    EXPECT_EQ(a.bar[i].mean(), b.bar[i].mean());
  }
  for (std::size_t k = 0; k < a.window_x.size(); ++k) EXPECT_EQ(a.win_under[k].mean(), b.win_under[k].mean());
  EXPECT_EQ(a.ancestral_count.mean(), b.ancestral_count.mean());
}

TEST(MonteCarlo, ChunkSizeOnlyChangesRounding) {
  const auto p = small_params();
  const auto a = replicate_sfs(p, small_options(1, 64));
  const auto b = replicate_sfs(p, small_options(1, 7));
  for (std::size_t i = 0; i < a.max_i; ++i) {
    EXPECT_NEAR(a.total[i].mean(), b.total[i].mean(), 1e-9 * (1.0 + a.total[i].mean()));
    EXPECT_NEAR(a.total[i].variance(), b.total[i].variance(), 1e-9 * (1.0 + a.total[i].variance()));
  }
}

TEST(MonteCarlo, PerReplicateRowsMatchAggregate) {
  auto ro = small_options(2, 50);
  ro.keep_per_replicate = true;
  const auto st = replicate_sfs(small_params(), ro);
  ASSERT_EQ(st.rows.size(), 300u);
  for (std::size_t k = 0; k < st.rows.size(); ++k) EXPECT_EQ(st.rows[k].replicate, k);
  double sum = 0.0;
  for (const auto& r : st.rows) sum += static_cast<double>(r.total[0]);
  EXPECT_NEAR(sum / 300.0, st.total[0].mean(), 1e-9);
}

TEST(MonteCarlo, DegenerateRunsGiveZeros) {
  auto p = small_params();
  p.gamma_n_override = 0.0;
  p.omega = 0.0;
  auto ro = small_options(1, 256);
  ro.replicates = 2;
  const auto st = replicate_sfs(p, ro);
  for (std::size_t i = 0; i < st.max_i; ++i) {
    EXPECT_EQ(st.total[i].mean(), 0.0);
    EXPECT_EQ(st.total[i].variance(), 0.0);
  }
  EXPECT_EQ(st.ancestral_count.mean(), 0.0);
}

TEST(MonteCarlo, InvalidOptions) {
  auto ro = small_options(1, 256);
  ro.replicates = 1;
  EXPECT_THROW(replicate_sfs(small_params(), ro), std::invalid_argument);
  ro = small_options(1, 0);
  EXPECT_THROW(replicate_sfs(small_params(), ro), std::invalid_argument);
  ro = small_options(1, 256);
  ro.window_x = {2.0};
  ro.window_x2 = 1.0;
  EXPECT_THROW(replicate_sfs(small_params(), ro), std::invalid_argument);
}

TEST(MonteCarlo, FailureNamesEarliestReplicate) {
  auto ro = small_options(3, 16);
  ro.sim.max_population = 100;  // fails at the first net birth
  try {
    replicate_sfs(small_params(), ro);
    FAIL() << "expected ReplicateFailure";
  } catch (const ReplicateFailure& e) {
    // rerunning sequentially reports the same replicate
    ro.workers = 1;
    try {
      replicate_sfs(small_params(), ro);
      FAIL() << "sequential run did not fail";
    } catch (const ReplicateFailure& f) {
      EXPECT_EQ(e.replicate, f.replicate);
    }
    EXPECT_NE(std::string(e.what()).find("replicate"), std::string::npos);
  }
}

TEST(MonteCarlo, RunChunkedMergesInOrder) {
  struct Seq {
    std::vector<std::uint64_t> v;
    void merge(const Seq& o) { v.insert(v.end(), o.v.begin(), o.v.end()); }
  };
  const auto s = run_chunked<Seq>(
      1000, 4, 33, [] { return Seq{}; }, [](std::uint64_t k, Seq& acc) { acc.v.push_back(k); });
  ASSERT_EQ(s.v.size(), 1000u);
  for (std::uint64_t k = 0; k < 1000; ++k) EXPECT_EQ(s.v[k], k);
}

TEST(Compare, SelfComparisonPasses) {
  std::vector<RunningStats> emp(3);
  for (int k = 0; k < 3; ++k)
    for (double v : {1.0, 2.0, 3.0}) emp[k].add(v + k);
  TheoryCurve th{{1, 2, 3}, {2, 3, 4}, {2, 3, 4}};
  const auto z = compare({1, 2, 3}, emp, th, CompareMode::z_score, 3.0);
  EXPECT_EQ(z.pass_rate, 1.0);
  for (const auto& r : z.rows) EXPECT_EQ(r.z, 0.0);
  const auto rel = compare({1, 2, 3}, emp, th, CompareMode::relative, 0.01);
  EXPECT_TRUE(rel.passed(1.0));

  TheoryCurve off{{1, 2, 3}, {2, 3, 40}, {2, 3, std::nan("")}};
  const auto r2 = compare({1, 2, 3}, emp, off, CompareMode::relative, 0.2);
  EXPECT_NEAR(r2.pass_rate, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r2.rows[2].relative_gap, 36.0 / 40.0, 1e-12);
}

TEST(Compare, IndexMismatchThrows) {
  std::vector<RunningStats> emp(2);
  TheoryCurve th{{1, 3}, {0, 0}, {0, 0}};
  EXPECT_THROW(compare({1, 2}, emp, th, CompareMode::z_score, 3.0), std::invalid_argument);
  EXPECT_THROW(compare({1}, emp, th, CompareMode::z_score, 3.0), std::invalid_argument);
}
