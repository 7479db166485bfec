#pragma once

// Replicate orchestration and theory-vs-empirics comparison.
//
// Replicate k always uses CounterRng::split(seed, k). Replicates are grouped
// into fixed-size chunks; each chunk is accumulated sequentially and chunks
// are merged in index order, so results do not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rescue_sfs/params.hpp"
#include "rescue_sfs/random.hpp"
#include "rescue_sfs/simulator.hpp"
#include "rescue_sfs/stats.hpp"

namespace rescue_sfs::mc {

using stats::RunningStats;

class ReplicateFailure : public std::runtime_error {
 public:
  ReplicateFailure(std::uint64_t index, const std::string& what)
      : std::runtime_error("replicate " + std::to_string(index) + ": " + what), replicate(index) {}
  std::uint64_t replicate;
};

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs body(k, acc) for k in [0, count) over a worker pool. Acc needs a
/// merge(const Acc&) member; make() builds an empty accumulator.
template <class Acc, class Make, class Body>
Acc run_chunked(std::uint64_t count, unsigned workers, std::uint64_t chunk, Make&& make, Body&& body) {
  if (chunk == 0) throw std::invalid_argument("chunk size must be positive");
  const std::uint64_t n_chunks = (count + chunk - 1) / chunk;
  std::vector<std::optional<Acc>> parts(n_chunks);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::uint64_t error_chunk = std::numeric_limits<std::uint64_t>::max();
  std::mutex error_mutex;

  auto work = [&] {
    for (;;) {
      const auto c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        Acc acc = make();
        for (std::uint64_t k = c * chunk; k < std::min(count, (c + 1) * chunk); ++k) body(k, acc);
        parts[c] = std::move(acc);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (c < error_chunk) {  // report the earliest failing chunk deterministically
          error_chunk = c;
          error = std::current_exception();
        }
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::uint64_t>(n_chunks, 1))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  Acc total = make();
  for (auto& p : parts) total.merge(*p);
  return total;
}

struct ReplicateOptions {
  double t_obs = 0.0;
  std::uint64_t replicates = 100;
  std::uint64_t seed = 1;
  std::size_t max_i = 20;
  std::vector<double> window_x;            // lower ends of windows (x, window_x2)
  double window_x2 = kInfinity;
  unsigned workers = 0;                    // 0 = all cores
  std::uint64_t chunk_size = 256;
  bool keep_per_replicate = false;
  sim::SimOptions sim;
};

/// Per-replicate values kept for CSV export.
struct ReplicateRow {
  std::uint64_t replicate = 0;
  std::vector<std::uint64_t> total, bar, under;  // index i-1
};

struct ReplicateStats {
  std::size_t max_i = 0;
  std::vector<RunningStats> total, bar, under;  // index i-1
  std::vector<double> window_x;
  double window_x2 = kInfinity;
  std::vector<RunningStats> win_total, win_bar, win_under;
  RunningStats ancestral_count, z0, z1;
  std::vector<ReplicateRow> rows;
  std::uint64_t seed = 0;
  double t_obs = 0.0;

  ReplicateStats() = default;
  ReplicateStats(std::size_t max_i, std::vector<double> xs, double x2)
      : max_i(max_i), total(max_i), bar(max_i), under(max_i), window_x(std::move(xs)), window_x2(x2),
        win_total(window_x.size()), win_bar(window_x.size()), win_under(window_x.size()) {}

  std::uint64_t replicates() const { return z1.count(); }

  void observe(std::uint64_t replicate, const sim::SimOutcome& outcome, double lambda1, bool keep_row) {
    const auto sfs = sim::extract_sfs(outcome);
    ReplicateRow row{replicate, {}, {}, {}};
    for (std::size_t i = 1; i <= max_i; ++i) {
      total[i - 1].add(static_cast<double>(sfs.at(i)));
      bar[i - 1].add(static_cast<double>(sfs.bar_at(i)));
      under[i - 1].add(static_cast<double>(sfs.under_at(i)));
      if (keep_row) {
        row.total.push_back(sfs.at(i));
        row.bar.push_back(sfs.bar_at(i));
        row.under.push_back(sfs.under_at(i));
      }
    }
    for (std::size_t k = 0; k < window_x.size(); ++k) {
      const auto w = sim::window_counts(sfs, window_x[k], window_x2, outcome.t_obs, lambda1);
      win_total[k].add(static_cast<double>(w.total));
      win_bar[k].add(static_cast<double>(w.bar));
      win_under[k].add(static_cast<double>(w.under));
    }
    ancestral_count.add(static_cast<double>(outcome.ancestral.size()));
    z0.add(static_cast<double>(outcome.z0));
    z1.add(static_cast<double>(outcome.z1));
    if (keep_row) rows.push_back(std::move(row));
  }

  void merge(const ReplicateStats& o) {
    for (std::size_t i = 0; i < max_i; ++i) {
      total[i].merge(o.total[i]);
      bar[i].merge(o.bar[i]);
      under[i].merge(o.under[i]);
    }
    for (std::size_t k = 0; k < window_x.size(); ++k) {
      win_total[k].merge(o.win_total[k]);
      win_bar[k].merge(o.win_bar[k]);
      win_under[k].merge(o.win_under[k]);
    }
    ancestral_count.merge(o.ancestral_count);
    z0.merge(o.z0);
    z1.merge(o.z1);
    rows.insert(rows.end(), o.rows.begin(), o.rows.end());
  }
};

/// Aggregates opt.replicates independent runs; deterministic in
/// (params, t_obs, replicates, seed) whatever the worker count.
inline ReplicateStats replicate_sfs(const ModelParams& params, const ReplicateOptions& opt) {
  const auto dp = derive(params);
  if (opt.replicates < 2) throw std::invalid_argument("replicate_sfs: at least 2 replicates required");
  for (double x : opt.window_x)
    if (!(x >= 0.0 && x < opt.window_x2)) throw std::invalid_argument("replicate_sfs: window needs 0 <= x1 < x2");
  auto make = [&] { return ReplicateStats(opt.max_i, opt.window_x, opt.window_x2); };
  auto body = [&](std::uint64_t k, ReplicateStats& acc) {
    auto rng = CounterRng::split(opt.seed, k);
    try {
      acc.observe(k, sim::run(params, opt.t_obs, rng, opt.sim), dp.lambda1, opt.keep_per_replicate);
    } catch (const std::exception& e) {
      throw ReplicateFailure(k, e.what());
    }
  };
  auto out = run_chunked<ReplicateStats>(opt.replicates, opt.workers ? opt.workers : default_workers(),
                                         opt.chunk_size, make, body);
  out.seed = opt.seed;
  out.t_obs = opt.t_obs;
  return out;
}

// ---------------------------------------------------------------------------
// Comparison

enum class CompareMode { z_score, relative };

inline const char* to_string(CompareMode m) { return m == CompareMode::z_score ? "z_score" : "relative"; }

/// Theory values per index. z-score mode tests against `exact`; relative mode
/// tests against `asymptotic` (falling back to `exact` when that is NaN).
struct TheoryCurve {
  std::vector<double> index;
  std::vector<double> exact;
  std::vector<double> asymptotic;
};

struct ComparisonRow {
  double index = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t count = 0;
  double ci_half_width = 0.0;
  double theory_exact = 0.0;
  double theory_asymptotic = 0.0;
  double z = 0.0;
  double relative_gap = 0.0;
  bool pass = false;
};

struct ComparisonReport {
  std::string label;
  CompareMode mode = CompareMode::z_score;
  double threshold = 3.0;
  std::vector<ComparisonRow> rows;
  double pass_rate = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t replicates = 0;
  double tol = 0.0;

  bool passed(double required_rate) const { return pass_rate >= required_rate; }
};

inline ComparisonReport compare(const std::vector<double>& index, const std::vector<RunningStats>& empirical,
                                const TheoryCurve& theory, CompareMode mode, double threshold) {
  if (index.size() != empirical.size()) throw std::invalid_argument("compare: empirical index/value size mismatch");
  if (theory.index != index) throw std::invalid_argument("compare: theory and empirical index sets differ");
  if (theory.exact.size() != index.size() || theory.asymptotic.size() != index.size())
    throw std::invalid_argument("compare: theory curve size mismatch");
  ComparisonReport rep;
  rep.mode = mode;
  rep.threshold = threshold;
  std::size_t passes = 0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    ComparisonRow r;
    r.index = index[k];
    r.mean = empirical[k].mean();
    r.std_error = empirical[k].std_error();
    r.count = empirical[k].count();
    r.ci_half_width = r.count > 1 ? empirical[k].ci_half_width() : 0.0;
    r.theory_exact = theory.exact[k];
    r.theory_asymptotic = theory.asymptotic[k];
    const double diff = r.mean - r.theory_exact;
    r.z = r.std_error > 0.0 ? diff / r.std_error : (diff == 0.0 ? 0.0 : std::copysign(kInfinity, diff));
    const double target = std::isnan(r.theory_asymptotic) ? r.theory_exact : r.theory_asymptotic;
    r.relative_gap = target != 0.0 ? std::abs(r.mean - target) / std::abs(target) : (r.mean == 0.0 ? 0.0 : kInfinity);
    r.pass = mode == CompareMode::z_score ? std::abs(r.z) <= threshold : r.relative_gap <= threshold;
    passes += r.pass;
    rep.rows.push_back(r);
  }
  rep.pass_rate = index.empty() ? 1.0 : static_cast<double>(passes) / static_cast<double>(index.size());
  if (!empirical.empty()) rep.replicates = empirical.front().count();
  return rep;
}

}  // namespace rescue_sfs::mc
