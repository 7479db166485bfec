#pragma once

// Mergeable moment accumulators and goodness-of-fit tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace rescue_sfs::stats {

/// Welford accumulator; merge() is Chan's pairwise update, so batches can be
/// combined in any grouping.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStats& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
  }

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

  /// 95% normal half-width; needs at least two samples.
  double ci_half_width() const {
    if (n_ < 2) throw std::logic_error("confidence interval needs at least 2 samples");
    return 1.96 * std_error();
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

class DegenerateSample : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::size_t bins = 0;  // after pooling
};

/// Upper tail of the chi-square law.
inline double chi_square_sf(double stat, int dof) {
  if (dof <= 0) throw std::invalid_argument("chi-square needs dof >= 1");
  return boost::math::gamma_q(0.5 * dof, 0.5 * stat);
}

/// Pearson chi-square with adjacent-bin pooling so every bin expects at
/// least min_expected; the expected vector must already hold counts.
inline ChiSquareResult chi_square(const std::vector<double>& observed, const std::vector<double>& expected,
                                  int fitted_params = 0, double min_expected = 5.0) {
  if (observed.size() != expected.size()) throw std::invalid_argument("chi_square: size mismatch");
  std::vector<double> o, e;
  double acc_o = 0.0, acc_e = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    acc_o += observed[k];
    acc_e += expected[k];
    if (acc_e >= min_expected) {
      o.push_back(acc_o);
      e.push_back(acc_e);
      acc_o = acc_e = 0.0;
    }
  }
  if (acc_e > 0.0 || acc_o > 0.0) {
    if (e.empty()) {
      o.push_back(acc_o);
      e.push_back(acc_e);
    } else {
      o.back() += acc_o;
      e.back() += acc_e;
    }
  }
  ChiSquareResult r;
  r.bins = e.size();
  r.dof = static_cast<int>(e.size()) - 1 - fitted_params;
  if (r.dof < 1) throw DegenerateSample("chi_square: fewer than two bins after pooling");
  for (std::size_t k = 0; k < e.size(); ++k) r.statistic += (o[k] - e[k]) * (o[k] - e[k]) / e[k];
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

/// Samples g >= 1 against P(G = g) = x (1-x)^(g-1).
inline ChiSquareResult gof_geometric(const std::vector<std::uint64_t>& samples, double x) {
  if (samples.size() < 100) throw std::invalid_argument("gof_geometric: at least 100 samples required");
  if (!(x > 0.0 && x <= 1.0)) throw std::invalid_argument("gof_geometric: x in (0, 1] required");
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*lo == 0) throw std::invalid_argument("gof_geometric: samples must be >= 1");
  if (*lo == *hi) throw DegenerateSample("gof_geometric: all samples equal " + std::to_string(*lo));
  const std::size_t g_max = *hi;
  const double n = static_cast<double>(samples.size());
  std::vector<double> obs(g_max, 0.0), exp(g_max, 0.0);
  for (auto g : samples) obs[g - 1] += 1.0;
  for (std::size_t g = 1; g < g_max; ++g) exp[g - 1] = n * x * std::pow(1.0 - x, static_cast<double>(g) - 1.0);
  exp[g_max - 1] = n * std::pow(1.0 - x, static_cast<double>(g_max) - 1.0);  // tail P(G >= g_max)
  return chi_square(obs, exp);
}

/// Chi-square of integer samples against an arbitrary pmf on {first, first+1, ...};
/// mass beyond the largest observation is pooled into the last bin.
template <class Pmf>
ChiSquareResult gof_discrete(const std::vector<std::uint64_t>& samples, std::uint64_t first, Pmf&& pmf) {
  if (samples.size() < 100) throw std::invalid_argument("gof_discrete: at least 100 samples required");
  const auto hi = *std::max_element(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  const std::size_t bins = hi - first + 1;
  std::vector<double> obs(bins, 0.0), exp(bins, 0.0);
  for (auto s : samples) {
    if (s < first) throw std::invalid_argument("gof_discrete: sample below support");
    obs[s - first] += 1.0;
  }
  double mass = 0.0;
  for (std::size_t k = 0; k + 1 < bins; ++k) {
    exp[k] = n * pmf(first + k);
    mass += pmf(first + k);
  }
  exp[bins - 1] = n * std::max(0.0, 1.0 - mass);
  return chi_square(obs, exp);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic Kolmogorov upper tail with Stephens' small-sample correction.
inline double kolmogorov_sf(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lam = (sn + 0.12 + 0.11 / sn) * d;
  if (lam < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// One-sample KS against a continuous CDF.
template <class Cdf>
KsResult ks_test(std::vector<double> samples, Cdf&& cdf) {
  if (samples.size() < 100) throw std::invalid_argument("ks_test: at least 100 samples required");
  std::sort(samples.begin(), samples.end());
  if (samples.front() == samples.back()) throw DegenerateSample("ks_test: all samples equal");
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double f = cdf(samples[k]);
    d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
  }
  return {d, kolmogorov_sf(d, samples.size())};
}

inline KsResult gof_exponential(const std::vector<double>& samples, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("gof_exponential: rate > 0 required");
  return ks_test(samples, [rate](double t) { return t <= 0.0 ? 0.0 : -std::expm1(-rate * t); });
}

}  // namespace rescue_sfs::stats
