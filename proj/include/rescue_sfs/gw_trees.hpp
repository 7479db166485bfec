#pragma once

// Subcritical binary Galton-Watson trees with independently marked leaves.
//
// A node divides into two children with probability p < 1/2 and otherwise
// becomes a leaf; once the tree is built each leaf is marked with probability
// beta. Generations follow the planted-tree convention: a single-leaf tree has
// its leaf at generation 1, so generation = edge depth + 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "rescue_sfs/random.hpp"

namespace rescue_sfs::gw {

struct GwLaw {
  double p = 0.0;     // division probability, < 1/2
  double beta = 0.0;  // leaf-mark probability

  /// x = sqrt(1 - 4 p (1-p) (1-beta))
  double x() const { return std::sqrt(1.0 - 4.0 * p * (1.0 - p) * (1.0 - beta)); }
};

inline GwLaw make_law(double p, double beta) {
  if (!(p >= 0.0 && p < 0.5)) throw std::invalid_argument("GwLaw: 0 <= p < 1/2 required");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("GwLaw: 0 <= beta <= 1 required");
  return {p, beta};
}

// ---------------------------------------------------------------------------
// Exact combinatorics

/// alpha_1 = 1, alpha_n = sum_{i=1}^{n-1} alpha_i alpha_{n-i}: the Catalan
/// numbers shifted by one index. Built-in integer types are overflow-checked;
/// pass an arbitrary-precision type to go beyond 64 bits.
template <class Int = std::uint64_t>
std::vector<Int> catalan_sequence(std::size_t n_max) {
  if (n_max < 1) throw std::invalid_argument("catalan_sequence: n_max >= 1 required");
  std::vector<Int> a(n_max + 1, Int(0));
  a[1] = Int(1);
  for (std::size_t n = 2; n <= n_max; ++n) {
    Int acc(0);
    for (std::size_t i = 1; i < n; ++i) {
      if constexpr (std::is_integral_v<Int>) {
        Int term;
        if (__builtin_mul_overflow(a[i], a[n - i], &term) || __builtin_add_overflow(acc, term, &acc))
          throw std::overflow_error("catalan_sequence: alpha_" + std::to_string(n) +
                                    " overflows the integer type");
      } else {
        acc += a[i] * a[n - i];
      }
    }
    a[n] = acc;
  }
  return std::vector<Int>(a.begin() + 1, a.end());
}

/// u_n = P(tree has exactly n leaves) = alpha_n (1-p)^n p^(n-1), for
/// n = 1..n_max (index 0 unused). Uses the ratio
/// alpha_{n+1}/alpha_n = 2(2n-1)/(n+1) so nothing overflows.
inline std::vector<double> leaf_count_table(const GwLaw& law, std::size_t n_max) {
  std::vector<double> u(n_max + 1, 0.0);
  if (n_max == 0) return u;
  u[1] = 1.0 - law.p;
  const double q = law.p * (1.0 - law.p);
  for (std::size_t n = 1; n < n_max; ++n) {
    const double nn = static_cast<double>(n);
    u[n + 1] = u[n] * 2.0 * (2.0 * nn - 1.0) / (nn + 1.0) * q;
  }
  return u;
}

inline double leaf_count_pmf(const GwLaw& law, std::size_t n) {
  if (n < 1) return 0.0;
  return leaf_count_table(law, n)[n];
}

/// v_{g,n} = P(uniform leaf has generation g, tree has n leaves) for
/// 1 <= g <= g_max, 1 <= n <= n_max; result[g][n].
///
/// Evaluates the gamma_{g,n} convolution in the scaled form
/// G_{g,n} = gamma_{g,n} q^n with q = p(1-p), so that
/// v_{g,n} = 2^(g-1) G_{g,n} / (n p).
inline std::vector<std::vector<double>> joint_gen_leafcount_table(const GwLaw& law, std::size_t g_max,
                                                                  std::size_t n_max) {
  std::vector<std::vector<double>> v(g_max + 1, std::vector<double>(n_max + 1, 0.0));
  if (g_max >= 1 && n_max >= 1) v[1][1] = 1.0 - law.p;
  if (g_max < 2 || n_max < 2 || law.p == 0.0) return v;

  const double q = law.p * (1.0 - law.p);
  // c_i = alpha_i q^i
  std::vector<double> c(n_max + 1, 0.0);
  c[1] = q;
  for (std::size_t i = 1; i < n_max; ++i) {
    const double ii = static_cast<double>(i);
    c[i + 1] = c[i] * 2.0 * (2.0 * ii - 1.0) / (ii + 1.0) * q;
  }
  std::vector<double> prev(n_max + 1, 0.0), cur(n_max + 1, 0.0);
  for (std::size_t n = 2; n <= n_max; ++n) prev[n] = c[n - 1] * q;  // gamma_{2,n} = alpha_{n-1}
  double pow2 = 2.0;
  for (std::size_t n = 2; n <= n_max; ++n) v[2][n] = pow2 * prev[n] / (static_cast<double>(n) * law.p);
  for (std::size_t g = 3; g <= g_max; ++g) {
    pow2 *= 2.0;
    std::fill(cur.begin(), cur.end(), 0.0);
    for (std::size_t n = g; n <= n_max; ++n) {
      double acc = 0.0;
      for (std::size_t i = 1; i + (g - 1) <= n; ++i) acc += c[i] * prev[n - i];
      cur[n] = acc;
      v[g][n] = pow2 * acc / (static_cast<double>(n) * law.p);
    }
    std::swap(prev, cur);
  }
  return v;
}

inline double joint_gen_leafcount(const GwLaw& law, std::size_t g, std::size_t n) {
  if (g < 1 || n < 1 || n < g) return 0.0;
  return joint_gen_leafcount_table(law, g, n)[g][n];
}

/// The root in [0, 1/2] of X(1-X) = y p (1-p), written to avoid cancellation.
inline double p_tilde(double y, double p) {
  if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("p_tilde: y in [0,1] required");
  const double s = y * p * (1.0 - p);
  return 2.0 * s / (1.0 + std::sqrt(1.0 - 4.0 * s));
}

/// F(y) = sum_n u_n y^n = p_tilde(y)/p.
inline double leaf_generating_function(const GwLaw& law, double y) {
  if (law.p == 0.0) return y;
  return p_tilde(y, law.p) / law.p;
}

/// Smallest cut-off K such that sum_{n>K} n z^(n-1) < tol, where
/// z = 4 p (1-p) (1-beta) dominates the ratio of consecutive weighted terms
/// (alpha_n <= 4^(n-1)).
inline std::size_t adaptive_cutoff(const GwLaw& law, double tol = 1e-12, std::size_t hard_max = 1'000'000) {
  const double z = 4.0 * law.p * (1.0 - law.p) * (1.0 - law.beta);
  if (z <= 0.0) return 1;
  const double denom = (1.0 - z) * (1.0 - z);
  std::size_t k = 1;
  double zk = z;  // z^k
  while ((static_cast<double>(k) + 1.0) * zk / denom >= tol) {
    ++k;
    zk *= z;
    if (k >= hard_max) throw std::runtime_error("adaptive_cutoff: series converges too slowly (p near 1/2)");
  }
  return k;
}

/// Partial sums of n (1-beta)^(n-1) u_n (generation == nullopt; limit (1-p)/x)
/// or of n (1-beta)^(n-1) v_{g,n} (limit (1-x)^(g-1) (1-p)).
inline double weighted_leaf_sums(const GwLaw& law, std::optional<std::size_t> generation, std::size_t cutoff) {
  if (cutoff < 1) throw std::invalid_argument("weighted_leaf_sums: cutoff >= 1 required");
  const double w = 1.0 - law.beta;
  double sum = 0.0;
  if (!generation) {
    const auto u = leaf_count_table(law, cutoff);
    double wpow = 1.0;
    for (std::size_t n = 1; n <= cutoff; ++n) {
      sum += static_cast<double>(n) * wpow * u[n];
      wpow *= w;
    }
    return sum;
  }
  const std::size_t g = *generation;
  if (g < 1) throw std::invalid_argument("weighted_leaf_sums: generation >= 1 required");
  if (g > cutoff) return 0.0;
  const auto v = joint_gen_leafcount_table(law, g, cutoff);
  double wpow = 1.0;
  for (std::size_t n = 1; n <= cutoff; ++n) {
    sum += static_cast<double>(n) * wpow * v[g][n];
    wpow *= w;
  }
  return sum;
}

/// Generation law of the unique marked leaf given exactly one mark:
/// geometric with success parameter x.
inline double gen_pmf_one_mark(const GwLaw& law, std::size_t g) {
  if (g < 1) return 0.0;
  const double x = law.x();
  return x * std::pow(1.0 - x, static_cast<double>(g) - 1.0);
}

/// Generation law of a uniformly chosen marked leaf given at least one mark.
/// Exact for the unconditioned (planted) tree; with p_tilde = p_tilde(1-beta):
///   2^(g-1)/(p - p~) [ (p^g - p~^g)/g - 2 (p^(g+1) - p~^(g+1))/(g+1) ].
inline double gen_pmf_atleast_one_mark(const GwLaw& law, std::size_t g) {
  if (g < 1) return 0.0;
  const double p = law.p;
  if (p == 0.0) return g == 1 ? 1.0 : 0.0;
  const double pt = p_tilde(1.0 - law.beta, p);
  const double gg = static_cast<double>(g);
  // (p^m - pt^m)/(p - pt) = p^(m-1) sum_{j<m} (pt/p)^j, stable as pt -> p
  const double r = pt / p;
  auto diff_quot = [&](std::size_t m) {
    double acc = 0.0, rj = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      acc += rj;
      rj *= r;
    }
    return std::pow(p, static_cast<double>(m) - 1.0) * acc;
  };
  const double two_pow = std::pow(2.0, gg - 1.0);
  return two_pow * (diff_quot(g) / gg - 2.0 * diff_quot(g + 1) / (gg + 1.0));
}

/// Unconditioned generation law of a uniformly chosen leaf:
/// sum_n v_{g,n} = (2p)^(g-1) (1/g - 2p/(g+1)).
inline double gen_pmf_uniform_leaf(const GwLaw& law, std::size_t g) {
  if (g < 1) return 0.0;
  const double gg = static_cast<double>(g);
  return std::pow(2.0 * law.p, gg - 1.0) * (1.0 / gg - 2.0 * law.p / (gg + 1.0));
}

// ---------------------------------------------------------------------------
// Sampling

struct GwTree {
  struct Node {
    std::int32_t parent = -1;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t depth = 0;  // edges from the root
    bool marked = false;
    bool is_leaf() const { return left < 0; }
  };
  std::vector<Node> nodes;  // nodes[0] is the root

  std::size_t leaf_count() const {
    std::size_t n = 0;
    for (const auto& v : nodes) n += v.is_leaf();
    return n;
  }
  std::size_t mark_count() const {
    std::size_t n = 0;
    for (const auto& v : nodes) n += v.marked;
    return n;
  }
  std::vector<std::int32_t> leaves() const {
    std::vector<std::int32_t> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].is_leaf()) out.push_back(static_cast<std::int32_t>(i));
    return out;
  }
  std::vector<std::int32_t> marked_leaves() const {
    std::vector<std::int32_t> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].marked) out.push_back(static_cast<std::int32_t>(i));
    return out;
  }
  /// Planted-tree generation of node i (edge depth + 1).
  std::size_t generation(std::int32_t i) const { return nodes[static_cast<std::size_t>(i)].depth + 1; }
};

class TreeSizeExceeded : public std::runtime_error {
 public:
  explicit TreeSizeExceeded(std::size_t cap)
      : std::runtime_error("GW tree exceeded the node cap of " + std::to_string(cap)) {}
};

class RejectionLimitExceeded : public std::runtime_error {
 public:
  RejectionLimitExceeded(std::size_t attempts, double acceptance_probability)
      : std::runtime_error("conditioned GW sampling gave up after " + std::to_string(attempts) +
                           " attempts; acceptance probability is about " +
                           std::to_string(acceptance_probability)),
        acceptance_estimate(acceptance_probability) {}
  double acceptance_estimate;
};

struct SampleOptions {
  /// Forbid the root itself from becoming a marked leaf. The root then
  /// divides with probability p / (1 - beta (1-p)) and otherwise is an
  /// unmarked leaf.
  bool root_excluded = false;
  std::size_t max_nodes = 1'000'000;
};

inline GwTree sample_tree(const GwLaw& law, CounterRng& rng, const SampleOptions& opt = {}) {
  GwTree t;
  t.nodes.emplace_back();
  // nodes are processed in creation order; each decides its fate once
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    double divide_prob = law.p;
    bool may_mark = true;
    if (i == 0 && opt.root_excluded) {
      divide_prob = law.p / (1.0 - law.beta * (1.0 - law.p));
      may_mark = false;
    }
    if (rng.uniform() < divide_prob) {
      if (t.nodes.size() + 2 > opt.max_nodes) throw TreeSizeExceeded(opt.max_nodes);
      const auto parent = static_cast<std::int32_t>(i);
      const std::uint32_t depth = t.nodes[i].depth + 1;
      const auto left = static_cast<std::int32_t>(t.nodes.size());
      t.nodes.push_back({parent, -1, -1, depth, false});
      t.nodes.push_back({parent, -1, -1, depth, false});
      t.nodes[i].left = left;
      t.nodes[i].right = left + 1;
    } else if (may_mark) {
      t.nodes[i].marked = rng.uniform() < law.beta;
    }
  }
  return t;
}

enum class MarkCondition { exactly_one, at_least_one };

enum class ConditionedMethod {
  rejection,
  /// Exactly-one-mark only: draw the leaf count from its size-biased law
  /// n beta (1-beta)^(n-1) u_n, a uniform ordered shape with n leaves (all
  /// shapes with n leaves are equally likely under the GW law), then mark a
  /// uniform leaf. No rejection.
  direct,
};

struct ConditionedOptions {
  SampleOptions sample;
  std::size_t max_attempts = 10'000'000;
  std::optional<double> delta0;  // when set, lifetime = sum of `generation` Exp(delta0) draws
  ConditionedMethod method = ConditionedMethod::rejection;
};

struct ConditionedSample {
  GwTree tree;
  std::int32_t chosen_leaf = -1;  // uniformly chosen marked leaf
  /// Number of sensitive lifetimes preceding the chosen mark: the edge depth
  /// when the root is excluded (divisions since the root), the planted
  /// generation depth + 1 otherwise. Geometric(x) under exactly-one-mark in
  /// both cases.
  std::size_t generation = 0;
  std::optional<double> lifetime;
  std::size_t attempts = 0;
};

/// Theoretical acceptance probability of the rejection sampler.
inline double acceptance_probability(const GwLaw& law, MarkCondition cond, bool root_excluded) {
  const double p = law.p, b = law.beta, x = law.x();
  const double pt = p_tilde(1.0 - b, p);
  const double p_one = p == 0.0 ? b : b * (1.0 - p) / x;   // sum n b (1-b)^(n-1) u_n
  const double p_none = p == 0.0 ? 1.0 - b : pt / p;       // sum (1-b)^n u_n
  if (!root_excluded) return cond == MarkCondition::exactly_one ? p_one : 1.0 - p_none;
  const double root_div = p / (1.0 - b * (1.0 - p));
  if (cond == MarkCondition::exactly_one) return root_div * 2.0 * p_one * p_none;
  return root_div * (1.0 - p_none * p_none);
}

namespace detail {

/// Uniform ordered full binary tree with n leaves (Remy's algorithm).
inline GwTree uniform_shape(std::size_t n, CounterRng& rng) {
  GwTree t;
  t.nodes.reserve(2 * n - 1);
  t.nodes.emplace_back();
  std::int32_t root = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const auto target = static_cast<std::int32_t>(rng.below(t.nodes.size()));
    const bool new_left = rng.below(2) == 0;
    const auto inner = static_cast<std::int32_t>(t.nodes.size());
    const auto leaf = inner + 1;
    const std::int32_t up = t.nodes[static_cast<std::size_t>(target)].parent;
    t.nodes.push_back({up, new_left ? leaf : target, new_left ? target : leaf, 0, false});
    t.nodes.push_back({inner, -1, -1, 0, false});
    if (up < 0) {
      root = inner;
    } else {
      auto& pu = t.nodes[static_cast<std::size_t>(up)];
      (pu.left == target ? pu.left : pu.right) = inner;
    }
    t.nodes[static_cast<std::size_t>(target)].parent = inner;
  }
  // relabel so the root is node 0 and depths are filled in (BFS order)
  GwTree out;
  out.nodes.reserve(t.nodes.size());
  std::vector<std::int32_t> order{root};
  out.nodes.push_back({-1, -1, -1, 0, false});
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& src = t.nodes[static_cast<std::size_t>(order[i])];
    if (src.left < 0) continue;
    const auto l = static_cast<std::int32_t>(out.nodes.size());
    const std::uint32_t d = out.nodes[i].depth + 1;
    out.nodes.push_back({static_cast<std::int32_t>(i), -1, -1, d, false});
    out.nodes.push_back({static_cast<std::int32_t>(i), -1, -1, d, false});
    out.nodes[i].left = l;
    out.nodes[i].right = l + 1;
    order.push_back(src.left);
    order.push_back(src.right);
  }
  return out;
}

/// Draws n from weights w_n = u_n * weight(n), truncated where the tail is
/// negligible.
template <class Weight>
std::size_t draw_leaf_count(const GwLaw& law, Weight weight, CounterRng& rng) {
  const std::size_t cutoff = adaptive_cutoff(law, 1e-15);
  const auto u = leaf_count_table(law, cutoff);
  std::vector<double> cdf(cutoff + 1, 0.0);
  for (std::size_t n = 1; n <= cutoff; ++n) cdf[n] = cdf[n - 1] + u[n] * weight(n);
  const double target = rng.uniform() * cdf[cutoff];
  const auto it = std::lower_bound(cdf.begin() + 1, cdf.end(), target);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cutoff);
}

/// Grafts `left` and `right` under a fresh root.
inline GwTree join(const GwTree& left, const GwTree& right) {
  GwTree t;
  t.nodes.reserve(1 + left.nodes.size() + right.nodes.size());
  t.nodes.push_back({-1, 1, static_cast<std::int32_t>(1 + left.nodes.size()), 0, false});
  auto append = [&t](const GwTree& sub, std::int32_t offset) {
    for (const auto& v : sub.nodes) {
      GwTree::Node w = v;
      w.parent = v.parent < 0 ? 0 : v.parent + offset;
      if (v.left >= 0) {
        w.left += offset;
        w.right += offset;
      }
      w.depth += 1;
      t.nodes.push_back(w);
    }
  };
  append(left, 1);
  append(right, static_cast<std::int32_t>(1 + left.nodes.size()));
  return t;
}

inline GwTree direct_exactly_one(const GwLaw& law, CounterRng& rng) {
  const double w = 1.0 - law.beta;
  const std::size_t n = draw_leaf_count(
      law, [w](std::size_t k) { return static_cast<double>(k) * std::pow(w, static_cast<double>(k) - 1.0); }, rng);
  GwTree t = uniform_shape(n, rng);
  auto leaves = t.leaves();
  t.nodes[static_cast<std::size_t>(leaves[rng.below(leaves.size())])].marked = true;
  return t;
}

inline GwTree direct_no_mark(const GwLaw& law, CounterRng& rng) {
  const double w = 1.0 - law.beta;
  const std::size_t n =
      draw_leaf_count(law, [w](std::size_t k) { return std::pow(w, static_cast<double>(k)); }, rng);
  return uniform_shape(n, rng);
}

}  // namespace detail

inline ConditionedSample sample_conditioned(const GwLaw& law, MarkCondition cond, CounterRng& rng,
                                            const ConditionedOptions& opt = {}) {
  ConditionedSample out;
  const bool excluded = opt.sample.root_excluded;
  if (opt.method == ConditionedMethod::direct) {
    if (cond != MarkCondition::exactly_one)
      throw std::invalid_argument("direct conditioned sampling supports exactly-one-mark only");
    if (law.beta <= 0.0) throw RejectionLimitExceeded(0, 0.0);
    if (!excluded) {
      out.tree = detail::direct_exactly_one(law, rng);
    } else {
      if (law.p == 0.0) throw RejectionLimitExceeded(0, 0.0);
      GwTree marked = detail::direct_exactly_one(law, rng);
      GwTree clean = detail::direct_no_mark(law, rng);
      out.tree = rng.below(2) == 0 ? detail::join(marked, clean) : detail::join(clean, marked);
    }
    out.attempts = 1;
  } else {
    for (std::size_t attempt = 1;; ++attempt) {
      if (attempt > opt.max_attempts)
        throw RejectionLimitExceeded(opt.max_attempts, acceptance_probability(law, cond, excluded));
      GwTree t = sample_tree(law, rng, opt.sample);
      const std::size_t marks = t.mark_count();
      const bool ok = cond == MarkCondition::exactly_one ? marks == 1 : marks >= 1;
      if (ok) {
        out.tree = std::move(t);
        out.attempts = attempt;
        break;
      }
    }
  }
  const auto marked = out.tree.marked_leaves();
  out.chosen_leaf = marked[rng.below(marked.size())];
  const std::size_t depth = out.tree.nodes[static_cast<std::size_t>(out.chosen_leaf)].depth;
  out.generation = excluded ? depth : depth + 1;
  if (opt.delta0) {
    double total = 0.0;
    for (std::size_t k = 0; k < out.generation; ++k) total += rng.exponential(*opt.delta0);
    out.lifetime = total;
  }
  return out;
}

}  // namespace rescue_sfs::gw
