#pragma once

// Closed forms, pmfs/pdfs and integral approximations for the expected SFS
// of the rescued two-type population.
//
// Time arguments are absolute observation times t_obs. For the log-scaled
// observation t_obs = t ln N the factor N^(lambda1 t) of the asymptotic
// formulas is exactly exp(lambda1 t_obs), which is what is used here.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "rescue_sfs/gw_trees.hpp"
#include "rescue_sfs/params.hpp"
#include "rescue_sfs/quadrature.hpp"
#include "rescue_sfs/window.hpp"

namespace rescue_sfs::theory {

/// A finite-N value paired with its large-N equivalent, so callers can
/// measure the asymptotic gap.
struct TheoryPair {
  TheoryValue finite_n;
  TheoryValue asymptotic;
};

inline gw::GwLaw gw_law(const DerivedParams& dp) { return {dp.p_n, dp.beta_n}; }

// ---------------------------------------------------------------------------
// Single resistant clone

/// I(i) = int_0^1 (1-y) y^(i-1) / (1 - rho y) dy
///      = sum_k rho^k / ((i+k)(i+k+1)), with a certified geometric tail.
inline TheoryValue I_of(std::uint64_t i, double rho, double tol = 1e-15) {
  if (i < 1) throw std::invalid_argument("I_of: i >= 1 required");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("I_of: 0 <= rho < 1 required");
  const double ii = static_cast<double>(i);
  double sum = 0.0, rk = 1.0;
  for (std::uint64_t k = 0;; ++k) {
    const double m = ii + static_cast<double>(k);
    sum += rk / (m * (m + 1.0));
    rk *= rho;
    const double tail = rk / ((m + 1.0) * (m + 2.0) * (1.0 - rho));
    if (tail < tol * std::max(sum, 1e-300) || rk == 0.0) {
      return {sum, tail, TheoryValue::Kind::exact};
    }
  }
}

namespace detail {

/// H(k) = int_0^U y^k / (1 - rho y) dy = sum_j rho^j U^(k+j+1) / (k+j+1)
inline TheoryValue tail_power_integral(double k, double upper, double rho, double tol = 1e-15) {
  if (upper <= 0.0) return {0.0, 0.0, TheoryValue::Kind::exact};
  const double ru = rho * upper;
  double term_pow = std::pow(upper, k + 1.0);  // U^(k+1) (rho U)^j
  double sum = 0.0;
  for (std::uint64_t j = 0;; ++j) {
    const double m = k + static_cast<double>(j) + 1.0;
    sum += term_pow / m;
    term_pow *= ru;
    const double tail = term_pow / ((m + 1.0) * (1.0 - ru));
    if (tail <= tol * std::max(sum, 1e-300) || term_pow == 0.0) return {sum, tail, TheoryValue::Kind::exact};
  }
}

}  // namespace detail

/// h_i(x) = int_0^{(x-1)/(x-rho)} (1-y) y^(i-1) / (1 - rho y) dy for x >= 1;
/// x = +inf gives I(i).
inline TheoryValue h_i(std::uint64_t i, double x, double rho, double tol = 1e-15) {
  if (i < 1) throw std::invalid_argument("h_i: i >= 1 required");
  if (!(x >= 1.0)) throw std::invalid_argument("h_i: x >= 1 required");
  if (std::isinf(x)) return I_of(i, rho, tol);
  const double upper = (x - 1.0) / (x - rho);
  // sum_k rho^k [U^(i+k)/(i+k) - U^(i+k+1)/(i+k+1)] = H(i-1) - H(i)
  const double ii = static_cast<double>(i);
  double sum = 0.0;
  const double ru = rho * upper;
  double pw = std::pow(upper, ii);  // U^(i+k)
  for (std::uint64_t k = 0;; ++k) {
    const double m = ii + static_cast<double>(k);
    sum += pw * (1.0 / m - upper / (m + 1.0));
    pw *= ru;
    const double tail = pw / ((m + 1.0) * (1.0 - ru));
    if (tail <= tol * std::max(sum, 1e-300) || pw == 0.0) return {sum, tail, TheoryValue::Kind::exact};
  }
}

/// kappa_i(x) = (lambda1/b1)^2 x (1-x)^(i-1) / (1 - rho x)^(i+1), x in (0, 1].
inline double kappa_i(std::uint64_t i, double x, double b1, double d1) {
  if (i < 1) throw std::invalid_argument("kappa_i: i >= 1 required");
  if (!(x > 0.0 && x <= 1.0)) throw std::invalid_argument("kappa_i: 0 < x <= 1 required");
  const double rho = d1 / b1;
  const double l = (b1 - d1) / b1;
  const double ii = static_cast<double>(i);
  if (x == 1.0) return i == 1 ? l * l / std::pow(1.0 - rho, 2.0) : 0.0;
  const double log_val = std::log(x) + (ii - 1.0) * std::log1p(-x) - (ii + 1.0) * std::log1p(-rho * x);
  return l * l * std::exp(log_val);
}

/// P(Z(u) = i) for a linear birth-death process with rates (b1, d1) from one cell.
inline double harris_pmf(std::uint64_t i, double u, double b1, double d1) {
  if (!(u >= 0.0)) throw std::invalid_argument("harris_pmf: u >= 0 required");
  return kappa_i(i, std::exp(-(b1 - d1) * u), b1, d1);
}

/// sum_{i>k} kappa_i(x) = (1-rho)/(1-rho x) * ((1-x)/(1-rho x))^k
inline double kappa_tail(std::uint64_t k, double x, double rho) {
  const double denom = 1.0 - rho * x;
  const double r = (1.0 - x) / denom;
  return (1.0 - rho) / denom * std::pow(r, static_cast<double>(k));
}

/// E[S_i(t) | one resistant founder] = w e^(lambda1 t) h_i(e^(lambda1 t)),
/// paired with the large-t form w e^(lambda1 t) I(i).
inline TheoryPair single_clone_sfs(std::uint64_t i, double t, double b1, double d1, double omega) {
  if (!(t >= 0.0)) throw std::invalid_argument("single_clone_sfs: t >= 0 required");
  const double rho = d1 / b1;
  const double growth = std::exp((b1 - d1) * t);
  const auto h = h_i(i, growth, rho);
  const auto I = I_of(i, rho);
  return {{omega * growth * h.value, omega * growth * h.abs_error_bound, TheoryValue::Kind::exact},
          {omega * growth * I.value, omega * growth * I.abs_error_bound, TheoryValue::Kind::asymptotic}};
}

// ---------------------------------------------------------------------------
// Ancestral resistant cells

/// P(G_N = g) = x_N (1 - x_N)^(g-1)
inline double gn_pmf(const DerivedParams& dp, std::uint64_t g) {
  if (g < 1) return 0.0;
  return dp.x_n * std::pow(1.0 - dp.x_n, static_cast<double>(g) - 1.0);
}

/// Exponential(delta0 x_N) density.
inline double tn_pdf(const DerivedParams& dp, double t) {
  if (t < 0.0) return 0.0;
  const double rate = dp.delta0 * dp.x_n;
  return rate * std::exp(-rate * t);
}

/// Generation law of a uniformly chosen ancestral resistant cell in a
/// progeny with at least one.
inline double tilde_gn_pmf(const DerivedParams& dp, std::uint64_t g) {
  return gw::gen_pmf_atleast_one_mark(gw_law(dp), g);
}

/// Density of the matching appearance time, a geometric mixture of
/// Gamma(g, delta0) laws:
///   e^(-t delta0 (1-2p)) / (2t (p - p~)) [ (1-e)(1 + 1/(t delta0)) - 2(p - p~ e) ]
/// with e = exp(-2 t delta0 (p - p~)). The bracket vanishes to first order at
/// t = 0, so small t uses its Taylor expansion.
inline double tilde_tn_pdf(const DerivedParams& dp, double t) {
  if (t < 0.0) return 0.0;
  const double p = dp.p_n, pt = dp.p_tilde_n, d = dp.delta0;
  const double gap = p - pt;
  const double damp = std::exp(-t * d * (1.0 - 2.0 * p));
  if (t * d * gap < 1e-6) {
    const double a = 2.0 * d * gap;
    return damp * d * ((1.0 - p - pt) + a * (-0.5 + gap / 3.0 + pt) * t);
  }
  const double e = std::exp(-2.0 * t * d * gap);
  const double bracket = -std::expm1(-2.0 * t * d * gap) * (1.0 + 1.0 / (t * d)) - 2.0 * (p - pt * e);
  return damp / (2.0 * t * gap) * bracket;
}

/// P(A_1): exactly one ancestral resistant cell in the progeny of one
/// sensitive cell; paired with (2 b0 / lambda0) gamma_N.
inline TheoryPair prob_exactly_one_ancestral(const ModelParams& params) {
  const auto dp = derive(params);
  const double x = dp.x_n, g = dp.gamma_n, p = dp.p_n;
  const double one_minus_x = 4.0 * p * (1.0 - p) * (1.0 - dp.beta_n) / (1.0 + x);
  const double exact = one_minus_x / (x * (1.0 - g)) * g;
  const double asym = 2.0 * params.b0 / dp.lambda0 * g;
  return {{exact, 0.0, TheoryValue::Kind::exact}, {asym, 0.0, TheoryValue::Kind::asymptotic}};
}

/// sum_{k>=2} k P(A_k) = beta/(1-g) ((1-p)/(1-2p) - (1-p)/x); paired with
/// 2 b0 delta0^2 gamma_N^2 / lambda0^3.
inline TheoryPair expected_multiple_ancestral(const ModelParams& params) {
  const auto dp = derive(params);
  const double x = dp.x_n, g = dp.gamma_n, p = dp.p_n, b = dp.beta_n;
  // (1-p)/(1-2p) - (1-p)/x = (1-p)(x - (1-2p)) / ((1-2p) x), and
  // x - (1-2p) = 4 p (1-p) beta / (x + 1 - 2p)
  const double x_gap = 4.0 * p * (1.0 - p) * b / (x + 1.0 - 2.0 * p);
  const double exact = b / (1.0 - g) * (1.0 - p) * x_gap / ((1.0 - 2.0 * p) * x);
  const double asym = 2.0 * params.b0 * dp.delta0 * dp.delta0 / std::pow(dp.lambda0, 3.0) * g * g;
  return {{exact, 0.0, TheoryValue::Kind::exact}, {asym, 0.0, TheoryValue::Kind::asymptotic}};
}

/// E[N_R] = 2 b0 g N / (lambda0 + 2 g b0); paired with (2 b0 gamma / lambda0) N^(1-alpha).
inline TheoryPair expected_ancestral_count(const ModelParams& params) {
  const auto dp = derive(params);
  const double n = static_cast<double>(params.n_init);
  const double g = dp.gamma_n;
  const double exact = 2.0 * params.b0 * g * n / (dp.lambda0 + 2.0 * g * params.b0);
  const double asym = 2.0 * params.b0 * g * n / dp.lambda0;  // g N = gamma N^(1-alpha)
  return {{exact, 0.0, TheoryValue::Kind::exact}, {asym, 0.0, TheoryValue::Kind::asymptotic}};
}

// ---------------------------------------------------------------------------
// Large-family shape functions

/// K(x) with the sign fixed so that it is positive and decreasing:
///   2/(l0+l1) int_0^inf (1 - e^{-(l0+l1)s}) e^{l1 s} exp(-x (l1/b1) e^{l1 s}) ds.
/// Evaluated in u = e^{l1 s} - 1, where the integrand is bounded by e^{-c x (1+u)}/l1.
inline TheoryValue K_mag(double x, const ModelParams& params, double tol = 1e-10) {
  if (!(x > 0.0)) throw std::invalid_argument("K_mag: x > 0 required");
  if (std::isinf(x)) return {0.0, 0.0, TheoryValue::Kind::quadrature};
  const double l0 = params.d0 - params.b0, l1 = params.b1 - params.d1;
  const double c = l1 / params.b1;
  const double kexp = (l0 + l1) / l1;
  const double pre = 2.0 / (l0 + l1);
  auto f = [&](double u) { return -std::expm1(-kexp * std::log1p(u)) / l1 * std::exp(-c * x * (1.0 + u)); };
  auto tail = [&](double u) { return std::exp(-c * x * (1.0 + u)) / (l1 * c * x); };
  auto r = quad_semi_infinite(f, tail, tol / pre);
  return {pre * r.value, pre * r.abs_error_bound, TheoryValue::Kind::quadrature};
}

/// -dK/dx = 2 l1/(b1 (l0+l1)) int_0^inf (1 - e^{-(l0+l1)s}) e^{2 l1 s} exp(-x (l1/b1) e^{l1 s}) ds.
inline TheoryValue K_mag_slope(double x, const ModelParams& params, double tol = 1e-10) {
  if (!(x > 0.0)) throw std::invalid_argument("K_mag_slope: x > 0 required");
  if (std::isinf(x)) return {0.0, 0.0, TheoryValue::Kind::quadrature};
  const double l0 = params.d0 - params.b0, l1 = params.b1 - params.d1;
  const double c = l1 / params.b1;
  const double kexp = (l0 + l1) / l1;
  const double pre = 2.0 * l1 / (params.b1 * (l0 + l1));
  auto f = [&](double u) {
    return -std::expm1(-kexp * std::log1p(u)) * (1.0 + u) / l1 * std::exp(-c * x * (1.0 + u));
  };
  auto tail = [&](double u) {
    const double v = 1.0 + u, cx = c * x;
    return std::exp(-cx * v) * (v / cx + 1.0 / (cx * cx)) / l1;
  };
  auto r = quad_semi_infinite(f, tail, tol / pre);
  return {pre * r.value, pre * r.abs_error_bound, TheoryValue::Kind::quadrature};
}

/// L(x) = 1/b1 int_0^inf (1 + 2 b0 s) e^{-l0 s} exp(-x (l1/b1) e^{l1 s}) ds.
inline TheoryValue L_of(double x, const ModelParams& params, double tol = 1e-10) {
  if (!(x >= 0.0)) throw std::invalid_argument("L_of: x >= 0 required");
  if (std::isinf(x)) return {0.0, 0.0, TheoryValue::Kind::quadrature};
  const double l0 = params.d0 - params.b0, l1 = params.b1 - params.d1, b0 = params.b0;
  const double c = l1 / params.b1;
  const double pre = 1.0 / params.b1;
  auto f = [&](double s) { return (1.0 + 2.0 * b0 * s) * std::exp(-l0 * s - c * x * std::exp(l1 * s)); };
  auto tail = [&](double s) {
    return std::exp(-l0 * s - c * x * std::exp(l1 * s)) * ((1.0 + 2.0 * b0 * s) / l0 + 2.0 * b0 / (l0 * l0));
  };
  auto r = quad_semi_infinite(f, tail, tol / pre);
  return {pre * r.value, pre * r.abs_error_bound, TheoryValue::Kind::quadrature};
}

// ---------------------------------------------------------------------------
// Finite-N integrals

namespace detail {

inline QuadOptions finite_opts() { return {1e-300, 1e-11, 4000}; }

/// N gamma_N w delta0 (1-x_N) / (1-gamma_N) e^{l1 t}
inline double p_prefactor(const ModelParams& params, const DerivedParams& dp, double t_obs) {
  const double n = static_cast<double>(params.n_init);
  return n * dp.gamma_n * params.omega * dp.delta0 * (1.0 - dp.x_n) / (1.0 - dp.gamma_n) *
         std::exp(dp.lambda1 * t_obs);
}

/// N gamma_N (1-x_N) delta0 w / (2 (1-gamma_N))
inline double q_prefactor(const ModelParams& params, const DerivedParams& dp) {
  const double n = static_cast<double>(params.n_init);
  return n * dp.gamma_n * (1.0 - dp.x_n) * dp.delta0 * params.omega / (2.0 * (1.0 - dp.gamma_n));
}

template <class Inner>
TheoryValue finite_integral(double pre, double t_obs, Inner&& inner) {
  if (pre == 0.0) return {0.0, 0.0, TheoryValue::Kind::quadrature};
  double inner_err = 0.0;
  auto f = [&](double s) {
    const auto v = inner(s);
    inner_err = std::max(inner_err, v.abs_error_bound);
    return v.value;
  };
  auto r = integrate(f, 0.0, t_obs, finite_opts());
  return {pre * r.value, pre * (r.abs_error_bound + inner_err * t_obs), TheoryValue::Kind::quadrature};
}

}  // namespace detail

/// P(N,i): resistant-division mutations from progenies with exactly one
/// ancestral resistant cell,
///   N gamma_N w delta0 (1-x_N)/(1-gamma_N) e^{l1 t} int_0^t h_i(e^{l1 (t-s)}) e^{-(l1 + x_N delta0) s} ds.
inline TheoryValue finite_n_P(std::uint64_t i, double t_obs, const ModelParams& params) {
  if (i < 1) throw std::invalid_argument("finite_n_P: i >= 1 required");
  if (!(t_obs > 0.0)) throw std::invalid_argument("finite_n_P: t > 0 required");
  const auto dp = derive(params);
  const double rate = dp.lambda1 + dp.x_n * dp.delta0;
  return detail::finite_integral(detail::p_prefactor(params, dp, t_obs), t_obs, [&](double s) {
    auto h = h_i(i, std::exp(dp.lambda1 * (t_obs - s)), dp.rho);
    const double w = std::exp(-rate * s);
    return TheoryValue{h.value * w, h.abs_error_bound * w, TheoryValue::Kind::exact};
  });
}

/// Q(N,i): sensitive-division mutations from progenies with exactly one
/// ancestral resistant cell,
///   N gamma_N (1-x_N) delta0 w/(2(1-gamma_N)) int_0^t kappa_i(e^{-l1 (t-s)}) (1 + s delta0 (1-x_N)) e^{-s delta0 x_N} ds.
inline TheoryValue finite_n_Q(std::uint64_t i, double t_obs, const ModelParams& params) {
  if (i < 1) throw std::invalid_argument("finite_n_Q: i >= 1 required");
  if (!(t_obs > 0.0)) throw std::invalid_argument("finite_n_Q: t > 0 required");
  const auto dp = derive(params);
  return detail::finite_integral(detail::q_prefactor(params, dp), t_obs, [&](double s) {
    const double k = kappa_i(i, std::exp(-dp.lambda1 * (t_obs - s)), params.b1, params.d1);
    const double w = (1.0 + s * dp.delta0 * (1.0 - dp.x_n)) * std::exp(-s * dp.delta0 * dp.x_n);
    return TheoryValue{k * w, 0.0, TheoryValue::Kind::exact};
  });
}

/// sum of P(N,i) over i in the open window (x1 e^{l1 t}, x2 e^{l1 t}).
inline TheoryValue finite_n_P_window(double x1, double x2, double t_obs, const ModelParams& params) {
  const auto dp = derive(params);
  const auto win = open_window(x1, x2, std::exp(dp.lambda1 * t_obs));
  if (win.empty()) return {0.0, 0.0, TheoryValue::Kind::quadrature};
  const double rate = dp.lambda1 + dp.x_n * dp.delta0;
  const double k1 = static_cast<double>(win.first - 1);
  return detail::finite_integral(detail::p_prefactor(params, dp, t_obs), t_obs, [&](double s) {
    const double x = std::exp(dp.lambda1 * (t_obs - s));
    const double upper = (x - 1.0) / (x - dp.rho);
    auto lo = detail::tail_power_integral(k1, upper, dp.rho);
    TheoryValue hi{0.0, 0.0, TheoryValue::Kind::exact};
    if (win.last) hi = detail::tail_power_integral(static_cast<double>(*win.last), upper, dp.rho);
    const double w = std::exp(-rate * s);
    return TheoryValue{(lo.value - hi.value) * w, (lo.abs_error_bound + hi.abs_error_bound) * w,
                       TheoryValue::Kind::exact};
  });
}

/// sum of Q(N,i) over i in the open window (x1 e^{l1 t}, x2 e^{l1 t}).
inline TheoryValue finite_n_Q_window(double x1, double x2, double t_obs, const ModelParams& params) {
  const auto dp = derive(params);
  const auto win = open_window(x1, x2, std::exp(dp.lambda1 * t_obs));
  if (win.empty()) return {0.0, 0.0, TheoryValue::Kind::quadrature};
  return detail::finite_integral(detail::q_prefactor(params, dp), t_obs, [&](double s) {
    const double z = std::exp(-dp.lambda1 * (t_obs - s));
    double mass = kappa_tail(win.first - 1, z, dp.rho);
    if (win.last) mass -= kappa_tail(*win.last, z, dp.rho);
    const double w = (1.0 + s * dp.delta0 * (1.0 - dp.x_n)) * std::exp(-s * dp.delta0 * dp.x_n);
    return TheoryValue{mass * w, 0.0, TheoryValue::Kind::exact};
  });
}

// ---------------------------------------------------------------------------
// Asymptotic equivalents

/// E[S_i(t_N)] ~ I(i) 2 b0 gamma w/(l1+l0) N^(1-alpha) e^{l1 t}, paired with
/// the finite-N single-ancestor value P(N,i) + Q(N,i).
inline TheoryPair thm1_small_i(std::uint64_t i, double t_obs, const ModelParams& params) {
  if (!(t_obs > 0.0)) throw std::invalid_argument("thm1_small_i: t > 0 required");
  const auto dp = derive(params);
  const double n = static_cast<double>(params.n_init);
  const auto I = I_of(i, dp.rho);
  const double scale = 2.0 * params.b0 * dp.gamma_n * n * params.omega / (dp.lambda0 + dp.lambda1) *
                       std::exp(dp.lambda1 * t_obs);
  const auto P = finite_n_P(i, t_obs, params);
  const auto Q = finite_n_Q(i, t_obs, params);
  return {{P.value + Q.value, P.abs_error_bound + Q.abs_error_bound, TheoryValue::Kind::quadrature},
          {scale * I.value, scale * I.abs_error_bound, TheoryValue::Kind::asymptotic}};
}

struct WindowTheory {
  TheoryValue asymptotic;  // b0 gamma w l1 (J(x1) - J(x2)) N^(1-alpha)
  TheoryValue k_part;      // resistant-division share, from K
  TheoryValue l_part;      // sensitive-division share, from L
  TheoryValue finite_n_bar;
  TheoryValue finite_n_under;
};

/// Large-family window equivalent with J = K_mag + L, and its finite-N
/// partners (window sums of P and Q).
inline WindowTheory thm2_window(double x1, double x2, double t_obs, const ModelParams& params,
                                double tol = 1e-10) {
  if (!(x1 > 0.0)) throw std::invalid_argument("thm2_window: x1 > 0 required");
  if (!(x1 < x2)) throw std::invalid_argument("thm2_window: x1 < x2 required");
  const auto dp = derive(params);
  const double n = static_cast<double>(params.n_init);
  const double scale = params.b0 * dp.gamma_n * n * params.omega * dp.lambda1;  // gamma N^(1-alpha) = gamma_N N
  const auto k1 = K_mag(x1, params, tol), k2 = K_mag(x2, params, tol);
  const auto l1 = L_of(x1, params, tol), l2 = L_of(x2, params, tol);
  WindowTheory out;
  out.k_part = {scale * (k1.value - k2.value), scale * (k1.abs_error_bound + k2.abs_error_bound),
                TheoryValue::Kind::asymptotic};
  out.l_part = {scale * (l1.value - l2.value), scale * (l1.abs_error_bound + l2.abs_error_bound),
                TheoryValue::Kind::asymptotic};
  out.asymptotic = {out.k_part.value + out.l_part.value, out.k_part.abs_error_bound + out.l_part.abs_error_bound,
                    TheoryValue::Kind::asymptotic};
  out.finite_n_bar = finite_n_P_window(x1, x2, t_obs, params);
  out.finite_n_under = finite_n_Q_window(x1, x2, t_obs, params);
  return out;
}

// ---------------------------------------------------------------------------
// Upper bounds for the parts the closed forms leave out

/// Q(N,i) <= N g delta0 w / (2(1-g)) (1/(delta0 x) + 1/(delta0 x^2)) for every i.
inline double q_upper_bound(const ModelParams& params) {
  const auto dp = derive(params);
  const double n = static_cast<double>(params.n_init);
  const double dx = dp.delta0 * dp.x_n;
  return n * dp.gamma_n * dp.delta0 * params.omega / (2.0 * (1.0 - dp.gamma_n)) * (1.0 / dx + 1.0 / (dx * dp.x_n));
}

/// Multi-ancestor share of E[S_under_i] for every i:
///   N w g / (2(1-g)) (2p/(1-2p) - (1-x)/x).
inline double remainder_bound_under(const ModelParams& params) {
  const auto dp = derive(params);
  const double n = static_cast<double>(params.n_init);
  const double p = dp.p_n, x = dp.x_n;
  return n * params.omega * dp.gamma_n / (2.0 * (1.0 - dp.gamma_n)) * (2.0 * p / (1.0 - 2.0 * p) - (1.0 - x) / x);
}

/// Multi-ancestor share of E[S_bar_i]: each of the expected sum_{k>=2} k P(A_k)
/// ancestral cells per progeny contributes at most the SFS of a clone started
/// at time 0, so R(N,i) <= N (sum_{k>=2} k P(A_k)) w e^{l1 t} h_i(e^{l1 t}).
inline double remainder_bound_bar(std::uint64_t i, double t_obs, const ModelParams& params) {
  const auto multi = expected_multiple_ancestral(params).finite_n.value;
  const auto clone = single_clone_sfs(i, t_obs, params.b1, params.d1, params.omega).finite_n.value;
  return static_cast<double>(params.n_init) * multi * clone;
}

}  // namespace rescue_sfs::theory
