#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

namespace rescue_sfs {

/// A computed quantity with a bound on its absolute error.
struct TheoryValue {
  enum class Kind { exact, quadrature, asymptotic };
  double value = 0.0;
  double abs_error_bound = 0.0;
  Kind kind = Kind::exact;
};

inline const char* to_string(TheoryValue::Kind k) {
  switch (k) {
    case TheoryValue::Kind::exact: return "exact";
    case TheoryValue::Kind::quadrature: return "quadrature";
    case TheoryValue::Kind::asymptotic: return "asymptotic";
  }
  return "?";
}

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved error bound " + std::to_string(achieved) + ")"),
        achieved_bound(achieved) {}
  double achieved_bound;
};

struct QuadOptions {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;
  int max_subdivisions = 4000;
};

namespace detail {

// gsl_function thunk; exceptions from the integrand are parked and rethrown
// after GSL returns instead of unwinding through C frames.
template <class F>
struct GslThunk {
  F* f;
  std::exception_ptr error;

  static double call(double x, void* self) {
    auto* t = static_cast<GslThunk*>(self);
    if (t->error) return 0.0;
    try {
      return (*t->f)(x);
    } catch (...) {
      t->error = std::current_exception();
      return 0.0;
    }
  }
};

inline void silence_gsl() {
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

}  // namespace detail

/// Global adaptive Gauss-Kronrod 21 (QUADPACK QAG via GSL) on [a, b].
/// Throws QuadratureError when max(abs_tol, rel_tol |I|) is not met within
/// opt.max_subdivisions intervals (or round-off level, if that is larger).
template <class F>
TheoryValue integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
  if (!(b > a)) return {0.0, 0.0, TheoryValue::Kind::quadrature};
  detail::silence_gsl();
  using Fn = std::remove_reference_t<F>;
  detail::GslThunk<Fn> thunk{&f, nullptr};
  gsl_function gf{&detail::GslThunk<Fn>::call, &thunk};
  const auto limit = static_cast<std::size_t>(std::max(opt.max_subdivisions, 1));
  std::unique_ptr<gsl_integration_workspace, decltype(&gsl_integration_workspace_free)> ws(
      gsl_integration_workspace_alloc(limit), &gsl_integration_workspace_free);
  if (!ws) throw std::bad_alloc();
  double value = 0.0, err = 0.0;
  const int status =
      gsl_integration_qag(&gf, a, b, opt.abs_tol, opt.rel_tol, limit, GSL_INTEG_GAUSS21, ws.get(), &value, &err);
  if (thunk.error) std::rethrow_exception(thunk.error);
  // a tolerance below double-precision reach ends in GSL_EROUND; the result
  // stands when the achieved error is itself at round-off level
  const double target = std::max(opt.abs_tol, opt.rel_tol * std::abs(value));
  const bool roundoff_ok = status == GSL_EROUND && err <= std::max(target, 1e-13 * std::abs(value));
  if ((status != GSL_SUCCESS && !roundoff_ok) || !std::isfinite(value)) {
    throw QuadratureError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                              std::to_string(b) + "]: " + gsl_strerror(status),
                          err);
  }
  return {value, err, TheoryValue::Kind::quadrature};
}

/// Integral over [0, inf) of an integrand whose tail mass beyond s is at most
/// tail_bound(s) (nonincreasing in s). The cut-off s_max is grown until the
/// tail is below tol/2; the remaining tol/2 goes to the finite part.
template <class F, class Tail>
TheoryValue quad_semi_infinite(F&& f, Tail&& tail_bound, double tol, int max_subdivisions = 4000) {
  double s_max = 1.0;
  int guard = 0;
  while (tail_bound(s_max) >= 0.5 * tol) {
    s_max *= 2.0;
    if (++guard > 200) throw QuadratureError("tail bound never fell below tol/2", tail_bound(s_max));
  }
  // tighten the cut-off by bisection; fewer wasted nodes on flat tails
  double lo = s_max / 2.0, hi = s_max;
  if (guard > 0) {
    for (int k = 0; k < 40; ++k) {
      const double mid = 0.5 * (lo + hi);
      (tail_bound(mid) < 0.5 * tol ? hi : lo) = mid;
    }
    s_max = hi;
  }
  const double tail = tail_bound(s_max);
  auto finite = integrate(f, 0.0, s_max, {0.5 * tol, 0.0, max_subdivisions});
  finite.abs_error_bound += tail;
  return finite;
}

/// Convenience form for integrands dominated by scale * exp(-rate * s).
template <class F>
TheoryValue quad_semi_infinite_exp(F&& f, double scale, double rate, double tol) {
  return quad_semi_infinite(
      std::forward<F>(f), [scale, rate](double s) { return scale * std::exp(-rate * s) / rate; }, tol);
}

}  // namespace rescue_sfs
