#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rescue_sfs {

/// Law of the number of neutral mutations N_w each daughter receives at a
/// division. Only the mean w/2 enters the expected SFS.
enum class MutationLaw { poisson, bernoulli };

inline std::string_view to_string(MutationLaw law) {
  return law == MutationLaw::poisson ? "poisson" : "bernoulli";
}

inline MutationLaw mutation_law_from_string(std::string_view s) {
  if (s == "poisson") return MutationLaw::poisson;
  if (s == "bernoulli") return MutationLaw::bernoulli;
  throw std::invalid_argument("mutation_law: expected 'poisson' or 'bernoulli', got '" +
                              std::string(s) + "'");
}

/// Raw rates of the two-type birth-death process.
///
/// Sensitive cells (type 0) are subcritical, resistant cells (type 1) are
/// supercritical. Each daughter of a sensitive division independently turns
/// resistant with probability gamma_n = gamma * n_init^(-alpha).
struct ModelParams {
  double b0 = 1.2;
  double d0 = 2.0;
  double b1 = 1.2;
  double d1 = 0.5;
  double omega = 2.0;
  double gamma = 1.0;
  double alpha = 0.9;
  std::int64_t n_init = 500;
  MutationLaw mutation_law = MutationLaw::poisson;

  /// Overrides gamma * n_init^(-alpha) when set (>= 0). Lets the tree-level
  /// experiments fix the per-daughter resistance probability directly.
  double gamma_n_override = -1.0;

  double gamma_n() const {
    if (gamma_n_override >= 0.0) return gamma_n_override;
    return gamma * std::exp(-alpha * std::log(static_cast<double>(n_init)));
  }
};

/// Reference parameter set: N=500, b0=1.2, d0=2, b1=1.2, d1=0.5, w=2,
/// alpha=0.9, gamma=1.
inline ModelParams reference_params() { return ModelParams{}; }

/// Throws std::invalid_argument naming the first violated constraint.
inline void validate(const ModelParams& p) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid parameters: " + what); };
  if (!(p.b0 > 0.0)) fail("b0 > 0 required");
  if (!(p.d0 > p.b0)) fail("d0 > b0 required (sensitive cells must be subcritical)");
  if (!(p.d1 >= 0.0)) fail("d1 >= 0 required");
  if (!(p.b1 > p.d1)) fail("b1 > d1 required (resistant cells must be supercritical)");
  if (!(p.omega >= 0.0)) fail("omega >= 0 required");
  if (p.gamma_n_override < 0.0) {
    if (!(p.gamma > 0.0)) fail("gamma > 0 required");
    if (!(p.alpha > 0.0 && p.alpha <= 1.0)) fail("0 < alpha <= 1 required");
  } else if (!(p.gamma_n_override < 1.0)) {
    fail("gamma_n override must lie in [0, 1)");
  }
  if (p.n_init < 1) fail("n_init >= 1 required");
  if (p.mutation_law == MutationLaw::bernoulli && p.omega > 2.0)
    fail("bernoulli mutation law requires omega <= 2");
  const double g = p.gamma_n();
  if (!(g >= 0.0 && g < 1.0)) fail("gamma * n_init^(-alpha) must lie in [0, 1)");
}

/// Scalars derived from ModelParams. Immutable once built by derive().
struct DerivedParams {
  double lambda0 = 0.0;  // d0 - b0
  double lambda1 = 0.0;  // b1 - d1
  double delta0 = 0.0;   // b0 + d0
  double gamma_n = 0.0;
  double p_n = 0.0;      // division probability of the marked GW tree
  double beta_n = 0.0;   // leaf-mark probability
  double x_n = 0.0;      // geometric parameter of the ancestral generation
  double p_tilde_n = 0.0;
  double rho = 0.0;      // d1 / b1
};

/// Computes every derived scalar. x_n uses the discriminant
/// 1 - 4 (1-g)^2 b0 d0 / delta0^2, which does not cancel when g is tiny.
inline DerivedParams derive(const ModelParams& p) {
  validate(p);
  DerivedParams d;
  d.lambda0 = p.d0 - p.b0;
  d.lambda1 = p.b1 - p.d1;
  d.delta0 = p.b0 + p.d0;
  d.gamma_n = p.gamma_n();
  const double g = d.gamma_n;
  d.p_n = (1.0 - g) * p.b0 / d.delta0;
  d.beta_n = d.delta0 * g / (p.d0 + p.b0 * g);
  // 1 - 4 b0 d0 (1-g)^2 / delta0^2 = (lambda0^2 + 4 b0 d0 g (2-g)) / delta0^2
  const double disc = (d.lambda0 * d.lambda0 + 4.0 * p.b0 * p.d0 * g * (2.0 - g)) / (d.delta0 * d.delta0);
  d.x_n = std::sqrt(disc);
  d.p_tilde_n = 0.5 * (1.0 - d.x_n);
  d.rho = p.d1 / p.b1;
  return d;
}

/// How the observation time is specified.
struct ObservationSpec {
  enum class Mode { log_scaled, absolute };
  Mode mode = Mode::log_scaled;
  double t_mult = 1.25;  // t_N = t_mult * ln(N); default 1/lambda0 for the reference set
  double t_abs = 0.0;
};

/// t_mult * ln(N) in log-scaled mode, t_abs otherwise.
inline double observation_time(const ObservationSpec& spec, const ModelParams& p) {
  if (spec.mode == ObservationSpec::Mode::absolute) {
    if (!(spec.t_abs > 0.0)) throw std::invalid_argument("t_abs > 0 required");
    return spec.t_abs;
  }
  if (!(spec.t_mult > 0.0)) throw std::invalid_argument("t_mult > 0 required");
  if (p.n_init < 1) throw std::invalid_argument("n_init >= 1 required");
  return spec.t_mult * std::log(static_cast<double>(p.n_init));
}

}  // namespace rescue_sfs
