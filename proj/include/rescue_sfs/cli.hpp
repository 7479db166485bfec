#pragma once

// Subcommand implementations behind the rescue_sfs executable. Kept in a
// header so tests can drive them without spawning processes.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "rescue_sfs/config.hpp"
#include "rescue_sfs/gw_trees.hpp"
#include "rescue_sfs/io.hpp"
#include "rescue_sfs/montecarlo.hpp"
#include "rescue_sfs/stats.hpp"
#include "rescue_sfs/theory.hpp"

namespace rescue_sfs::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using io::fmt;

struct GlobalOptions {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replicates;
  std::string out_dir = "out";
  unsigned workers = 0;
  double tol = 1e-10;
  std::vector<std::string> overrides;  // key=value, applied after the file
};

inline RunConfig resolve_config(const GlobalOptions& g) {
  RunConfig cfg = g.config ? load_config(*g.config) : RunConfig{};
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(kv, 0, "override must be key=value");
    apply_setting(cfg, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  if (g.seed) cfg.seed = *g.seed;
  if (g.replicates) cfg.replicates = *g.replicates;
  try {
    validate(cfg.params);
    (void)cfg.t_obs();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", 0, e.what());
  }
  return cfg;
}

inline fs::path prepare_out_dir(const GlobalOptions& g) {
  fs::path dir(g.out_dir);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::size_t max_i = 20;
};

inline int cmd_simulate(const GlobalOptions& g, const SimulateOptions& opt, std::ostream& log) {
  const auto cfg = resolve_config(g);
  const auto dir = prepare_out_dir(g);
  mc::ReplicateOptions ro;
  ro.t_obs = cfg.t_obs();
  ro.replicates = cfg.replicates;
  ro.seed = cfg.seed;
  ro.max_i = opt.max_i;
  ro.workers = g.workers;
  ro.keep_per_replicate = true;
  const auto st = mc::replicate_sfs(cfg.params, ro);

  const auto per_path = dir / "sfs_replicates.csv";
  {
    io::CsvWriter w(per_path, {"replicate", "i", "S", "S_bar", "S_under"});
    for (const auto& r : st.rows)
      for (std::size_t i = 1; i <= opt.max_i; ++i)
        w.row({std::to_string(r.replicate), std::to_string(i), std::to_string(r.total[i - 1]),
               std::to_string(r.bar[i - 1]), std::to_string(r.under[i - 1])});
  }
  const auto agg_path = dir / "sfs_aggregate.csv";
  {
    io::CsvWriter w(agg_path, {"i", "mean_S", "mean_Sbar", "mean_Sunder", "ci_lo", "ci_hi", "replicates"});
    for (std::size_t i = 1; i <= opt.max_i; ++i) {
      const auto& s = st.total[i - 1];
      const double h = s.ci_half_width();
      w.row({std::to_string(i), fmt(s.mean()), fmt(st.bar[i - 1].mean()), fmt(st.under[i - 1].mean()),
             fmt(s.mean() - h), fmt(s.mean() + h), std::to_string(s.count())});
    }
  }
  ordered_json extra;
  extra["mean_ancestral_count"] = st.ancestral_count.mean();
  extra["mean_z1"] = st.z1.mean();
  io::write_manifest(dir / "manifest.json", "simulate", to_json(cfg), {per_path, agg_path}, extra);
  log << "simulate: " << cfg.replicates << " replicates, t_obs=" << cfg.t_obs() << ", outputs in " << dir.string()
      << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// theory

struct TheoryRow {
  double index = 0.0;
  TheoryValue value;
  double asymptotic = std::numeric_limits<double>::quiet_NaN();
};

struct TheoryOptions {
  std::string op;
  std::vector<double> index;  // i, g, x or t depending on op
  std::optional<double> arg;  // second argument of hi, kappa and clone-sfs
  double x2 = kInfinity;      // upper window end for thm2
};

inline const std::vector<std::string>& theory_ops() {
  static const std::vector<std::string> ops = {"I",  "hi", "kappa", "K",  "L",        "Kslope",   "thm1",
                                               "thm2", "P", "Q",    "gn", "tn",       "tilde-gn", "tilde-tn",
                                               "anc-count", "anc-one", "anc-multi", "clone-sfs"};
  return ops;
}

inline std::uint64_t as_index(double v, const char* what) {
  if (!(v >= 1.0) || v != std::floor(v)) throw std::invalid_argument(std::string(what) + " must be an integer >= 1");
  return static_cast<std::uint64_t>(v);
}

inline std::vector<TheoryRow> evaluate_theory(const RunConfig& cfg, const TheoryOptions& opt, double tol) {
  using namespace theory;
  const auto& p = cfg.params;
  const auto dp = derive(p);
  const double t = cfg.t_obs();
  auto exact = [](double v) { return TheoryValue{v, 0.0, TheoryValue::Kind::exact}; };
  auto need_arg = [&](const char* name) {
    if (!opt.arg) throw std::invalid_argument(std::string("theory ") + name + " needs --arg");
    return *opt.arg;
  };
  std::vector<TheoryRow> rows;
  const std::string& op = opt.op;
  if (op == "anc-count" || op == "anc-one" || op == "anc-multi") {
    const auto pair = op == "anc-count" ? expected_ancestral_count(p)
                      : op == "anc-one" ? prob_exactly_one_ancestral(p)
                                        : expected_multiple_ancestral(p);
    rows.push_back({0.0, pair.finite_n, pair.asymptotic.value});
    return rows;
  }
  if (opt.index.empty()) throw std::invalid_argument("theory " + op + " needs at least one --index value");
  for (double v : opt.index) {
    TheoryRow r;
    r.index = v;
    if (op == "I") r.value = I_of(as_index(v, "i"), dp.rho);
    else if (op == "hi") r.value = h_i(as_index(v, "i"), need_arg("hi"), dp.rho);
    else if (op == "kappa") r.value = exact(kappa_i(as_index(v, "i"), need_arg("kappa"), p.b1, p.d1));
    else if (op == "K") r.value = K_mag(v, p, tol);
    else if (op == "L") r.value = L_of(v, p, tol);
    else if (op == "Kslope") r.value = K_mag_slope(v, p, tol);
    else if (op == "thm1") {
      auto pr = thm1_small_i(as_index(v, "i"), t, p);
      r.value = pr.finite_n;
      r.asymptotic = pr.asymptotic.value;
    } else if (op == "thm2") {
      auto w = thm2_window(v, opt.x2, t, p, tol);
      r.value = {w.finite_n_bar.value + w.finite_n_under.value,
                 w.finite_n_bar.abs_error_bound + w.finite_n_under.abs_error_bound, TheoryValue::Kind::quadrature};
      r.asymptotic = w.asymptotic.value;
    } else if (op == "P") r.value = finite_n_P(as_index(v, "i"), t, p);
    else if (op == "Q") r.value = finite_n_Q(as_index(v, "i"), t, p);
    else if (op == "gn") r.value = exact(gn_pmf(dp, as_index(v, "g")));
    else if (op == "tn") r.value = exact(tn_pdf(dp, v));
    else if (op == "tilde-gn") r.value = exact(tilde_gn_pmf(dp, as_index(v, "g")));
    else if (op == "tilde-tn") r.value = exact(tilde_tn_pdf(dp, v));
    else if (op == "clone-sfs") {
      auto pr = single_clone_sfs(as_index(v, "i"), need_arg("clone-sfs"), p.b1, p.d1, p.omega);
      r.value = pr.finite_n;
      r.asymptotic = pr.asymptotic.value;
    } else {
      throw std::invalid_argument("unknown theory op '" + op + "'");
    }
    rows.push_back(r);
  }
  return rows;
}

inline int cmd_theory(const GlobalOptions& g, const TheoryOptions& opt, std::ostream& out) {
  const auto cfg = resolve_config(g);
  const auto rows = evaluate_theory(cfg, opt, g.tol);
  const auto dir = prepare_out_dir(g);
  const auto path = dir / ("theory_" + opt.op + ".csv");
  {
    io::CsvWriter w(path, {"index", "value", "abs_error_bound", "kind", "asymptotic"});
    for (const auto& r : rows)
      w.row({fmt(r.index), fmt(r.value.value), fmt(r.value.abs_error_bound), to_string(r.value.kind),
             std::isnan(r.asymptotic) ? "" : fmt(r.asymptotic)});
  }
  out << io::read_file(path);
  return 0;
}

// ---------------------------------------------------------------------------
// gw

struct GwOptions {
  std::optional<double> p, beta;  // default: the configured p_N, beta_N
  gw::MarkCondition condition = gw::MarkCondition::exactly_one;
  bool root_excluded = true;
  gw::ConditionedMethod method = gw::ConditionedMethod::rejection;
};

struct GwRun {
  gw::GwLaw law;
  std::vector<std::uint64_t> generations;
  std::vector<double> lifetimes;
  stats::ChiSquareResult chi;
  std::optional<stats::KsResult> ks;
};

/// Draws conditioned trees; generation and lifetime of a uniformly chosen
/// mark per tree, tested against the geometric / exponential laws for
/// exactly-one-mark (or the mixture law for at-least-one-mark).
inline GwRun run_gw(const RunConfig& cfg, const GwOptions& opt, std::uint64_t samples) {
  if (opt.condition == gw::MarkCondition::at_least_one && opt.root_excluded)
    throw std::invalid_argument("gw: the at-least-one generation law holds for the planted tree; use --planted");
  const auto dp = derive(cfg.params);
  GwRun run;
  run.law = {opt.p.value_or(dp.p_n), opt.beta.value_or(dp.beta_n)};
  gw::ConditionedOptions co;
  co.sample.root_excluded = opt.root_excluded;
  co.method = opt.method;
  co.delta0 = dp.delta0;
  struct Acc {
    std::vector<std::uint64_t> g;
    std::vector<double> t;
    void merge(const Acc& o) {
      g.insert(g.end(), o.g.begin(), o.g.end());
      t.insert(t.end(), o.t.begin(), o.t.end());
    }
  };
  auto acc = mc::run_chunked<Acc>(
      samples, mc::default_workers(), 4096, [] { return Acc{}; },
      [&](std::uint64_t k, Acc& a) {
        auto rng = CounterRng::split(cfg.seed, k);
        auto s = gw::sample_conditioned(run.law, opt.condition, rng, co);
        a.g.push_back(s.generation);
        a.t.push_back(*s.lifetime);
      });
  run.generations = std::move(acc.g);
  run.lifetimes = std::move(acc.t);
  const double x = run.law.x();
  if (opt.condition == gw::MarkCondition::exactly_one) {
    run.chi = stats::gof_geometric(run.generations, x);
    run.ks = stats::gof_exponential(run.lifetimes, dp.delta0 * x);
  } else {
    run.chi = stats::gof_discrete(run.generations, 1,
                                  [&](std::uint64_t gg) { return gw::gen_pmf_atleast_one_mark(run.law, gg); });
  }
  return run;
}

inline int cmd_gw(const GlobalOptions& g, const GwOptions& opt, std::ostream& out) {
  const auto cfg = resolve_config(g);
  const auto dir = prepare_out_dir(g);
  const auto run = run_gw(cfg, opt, cfg.replicates);
  const double x = run.law.x();
  std::map<std::uint64_t, std::uint64_t> hist;
  for (auto v : run.generations) ++hist[v];
  const auto path = dir / "gw_generation.csv";
  {
    io::CsvWriter w(path, {"g", "count", "frequency", "theory"});
    const double n = static_cast<double>(run.generations.size());
    for (const auto& [gg, c] : hist) {
      const double th = opt.condition == gw::MarkCondition::exactly_one
                            ? x * std::pow(1.0 - x, static_cast<double>(gg) - 1.0)
                            : gw::gen_pmf_atleast_one_mark(run.law, gg);
      w.row({std::to_string(gg), std::to_string(c), fmt(static_cast<double>(c) / n), fmt(th)});
    }
  }
  ordered_json res;
  res["p"] = run.law.p;
  res["beta"] = run.law.beta;
  res["x"] = x;
  res["chi_square_p"] = run.chi.p_value;
  if (run.ks) res["ks_p"] = run.ks->p_value;
  io::write_manifest(dir / "manifest.json", "gw", to_json(cfg), {path}, res);
  out << res.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// compare

struct CompareOptions {
  std::size_t max_i = 20;
  std::vector<double> window_x = {0.6, 1.0, 2.0, 4.0, 6.0};
  double z_threshold = 3.0;
  double required_pass_rate = 0.95;
};

struct CompareResult {
  mc::ComparisonReport small_i;  // S_bar_i vs P(N,i)
  mc::ComparisonReport windows;  // S_under window vs sum of Q
  bool passed = false;
};

inline CompareResult run_compare(const RunConfig& cfg, const CompareOptions& opt, unsigned workers) {
  const double t = cfg.t_obs();
  mc::ReplicateOptions ro;
  ro.t_obs = t;
  ro.replicates = cfg.replicates;
  ro.seed = cfg.seed;
  ro.max_i = opt.max_i;
  ro.window_x = opt.window_x;
  ro.workers = workers;
  const auto st = mc::replicate_sfs(cfg.params, ro);

  mc::TheoryCurve small;
  std::vector<double> idx;
  for (std::size_t i = 1; i <= opt.max_i; ++i) {
    idx.push_back(static_cast<double>(i));
    small.index.push_back(static_cast<double>(i));
    small.exact.push_back(theory::finite_n_P(i, t, cfg.params).value);
    small.asymptotic.push_back(theory::thm1_small_i(i, t, cfg.params).asymptotic.value);
  }
  CompareResult res;
  res.small_i = mc::compare(idx, st.bar, small, mc::CompareMode::z_score, opt.z_threshold);
  res.small_i.label = "S_bar_i vs P(N,i)";

  mc::TheoryCurve win;
  win.index = opt.window_x;
  for (double x : opt.window_x) {
    const auto w = theory::thm2_window(x, kInfinity, t, cfg.params);
    win.exact.push_back(w.finite_n_under.value);
    win.asymptotic.push_back(w.l_part.value);
  }
  res.windows = mc::compare(opt.window_x, st.win_under, win, mc::CompareMode::z_score, opt.z_threshold);
  res.windows.label = "S_under window (x, inf) vs sum Q(N,i)";
  for (auto* r : {&res.small_i, &res.windows}) {
    r->seed = cfg.seed;
    r->replicates = cfg.replicates;
  }
  res.passed = res.small_i.passed(opt.required_pass_rate) && res.windows.passed(opt.required_pass_rate);
  return res;
}

inline ordered_json report_json(const mc::ComparisonReport& r) {
  ordered_json j;
  j["label"] = r.label;
  j["mode"] = to_string(r.mode);
  j["threshold"] = r.threshold;
  j["pass_rate"] = r.pass_rate;
  j["seed"] = r.seed;
  j["replicates"] = r.replicates;
  j["rows"] = ordered_json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"index", row.index},
                         {"mean", row.mean},
                         {"std_error", row.std_error},
                         {"theory_exact", row.theory_exact},
                         {"theory_asymptotic", row.theory_asymptotic},
                         {"z", row.z},
                         {"relative_gap", row.relative_gap},
                         {"pass", row.pass}});
  }
  return j;
}

inline void write_report_csv(const fs::path& path, const mc::ComparisonReport& r) {
  io::CsvWriter w(path, {"index", "mean", "std_error", "ci_half_width", "theory_exact", "theory_asymptotic", "z",
                         "relative_gap", "pass"});
  for (const auto& row : r.rows)
    w.row({fmt(row.index), fmt(row.mean), fmt(row.std_error), fmt(row.ci_half_width), fmt(row.theory_exact),
           fmt(row.theory_asymptotic), fmt(row.z), fmt(row.relative_gap), row.pass ? "true" : "false"});
}

/// Exit code 0 when both gates pass, 2 otherwise.
inline int cmd_compare(const GlobalOptions& g, const CompareOptions& opt, std::ostream& out) {
  const auto cfg = resolve_config(g);
  const auto dir = prepare_out_dir(g);
  const auto res = run_compare(cfg, opt, g.workers);
  const auto small_path = dir / "compare_small_i.csv";
  const auto win_path = dir / "compare_windows.csv";
  write_report_csv(small_path, res.small_i);
  write_report_csv(win_path, res.windows);
  ordered_json rep;
  rep["small_i"] = report_json(res.small_i);
  rep["windows"] = report_json(res.windows);
  rep["required_pass_rate"] = opt.required_pass_rate;
  rep["passed"] = res.passed;
  {
    std::ofstream f(dir / "report.json");
    f << rep.dump(2) << "\n";
  }
  io::write_manifest(dir / "manifest.json", "compare", to_json(cfg), {small_path, win_path, dir / "report.json"});
  out << res.small_i.label << ": pass rate " << res.small_i.pass_rate << "\n"
      << res.windows.label << ": pass rate " << res.windows.pass_rate << "\n"
      << (res.passed ? "PASS" : "FAIL") << "\n";
  return res.passed ? 0 : 2;
}

// ---------------------------------------------------------------------------
// figures

struct FiguresOptions {
  std::vector<int> figures = {2, 3, 4, 5, 6, 7};
};

inline std::vector<fs::path> figure2(const RunConfig& base, const fs::path& dir) {
  std::vector<fs::path> outs;
  for (double gamma_n : {0.2, 0.002}) {
    RunConfig cfg = base;
    cfg.params.b0 = 1.0;
    cfg.params.d0 = 2.0;
    cfg.params.gamma_n_override = gamma_n;
    GwOptions go;
    go.method = gw::ConditionedMethod::direct;
    const auto run = run_gw(cfg, go, cfg.replicates);
    const double x = run.law.x();
    const double rate = (cfg.params.b0 + cfg.params.d0) * x;
    const std::string tag = gamma_n == 0.2 ? "0.2" : "0.002";
    std::map<std::uint64_t, std::uint64_t> hist;
    for (auto v : run.generations) ++hist[v];
    const double n = static_cast<double>(run.generations.size());
    auto gpath = dir / ("fig2_generation_gamma" + tag + ".csv");
    {
      io::CsvWriter w(gpath, {"g", "frequency", "theory"});
      for (const auto& [gg, c] : hist)
        w.row({std::to_string(gg), fmt(static_cast<double>(c) / n), fmt(x * std::pow(1.0 - x, double(gg) - 1.0))});
    }
    auto tpath = dir / ("fig2_time_gamma" + tag + ".csv");
    {
      const double width = 0.1 / x;
      std::map<std::uint64_t, std::uint64_t> th;
      for (double v : run.lifetimes) ++th[static_cast<std::uint64_t>(v / width)];
      io::CsvWriter w(tpath, {"bin_lo", "bin_hi", "density", "theory"});
      for (const auto& [b, c] : th) {
        const double lo = b * width, hi = lo + width;
        w.row({fmt(lo), fmt(hi), fmt(static_cast<double>(c) / (n * width)),
               fmt((std::exp(-rate * lo) - std::exp(-rate * hi)) / width)});
      }
    }
    outs.push_back(gpath);
    outs.push_back(tpath);
  }
  return outs;
}

inline std::vector<fs::path> figures_sfs(const RunConfig& cfg, const std::vector<int>& which, const fs::path& dir,
                                         unsigned workers) {
  auto wants = [&](int f) { return std::find(which.begin(), which.end(), f) != which.end(); };
  const double t = cfg.t_obs();
  mc::ReplicateOptions ro;
  ro.t_obs = t;
  ro.replicates = cfg.replicates;
  ro.seed = cfg.seed;
  ro.workers = workers;
  ro.max_i = wants(4) ? 700 : 121;
  for (int k = 1; k <= 70; ++k) ro.window_x.push_back(0.1 * k);
  const auto st = mc::replicate_sfs(cfg.params, ro);

  std::vector<fs::path> outs;
  if (wants(3)) {
    auto path = dir / "fig3_small_i.csv";
    io::CsvWriter w(path, {"i", "mean_S", "ci_S", "mean_Sbar", "ci_Sbar", "asymptotic", "finite_n_P"});
    for (std::size_t i = 1; i <= 121; ++i) {
      const auto pr = theory::thm1_small_i(i, t, cfg.params);
      w.row({std::to_string(i), fmt(st.total[i - 1].mean()), fmt(st.total[i - 1].ci_half_width()),
             fmt(st.bar[i - 1].mean()), fmt(st.bar[i - 1].ci_half_width()), fmt(pr.asymptotic.value),
             fmt(theory::finite_n_P(i, t, cfg.params).value)});
    }
    outs.push_back(path);
  }
  if (wants(4)) {
    auto path = dir / "fig4_large_i.csv";
    io::CsvWriter w(path, {"i", "mean_S", "mean_Sbar", "mean_Sunder"});
    for (std::size_t i = 200; i <= 700; ++i)
      w.row({std::to_string(i), fmt(st.total[i - 1].mean()), fmt(st.bar[i - 1].mean()), fmt(st.under[i - 1].mean())});
    outs.push_back(path);
  }
  for (int f : {5, 6}) {
    if (!wants(f)) continue;
    auto path = dir / (f == 5 ? "fig5_window_under.csv" : "fig6_window_bar.csv");
    io::CsvWriter w(path, {"x", "mean", "ci", "asymptotic", "finite_n"});
    for (std::size_t k = 0; k < ro.window_x.size(); ++k) {
      const double x = ro.window_x[k];
      const auto th = theory::thm2_window(x, kInfinity, t, cfg.params);
      const auto& s = f == 5 ? st.win_under[k] : st.win_bar[k];
      w.row({fmt(x), fmt(s.mean()), fmt(s.ci_half_width()), fmt(f == 5 ? th.l_part.value : th.k_part.value),
             fmt(f == 5 ? th.finite_n_under.value : th.finite_n_bar.value)});
    }
    outs.push_back(path);
  }
  return outs;
}

inline fs::path figure7(const RunConfig& base, const fs::path& dir, double tol) {
  auto path = dir / "fig7_K_L.csv";
  io::CsvWriter w(path, {"b0", "lambda0", "x", "K", "L"});
  for (double b0 : {1.2, 2.2})
    for (double l0 : {0.8, 0.3}) {
      ModelParams p = base.params;
      p.b0 = b0;
      p.d0 = b0 + l0;
      for (int k = 0; k <= 54; ++k) {
        const double x = 0.6 + 0.1 * k;
        w.row({fmt(b0), fmt(l0), fmt(x), fmt(theory::K_mag(x, p, tol).value), fmt(theory::L_of(x, p, tol).value)});
      }
    }
  return path;
}

inline int cmd_figures(const GlobalOptions& g, const FiguresOptions& opt, std::ostream& log) {
  const auto cfg = resolve_config(g);
  const auto dir = prepare_out_dir(g);
  auto wants = [&](int f) { return std::find(opt.figures.begin(), opt.figures.end(), f) != opt.figures.end(); };
  for (int f : opt.figures)
    if (f < 2 || f > 7) throw std::invalid_argument("figures: known figures are 2 to 7, got " + std::to_string(f));
  std::vector<fs::path> outs;
  if (wants(2)) {
    auto v = figure2(cfg, dir);
    outs.insert(outs.end(), v.begin(), v.end());
  }
  if (wants(3) || wants(4) || wants(5) || wants(6)) {
    auto v = figures_sfs(cfg, opt.figures, dir, g.workers);
    outs.insert(outs.end(), v.begin(), v.end());
  }
  if (wants(7)) outs.push_back(figure7(cfg, dir, g.tol));
  io::write_manifest(dir / "manifest.json", "figures", to_json(cfg), outs);
  for (const auto& p : outs) log << p.string() << "\n";
  return 0;
}

}  // namespace rescue_sfs::cli
