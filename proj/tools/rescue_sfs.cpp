#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "rescue_sfs/cli.hpp"

namespace {

std::vector<double> parse_list(const std::string& text) {
  // "1,2,5" or "1:20" (inclusive, unit step) or "0.6:6:0.2"
  std::vector<double> out;
  if (text.empty()) return out;
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
    if (parts.size() < 2 || parts.size() > 3) throw std::invalid_argument("range must be lo:hi or lo:hi:step");
    const double step = parts.size() == 3 ? parts[2] : 1.0;
    if (!(step > 0.0)) throw std::invalid_argument("range step must be positive");
    for (int k = 0;; ++k) {
      const double v = parts[0] + k * step;
      if (v > parts[1] + 1e-9 * step) break;
      out.push_back(v);
    }
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace rescue_sfs;
  CLI::App app{"Site frequency spectrum of a rescued two-type branching population"};
  app.require_subcommand(1);

  cli::GlobalOptions g;
  std::string config_path;
  std::uint64_t seed = 0, replicates = 0;
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (overrides config)");
  app.add_option("--replicates", replicates, "replicate / sample count (overrides config)");
  app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
  app.add_option("--workers", g.workers, "worker threads, 0 = all cores")->capture_default_str();
  app.add_option("--tol", g.tol, "absolute quadrature tolerance")->capture_default_str();
  app.add_option("--set", g.overrides, "config override key=value (repeatable)");

  auto* sim = app.add_subcommand("simulate", "run replicates and write SFS CSVs");
  cli::SimulateOptions so;
  sim->add_option("--max-i", so.max_i, "largest i reported")->capture_default_str();

  auto* th = app.add_subcommand("theory", "evaluate a closed form or integral");
  cli::TheoryOptions to;
  std::string index_text;
  double arg = 0.0;
  th->add_option("--op", to.op, "operation id")->required()->check(CLI::IsMember(cli::theory_ops()));
  th->add_option("--index", index_text, "values: list a,b,c or range lo:hi[:step]");
  auto* arg_opt = th->add_option("--arg", arg, "second argument (x for hi/kappa, t for clone-sfs)");
  th->add_option("--x2", to.x2, "upper window end for thm2 (default inf)");

  auto* gwc = app.add_subcommand("gw", "sample conditioned marked GW trees");
  cli::GwOptions go;
  double p = 0.0, beta = 0.0;
  std::string condition = "exactly_one", method = "rejection";
  auto* p_opt = gwc->add_option("--p", p, "division probability (default p_N)");
  auto* b_opt = gwc->add_option("--beta", beta, "mark probability (default beta_N)");
  gwc->add_option("--condition", condition)->check(CLI::IsMember({"exactly_one", "at_least_one"}))->capture_default_str();
  gwc->add_option("--method", method)->check(CLI::IsMember({"rejection", "direct"}))->capture_default_str();
  bool planted = false;
  gwc->add_flag("--planted", planted, "let the root itself be marked");

  auto* cmp = app.add_subcommand("compare", "simulate and gate against finite-N theory");
  cli::CompareOptions co;
  std::string xs_text;
  cmp->add_option("--max-i", co.max_i)->capture_default_str();
  cmp->add_option("--x", xs_text, "window lower ends (list or range)");
  cmp->add_option("--z", co.z_threshold, "|z| threshold")->capture_default_str();
  cmp->add_option("--gate", co.required_pass_rate, "required pass rate")->capture_default_str();

  auto* fig = app.add_subcommand("figures", "write the data behind figures 2 to 7");
  cli::FiguresOptions fo;
  fig->add_option("--figure", fo.figures, "figure numbers 2..7 (repeatable)");

  CLI11_PARSE(app, argc, argv);
  if (!config_path.empty()) g.config = config_path;
  if (app.count("--seed")) g.seed = seed;
  if (app.count("--replicates")) g.replicates = replicates;

  try {
    if (*sim) return cli::cmd_simulate(g, so, std::cout);
    if (*th) {
      to.index = parse_list(index_text);
      if (*arg_opt) to.arg = arg;
      return cli::cmd_theory(g, to, std::cout);
    }
    if (*gwc) {
      if (*p_opt) go.p = p;
      if (*b_opt) go.beta = beta;
      go.condition = condition == "exactly_one" ? gw::MarkCondition::exactly_one : gw::MarkCondition::at_least_one;
      go.method = method == "direct" ? gw::ConditionedMethod::direct : gw::ConditionedMethod::rejection;
      go.root_excluded = !planted;
      return cli::cmd_gw(g, go, std::cout);
    }
    if (*cmp) {
      if (!xs_text.empty()) co.window_x = parse_list(xs_text);
      return cli::cmd_compare(g, co, std::cout);
    }
    if (*fig) return cli::cmd_figures(g, fo, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
