// Command line front end: argument parsing and dispatch only; all work
// happens in the fitio command functions. Exit codes: 0 success, 2 completed
// without convergence, 1 invalid input or usage. stdout carries one JSON
// summary line per command, stderr carries logs and warnings.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "ordcop/fitio.hpp"

namespace {

int env_threads() {
  const char* v = std::getenv("ORDCOP_THREADS");
  if (!v) return 1;
  try {
    const int t = std::stoi(v);
    return t >= 1 ? t : 1;
  } catch (...) {
    return 1;
  }
}

// Splits "a,b,c" into tokens, skipping empty pieces.
std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    const size_t comma = s.find(',', start);
    const size_t end = comma == std::string::npos ? s.size() : comma;
    if (end > start) out.push_back(s.substr(start, end - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bivariate copula regression for an ordinal and a continuous response"};
  app.require_subcommand(1);

  ordcop::CliOptions o;
  o.threads = env_threads();
  std::string copula_list, link_list;

  const auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* cfg = cmd->add_option("--config", o.config_path, "model config file");
    if (needs_config) cfg->required();
    cmd->add_option("--out-dir", o.out_dir, "artifact directory (created if missing)");
    cmd->add_option("--seed", o.seed, "RNG seed override")
        ->each([&](const std::string&) { o.has_seed = true; });
    cmd->add_option("--threads", o.threads, "worker threads (math is sequential either way)");
    cmd->add_option("--tol", o.tol, "convergence tolerance override")
        ->each([&](const std::string&) { o.has_tol = true; });
    cmd->add_option("--max-iter", o.max_iter, "iteration cap override")
        ->each([&](const std::string&) { o.has_max_iter = true; });
  };

  CLI::App* fit = app.add_subcommand("fit", "estimate the model, write fit.json and fit.bin");
  add_common(fit, true);

  CLI::App* select = app.add_subcommand(
      "select", "fit candidate copulas/links plus independence, rank by AIC");
  add_common(select, true);
  select->add_option("--copulas", copula_list,
                     "comma list, e.g. gaussian,frank,clayton,gumbel,joe180");
  select->add_option("--links", link_list, "comma list: logit,probit");

  CLI::App* predict = app.add_subcommand(
      "predict", "linear predictors, category probabilities, tau per row");
  add_common(predict, false);
  predict->add_option("--fit", o.fit_path, "fit state file (default <out-dir>/fit.bin)");
  predict->add_option("--data", o.data_path, "prediction rows CSV (default: training data)");

  CLI::App* residuals = app.add_subcommand(
      "residuals", "randomized quantile residuals with QQ reference bands");
  add_common(residuals, false);
  residuals->add_option("--fit", o.fit_path, "fit state file (default <out-dir>/fit.bin)");
  residuals->add_option("--n-rep", o.n_rep, "band replicates");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "replicated recovery study on synthetic data");
  add_common(simulate, false);
  simulate->add_option("--scenario", o.scenario, "1..4")->check(CLI::Range(1, 4));
  simulate->add_option("--n", o.n, "observations per replicate");
  simulate->add_option("--reps", o.reps, "clean replicates to collect");
  simulate->add_option("--grid", o.grid, "evaluation grid size for smooth terms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  // all math paths are sequential and therefore thread-count invariant
  Eigen::setNbThreads(1);

  o.copulas = split_list(copula_list);
  o.links = split_list(link_list);

  if (fit->parsed()) return ordcop::cmd_fit(o, std::cout, std::cerr);
  if (select->parsed()) return ordcop::cmd_select(o, std::cout, std::cerr);
  if (predict->parsed()) return ordcop::cmd_predict(o, std::cout, std::cerr);
  if (residuals->parsed()) return ordcop::cmd_residuals(o, std::cout, std::cerr);
  if (simulate->parsed()) return ordcop::cmd_simulate(o, std::cout, std::cerr);
  return 1;
}
