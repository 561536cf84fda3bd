// Drives the installed binary through a shell: exit codes, stdout/stderr
// discipline, artifact layout, and byte-level reproducibility.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "ordcop/dataset.hpp"
#include "ordcop/simstudy.hpp"

using namespace ordcop;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const fs::path& dir, const std::string& args,
                  const std::string& env = "") {
  const fs::path out_file = dir / "stdout.txt";
  const fs::path err_file = dir / "stderr.txt";
  const std::string cmd = (env.empty() ? "" : env + " ") +
                          std::string(ORDCOP_BIN) + " " + args + " >" +
                          out_file.string() + " 2>" + err_file.string();
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

// workspace with a generated training file and a linear model config
fs::path make_workspace(const std::string& name, int n = 400,
                        std::uint64_t seed = 11) {
  const fs::path dir = fresh_dir(name);
  const Dataset d = generate(make_scenario(1, n, 1, seed), TrueParams(), seed);
  std::vector<std::vector<std::string>> cols;
  for (const auto& c : d.columns()) cols.push_back(d.string_column(c));
  write_csv((dir / "train.csv").string(), d.columns(), cols);
  std::ofstream cfg(dir / "model.cfg");
  cfg << "[model]\n"
         "data = train.csv\n"
         "ordinal = y1\n"
         "continuous = y2\n"
         "margin = lognormal\n"
         "link = logit\n"
         "copula = gaussian\n"
         "seed = 7\n"
         "\n[param.mu1]\nlinear x1\n"
         "\n[param.mu2]\nlinear x1\nlinear x2\n"
         "\n[param.sigma2]\n"
         "\n[param.gamma]\n";
  return dir;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("usage errors exit 1, help exits 0") {
  const fs::path dir = fresh_dir("ordcop_cli_usage");
  CHECK(run_cli(dir, "").exit_code == 1);
  CHECK(run_cli(dir, "--help").exit_code == 0);
  CHECK(run_cli(dir, "fit").exit_code == 1);  // --config is required
  CHECK(run_cli(dir, "frobnicate").exit_code == 1);
  CHECK(run_cli(dir, "fit --config x.cfg --bogus-flag").exit_code == 1);
  CHECK(run_cli(dir, "simulate --scenario 9").exit_code == 1);
}

TEST_CASE("fit: exit 0, one JSON line on stdout, artifacts on disk") {
  const fs::path dir = make_workspace("ordcop_cli_fit");
  const RunResult r = run_cli(
      dir, "fit --config " + q(dir / "model.cfg") + " --out-dir " + q(dir / "out"));
  CHECK(r.exit_code == 0);
  CHECK(r.err.find("error") == std::string::npos);
  REQUIRE_FALSE(r.out.empty());
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
  const json summary = json::parse(r.out);
  CHECK(summary.at("command") == "fit");
  CHECK(summary.at("converged") == true);
  CHECK(fs::exists(dir / "out" / "fit.json"));
  CHECK(fs::exists(dir / "out" / "fit.bin"));

  // config semantics travel with the file, not the working directory
  const json report = json::parse(slurp(dir / "out" / "fit.json"));
  CHECK(report.at("model").at("data").get<std::string>().find("train.csv") !=
        std::string::npos);
}

TEST_CASE("fit: reruns and thread counts give byte-identical artifacts") {
  const fs::path dir = make_workspace("ordcop_cli_det");
  const std::string cfg = q(dir / "model.cfg");
  const RunResult r1 =
      run_cli(dir, "fit --config " + cfg + " --out-dir " + q(dir / "a"));
  const RunResult r2 =
      run_cli(dir, "fit --config " + cfg + " --out-dir " + q(dir / "a"));
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r2.exit_code == 0);
  CHECK(r1.out == r2.out);

  const RunResult r8 = run_cli(
      dir, "fit --config " + cfg + " --out-dir " + q(dir / "b") + " --threads 8");
  REQUIRE(r8.exit_code == 0);
  CHECK(slurp(dir / "a" / "fit.json") == slurp(dir / "b" / "fit.json"));
  CHECK(slurp(dir / "a" / "fit.bin") == slurp(dir / "b" / "fit.bin"));

  const RunResult renv = run_cli(
      dir, "fit --config " + cfg + " --out-dir " + q(dir / "c"), "ORDCOP_THREADS=8");
  REQUIRE(renv.exit_code == 0);
  CHECK(slurp(dir / "a" / "fit.json") == slurp(dir / "c" / "fit.json"));
}

TEST_CASE("fit: iteration cap exhausts into exit 2 with partial artifacts") {
  const fs::path dir = make_workspace("ordcop_cli_exit2", 300, 4);
  const RunResult r = run_cli(dir, "fit --config " + q(dir / "model.cfg") +
                                       " --out-dir " + q(dir / "out") +
                                       " --max-iter 1");
  CHECK(r.exit_code == 2);
  const json summary = json::parse(r.out);
  CHECK(summary.at("converged") == false);
  CHECK(fs::exists(dir / "out" / "fit.json"));
  const json report = json::parse(slurp(dir / "out" / "fit.json"));
  CHECK(report.at("converged") == false);
  CHECK_FALSE(report.at("warnings").empty());
}

TEST_CASE("fit: invalid inputs exit 1 with an error line on stderr") {
  const fs::path dir = make_workspace("ordcop_cli_exit1", 150, 5);
  const RunResult missing_cfg =
      run_cli(dir, "fit --config " + q(dir / "absent.cfg"));
  CHECK(missing_cfg.exit_code == 1);
  CHECK(missing_cfg.err.find("error:") != std::string::npos);

  std::ofstream bad(dir / "bad.cfg");
  bad << "[model]\ndata = absent.csv\nordinal = y1\ncontinuous = y2\n"
         "margin = lognormal\nlink = logit\ncopula = gaussian\n"
         "\n[param.mu1]\nlinear x1\n\n[param.mu2]\n\n[param.sigma2]\n\n[param.gamma]\n";
  bad.close();
  const RunResult missing_data = run_cli(dir, "fit --config " + q(dir / "bad.cfg"));
  CHECK(missing_data.exit_code == 1);
  CHECK(missing_data.err.find("error:") != std::string::npos);
  CHECK(missing_data.out.empty());
}

TEST_CASE("select, predict, residuals chain on one workspace") {
  const fs::path dir = make_workspace("ordcop_cli_chain", 500, 21);
  const std::string cfg = q(dir / "model.cfg");
  const std::string out = q(dir / "out");

  const RunResult sel = run_cli(
      dir, "select --config " + cfg + " --out-dir " + out +
               " --copulas gaussian,frank");
  CHECK(sel.exit_code == 0);
  const json sel_summary = json::parse(sel.out);
  CHECK(sel_summary.at("table").size() == 3);
  CHECK(fs::exists(dir / "out" / "selection.csv"));

  REQUIRE(run_cli(dir, "fit --config " + cfg + " --out-dir " + out).exit_code == 0);

  const RunResult pred =
      run_cli(dir, "predict --config " + cfg + " --out-dir " + out);
  CHECK(pred.exit_code == 0);
  CHECK(fs::exists(dir / "out" / "predictions.csv"));
  const Dataset ptab = read_csv((dir / "out" / "predictions.csv").string());
  CHECK(ptab.n_rows() == 500);

  const RunResult res =
      run_cli(dir, "residuals --out-dir " + out + " --n-rep 50");
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(dir / "out" / "residuals.csv"));
  CHECK(fs::exists(dir / "out" / "residual_bands.csv"));
  const json rsum = json::parse(res.out);
  CHECK(rsum.at("seed") == 7);  // config seed flows through the fit state

  const RunResult res2 = run_cli(dir, "residuals --out-dir " + q(dir / "out2") +
                                          " --fit " + q(dir / "out" / "fit.bin") +
                                          " --n-rep 50");
  CHECK(res2.exit_code == 0);
  CHECK(slurp(dir / "out" / "residuals.csv") ==
        slurp(dir / "out2" / "residuals.csv"));

  const RunResult pred_missing = run_cli(
      dir, "predict --out-dir " + out + " --data " + q(dir / "absent.csv"));
  CHECK(pred_missing.exit_code == 1);
}

TEST_CASE("simulate: tiny study completes with exit 0 and reproducible output") {
  const fs::path dir = fresh_dir("ordcop_cli_sim");
  const std::string args = "simulate --scenario 1 --n 250 --reps 2 --grid 11";
  const RunResult r1 = run_cli(dir, args + " --out-dir " + q(dir / "s1"));
  CHECK(r1.exit_code == 0);
  const RunResult r2 = run_cli(dir, args + " --out-dir " + q(dir / "s2"));
  CHECK(r2.exit_code == 0);
  CHECK(slurp(dir / "s1" / "simulation.json") == slurp(dir / "s2" / "simulation.json"));
  CHECK(slurp(dir / "s1" / "smooths.csv") == slurp(dir / "s2" / "smooths.csv"));
  const json doc = json::parse(r1.out);
  CHECK(doc.at("aborted") == false);
  CHECK(doc.at("copula") == "gaussian");
}
