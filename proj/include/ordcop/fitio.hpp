#pragma once

// Fit artifacts and the command entry points behind the ordcop tool: a JSON
// report with named coefficients, a versioned binary fit state that reloads
// for prediction and diagnostics without refitting, CSV writers, and the
// fit / select / predict / residuals / simulate commands themselves.
//
// Commands return the process exit code: 0 success, 2 completed without
// convergence (partial artifacts written), 1 invalid input. They write data
// to `out` (one JSON summary line) and logs to `err`.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ordcop/design.hpp"
#include "ordcop/estimator.hpp"
#include "ordcop/inference.hpp"
#include "ordcop/model_spec.hpp"

namespace ordcop {

// One label per coefficient: cut_1..cut_R, then per-parameter term labels
// (mu2:intercept, mu2:x1, mu2:region=west, mu1:s(nu1).3, mu2:mrf(prov).2,
// sigma2:re(cluster)=a).
std::vector<std::string> coefficient_names(const DesignSet& ds);

// Full fit report as a JSON document (coefficients with standard errors,
// smoothing parameters, information criteria, optimizer trace, warnings).
std::string fit_report_json(const ModelSpec& spec, const DesignSet& ds,
                            const FitResult& fit);

// Binary fit state: embeds the serialized config so the design can be rebuilt
// from the original data file on reload. Matrices beyond the two covariance
// blocks are not stored; they are recomputable and unused downstream.
void save_fit(const std::string& path, const ModelSpec& spec,
              const FitResult& fit);

struct FitState {
  ModelSpec spec;
  FitResult fit;  // H, H_p and the trace are left empty on reload
};
FitState load_fit(const std::string& path);

void write_prediction_csv(const std::string& path, const DesignSet& ds,
                          const PredictionTable& pt);
void write_residual_csv(const std::string& path, const ResidualSet& rs);
// Long format: dist (normal for q2, chisq2 for chisq), rank, theoretical,
// lower, upper, observed (the sorted residuals themselves).
void write_band_csv(const std::string& path, const ResidualSet& rs,
                    std::uint64_t seed, int n_rep = 100, double level = 0.95);

// Shared command options; has_* flags mark explicit overrides of config
// values.
struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  bool has_seed = false;
  std::uint64_t seed = 1;
  bool has_tol = false;
  double tol = 1e-7;
  bool has_max_iter = false;
  int max_iter = 200;
  int threads = 1;

  // select: candidate copula tokens (family name, optional 180 suffix) and
  // ordinal links; empty lists fall back to the config's own choice.
  std::vector<std::string> copulas;
  std::vector<std::string> links;

  // predict / residuals
  std::string fit_path;   // defaults to <out_dir>/fit.bin
  std::string data_path;  // prediction rows; empty = training data
  int n_rep = 100;        // residual band replicates

  // simulate
  int scenario = 1;
  int n = 1000;
  int reps = 100;
  int grid = 200;
};

int cmd_fit(const CliOptions& o, std::ostream& out, std::ostream& err);
int cmd_select(const CliOptions& o, std::ostream& out, std::ostream& err);
int cmd_predict(const CliOptions& o, std::ostream& out, std::ostream& err);
int cmd_residuals(const CliOptions& o, std::ostream& out, std::ostream& err);
int cmd_simulate(const CliOptions& o, std::ostream& out, std::ostream& err);

}  // namespace ordcop
