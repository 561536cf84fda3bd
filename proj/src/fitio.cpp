#include "ordcop/fitio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ordcop/dataset.hpp"
#include "ordcop/simstudy.hpp"
#include "ordcop/types.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ordcop {

namespace {

std::string term_label(ParamId p, const TermBlock& b, Index j) {
  const std::string prefix = param_name(p) + ":";
  const TermSpec& t = b.spec;
  switch (t.kind) {
    case TermSpec::Kind::Intercept:
      return prefix + "intercept";
    case TermSpec::Kind::Linear:
      return prefix + t.covariate;
    case TermSpec::Kind::Factor:
      // column j encodes sorted level j + 1 (first level is the reference)
      return prefix + t.covariate + "=" + b.levels[static_cast<size_t>(j) + 1];
    case TermSpec::Kind::Spline:
      return prefix + "s(" + t.covariate + ")." + std::to_string(j + 1);
    case TermSpec::Kind::MRF:
      // constrained coordinates do not map one-to-one onto regions
      return prefix + "mrf(" + t.covariate + ")." + std::to_string(j + 1);
    case TermSpec::Kind::RandomEffect:
      return prefix + "re(" + t.covariate + ")=" + b.levels[static_cast<size_t>(j)];
  }
  return prefix + "?";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw InputError("write to '" + path + "' failed");
}

// binary primitives; little-endian native layout, validated on read
void put_bytes(std::ostream& s, const void* p, size_t n) {
  s.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
void get_bytes(std::istream& s, void* p, size_t n) {
  s.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!s) throw InputError("truncated fit state file");
}
void put_u64(std::ostream& s, std::uint64_t v) { put_bytes(s, &v, 8); }
std::uint64_t get_u64(std::istream& s) {
  std::uint64_t v = 0;
  get_bytes(s, &v, 8);
  return v;
}
void put_str(std::ostream& s, const std::string& v) {
  put_u64(s, v.size());
  put_bytes(s, v.data(), v.size());
}
std::string get_str(std::istream& s) {
  const std::uint64_t n = get_u64(s);
  if (n > (1u << 30)) throw InputError("corrupt fit state file");
  std::string v(n, '\0');
  get_bytes(s, v.data(), n);
  return v;
}
void put_vec(std::ostream& s, const Vector& v) {
  put_u64(s, static_cast<std::uint64_t>(v.size()));
  put_bytes(s, v.data(), sizeof(double) * static_cast<size_t>(v.size()));
}
Vector get_vec(std::istream& s) {
  const std::uint64_t n = get_u64(s);
  if (n > (1u << 24)) throw InputError("corrupt fit state file");
  Vector v(static_cast<Index>(n));
  get_bytes(s, v.data(), sizeof(double) * n);
  return v;
}
void put_mat(std::ostream& s, const Matrix& m) {
  put_u64(s, static_cast<std::uint64_t>(m.rows()));
  put_u64(s, static_cast<std::uint64_t>(m.cols()));
  put_bytes(s, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
}
Matrix get_mat(std::istream& s) {
  const std::uint64_t r = get_u64(s), c = get_u64(s);
  if (r > (1u << 20) || c > (1u << 20)) throw InputError("corrupt fit state file");
  Matrix m(static_cast<Index>(r), static_cast<Index>(c));
  get_bytes(s, m.data(), sizeof(double) * r * c);
  return m;
}

constexpr char kMagic[8] = {'O', 'R', 'D', 'C', 'O', 'P', 'B', '1'};
constexpr std::uint32_t kVersion = 1;

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// Config data paths are relative to the config file so reloads work from any
// working directory; resolve once and keep the resolved path in the spec.
ModelSpec load_spec_resolved(const std::string& config_path) {
  ModelSpec spec = load_model_config(config_path);
  fs::path dp(spec.data_path);
  if (!dp.empty() && dp.is_relative()) {
    spec.data_path =
        (fs::path(config_path).parent_path() / dp).lexically_normal().string();
  }
  return spec;
}

void apply_overrides(ModelSpec& spec, const CliOptions& o) {
  if (o.has_seed) spec.seed = o.seed;
  if (o.has_tol) spec.tol = o.tol;
  if (o.has_max_iter) spec.max_iter = o.max_iter;
}

FitOptions options_from(const ModelSpec& spec) {
  FitOptions opts;
  opts.tol = spec.tol;
  opts.max_iter = spec.max_iter;
  return opts;
}

json model_block(const ModelSpec& spec, const DesignSet& ds) {
  return json{{"copula", family_name(spec.family)},
              {"rotation", spec.rotation == Rotation::R180 ? 180 : 0},
              {"independence", ds.independence},
              {"margin", continuous_name(spec.margin)},
              {"link", ordinal_link_name(spec.link)},
              {"ordinal", spec.ordinal_col},
              {"continuous", spec.continuous_col},
              {"data", spec.data_path}};
}

void emit_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << "\n";
}

int fail(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  return 1;
}

// fit state path defaulting to the fit command's output location
std::string fit_state_path(const CliOptions& o) {
  return o.fit_path.empty() ? join_path(o.out_dir, "fit.bin") : o.fit_path;
}

struct RebuiltFit {
  ModelSpec spec;
  FitResult fit;
  Dataset train;
  DesignSet ds;
};

RebuiltFit rebuild(const std::string& path) {
  FitState st = load_fit(path);
  RebuiltFit r{std::move(st.spec), std::move(st.fit), {}, {}};
  r.train = read_csv(r.spec.data_path);
  r.ds = build_design(r.spec, r.train);
  if (r.ds.total != r.fit.beta.size())
    throw InputError("fit state '" + path + "' does not match the design rebuilt from '" +
                     r.spec.data_path + "' (" + std::to_string(r.fit.beta.size()) +
                     " coefficients saved, " + std::to_string(r.ds.total) + " rebuilt)");
  return r;
}

struct Candidate {
  std::string name;  // copula token or "independence"
  CopulaFamily family = CopulaFamily::Gaussian;
  Rotation rotation = Rotation::R0;
  OrdinalLink link = OrdinalLink::Logit;
  bool independence = false;
};

Candidate parse_copula_token(std::string token) {
  Candidate c;
  c.name = token;
  if (token == "independence") {
    c.independence = true;
    return c;
  }
  if (token.size() > 3 && token.substr(token.size() - 3) == "180") {
    c.rotation = Rotation::R180;
    token = token.substr(0, token.size() - 3);
  }
  c.family = family_from_name(token);
  if (c.rotation == Rotation::R180 && c.family != CopulaFamily::Clayton &&
      c.family != CopulaFamily::Gumbel && c.family != CopulaFamily::Joe)
    throw InputError("copula '" + token + "' does not support rotation 180");
  return c;
}

struct SelectRow {
  std::string copula;
  std::string link;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  double edf = std::numeric_limits<double>::quiet_NaN();
  double aic = std::numeric_limits<double>::quiet_NaN();
  double bic = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
};

json row_json(const SelectRow& r) {
  return json{{"copula", r.copula},     {"link", r.link}, {"loglik", r.loglik},
              {"edf", r.edf},           {"aic", r.aic},   {"bic", r.bic},
              {"converged", r.converged}};
}

}  // namespace

std::vector<std::string> coefficient_names(const DesignSet& ds) {
  std::vector<std::string> names;
  names.reserve(static_cast<size_t>(ds.total));
  for (Index r = 1; r <= ds.n_cut(); ++r)
    names.push_back("cut_" + std::to_string(r));
  for (int p = 0; p < n_model_params; ++p) {
    for (const TermBlock& b : ds.param[p].terms)
      for (Index j = 0; j < b.width(); ++j)
        names.push_back(term_label(static_cast<ParamId>(p), b, j));
  }
  return names;
}

std::string fit_report_json(const ModelSpec& spec, const DesignSet& ds,
                            const FitResult& fit) {
  const std::vector<std::string> names = coefficient_names(ds);
  json coefs = json::array();
  for (Index k = 0; k < fit.beta.size(); ++k) {
    const double var = fit.V_bayes.size() ? fit.V_bayes(k, k) : 0.0;
    coefs.push_back(json{{"name", names[static_cast<size_t>(k)]},
                         {"estimate", fit.beta[k]},
                         {"se", std::sqrt(std::max(var, 0.0))}});
  }
  json trace = json::array();
  for (const TraceEntry& t : fit.trace)
    trace.push_back(json{{"outer", t.outer},
                         {"inner", t.inner},
                         {"penalized", t.lp},
                         {"radius", t.delta},
                         {"gradient_norm", t.gnorm}});
  json doc{{"format", "ordcop-fit"},
           {"format_version", 1},
           {"model", model_block(spec, ds)},
           {"n_obs", ds.n_obs()},
           {"n_cat", ds.n_cat},
           {"coefficients", coefs},
           {"lambda", std::vector<double>(fit.lambda.begin(), fit.lambda.end())},
           {"edf", fit.edf},
           {"loglik", fit.loglik},
           {"penalized", fit.penalized},
           {"aic", fit.aic},
           {"bic", fit.bic},
           {"converged", fit.converged},
           {"outer_iterations", fit.outer_iters},
           {"trace", trace},
           {"warnings", fit.warnings}};
  return doc.dump(2) + "\n";
}

void save_fit(const std::string& path, const ModelSpec& spec,
              const FitResult& fit) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  put_bytes(out, kMagic, sizeof(kMagic));
  put_bytes(out, &kVersion, sizeof(kVersion));
  put_str(out, serialize_model_config(spec));
  put_vec(out, fit.beta);
  put_vec(out, fit.lambda);
  const std::array<double, 5> scalars{fit.loglik, fit.penalized, fit.edf,
                                      fit.aic, fit.bic};
  put_bytes(out, scalars.data(), sizeof(scalars));
  const std::uint8_t conv = fit.converged ? 1 : 0;
  put_bytes(out, &conv, 1);
  const std::uint32_t iters = static_cast<std::uint32_t>(fit.outer_iters);
  put_bytes(out, &iters, sizeof(iters));
  put_mat(out, fit.V_bayes);
  put_mat(out, fit.V_freq);
  put_u64(out, fit.warnings.size());
  for (const auto& w : fit.warnings) put_str(out, w);
  if (!out) throw InputError("write to '" + path + "' failed");
}

FitState load_fit(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open fit state file '" + path + "'");
  char magic[8];
  get_bytes(in, magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw InputError("'" + path + "' is not a fit state file");
  std::uint32_t version = 0;
  get_bytes(in, &version, sizeof(version));
  if (version != kVersion)
    throw InputError("unsupported fit state version " + std::to_string(version));
  FitState st;
  st.spec = parse_model_config(get_str(in));
  st.fit.beta = get_vec(in);
  st.fit.lambda = get_vec(in);
  std::array<double, 5> scalars;
  get_bytes(in, scalars.data(), sizeof(scalars));
  st.fit.loglik = scalars[0];
  st.fit.penalized = scalars[1];
  st.fit.edf = scalars[2];
  st.fit.aic = scalars[3];
  st.fit.bic = scalars[4];
  std::uint8_t conv = 0;
  get_bytes(in, &conv, 1);
  st.fit.converged = conv != 0;
  std::uint32_t iters = 0;
  get_bytes(in, &iters, sizeof(iters));
  st.fit.outer_iters = static_cast<int>(iters);
  st.fit.V_bayes = get_mat(in);
  st.fit.V_freq = get_mat(in);
  const std::uint64_t n_warn = get_u64(in);
  if (n_warn > (1u << 20)) throw InputError("corrupt fit state file");
  st.fit.warnings.reserve(n_warn);
  for (std::uint64_t i = 0; i < n_warn; ++i)
    st.fit.warnings.push_back(get_str(in));
  return st;
}

void write_prediction_csv(const std::string& path, const DesignSet& ds,
                          const PredictionTable& pt) {
  const Index n = pt.eta.rows();
  std::vector<std::string> header{"row",    "eta_mu1", "eta_mu2", "eta_sigma2",
                                  "eta_gamma", "mu2",  "sigma2",  "gamma",
                                  "tau"};
  for (int r = 1; r <= ds.n_cat; ++r) header.push_back("p" + std::to_string(r));
  std::vector<std::vector<std::string>> cols(header.size());
  for (auto& c : cols) c.reserve(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    cols[0].push_back(std::to_string(i + 1));
    for (int k = 0; k < 4; ++k)
      cols[static_cast<size_t>(1 + k)].push_back(format_double(pt.eta(i, k)));
    cols[5].push_back(format_double(pt.mu2[i]));
    cols[6].push_back(format_double(pt.sigma2[i]));
    cols[7].push_back(format_double(pt.gamma[i]));
    cols[8].push_back(format_double(pt.tau[i]));
    for (int r = 0; r < ds.n_cat; ++r)
      cols[static_cast<size_t>(9 + r)].push_back(format_double(pt.cat_probs(i, r)));
  }
  write_csv(path, header, cols);
}

void write_residual_csv(const std::string& path, const ResidualSet& rs) {
  const Index n = rs.q2.size();
  std::vector<std::string> header{"row", "q1", "q2", "q2_cond", "chisq"};
  std::vector<std::vector<std::string>> cols(header.size());
  for (Index i = 0; i < n; ++i) {
    cols[0].push_back(std::to_string(i + 1));
    cols[1].push_back(format_double(rs.q1[i]));
    cols[2].push_back(format_double(rs.q2[i]));
    cols[3].push_back(format_double(rs.q2_cond[i]));
    cols[4].push_back(format_double(rs.chisq[i]));
  }
  write_csv(path, header, cols);
}

void write_band_csv(const std::string& path, const ResidualSet& rs,
                    std::uint64_t seed, int n_rep, double level) {
  const Index n = rs.q2.size();
  std::vector<std::string> header{"dist",  "rank",  "theoretical",
                                  "lower", "upper", "observed"};
  std::vector<std::vector<std::string>> cols(header.size());
  auto emit = [&](const char* dist, RefDist ref, Vector observed) {
    std::sort(observed.begin(), observed.end());
    const Matrix band =
        qq_reference_band(static_cast<int>(n), ref, n_rep, level, seed);
    for (Index i = 0; i < n; ++i) {
      cols[0].push_back(dist);
      cols[1].push_back(std::to_string(i + 1));
      cols[2].push_back(format_double(band(i, 0)));
      cols[3].push_back(format_double(band(i, 1)));
      cols[4].push_back(format_double(band(i, 2)));
      cols[5].push_back(format_double(observed[i]));
    }
  };
  emit("normal", RefDist::Normal, rs.q2);
  emit("chisq2", RefDist::ChiSq2, rs.chisq);
  write_csv(path, header, cols);
}

int cmd_fit(const CliOptions& o, std::ostream& out, std::ostream& err) {
  try {
    ModelSpec spec = load_spec_resolved(o.config_path);
    apply_overrides(spec, o);
    const Dataset data = read_csv(spec.data_path);
    const DesignSet ds = build_design(spec, data);
    emit_warnings(ds.warnings, err);
    const FitResult fit = ordcop::fit(ds, options_from(spec));
    emit_warnings(fit.warnings, err);
    fs::create_directories(o.out_dir);
    const std::string json_path = join_path(o.out_dir, "fit.json");
    const std::string bin_path = join_path(o.out_dir, "fit.bin");
    write_text_file(json_path, fit_report_json(spec, ds, fit));
    save_fit(bin_path, spec, fit);
    json summary{{"command", "fit"},
                 {"converged", fit.converged},
                 {"loglik", fit.loglik},
                 {"edf", fit.edf},
                 {"aic", fit.aic},
                 {"bic", fit.bic},
                 {"n_obs", ds.n_obs()},
                 {"warnings", fit.warnings},
                 {"artifacts", json{{"fit_json", json_path}, {"fit_bin", bin_path}}}};
    out << summary.dump() << "\n";
    return fit.converged ? 0 : 2;
  } catch (const std::exception& e) {
    return fail(e, err);
  }
}

int cmd_select(const CliOptions& o, std::ostream& out, std::ostream& err) {
  try {
    ModelSpec spec = load_spec_resolved(o.config_path);
    apply_overrides(spec, o);
    const Dataset data = read_csv(spec.data_path);

    std::vector<Candidate> candidates;
    std::vector<OrdinalLink> links;
    if (o.links.empty()) {
      links.push_back(spec.link);
    } else {
      for (const auto& l : o.links) links.push_back(ordinal_link_from_name(l));
    }
    std::vector<Candidate> copulas;
    if (o.copulas.empty()) {
      Candidate c;
      c.family = spec.family;
      c.rotation = spec.rotation;
      c.name = family_name(spec.family) +
               (spec.rotation == Rotation::R180 ? "180" : "");
      copulas.push_back(c);
    } else {
      for (const auto& tok : o.copulas) {
        Candidate c = parse_copula_token(tok);
        if (!c.independence) copulas.push_back(c);
      }
    }
    for (OrdinalLink link : links) {
      for (Candidate c : copulas) {
        c.link = link;
        candidates.push_back(c);
      }
      Candidate ind;
      ind.name = "independence";
      ind.independence = true;
      ind.link = link;
      candidates.push_back(ind);
    }

    std::vector<SelectRow> rows;
    for (const Candidate& c : candidates) {
      ModelSpec cs = spec;
      cs.link = c.link;
      if (!c.independence) {
        cs.family = c.family;
        cs.rotation = c.rotation;
      }
      SelectRow row;
      row.copula = c.name;
      row.link = ordinal_link_name(c.link);
      try {
        DesignSet ds = build_design(cs, data);
        if (c.independence) ds = strip_dependence(ds);
        const FitResult fit = ordcop::fit(ds, options_from(cs));
        row.loglik = fit.loglik;
        row.edf = fit.edf;
        row.aic = fit.aic;
        row.bic = fit.bic;
        row.converged = fit.converged;
        emit_warnings(fit.warnings, err);
      } catch (const Error& e) {
        err << "candidate " << row.copula << "/" << row.link
            << " failed: " << e.what() << "\n";
      }
      rows.push_back(row);
    }

    // converged candidates first, then ascending AIC with BIC tie-break
    std::stable_sort(rows.begin(), rows.end(),
                     [](const SelectRow& a, const SelectRow& b) {
                       if (a.converged != b.converged) return a.converged;
                       if (a.aic != b.aic) return a.aic < b.aic;
                       return a.bic < b.bic;
                     });

    fs::create_directories(o.out_dir);
    const std::string csv_path = join_path(o.out_dir, "selection.csv");
    std::vector<std::string> header{"rank", "copula", "link",     "loglik",
                                    "edf",  "aic",    "bic", "converged"};
    std::vector<std::vector<std::string>> cols(header.size());
    json table = json::array();
    int n_converged = 0;
    for (size_t i = 0; i < rows.size(); ++i) {
      const SelectRow& r = rows[i];
      n_converged += r.converged ? 1 : 0;
      cols[0].push_back(std::to_string(i + 1));
      cols[1].push_back(r.copula);
      cols[2].push_back(r.link);
      cols[3].push_back(format_double(r.loglik));
      cols[4].push_back(format_double(r.edf));
      cols[5].push_back(format_double(r.aic));
      cols[6].push_back(format_double(r.bic));
      cols[7].push_back(r.converged ? "1" : "0");
      table.push_back(row_json(r));
    }
    write_csv(csv_path, header, cols);
    json summary{{"command", "select"},
                 {"n_candidates", rows.size()},
                 {"n_converged", n_converged},
                 {"table", table},
                 {"artifacts", json{{"selection_csv", csv_path}}}};
    if (n_converged > 0) summary["best"] = row_json(rows.front());
    out << summary.dump() << "\n";
    return n_converged > 0 ? 0 : 2;
  } catch (const std::exception& e) {
    return fail(e, err);
  }
}

int cmd_predict(const CliOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const RebuiltFit r = rebuild(fit_state_path(o));
    const Dataset newdata =
        o.data_path.empty() ? r.train : read_csv(o.data_path);
    const PredictionTable pt = predict(r.ds, r.fit.beta, newdata);
    fs::create_directories(o.out_dir);
    const std::string csv_path = join_path(o.out_dir, "predictions.csv");
    write_prediction_csv(csv_path, r.ds, pt);
    json summary{{"command", "predict"},
                 {"n_rows", pt.eta.rows()},
                 {"training_data", o.data_path.empty()},
                 {"artifacts", json{{"predictions_csv", csv_path}}}};
    out << summary.dump() << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e, err);
  }
}

int cmd_residuals(const CliOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const RebuiltFit r = rebuild(fit_state_path(o));
    const std::uint64_t seed = o.has_seed ? o.seed : r.spec.seed;
    const ResidualSet rs = residuals(r.ds, r.fit.beta, seed);
    fs::create_directories(o.out_dir);
    const std::string res_path = join_path(o.out_dir, "residuals.csv");
    const std::string band_path = join_path(o.out_dir, "residual_bands.csv");
    write_residual_csv(res_path, rs);
    write_band_csv(band_path, rs, seed + 1, o.n_rep);
    const double mean_chisq = rs.chisq.mean();
    json summary{{"command", "residuals"},
                 {"n_rows", rs.q2.size()},
                 {"seed", seed},
                 {"mean_chisq", mean_chisq},
                 {"ks_pvalue_q2", ks_normal_pvalue(rs.q2)},
                 {"ks_pvalue_q2_cond", ks_normal_pvalue(rs.q2_cond)},
                 {"artifacts", json{{"residuals_csv", res_path},
                                    {"bands_csv", band_path}}}};
    out << summary.dump() << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e, err);
  }
}

int cmd_simulate(const CliOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const Scenario sc =
        make_scenario(o.scenario, o.n, o.reps, o.has_seed ? o.seed : 1);
    FitOptions opts;
    if (o.has_tol) opts.tol = o.tol;
    if (o.has_max_iter) opts.max_iter = o.max_iter;
    fs::create_directories(o.out_dir);
    const std::string json_path = join_path(o.out_dir, "simulation.json");
    StudyReport rep;
    try {
      rep = run_study(sc, TrueParams(), opts, o.grid);
    } catch (const StudyAborted& e) {
      json doc{{"command", "simulate"}, {"aborted", true}, {"reason", e.what()}};
      write_text_file(json_path, doc.dump(2) + "\n");
      err << "error: " << e.what() << "\n";
      out << doc.dump() << "\n";
      return 2;
    }

    const char* coef_names[] = {"mu1:x1", "mu2:x1", "mu2:x2",
                                "sigma2:intercept", "sigma2:x3"};
    const int n_rep = static_cast<int>(rep.reps.size());
    json linear = json::array();
    for (int k = 0; k < 5; ++k) {
      Vector errs(n_rep);
      for (int i = 0; i < n_rep; ++i)
        errs[i] = rep.reps[static_cast<size_t>(i)].linear[k] - rep.linear_truth[k];
      Vector abs_errs = errs.cwiseAbs();
      std::sort(errs.begin(), errs.end());
      std::sort(abs_errs.begin(), abs_errs.end());
      const auto median = [](const Vector& v) {
        const Index n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
      };
      linear.push_back(json{{"name", coef_names[k]},
                            {"truth", rep.linear_truth[k]},
                            {"median_error", median(errs)},
                            {"median_abs_error", median(abs_errs)},
                            {"rmse", std::sqrt(errs.squaredNorm() / n_rep)}});
    }

    json smooths = json::array();
    for (int s = 0; s < n_study_smooths; ++s) {
      Vector r = rep.rmse.col(s);
      std::sort(r.begin(), r.end());
      const double med =
          r.size() % 2 ? r[r.size() / 2]
                       : 0.5 * (r[r.size() / 2 - 1] + r[r.size() / 2]);
      smooths.push_back(json{{"label", rep.smooth_label[static_cast<size_t>(s)]},
                             {"median_rmse", med},
                             {"mean_rmse", rep.rmse.col(s).mean()}});
    }

    // long-format curve summary: per term, pointwise mean and order quantiles
    const std::string curve_path = join_path(o.out_dir, "smooths.csv");
    {
      std::vector<std::string> header{"term", "x",     "truth",
                                      "mean", "lower", "upper"};
      std::vector<std::vector<std::string>> cols(header.size());
      for (int s = 0; s < n_study_smooths; ++s) {
        const Matrix& est = rep.smooth_est[static_cast<size_t>(s)];
        for (Index g = 0; g < rep.grid.size(); ++g) {
          Vector v = est.col(g);
          std::sort(v.begin(), v.end());
          const auto q = [&](double p) {
            const Index i = static_cast<Index>(std::ceil(p * v.size())) - 1;
            return v[std::clamp<Index>(i, 0, v.size() - 1)];
          };
          cols[0].push_back(rep.smooth_label[static_cast<size_t>(s)]);
          cols[1].push_back(format_double(rep.grid[g]));
          cols[2].push_back(format_double(rep.smooth_truth[static_cast<size_t>(s)][g]));
          cols[3].push_back(format_double(est.col(g).mean()));
          cols[4].push_back(format_double(q(0.025)));
          cols[5].push_back(format_double(q(0.975)));
        }
      }
      write_csv(curve_path, header, cols);
    }

    json doc{{"command", "simulate"},
             {"aborted", false},
             {"scenario", sc.id},
             {"margin", continuous_name(sc.margin)},
             {"copula", family_name(sc.family)},
             {"n", sc.n},
             {"n_rep", n_rep},
             {"seed", sc.seed},
             {"n_attempts", rep.n_attempts},
             {"n_warned", rep.n_warned},
             {"aic_share", rep.aic_share},
             {"linear", linear},
             {"smooths", smooths}};
    write_text_file(json_path, doc.dump(2) + "\n");
    // artifact locations only on stdout so the report file itself is
    // location-independent and byte-reproducible
    doc["artifacts"] =
        json{{"simulation_json", json_path}, {"smooths_csv", curve_path}};
    out << doc.dump() << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e, err);
  }
}

}  // namespace ordcop
