#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sketchridge/csv.hpp"
#include "sketchridge/error.hpp"
#include "sketchridge/estimators.hpp"
#include "sketchridge/sim.hpp"
#include "sketchridge/sketch.hpp"
#include "sketchridge/theory.hpp"
#include "sketchridge/tuning.hpp"

namespace sketchridge::cli {
namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SingularSystem:
    case ErrorKind::DegenerateGcv:
    case ErrorKind::NoValidLambda:
      return kExitNumerical;
    default:
      return kExitUsage;
  }
}

std::uint64_t seed_fallback() {
  if (const char* env = std::getenv("SKETCHRIDGE_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError("SKETCHRIDGE_SEED is not an unsigned integer");
    }
  }
  return 0;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void emit(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << contents;
  } else {
    write_file_atomic(path, contents);
  }
}

// ---------------------------------------------------------------- fit / tune

struct ModelOptions {
  std::string input;
  std::string response;
  int response_col = -1;
  std::int64_t q = 0;
  double s = 3.0;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda_min;
  std::optional<double> lambda_max;
  std::size_t lambda_count = 50;
  std::string methods = "fc,pc,linear,convex";
  std::string criterion = "gcv";
  std::optional<double> sigma2;
  std::string output;
  bool emit_coefficients = false;
  bool identity_sketch = false;
  unsigned threads = 1;
  bool no_timing = false;
  std::string format = "json";
};

void add_model_options(CLI::App* cmd, ModelOptions& o) {
  cmd->add_option("--input", o.input, "CSV with the design (and the response unless --response is given)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--response", o.response, "CSV with a single response column")->check(CLI::ExistingFile);
  cmd->add_option("--response-col", o.response_col,
                  "0-based response column inside --input; negative counts from the end (default: last)");
  cmd->add_option("--q", o.q, "compressed row count");
  cmd->add_option("--s", o.s, "sketch sparsity (P(nonzero) = 1/s)");
  cmd->add_option("--seed", o.seed, "sketch seed (fallback: SKETCHRIDGE_SEED, then 0)");
  cmd->add_option("--lambda-min", o.lambda_min, "smallest lambda of the log grid");
  cmd->add_option("--lambda-max", o.lambda_max, "largest lambda of the log grid");
  cmd->add_option("--lambda-count", o.lambda_count, "number of grid points")->check(CLI::PositiveNumber);
  cmd->add_option("--methods", o.methods, "comma list from ols,ridge,fc,pc,linear,convex");
  cmd->add_option("--criterion", o.criterion, "gcv or cp")->check(CLI::IsMember({"gcv", "cp"}));
  cmd->add_option("--sigma2", o.sigma2, "noise variance estimate (required for cp)");
  cmd->add_option("--output", o.output, "output path (default: stdout)");
  cmd->add_flag("--emit-coefficients", o.emit_coefficients, "include coefficients for every grid point");
  cmd->add_flag("--identity-sketch", o.identity_sketch, "use Q = I (test hook; ignores --q/--s)");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--no-timing", o.no_timing, "omit timing fields so outputs are byte-reproducible");
}

Dataset load_dataset(const ModelOptions& o) {
  const CsvTable table = read_csv(o.input);
  if (!o.response.empty()) {
    const CsvTable resp = read_csv(o.response);
    if (resp.values.cols() != 1) {
      throw Error(ErrorKind::InvalidInput, "response file must have exactly 1 column, found " + std::to_string(resp.values.cols()));
    }
    if (resp.values.rows() != table.values.rows()) {
      throw Error(ErrorKind::DimensionMismatch, "design has " + std::to_string(table.values.rows()) +
                                                    " rows but response has " + std::to_string(resp.values.rows()));
    }
    return Dataset(table.values, resp.values.col(0));
  }
  const auto cols = table.values.cols();
  if (cols < 2) throw Error(ErrorKind::InvalidInput, "input needs at least one design column and a response column");
  const auto col = o.response_col < 0 ? cols + o.response_col : o.response_col;
  if (col < 0 || col >= cols) throw Error(ErrorKind::InvalidInput, "--response-col out of range");
  Matrix x(table.values.rows(), cols - 1);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (j != col) x.col(k++) = table.values.col(j);
  }
  return Dataset(std::move(x), table.values.col(col));
}

struct MethodPath {
  Method method;
  std::vector<TuningRecord> records;
  std::vector<Vector> betas;
  std::vector<std::optional<Eigen::Vector2d>> alphas;
  Selection selection;
};

struct ModelRun {
  Dataset data;
  SketchSpec spec;
  bool identity = false;
  std::size_t nonzeros = 0;
  std::vector<double> lambdas;
  Criterion criterion = Criterion::Gcv;
  std::vector<MethodPath> paths;
  std::optional<Vector> ols;
  double seconds = 0.0;
};

ModelRun run_model(const ModelOptions& o) {
  const auto start = Clock::now();
  ModelRun run{load_dataset(o), {}, o.identity_sketch, 0, {}, parse_criterion(o.criterion), {}, std::nullopt, 0.0};
  if (run.criterion == Criterion::Cp && !o.sigma2) throw UsageError("--criterion cp requires --sigma2");
  if (o.sigma2 && !(*o.sigma2 > 0.0)) throw UsageError("--sigma2 must be positive");

  std::vector<Method> methods;
  for (const auto& name : split_list(o.methods)) methods.push_back(parse_method(name));
  if (methods.empty()) throw UsageError("--methods is empty");

  const Eigen::Index n = run.data.n();
  SparseSketch sketch;
  if (o.identity_sketch) {
    sketch = SparseSketch::identity(n);
  } else {
    if (o.q < 1) throw UsageError("--q is required (or pass --identity-sketch)");
    sketch = generate_sketch(SketchSpec{n, o.q, o.s, o.seed ? *o.seed : seed_fallback()});
  }
  run.spec = sketch.spec;
  run.nonzeros = sketch.nonzeros();
  const CompressedDesign cd = build_compressed(run.data, sketch, o.threads);

  if (o.lambda_min || o.lambda_max) {
    if (!o.lambda_min || !o.lambda_max) throw UsageError("--lambda-min and --lambda-max go together");
    run.lambdas = log_grid(*o.lambda_min, *o.lambda_max, o.lambda_count);
  } else {
    run.lambdas = default_lambda_grid(cd.qx_svd.singvals, o.lambda_count);
  }

  const bool want_ridge = std::find(methods.begin(), methods.end(), Method::Ridge) != methods.end();
  const PathResult path = fit_path(cd, run.data, run.lambdas, PathOptions{want_ridge, o.threads});
  for (Method m : methods) {
    if (m == Method::Ols) {
      run.ols = fit_ols(run.data);
      continue;
    }
    MethodPath mp{m, path_records(path, m, n, o.sigma2), {}, {}, {}};
    for (const auto& f : path.fits) {
      mp.betas.push_back(path_beta(f, m));
      if (m == Method::LinearCombo) mp.alphas.emplace_back(f.alpha_linear);
      else if (m == Method::ConvexCombo) mp.alphas.emplace_back(Eigen::Vector2d(f.alpha_convex, 1.0 - f.alpha_convex));
      else mp.alphas.emplace_back(std::nullopt);
    }
    mp.selection = select_lambda(mp.records, run.criterion);
    run.paths.push_back(std::move(mp));
  }
  run.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return run;
}

json sketch_json(const ModelRun& run) {
  json j;
  j["identity"] = run.identity;
  j["n"] = run.spec.n;
  j["q"] = run.spec.q;
  j["s"] = run.spec.s;
  j["seed"] = run.spec.seed;
  j["nonzeros"] = run.nonzeros;
  return j;
}

int cmd_fit(const ModelOptions& o, std::ostream& out) {
  const ModelRun run = run_model(o);
  json j;
  j["command"] = "fit";
  j["n"] = run.data.n();
  j["p"] = run.data.p();
  j["sketch"] = sketch_json(run);
  j["criterion"] = o.criterion;
  j["lambdas"] = run.lambdas;
  json methods = json::object();
  if (run.ols) {
    json m;
    m["selected_lambda"] = 0.0;
    m["beta"] = vector_json(*run.ols);
    m["rss"] = residual_sum_squares(run.data.x, run.data.y, *run.ols);
    methods["ols"] = m;
  }
  for (const auto& mp : run.paths) {
    json m;
    const auto k = mp.selection.index;
    m["selected_lambda"] = mp.selection.record.lambda;
    m["selected_index"] = k;
    m["beta"] = vector_json(mp.betas[k]);
    if (mp.alphas[k]) m["alpha"] = vector_json(*mp.alphas[k]);
    json rows = json::array();
    for (std::size_t i = 0; i < mp.records.size(); ++i) {
      const auto& r = mp.records[i];
      json row;
      row["lambda"] = r.lambda;
      row["rss"] = r.rss;
      row["df"] = r.df;
      row["gcv"] = optional_json(r.gcv);
      row["risk_cp"] = optional_json(r.risk_cp);
      if (mp.alphas[i]) row["alpha"] = vector_json(*mp.alphas[i]);
      if (o.emit_coefficients) row["beta"] = vector_json(mp.betas[i]);
      rows.push_back(row);
    }
    m["path"] = rows;
    methods[method_name(mp.method)] = m;
  }
  j["methods"] = methods;
  if (!o.no_timing) j["timing_seconds"] = run.seconds;
  emit(o.output, j.dump(2) + "\n", out);
  return kExitOk;
}

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", *v);
  return buf;
}

int cmd_tune(const ModelOptions& o, std::ostream& out) {
  const ModelRun run = run_model(o);
  if (o.format == "csv") {
    std::string text = "method,lambda,rss,df,gcv,risk_cp,selected\n";
    for (const auto& mp : run.paths) {
      for (std::size_t i = 0; i < mp.records.size(); ++i) {
        const auto& r = mp.records[i];
        text += std::string(method_name(mp.method)) + "," + csv_number(r.lambda) + "," + csv_number(r.rss) + "," +
                csv_number(r.df) + "," + csv_number(r.gcv) + "," + csv_number(r.risk_cp) + "," +
                (i == mp.selection.index ? "1" : "0") + "\n";
      }
    }
    emit(o.output, text, out);
    return kExitOk;
  }
  json j;
  j["command"] = "tune";
  j["n"] = run.data.n();
  j["p"] = run.data.p();
  j["sketch"] = sketch_json(run);
  j["criterion"] = o.criterion;
  json records = json::array();
  json selected = json::object();
  for (const auto& mp : run.paths) {
    for (std::size_t i = 0; i < mp.records.size(); ++i) {
      const auto& r = mp.records[i];
      json row;
      row["method"] = method_name(mp.method);
      row["lambda"] = r.lambda;
      row["rss"] = r.rss;
      row["df"] = r.df;
      row["gcv"] = optional_json(r.gcv);
      row["risk_cp"] = optional_json(r.risk_cp);
      records.push_back(row);
    }
    selected[method_name(mp.method)] = mp.selection.record.lambda;
  }
  j["records"] = records;
  j["selected"] = selected;
  if (!o.no_timing) j["timing_seconds"] = run.seconds;
  emit(o.output, j.dump(2) + "\n", out);
  return kExitOk;
}

// ---------------------------------------------------------------- sketch

struct SketchOptions {
  std::optional<std::int64_t> n;
  std::int64_t q = 0;
  double s = 3.0;
  std::optional<std::uint64_t> seed;
  std::string input;
  std::string output;
  bool emit_entries = false;
  unsigned threads = 1;
};

int cmd_sketch(const SketchOptions& o, std::ostream& out) {
  std::optional<CsvTable> table;
  if (!o.input.empty()) table = read_csv(o.input);
  const std::int64_t n = table ? table->values.rows() : o.n.value_or(0);
  if (n < 1) throw UsageError("sketch needs --n or --input");
  if (table && o.n && *o.n != n) throw Error(ErrorKind::DimensionMismatch, "--n does not match the input row count");
  const SketchSpec spec{n, o.q, o.s, o.seed ? *o.seed : seed_fallback()};
  const SparseSketch sketch = generate_sketch(spec);
  if (table) {
    emit(o.output, matrix_to_csv(apply_sketch(sketch, table->values, o.threads)), out);
    return kExitOk;
  }
  json j;
  j["command"] = "sketch";
  j["spec"] = json::parse(spec.to_json());
  j["scale"] = sketch.scale;
  j["nonzeros"] = sketch.nonzeros();
  j["expected_nonzeros"] = static_cast<double>(spec.q) * static_cast<double>(spec.n) / spec.s;
  if (o.emit_entries) {
    json entries = json::array();
    for (const auto& e : sketch.entries()) entries.push_back(json::array({e.row, e.col, e.sign}));
    j["entries"] = entries;
  }
  emit(o.output, j.dump(2) + "\n", out);
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::string config;
  std::string output;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
  bool no_timing = false;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  std::ifstream in(o.config);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open '" + o.config + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  SimConfig cfg = SimConfig::from_json(buf.str());
  if (o.threads) cfg.threads = *o.threads;
  if (o.seed) {
    cfg.seed = *o.seed;
  } else if (std::getenv("SKETCHRIDGE_SEED") && buf.str().find("\"seed\"") == std::string::npos) {
    cfg.seed = seed_fallback();
  }
  std::vector<ReplicationResult> reps;
  SimReport report = run_simulation(cfg, &reps);
  if (o.no_timing) report.runtime_seconds.reset();
  const std::string report_json = report_to_json(report);
  const std::string rows = replications_to_csv(reps);
  if (o.output.empty() || o.output == "-") {
    out << report_json;
  } else {
    write_file_atomic(o.output + ".json", report_json);
    write_file_atomic(o.output + ".csv", rows);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- theory

struct TheoryOptions {
  std::string preset;
  std::optional<double> n, p, q;
  double s = 3.0;
  std::optional<double> sigma2, b2, tau2;
  std::string beta_file;
  std::string design_file;
  std::vector<double> thetas;
  std::vector<double> lambdas;
  std::string form = "both";
  std::string output;
};

int cmd_theory(const TheoryOptions& o, std::ostream& out) {
  OrthogonalSetting st;
  st.s = o.s;
  std::optional<double> tau2 = o.tau2;
  if (o.preset == "gaussian-sim") {
    st.n = 5000;
    st.p = 50;
    st.q = 1000;
    st.sigma2 = 2500;
    if (!tau2) tau2 = kDefaultTau2;
  } else if (!o.preset.empty()) {
    throw UsageError("unknown preset '" + o.preset + "'");
  }
  if (o.n) st.n = *o.n;
  if (o.p) st.p = *o.p;
  if (o.q) st.q = *o.q;
  if (o.sigma2) st.sigma2 = *o.sigma2;

  std::optional<Vector> beta;
  if (!o.beta_file.empty()) {
    const CsvTable t = read_csv(o.beta_file);
    if (t.values.cols() != 1) throw Error(ErrorKind::InvalidInput, "beta file must have one column");
    beta = t.values.col(0);
    st.p = static_cast<double>(beta->size());
  }
  if (o.b2) {
    st.b2 = *o.b2;
  } else if (beta) {
    st.b2 = beta->squaredNorm();
  } else if (tau2) {
    st.b2 = st.p * *tau2;
  } else {
    throw UsageError("theory needs --b2, --tau2, --beta or a preset");
  }
  if (o.preset.empty() && (!o.n || !o.q || !o.sigma2)) throw UsageError("theory needs --n, --q and --sigma2 (or a preset)");
  if (!o.design_file.empty() && !beta) throw UsageError("--design requires --beta");

  std::vector<MseForm> forms;
  if (o.form == "displayed" || o.form == "both") forms.push_back(MseForm::Displayed);
  if (o.form == "complete" || o.form == "both") forms.push_back(MseForm::Complete);
  auto form_name = [](MseForm f) { return f == MseForm::Displayed ? "displayed" : "complete"; };

  json j;
  j["command"] = "theory";
  json setting;
  setting["n"] = st.n;
  setting["p"] = st.p;
  setting["q"] = st.q;
  setting["s"] = st.s;
  setting["sigma2"] = st.sigma2;
  setting["b2"] = st.b2;
  j["setting"] = setting;

  json optimal = json::object();
  for (MseForm f : forms) {
    json per;
    for (Estimator e : {Estimator::Ridge, Estimator::Fc, Estimator::Pc}) {
      const double theta = optimal_theta(e, st, f);
      json row;
      row["theta"] = theta;
      row["lambda"] = theta * st.n;
      row["mse"] = mse_orthogonal(theta, st, e, f).mse;
      per[estimator_name(e)] = row;
    }
    optimal[form_name(f)] = per;
  }
  j["optimal"] = optimal;
  if (tau2) j["bayes_theta"] = bayes_theta(st.sigma2, st.n, *tau2);

  std::vector<double> thetas = o.thetas;
  for (double lam : o.lambdas) thetas.push_back(lam / st.n);
  json rows = json::array();
  for (double theta : thetas) {
    for (MseForm f : forms) {
      const double ridge_var = mse_orthogonal(theta, st, Estimator::Ridge, f).var_trace;
      for (Estimator e : {Estimator::Ridge, Estimator::Fc, Estimator::Pc}) {
        const MseBreakdown b = mse_orthogonal(theta, st, e, f);
        json row;
        row["theta"] = theta;
        row["lambda"] = theta * st.n;
        row["estimator"] = estimator_name(e);
        row["form"] = form_name(f);
        row["bias_sq"] = b.bias_sq;
        row["var_trace"] = b.var_trace;
        row["compression_terms"] = b.var_trace - ridge_var;
        row["mse"] = b.mse;
        rows.push_back(row);
      }
    }
  }
  j["orthogonal"] = rows;

  if (!o.design_file.empty()) {
    const CsvTable design = read_csv(o.design_file);
    if (design.values.cols() != beta->size()) throw Error(ErrorKind::DimensionMismatch, "design columns must match beta length");
    json general = json::array();
    for (double theta : thetas) {
      const double lambda = theta * static_cast<double>(design.values.rows());
      const TheoryInputs ti = make_theory_inputs(design.values, *beta, st.sigma2, lambda, st.q, st.s);
      for (Estimator e : {Estimator::Ridge, Estimator::Fc, Estimator::Pc}) {
        const MseBreakdown b = mse_breakdown(ti, e);
        json row;
        row["lambda"] = lambda;
        row["estimator"] = estimator_name(e);
        row["bias_sq"] = b.bias_sq;
        row["var_trace"] = b.var_trace;
        row["mse"] = b.mse;
        general.push_back(row);
      }
    }
    j["design"] = general;
  }
  emit(o.output, j.dump(2) + "\n", out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compressed and penalized linear regression"};
  app.name("sketchridge");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  ModelOptions fit_opts;
  auto* fit = app.add_subcommand("fit", "Fit compressed ridge estimators on CSV data and select lambda");
  add_model_options(fit, fit_opts);

  ModelOptions tune_opts;
  auto* tune = app.add_subcommand("tune", "Write df, GCV and Cp for every grid lambda");
  add_model_options(tune, tune_opts);
  tune->add_option("--format", tune_opts.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  SketchOptions sketch_opts;
  auto* sketch = app.add_subcommand("sketch", "Generate a sparse sketch, or apply one to a CSV matrix");
  sketch->add_option("--n", sketch_opts.n, "input rows (taken from --input when given)");
  sketch->add_option("--q", sketch_opts.q, "compressed rows")->required();
  sketch->add_option("--s", sketch_opts.s, "sparsity");
  sketch->add_option("--seed", sketch_opts.seed, "seed (fallback: SKETCHRIDGE_SEED, then 0)");
  sketch->add_option("--input", sketch_opts.input, "matrix CSV to compress")->check(CLI::ExistingFile);
  sketch->add_option("--output", sketch_opts.output, "output path (default: stdout)");
  sketch->add_flag("--emit-entries", sketch_opts.emit_entries, "list the nonzero triplets");
  sketch->add_option("--threads", sketch_opts.threads, "worker threads")->check(CLI::PositiveNumber);

  SimulateOptions sim_opts;
  auto* simulate = app.add_subcommand("simulate", "Run the simulation study described by a JSON config");
  simulate->add_option("--config", sim_opts.config, "simulation config JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--output", sim_opts.output, "output prefix; writes <prefix>.json and <prefix>.csv");
  simulate->add_option("--threads", sim_opts.threads, "worker threads")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_opts.seed, "override the config seed");
  simulate->add_flag("--no-timing", sim_opts.no_timing, "omit runtime from the report");

  TheoryOptions theory_opts;
  auto* theory = app.add_subcommand("theory", "Evaluate the bias/variance expansions");
  theory->add_option("--preset", theory_opts.preset, "gaussian-sim: n=5000, p=50, q=1000, sigma=50, tau2=pi/2");
  theory->add_option("--n", theory_opts.n, "rows");
  theory->add_option("--p", theory_opts.p, "columns");
  theory->add_option("--q", theory_opts.q, "compressed rows");
  theory->add_option("--s", theory_opts.s, "sparsity");
  theory->add_option("--sigma2", theory_opts.sigma2, "noise variance");
  theory->add_option("--b2", theory_opts.b2, "squared norm of the true coefficients");
  theory->add_option("--tau2", theory_opts.tau2, "prior variance per coefficient (b2 = p tau2)");
  theory->add_option("--beta", theory_opts.beta_file, "CSV column of true coefficients")->check(CLI::ExistingFile);
  theory->add_option("--design", theory_opts.design_file, "design CSV for the general (non-orthogonal) expansions")
      ->check(CLI::ExistingFile);
  theory->add_option("--theta", theory_opts.thetas, "theta = lambda / n values")->delimiter(',');
  theory->add_option("--lambda", theory_opts.lambdas, "lambda values")->delimiter(',');
  theory->add_option("--form", theory_opts.form, "displayed, complete or both")
      ->check(CLI::IsMember({"displayed", "complete", "both"}));
  theory->add_option("--output", theory_opts.output, "output path (default: stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_opts, out);
    if (tune->parsed()) return cmd_tune(tune_opts, out);
    if (sketch->parsed()) return cmd_sketch(sketch_opts, out);
    if (simulate->parsed()) return cmd_simulate(sim_opts, out);
    if (theory->parsed()) return cmd_theory(theory_opts, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace sketchridge::cli
