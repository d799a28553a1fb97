#include "sketchridge/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "sketchridge/error.hpp"
#include "sketchridge/parallel.hpp"
#include "sketchridge/theory.hpp"

namespace sketchridge {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::ordered_json quartiles_json(const Quartiles& q) {
  nlohmann::ordered_json j;
  j["q1"] = q.q1;
  j["median"] = q.median;
  j["q3"] = q.q3;
  return j;
}

}  // namespace

const char* scenario_name(BetaScenario s) {
  switch (s) {
    case BetaScenario::Gaussian: return "gaussian";
    case BetaScenario::AllOnes: return "all_ones";
    case BetaScenario::Alternating: return "alternating";
  }
  return "unknown";
}

BetaScenario parse_scenario(const std::string& name) {
  if (name == "gaussian") return BetaScenario::Gaussian;
  if (name == "all_ones") return BetaScenario::AllOnes;
  if (name == "alternating") return BetaScenario::Alternating;
  throw Error(ErrorKind::InvalidConfig, "unknown beta scenario '" + name + "'");
}

void SimConfig::validate() const {
  if (n < 2 || p < 1 || n <= p) throw Error(ErrorKind::InvalidConfig, "simulation needs n > p >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw Error(ErrorKind::InvalidConfig, "rho must lie in [0, 1)");
  if (!(sigma >= 0.0) || !(tau2 > 0.0)) throw Error(ErrorKind::InvalidConfig, "sigma must be >= 0 and tau2 > 0");
  if (q_list.empty()) throw Error(ErrorKind::InvalidConfig, "q_list is empty");
  for (auto q : q_list) {
    if (q < 1) throw Error(ErrorKind::InvalidConfig, "every q must be >= 1");
  }
  if (!(s >= 1.0)) throw Error(ErrorKind::InvalidConfig, "s must be >= 1");
  if (replications < 1) throw Error(ErrorKind::InvalidConfig, "replications must be >= 1");
  if (test_n < 0) throw Error(ErrorKind::InvalidConfig, "test_n must be >= 0");
  for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
    if (!(lambda_grid[k] > 0.0) || (k > 0 && !(lambda_grid[k] > lambda_grid[k - 1]))) {
      throw Error(ErrorKind::InvalidConfig, "lambda_grid must be positive and strictly increasing");
    }
  }
}

std::vector<double> SimConfig::grid() const {
  if (!lambda_grid.empty()) return lambda_grid;
  return log_grid(1e-4 * static_cast<double>(n), 1e4 * static_cast<double>(n), 50);
}

SimConfig SimConfig::from_json(const std::string& text) {
  SimConfig cfg;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "simulation config must be a JSON object");
    static const char* known[] = {"n", "p", "rho", "beta_scenario", "tau2", "sigma", "q_list", "s", "lambda_grid",
                                  "replications", "seed", "test_n", "redraw_design", "threads"};
    for (const auto& item : j.items()) {
      if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return item.key() == k; }) ==
          std::end(known)) {
        throw Error(ErrorKind::InvalidConfig, "unknown config key '" + item.key() + "'");
      }
    }
    cfg.n = j.value("n", cfg.n);
    cfg.p = j.value("p", cfg.p);
    cfg.rho = j.value("rho", cfg.rho);
    if (j.contains("beta_scenario")) cfg.scenario = parse_scenario(j.at("beta_scenario").get<std::string>());
    cfg.tau2 = j.value("tau2", cfg.tau2);
    cfg.sigma = j.value("sigma", cfg.sigma);
    if (j.contains("q_list")) cfg.q_list = j.at("q_list").get<std::vector<std::int64_t>>();
    cfg.s = j.value("s", cfg.s);
    if (j.contains("lambda_grid")) cfg.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
    cfg.replications = j.value("replications", cfg.replications);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.test_n = j.value("test_n", cfg.test_n);
    cfg.redraw_design = j.value("redraw_design", cfg.redraw_design);
    cfg.threads = j.value("threads", cfg.threads);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("bad simulation config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string SimConfig::to_json() const {
  nlohmann::ordered_json j;
  j["n"] = n;
  j["p"] = p;
  j["rho"] = rho;
  j["beta_scenario"] = scenario_name(scenario);
  j["tau2"] = tau2;
  j["sigma"] = sigma;
  j["q_list"] = q_list;
  j["s"] = s;
  j["lambda_grid"] = grid();
  j["replications"] = replications;
  j["seed"] = seed;
  j["test_n"] = test_n;
  j["redraw_design"] = redraw_design;
  return j.dump();
}

Matrix gen_design(std::int64_t n, std::int64_t p, double rho, std::uint64_t seed) {
  if (!(rho >= 0.0 && rho < 1.0)) throw Error(ErrorKind::InvalidInput, "rho must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double own = std::sqrt(1.0 - rho);
  const double shared = std::sqrt(rho);
  Matrix x(n, p);
  for (std::int64_t i = 0; i < n; ++i) {
    const double w = normal(rng);
    for (std::int64_t j = 0; j < p; ++j) x(i, j) = own * normal(rng) + shared * w;
  }
  return x;
}

Vector gen_beta(BetaScenario scenario, std::int64_t p, std::uint64_t seed, double tau2) {
  Vector b(p);
  switch (scenario) {
    case BetaScenario::Gaussian: {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> normal(0.0, std::sqrt(tau2));
      for (std::int64_t j = 0; j < p; ++j) b(j) = normal(rng);
      break;
    }
    case BetaScenario::AllOnes:
      b.setOnes();
      break;
    case BetaScenario::Alternating:
      for (std::int64_t j = 0; j < p; ++j) b(j) = (j % 2 == 0) ? 1.0 : -1.0;
      break;
  }
  return b;
}

Vector gen_response(const Matrix& x, const Vector& beta_star, double sigma, std::uint64_t seed) {
  if (x.cols() != beta_star.size()) throw Error(ErrorKind::DimensionMismatch, "beta length does not match design");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector y = x * beta_star;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += sigma * normal(rng);
  return y;
}

std::uint64_t stream_seed(std::uint64_t base, std::int64_t rep, Stream stream, std::uint64_t extra) {
  return derive_seed(base, static_cast<std::uint64_t>(rep), (static_cast<std::uint64_t>(stream) << 48) ^ extra);
}

std::optional<double> ArmResult::gcv_ratio() const {
  if (test_error.empty()) return std::nullopt;
  const double best = *std::min_element(test_error.begin(), test_error.end());
  return test_error[selected] / best;
}

ReplicationResult run_replication(const SimConfig& cfg, std::int64_t rep) {
  cfg.validate();
  const std::int64_t design_rep = cfg.redraw_design ? rep : 0;
  const Matrix x = gen_design(cfg.n, cfg.p, cfg.rho, stream_seed(cfg.seed, design_rep, Stream::Design));
  const Vector beta = gen_beta(cfg.scenario, cfg.p, stream_seed(cfg.seed, rep, Stream::Beta), cfg.tau2);
  const Vector y = gen_response(x, beta, cfg.sigma, stream_seed(cfg.seed, rep, Stream::Noise));
  const Dataset data(x, y);

  Matrix x_test;
  Vector y_test;
  const bool with_test = cfg.test_n > 0;
  if (with_test) {
    x_test = gen_design(cfg.test_n, cfg.p, cfg.rho, stream_seed(cfg.seed, rep, Stream::TestDesign));
    y_test = gen_response(x_test, beta, cfg.sigma, stream_seed(cfg.seed, rep, Stream::TestNoise));
  }
  auto test_error = [&](const Vector& b) { return (y_test - x_test * b).squaredNorm() / static_cast<double>(cfg.test_n); };
  const auto n = data.n();
  const std::vector<double> grid = cfg.grid();

  ReplicationResult out;
  out.rep = rep;

  {
    ArmResult ols;
    ols.method = Method::Ols;
    const Vector b = fit_ols(data);
    ols.lambdas = {0.0};
    ols.est_error = {(b - beta).squaredNorm()};
    ols.gcv = {kNaN};
    if (with_test) ols.test_error = {test_error(b)};
    out.arms.push_back(std::move(ols));
  }

  const RidgePath ridge(data);
  {
    ArmResult arm;
    arm.method = Method::Ridge;
    if (cfg.scenario == BetaScenario::Gaussian) {
      // Bayes arm: penalty n * theta* = sigma^2 / tau^2 on the unscaled objective.
      const double lambda = static_cast<double>(n) * bayes_theta(cfg.sigma * cfg.sigma, static_cast<double>(n), cfg.tau2);
      const Vector b = ridge.fit(lambda);
      arm.lambdas = {lambda};
      arm.est_error = {(b - beta).squaredNorm()};
      arm.gcv = {kNaN};
      if (with_test) arm.test_error = {test_error(b)};
    } else {
      std::vector<TuningRecord> records;
      for (double lambda : grid) {
        const Vector b = ridge.fit(lambda);
        const double rss = residual_sum_squares(x, y, b);
        records.push_back(make_record(lambda, rss, ridge.df(lambda), n));
        arm.lambdas.push_back(lambda);
        arm.est_error.push_back((b - beta).squaredNorm());
        arm.gcv.push_back(records.back().gcv.value_or(kNaN));
        if (with_test) arm.test_error.push_back(test_error(b));
      }
      arm.selected = select_lambda(records, Criterion::Gcv).index;
    }
    out.arms.push_back(std::move(arm));
  }

  for (std::int64_t q : cfg.q_list) {
    SketchSpec spec{cfg.n, q, cfg.s, stream_seed(cfg.seed, rep, Stream::Sketch, static_cast<std::uint64_t>(q))};
    const SparseSketch sketch = generate_sketch(spec);
    const CompressedDesign cd = build_compressed(data, sketch);
    const PathResult path = fit_path(cd, data, grid);
    for (Method m : {Method::Fc, Method::Pc, Method::LinearCombo, Method::ConvexCombo}) {
      ArmResult arm;
      arm.method = m;
      arm.q = q;
      const auto records = path_records(path, m, n);
      for (std::size_t k = 0; k < path.fits.size(); ++k) {
        const Vector& b = path_beta(path.fits[k], m);
        arm.lambdas.push_back(path.fits[k].lambda);
        arm.est_error.push_back((b - beta).squaredNorm());
        arm.gcv.push_back(records[k].gcv.value_or(kNaN));
        if (with_test) arm.test_error.push_back(test_error(b));
      }
      arm.selected = select_lambda(records, Criterion::Gcv).index;
      out.arms.push_back(std::move(arm));
    }
  }
  return out;
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::InvalidInput, "quartiles of an empty sample");
  std::sort(values.begin(), values.end());
  auto at = [&](double prob) {
    const double pos = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

const ArmSummary& SimReport::arm(Method method, std::int64_t q) const {
  for (const auto& a : arms) {
    if (a.method == method && a.q == q) return a;
  }
  throw Error(ErrorKind::InvalidInput, std::string("report has no arm ") + method_name(method) + " q=" + std::to_string(q));
}

std::int64_t SimReport::win_count(Method method, std::int64_t q) const {
  for (const auto& table : wins) {
    if (table.q != q) continue;
    for (const auto& [m, c] : table.counts) {
      if (m == method) return c;
    }
  }
  return 0;
}

SimReport aggregate(const SimConfig& cfg, const std::vector<ReplicationResult>& reps) {
  if (reps.empty()) throw Error(ErrorKind::InvalidInput, "aggregate needs at least one replication");
  SimReport report;
  report.config = cfg;
  report.replications = static_cast<std::int64_t>(reps.size());

  const auto& layout = reps.front().arms;
  for (std::size_t a = 0; a < layout.size(); ++a) {
    ArmSummary summary;
    summary.method = layout[a].method;
    summary.q = layout[a].q;
    summary.lambdas = layout[a].lambdas;
    std::vector<double> selected;
    std::vector<double> ratios;
    for (std::size_t k = 0; k < summary.lambdas.size(); ++k) {
      std::vector<double> logs;
      for (const auto& r : reps) logs.push_back(std::log(r.arms[a].est_error[k]));
      summary.log_est_error.push_back(quartiles(std::move(logs)));
    }
    for (const auto& r : reps) {
      selected.push_back(r.arms[a].est_error_selected());
      if (auto ratio = r.arms[a].gcv_ratio()) {
        if (*ratio < 1.0) throw Error(ErrorKind::InvalidInput, "GCV ratio below 1");
        ratios.push_back(*ratio);
      }
    }
    summary.est_error_selected = quartiles(std::move(selected));
    if (!ratios.empty()) summary.gcv_ratio = quartiles(std::move(ratios));
    report.arms.push_back(std::move(summary));
  }

  for (std::int64_t q : cfg.q_list) {
    WinTable table;
    table.q = q;
    for (Method m : kAllMethods) table.counts.emplace_back(m, 0);
    for (const auto& r : reps) {
      std::optional<Method> winner;
      double best = std::numeric_limits<double>::infinity();
      for (Method m : kAllMethods) {
        for (const auto& arm : r.arms) {
          const bool match = arm.method == m && (arm.q == q || (arm.q == 0 && (m == Method::Ols || m == Method::Ridge)));
          if (match && arm.est_error_selected() < best) {
            best = arm.est_error_selected();
            winner = m;
          }
        }
      }
      for (auto& [m, c] : table.counts) {
        if (winner && m == *winner) ++c;
      }
    }
    report.wins.push_back(std::move(table));
  }
  return report;
}

SimReport run_simulation(const SimConfig& cfg, std::vector<ReplicationResult>* reps_out) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  std::vector<ReplicationResult> reps(static_cast<std::size_t>(cfg.replications));
  parallel_for(reps.size(), cfg.threads, [&](std::size_t r) { reps[r] = run_replication(cfg, static_cast<std::int64_t>(r)); });
  SimReport report = aggregate(cfg, reps);
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (reps_out) *reps_out = std::move(reps);
  return report;
}

std::string report_to_json(const SimReport& report) {
  nlohmann::ordered_json j;
  j["config"] = nlohmann::ordered_json::parse(report.config.to_json());
  j["replications"] = report.replications;
  nlohmann::ordered_json arms = nlohmann::ordered_json::array();
  for (const auto& a : report.arms) {
    nlohmann::ordered_json arm;
    arm["method"] = method_name(a.method);
    arm["q"] = a.q;
    arm["lambdas"] = a.lambdas;
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (const auto& qt : a.log_est_error) per.push_back(quartiles_json(qt));
    arm["log_est_error"] = per;
    arm["est_error_selected"] = quartiles_json(a.est_error_selected);
    arm["gcv_ratio"] = a.gcv_ratio ? quartiles_json(*a.gcv_ratio) : nlohmann::ordered_json(nullptr);
    arms.push_back(arm);
  }
  j["arms"] = arms;
  nlohmann::ordered_json wins = nlohmann::ordered_json::array();
  for (const auto& t : report.wins) {
    nlohmann::ordered_json row;
    row["q"] = t.q;
    nlohmann::ordered_json counts;
    for (const auto& [m, c] : t.counts) counts[method_name(m)] = c;
    row["counts"] = counts;
    wins.push_back(row);
  }
  j["wins"] = wins;
  if (report.runtime_seconds) j["runtime_seconds"] = *report.runtime_seconds;
  return j.dump(2) + "\n";
}

std::string replications_to_csv(const std::vector<ReplicationResult>& reps) {
  std::ostringstream out;
  out << "rep,method,q,lambda,metric,value\n";
  for (const auto& r : reps) {
    for (const auto& arm : r.arms) {
      const std::string prefix = std::to_string(r.rep) + "," + method_name(arm.method) + "," + std::to_string(arm.q) + ",";
      for (std::size_t k = 0; k < arm.lambdas.size(); ++k) {
        const std::string lam = format_double(arm.lambdas[k]) + ",";
        out << prefix << lam << "est_error," << format_double(arm.est_error[k]) << "\n";
        if (!std::isnan(arm.gcv[k])) out << prefix << lam << "gcv," << format_double(arm.gcv[k]) << "\n";
        if (!arm.test_error.empty()) out << prefix << lam << "test_error," << format_double(arm.test_error[k]) << "\n";
      }
      const std::string sel = format_double(arm.lambdas[arm.selected]) + ",";
      out << prefix << sel << "est_error_selected," << format_double(arm.est_error_selected()) << "\n";
      if (auto ratio = arm.gcv_ratio()) out << prefix << sel << "gcv_ratio," << format_double(*ratio) << "\n";
    }
  }
  return out.str();
}

}  // namespace sketchridge
