// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance <path-to-sketchridge-binary> [--only N[,N...]] [--known-failures N[,N...]]
//
// Exit status is nonzero when a criterion fails that is not listed in --known-failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sketchridge/estimators.hpp"
#include "sketchridge/sim.hpp"
#include "sketchridge/sketch.hpp"
#include "sketchridge/theory.hpp"
#include "sketchridge/tuning.hpp"
#include "test_util.hpp"

using namespace sketchridge;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// ---------------------------------------------------------------------------- 1

Verdict bayes_lambda() {
  const double lambda_star = bayes_theta(2500.0, 5000.0, kDefaultTau2);
  return {lambda_star >= 0.316 && lambda_star <= 0.320, fmt("lambda* = sigma^2/(n tau^2) = %.6f", lambda_star)};
}

// ---------------------------------------------------------------------------- 2

Verdict identity_equivalence() {
  std::mt19937_64 rng(2002);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const Eigen::Index n = 20 + static_cast<Eigen::Index>(rng() % 181);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng() % 10);
    const Dataset data(random_matrix(rng, n, p), random_vector(rng, n));
    const CompressedDesign cd = build_compressed(data, SparseSketch::identity(n));
    const RidgePath ridge(data);
    for (double lambda : log_grid(1e-3, 1e3, 20)) {
      const Vector r = ridge.fit(lambda);
      worst = std::max(worst, (fit_fc(cd, lambda) - r).cwiseAbs().maxCoeff());
      worst = std::max(worst, (fit_pc(cd, lambda) - r).cwiseAbs().maxCoeff());
    }
  }
  return {worst < 1e-10, fmt("max |b_FC - b_ridge|_inf, |b_PC - b_ridge|_inf = %.3e over 20 instances x 20 lambdas", worst)};
}

// ---------------------------------------------------------------------------- 3

double rel(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1.0, b.norm()); }
double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

Verdict dense_oracle() {
  std::mt19937_64 rng(3003);
  double worst[6] = {0, 0, 0, 0, 0, 0};  // fc, pc, linear, convex, df_fc, df_pc
  for (int inst = 0; inst < 100; ++inst) {
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(rng() % 56);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng() % 10);
    const std::int64_t q = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n));
    const double s = 1.0 + static_cast<double>(rng() % 4);
    const Dataset data(random_matrix(rng, n, p), random_vector(rng, n));
    const SparseSketch sk = generate_sketch({n, q, s, rng()});
    const CompressedDesign cd = build_compressed(data, sk);

    // brute force: dense Q, dense Gram, LU solves, explicit hat-matrix traces
    const Matrix dq = sk.dense();
    const Matrix qx = dq * data.x;
    const Vector qy = dq * data.y;
    for (double lambda : {0.05, 1.0, 20.0}) {
      Matrix g = qx.transpose() * qx;
      g.diagonal().array() += lambda;
      const Eigen::FullPivLU<Matrix> lu(g);
      const Vector bfc = lu.solve(qx.transpose() * qy);
      const Vector bpc = lu.solve(data.x.transpose() * data.y);
      Matrix v(n, 2);
      v << data.x * bfc, data.x * bpc;
      const Eigen::Vector2d alpha = v.completeOrthogonalDecomposition().solve(data.y);
      const Vector blin = alpha(0) * bfc + alpha(1) * bpc;
      const Vector diff = v.col(0) - v.col(1);
      double a = diff.squaredNorm() > 1e-24 * (v.col(0).squaredNorm() + v.col(1).squaredNorm())
                     ? (data.y - v.col(1)).dot(diff) / diff.squaredNorm()
                     : 0.5;
      a = std::clamp(a, 0.0, 1.0);
      const Vector bcvx = a * bfc + (1 - a) * bpc;
      const Matrix ginv = lu.inverse();
      const double dfc = (data.x * ginv * qx.transpose() * dq).trace();
      const double dpc = (data.x * ginv * data.x.transpose()).trace();

      worst[0] = std::max(worst[0], rel(fit_fc(cd, lambda), bfc));
      worst[1] = std::max(worst[1], rel(fit_pc(cd, lambda), bpc));
      worst[2] = std::max(worst[2], rel(fit_combo(cd, data, lambda, false).beta, blin));
      worst[3] = std::max(worst[3], rel(fit_combo(cd, data, lambda, true).beta, bcvx));
      worst[4] = std::max(worst[4], rel(df_fc(cd, lambda), dfc));
      worst[5] = std::max(worst[5], rel(df_pc(cd, lambda), dpc));
    }
  }
  const double m = *std::max_element(std::begin(worst), std::end(worst));
  return {m < 1e-8, fmt("max rel err: fc %.1e, pc %.1e, linear %.1e, convex %.1e, df_fc %.1e, df_pc %.1e", worst[0],
                        worst[1], worst[2], worst[3], worst[4], worst[5])};
}

// ---------------------------------------------------------------------------- 4

Verdict moment_law() {
  const SketchSpec spec{6, 40, 3.0, 4004};
  const MomentReport r = gram_moment_check(spec, 100000);
  double z_mean = 0, z_diag = 0, z_off = 0;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      z_mean = std::max(z_mean, std::abs(r.mean(i, j) - (i == j ? 1.0 : 0.0)) / r.mean_se(i, j));
      const double target = i == j ? (spec.s - 1) / spec.q : 1.0 / spec.q;
      const double z = std::abs(r.variance(i, j) - target) / r.variance_se(i, j);
      (i == j ? z_diag : z_off) = std::max(i == j ? z_diag : z_off, z);
    }
  }
  const bool pass = z_mean <= 3 && z_diag <= 3 && z_off <= 3;
  return {pass, fmt("max |z|: E[A]-I %.2f, Var(A_ii)-%.3f %.2f, Var(A_ij)-%.3f %.2f (1e5 draws)", z_mean,
                    (spec.s - 1) / spec.q, z_diag, 1.0 / spec.q, z_off)};
}

// ---------------------------------------------------------------------------- 5

struct Concordance {
  double mean_rel, mean_tol;  // norm-relative mean discrepancy and its tolerance
  double var_rel, var_tol;
};

Concordance sketch_concordance(const Dataset& data, const TheoryInputs& ti, std::int64_t q, bool pc, int draws) {
  const Eigen::Index p = data.p();
  Vector sum = Vector::Zero(p);
  std::vector<Vector> est(static_cast<std::size_t>(draws));
  for (int d = 0; d < draws; ++d) {
    const SketchSpec spec{data.n(), q, 3.0, derive_seed(5005, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(q))};
    const CompressedDesign cd = build_compressed(data, generate_sketch(spec));
    est[static_cast<std::size_t>(d)] = pc ? fit_pc(cd, ti.lambda) : fit_fc(cd, ti.lambda);
    sum += est[static_cast<std::size_t>(d)];
  }
  const Vector mean = sum / draws;
  std::vector<double> sq(est.size());
  double tr = 0.0;
  for (std::size_t d = 0; d < est.size(); ++d) {
    sq[d] = (est[d] - mean).squaredNorm();
    tr += sq[d];
  }
  tr /= (draws - 1.0);
  double var_sq = 0.0;
  for (double v : sq) var_sq += (v - tr) * (v - tr);
  const double tr_se = std::sqrt(var_sq / (draws - 1.0) / draws);

  const Moments m = pc ? pc_moments(ti, data.y) : fc_moments(ti, data.y);
  const double predicted = m.var.sparsity + m.var.scale;
  const double ridge_norm = m.mean.norm();
  Concordance c;
  c.mean_rel = (mean - m.mean).norm() / ridge_norm;
  c.mean_tol = std::max(0.05, 3.0 * std::sqrt(tr / draws) / ridge_norm);
  c.var_rel = std::abs(tr - predicted) / predicted;
  c.var_tol = std::max(0.10, 3.0 * tr_se / predicted);
  return c;
}

Verdict taylor_concordance() {
  std::mt19937_64 rng(5005);
  const Eigen::Index n = 40;
  const Matrix x = random_matrix(rng, n, 3);
  const Vector beta = Vector::Ones(3);
  const double sigma = 1.0;
  const Vector y = x * beta + sigma * random_vector(rng, n);
  const Dataset data(x, y);
  const double lambda = static_cast<double>(n);  // theta = 1
  bool pass = true;
  std::string detail;
  for (bool pc : {false, true}) {
    Concordance c[2];
    int k = 0;
    for (std::int64_t q : {10, 20}) {
      const TheoryInputs ti = make_theory_inputs(x, beta, sigma * sigma, lambda, static_cast<double>(q), 3.0);
      c[k] = sketch_concordance(data, ti, q, pc, 20000);
      pass &= c[k].mean_rel <= c[k].mean_tol && c[k].var_rel <= c[k].var_tol;
      ++k;
    }
    pass &= c[1].mean_rel < c[0].mean_rel && c[1].var_rel < c[0].var_rel;
    detail += fmt("%s mean err q10 %.1f%% q20 %.1f%% (tol %.0f%%), var err q10 %.1f%% q20 %.1f%% (tol %.0f%%); ",
                  pc ? "PC" : "FC", 100 * c[0].mean_rel, 100 * c[1].mean_rel, 100 * c[0].mean_tol,
                  100 * c[0].var_rel, 100 * c[1].var_rel, 100 * c[0].var_tol);
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

// ---------------------------------------------------------------------------- 6

Verdict orthogonal_mse() {
  std::mt19937_64 rng(6006);
  const Eigen::Index n = 400, p = 4;
  const std::int64_t q = 200;
  const double sigma = 50.0;
  const Matrix qr = Eigen::HouseholderQR<Matrix>(random_matrix(rng, n, p)).householderQ() * Matrix::Identity(n, p);
  const Matrix x = std::sqrt(static_cast<double>(n)) * qr;
  const Vector beta = std::sqrt(kDefaultTau2) * Vector::Ones(p);  // b^2 = p pi/2
  const OrthogonalSetting st{beta.squaredNorm(), sigma * sigma, double(n), double(p), double(q), 3.0};
  const double theta = optimal_theta(Estimator::Ridge, st);
  const double lambda = theta * static_cast<double>(n);

  const double numeric = minimize_theta([&](double t) { return mse_orthogonal(t, st, Estimator::Ridge).mse; });
  const bool theta_ok = std::abs(numeric - theta) <= 1e-6 * theta;

  const int draws = 5000;
  std::vector<double> err[3];
  std::normal_distribution<double> g;
  const Vector signal = x * beta;
  for (int d = 0; d < draws; ++d) {
    Vector y = signal;
    for (Eigen::Index i = 0; i < n; ++i) y(i) += sigma * g(rng);
    const Dataset data(x, y);
    const CompressedDesign cd = build_compressed(data, generate_sketch({n, q, 3.0, derive_seed(6006, d)}));
    err[0].push_back((fit_ridge(data, lambda) - beta).squaredNorm());
    err[1].push_back((fit_fc(cd, lambda) - beta).squaredNorm());
    err[2].push_back((fit_pc(cd, lambda) - beta).squaredNorm());
  }
  bool pass = theta_ok;
  std::string detail = fmt("theta*=%.4f (numeric diff %.1e); ", theta, std::abs(numeric - theta));
  const Estimator which[3] = {Estimator::Ridge, Estimator::Fc, Estimator::Pc};
  for (int k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (double e : err[k]) mean += e / draws;
    double var = 0.0;
    for (double e : err[k]) var += (e - mean) * (e - mean) / (draws - 1.0);
    const double se = std::sqrt(var / draws);
    const double displayed = mse_orthogonal(theta, st, which[k], MseForm::Displayed).mse;
    const double complete = mse_orthogonal(theta, st, which[k], MseForm::Complete).mse;
    const double tol = k == 0 ? 3.0 * se : std::max(0.10 * displayed, 3.0 * se);
    const bool ok = std::abs(mean - displayed) <= tol;
    pass &= ok;
    detail += fmt("%s emp %.3f+-%.3f vs formula %.3f [%s] (complete %.3f); ", estimator_name(which[k]), mean, se,
                  displayed, ok ? "ok" : "off", complete);
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

// ---------------------------------------------------------------------------- 7

Verdict desk_simulation() {
  SimConfig gauss;
  gauss.n = 1000;
  gauss.p = 20;
  gauss.rho = 0.2;
  gauss.scenario = BetaScenario::Gaussian;
  gauss.q_list = {200};
  gauss.s = 3.0;
  gauss.replications = 50;
  gauss.test_n = 1000;
  gauss.seed = 7007;
  std::vector<ReplicationResult> reps;
  const SimReport ga = run_simulation(gauss, &reps);

  // (a) Bayes ridge has the lowest median estimation error
  const double ridge_med = ga.arm(Method::Ridge).est_error_selected.median;
  bool a_ok = true;
  std::string runner_up;
  double best_other = 1e300;
  for (const auto& arm : ga.arms) {
    if (arm.method == Method::Ridge) continue;
    if (arm.est_error_selected.median < best_other) {
      best_other = arm.est_error_selected.median;
      runner_up = method_name(arm.method);
    }
    a_ok &= ridge_med < arm.est_error_selected.median;
  }

  // (c) median GCV ratio for the compressed arms
  bool c_ok = true;
  std::string ratios;
  for (Method m : {Method::Fc, Method::Pc, Method::LinearCombo, Method::ConvexCombo}) {
    const double med = ga.arm(m, 200).gcv_ratio->median;
    c_ok &= med <= 1.05;
    ratios += fmt("%s %.4f ", method_name(m), med);
  }

  // (b) rho = 0.8, beta = 1: convex combination beats OLS
  SimConfig ones = gauss;
  ones.rho = 0.8;
  ones.scenario = BetaScenario::AllOnes;
  ones.test_n = 0;
  ones.seed = 7008;
  std::vector<ReplicationResult> reps_b;
  run_simulation(ones, &reps_b);
  int beats = 0;
  for (const auto& r : reps_b) {
    double ols = 0.0, cvx = 0.0;
    for (const auto& arm : r.arms) {
      if (arm.method == Method::Ols) ols = arm.est_error_selected();
      if (arm.method == Method::ConvexCombo) cvx = arm.est_error_selected();
    }
    beats += cvx < ols;
  }
  const double share = beats / static_cast<double>(reps_b.size());
  const bool b_ok = share >= 0.8;
  return {a_ok && b_ok && c_ok,
          fmt("(a) ridge median %.3f vs best other %s %.3f [%s]; (b) convex beats OLS %.0f%% [%s]; (c) median GCV "
              "ratio %s[%s]",
              ridge_med, runner_up.c_str(), best_other, a_ok ? "ok" : "off", 100 * share, b_ok ? "ok" : "off",
              ratios.c_str(), c_ok ? "ok" : "off")};
}

// ---------------------------------------------------------------------------- 8

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

Verdict determinism(const std::string& binary) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / fs::path("sketchridge_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::mt19937_64 rng(8008);
  const Matrix x = random_matrix(rng, 500, 8);
  const Vector y = x * Vector::LinSpaced(8, -1, 1) + random_vector(rng, 500);
  {
    std::ofstream csv(dir / "data.csv");
    csv.precision(17);
    for (int i = 0; i < 500; ++i) {
      for (int j = 0; j < 8; ++j) csv << x(i, j) << ",";
      csv << y(i) << "\n";
    }
    std::ofstream(dir / "sim.json") << R"({"n": 200, "p": 5, "q_list": [40, 80], "replications": 6, "test_n": 100})";
  }
  const std::string data = (dir / "data.csv").string();
  struct Cmd {
    std::string name, args;
    bool threaded;
  };
  const std::vector<Cmd> cmds{
      {"fit", "fit --input " + quote(data) + " --q 120 --seed 5 --methods ols,ridge,fc,pc,linear,convex "
              "--emit-coefficients --no-timing", true},
      {"tune", "tune --input " + quote(data) + " --q 120 --seed 5 --format csv", true},
      {"sketch", "sketch --input " + quote(data) + " --q 60 --seed 5", true},
      {"simulate", "simulate --config " + quote((dir / "sim.json").string()) + " --no-timing", true},
      {"theory", "theory --preset gaussian-sim --theta 0,0.1,0.3183,1", false},
  };
  bool pass = true;
  std::string detail;
  for (const auto& c : cmds) {
    std::vector<std::string> outputs;
    for (int threads : {1, 1, 8, 8}) {
      const fs::path out = dir / (c.name + "_" + std::to_string(outputs.size()));
      std::string cmd = quote(binary) + " " + c.args;
      if (c.threaded) cmd += " --threads " + std::to_string(threads);
      std::string produced;
      if (c.name == "simulate") {
        cmd += " --output " + quote(out.string());
        if (std::system(cmd.c_str()) != 0) return {false, c.name + " exited nonzero"};
        produced = slurp(out.string() + ".json") + slurp(out.string() + ".csv");
      } else {
        cmd += " > " + quote(out.string());
        if (std::system(cmd.c_str()) != 0) return {false, c.name + " exited nonzero"};
        produced = slurp(out.string());
      }
      if (produced.empty()) return {false, c.name + " produced no output"};
      outputs.push_back(produced);
    }
    const bool same = std::all_of(outputs.begin(), outputs.end(), [&](const auto& o) { return o == outputs[0]; });
    pass &= same;
    detail += c.name + (same ? " identical" : " DIFFERS") + ", ";
  }
  fs::remove_all(dir);
  detail.resize(detail.size() - 2);
  return {pass, detail + " (2 runs each at 1 and 8 threads)"};
}

std::set<int> parse_list(const std::string& text) {
  std::set<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <sketchridge-binary> [--only N,..] [--known-failures N,..]\n";
    return 2;
  }
  const std::string binary = argv[1];
  std::set<int> only, known;
  for (int i = 2; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--only") only = parse_list(argv[i + 1]);
    else if (flag == "--known-failures") known = parse_list(argv[i + 1]);
    else {
      std::cerr << "unknown flag " << flag << "\n";
      return 2;
    }
  }

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"Bayes lambda* in [0.316, 0.320]", bayes_lambda},
      {"identity-sketch equivalence < 1e-10", identity_equivalence},
      {"dense-oracle equivalence < 1e-8", dense_oracle},
      {"sketch moment law within 3 se", moment_law},
      {"Taylor-oracle concordance (n=40, p=3, q in {10, 20})", taylor_concordance},
      {"orthogonal-design MSE (n=400, p=4, q=200)", orthogonal_mse},
      {"desk-scale simulation (n=1000, p=20, 50 reps, q=200)", desk_simulation},
      {"CLI determinism at 1 and 8 threads", [&] { return determinism(binary); }},
  };

  int unexpected = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string tag = v.pass ? "PASS" : "FAIL";
    if (!v.pass && known.count(id)) tag += " (known)";
    std::printf("%s [%d] %s: %s (%.1fs)\n", tag.c_str(), id, criteria[k].first, v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass && !known.count(id)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
