#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sketchridge/estimators.hpp"
#include "sketchridge/tuning.hpp"

namespace sketchridge {

enum class BetaScenario { Gaussian, AllOnes, Alternating };

const char* scenario_name(BetaScenario s);
BetaScenario parse_scenario(const std::string& name);

inline constexpr double kDefaultTau2 = 1.5707963267948966;  // pi / 2, so E|b_j| = 1

struct SimConfig {
  std::int64_t n = 1000;
  std::int64_t p = 20;
  double rho = 0.2;
  BetaScenario scenario = BetaScenario::Gaussian;
  double tau2 = kDefaultTau2;
  double sigma = 50.0;
  std::vector<std::int64_t> q_list{100, 200, 300};
  double s = 3.0;
  std::vector<double> lambda_grid;  // empty: n * logspace(1e-4, 1e4, 50)
  std::int64_t replications = 50;
  std::uint64_t seed = 20240601;
  std::int64_t test_n = 0;  // > 0 draws an independent test set per replication
  bool redraw_design = true;
  unsigned threads = 1;

  void validate() const;
  /// Grid actually used: lambda_grid, or the default scaled by n.
  std::vector<double> grid() const;

  static SimConfig from_json(const std::string& text);
  std::string to_json() const;
};

/// Rows i.i.d. N(0, (1 - rho) I + rho 1 1^T).
Matrix gen_design(std::int64_t n, std::int64_t p, double rho, std::uint64_t seed);
Vector gen_beta(BetaScenario scenario, std::int64_t p, std::uint64_t seed, double tau2 = kDefaultTau2);
Vector gen_response(const Matrix& x, const Vector& beta_star, double sigma, std::uint64_t seed);

/// Seeds for independent streams of one replication.
enum class Stream : std::uint64_t { Design = 1, Beta = 2, Noise = 3, Sketch = 4, TestDesign = 5, TestNoise = 6 };
std::uint64_t stream_seed(std::uint64_t base, std::int64_t rep, Stream stream, std::uint64_t extra = 0);

/// One estimator arm inside a replication. OLS and the Bayes ridge arm have a
/// single "lambda"; path arms carry one entry per grid point.
struct ArmResult {
  Method method = Method::Ols;
  std::int64_t q = 0;  // 0 for uncompressed arms
  std::vector<double> lambdas;
  std::vector<double> est_error;   // |beta_hat - beta_star|^2 per lambda
  std::vector<double> gcv;         // NaN when saturated
  std::vector<double> test_error;  // mean squared test error per lambda (empty without a test set)
  std::size_t selected = 0;        // GCV choice (0 for single-lambda arms)

  double est_error_selected() const { return est_error[selected]; }
  /// test error at the GCV choice over the smallest test error on the grid (>= 1).
  std::optional<double> gcv_ratio() const;
};

struct ReplicationResult {
  std::int64_t rep = 0;
  std::vector<ArmResult> arms;
};

ReplicationResult run_replication(const SimConfig& cfg, std::int64_t rep);

struct Quartiles {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
};

Quartiles quartiles(std::vector<double> values);

struct ArmSummary {
  Method method = Method::Ols;
  std::int64_t q = 0;
  std::vector<double> lambdas;
  std::vector<Quartiles> log_est_error;  // per lambda
  Quartiles est_error_selected;
  std::optional<Quartiles> gcv_ratio;
};

struct WinTable {
  std::int64_t q = 0;
  std::vector<std::pair<Method, std::int64_t>> counts;  // canonical method order
};

struct SimReport {
  SimConfig config;
  std::int64_t replications = 0;
  std::vector<ArmSummary> arms;
  std::vector<WinTable> wins;
  std::optional<double> runtime_seconds;

  const ArmSummary& arm(Method method, std::int64_t q = 0) const;
  std::int64_t win_count(Method method, std::int64_t q) const;
};

/// Win per replication and per q: the arm with the smallest estimation error
/// at its selected lambda among OLS, ridge and the four compressed arms at
/// that q. Ties go to the earlier method in canonical order.
SimReport aggregate(const SimConfig& cfg, const std::vector<ReplicationResult>& reps);

/// Runs all replications (in parallel when cfg.threads > 1) and aggregates
/// in replication order.
SimReport run_simulation(const SimConfig& cfg, std::vector<ReplicationResult>* reps_out = nullptr);

std::string report_to_json(const SimReport& report);
/// Flat rows: rep,method,q,lambda,metric,value
std::string replications_to_csv(const std::vector<ReplicationResult>& reps);

}  // namespace sketchridge
