#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sketchridge/estimators.hpp"

namespace sketchridge {

/// tr(X G^{-1} X^T Q^T Q) = sum_j l_j^2 / (l_j^2 + lambda), G = X^T Q^T Q X + lambda I.
double df_fc(const CompressedDesign& cd, double lambda);

/// tr(X G^{-1} X^T) from the precomputed R^T X^T X R and tr(X^T X). Not
/// bounded by p in general.
double df_pc(const CompressedDesign& cd, double lambda);

/// Plug-in df of a combination with weights ordered (FC, PC).
double df_combo(double df_fc_value, double df_pc_value, const Eigen::Vector2d& alpha);

/// rss / (1 - df/n)^2; throws DegenerateGcv when df >= n.
double gcv(double rss, double df, Eigen::Index n);

/// rss - n sigma2 + 2 sigma2 df, with sigma2 supplied by the caller.
double risk_cp(double rss, double df, Eigen::Index n, double sigma2_hat);

struct TuningRecord {
  double lambda = 0.0;
  double rss = 0.0;
  double df = 0.0;
  std::optional<double> gcv;  // empty when the fit is saturated (df >= n)
  std::optional<double> risk_cp;
};

enum class Criterion { Gcv, Cp };

Criterion parse_criterion(const std::string& name);

/// Builds a record, leaving gcv empty for saturated fits and risk_cp empty
/// unless sigma2_hat is given.
TuningRecord make_record(double lambda, double rss, double df, Eigen::Index n, std::optional<double> sigma2_hat = {});

struct Selection {
  std::size_t index = 0;
  TuningRecord record;
};

/// Minimizes the criterion; values within 1e-12 relative of each other are
/// ties and go to the larger lambda. Throws NoValidLambda when no record
/// carries the criterion.
Selection select_lambda(const std::vector<TuningRecord>& records, Criterion criterion);

/// Default grid: `count` log-spaced points over [lo, hi] * (mean singular value)^2.
std::vector<double> default_lambda_grid(const Vector& singvals, std::size_t count = 50, double lo = 1e-4, double hi = 1e4);

std::vector<double> log_grid(double lo, double hi, std::size_t count);

enum class Method { Ols, Ridge, Fc, Pc, LinearCombo, ConvexCombo };

/// Canonical order, also used to break ties between methods.
inline constexpr Method kAllMethods[] = {Method::Ols, Method::Ridge, Method::Fc, Method::Pc, Method::LinearCombo,
                                         Method::ConvexCombo};

const char* method_name(Method m);
Method parse_method(const std::string& name);

/// Per-lambda records for one path-evaluated method (not OLS).
std::vector<TuningRecord> path_records(const PathResult& path, Method method, Eigen::Index n,
                                       std::optional<double> sigma2_hat = {});

const Vector& path_beta(const FitResult& fit, Method method);

}  // namespace sketchridge
