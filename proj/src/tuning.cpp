#include "sketchridge/tuning.hpp"

#include <cmath>
#include <limits>

#include "sketchridge/error.hpp"

namespace sketchridge {

double df_fc(const CompressedDesign& cd, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidLambda, "df_fc needs lambda > 0");
  double total = 0.0;
  for (Eigen::Index j = 0; j < cd.qx_svd.singvals.size(); ++j) {
    const double l2 = cd.qx_svd.singvals(j) * cd.qx_svd.singvals(j);
    total += l2 / (l2 + lambda);
  }
  return total;
}

double df_pc(const CompressedDesign& cd, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidLambda, "df_pc needs lambda > 0");
  double in_span = 0.0;
  double captured = 0.0;
  for (Eigen::Index j = 0; j < cd.qx_svd.singvals.size(); ++j) {
    const double l2 = cd.qx_svd.singvals(j) * cd.qx_svd.singvals(j);
    in_span += cd.rtxxr(j, j) / (l2 + lambda);
    captured += cd.rtxxr(j, j);
  }
  // Trace of X^T X outside span(R); exactly zero when R is square orthogonal.
  double remainder = cd.trace_xx - captured;
  if (cd.qx_svd.right.cols() == cd.p()) remainder = 0.0;
  return in_span + std::max(0.0, remainder) / lambda;
}

double df_combo(double df_fc_value, double df_pc_value, const Eigen::Vector2d& alpha) {
  return alpha(0) * df_fc_value + alpha(1) * df_pc_value;
}

double gcv(double rss, double df, Eigen::Index n) {
  const double nn = static_cast<double>(n);
  if (!(df < nn)) throw Error(ErrorKind::DegenerateGcv, "df >= n: saturated fit has no GCV");
  const double shrink = 1.0 - df / nn;
  return rss / (shrink * shrink);
}

double risk_cp(double rss, double df, Eigen::Index n, double sigma2_hat) {
  if (!(sigma2_hat > 0.0)) throw Error(ErrorKind::InvalidInput, "sigma2 estimate must be positive");
  return rss - static_cast<double>(n) * sigma2_hat + 2.0 * sigma2_hat * df;
}

Criterion parse_criterion(const std::string& name) {
  if (name == "gcv") return Criterion::Gcv;
  if (name == "cp") return Criterion::Cp;
  throw Error(ErrorKind::InvalidInput, "unknown criterion '" + name + "' (expected gcv or cp)");
}

TuningRecord make_record(double lambda, double rss, double df, Eigen::Index n, std::optional<double> sigma2_hat) {
  TuningRecord r;
  r.lambda = lambda;
  r.rss = rss;
  r.df = df;
  if (df < static_cast<double>(n)) r.gcv = gcv(rss, df, n);
  if (sigma2_hat) r.risk_cp = risk_cp(rss, df, n, *sigma2_hat);
  return r;
}

Selection select_lambda(const std::vector<TuningRecord>& records, Criterion criterion) {
  if (records.empty()) throw Error(ErrorKind::NoValidLambda, "no tuning records");
  std::optional<Selection> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& value = criterion == Criterion::Gcv ? records[k].gcv : records[k].risk_cp;
    if (!value || !std::isfinite(*value)) continue;
    if (!best) {
      best = Selection{k, records[k]};
      best_value = *value;
      continue;
    }
    const double tol = 1e-12 * std::max(std::abs(*value), std::abs(best_value));
    const bool better = *value < best_value - tol;
    const bool tie = std::abs(*value - best_value) <= tol;
    if (better || (tie && records[k].lambda > best->record.lambda)) {
      best = Selection{k, records[k]};
      best_value = *value;
    }
  }
  if (!best) throw Error(ErrorKind::NoValidLambda, "every record is degenerate for the chosen criterion");
  return *best;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (count == 0) throw Error(ErrorKind::EmptyGrid, "grid needs at least one point");
  if (!(lo > 0.0) || !(hi >= lo)) throw Error(ErrorKind::InvalidLambda, "grid bounds must satisfy 0 < lo <= hi");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
  }
  return out;
}

std::vector<double> default_lambda_grid(const Vector& singvals, std::size_t count, double lo, double hi) {
  double scale = singvals.size() > 0 ? singvals.mean() : 1.0;
  scale *= scale;
  if (!(scale > 0.0)) scale = 1.0;
  return log_grid(lo * scale, hi * scale, count);
}

const char* method_name(Method m) {
  switch (m) {
    case Method::Ols: return "ols";
    case Method::Ridge: return "ridge";
    case Method::Fc: return "fc";
    case Method::Pc: return "pc";
    case Method::LinearCombo: return "linear";
    case Method::ConvexCombo: return "convex";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : kAllMethods) {
    if (name == method_name(m)) return m;
  }
  throw Error(ErrorKind::InvalidInput, "unknown method '" + name + "'");
}

const Vector& path_beta(const FitResult& fit, Method method) {
  switch (method) {
    case Method::Fc: return fit.beta_fc;
    case Method::Pc: return fit.beta_pc;
    case Method::LinearCombo: return fit.beta_combo_linear;
    case Method::ConvexCombo: return fit.beta_combo_convex;
    case Method::Ridge:
      if (fit.beta_ridge) return *fit.beta_ridge;
      break;
    case Method::Ols: break;
  }
  throw Error(ErrorKind::InvalidInput, std::string("path does not carry method ") + method_name(method));
}

std::vector<TuningRecord> path_records(const PathResult& path, Method method, Eigen::Index n,
                                       std::optional<double> sigma2_hat) {
  std::vector<TuningRecord> out;
  out.reserve(path.fits.size());
  for (const auto& f : path.fits) {
    double rss = 0.0;
    double df = 0.0;
    switch (method) {
      case Method::Fc: rss = f.rss_fc; df = f.df_fc; break;
      case Method::Pc: rss = f.rss_pc; df = f.df_pc; break;
      case Method::LinearCombo: rss = f.rss_combo_linear; df = f.df_combo_linear; break;
      case Method::ConvexCombo: rss = f.rss_combo_convex; df = f.df_combo_convex; break;
      case Method::Ridge:
        if (!f.rss_ridge) throw Error(ErrorKind::InvalidInput, "path was computed without ridge");
        rss = *f.rss_ridge;
        df = *f.df_ridge;
        break;
      case Method::Ols: throw Error(ErrorKind::InvalidInput, "OLS has no lambda path");
    }
    out.push_back(make_record(f.lambda, rss, df, n, sigma2_hat));
  }
  return out;
}

}  // namespace sketchridge
