#include "sketchridge/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sketchridge/error.hpp"

namespace sketchridge {
namespace {

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

// Spectral view of (X, b, lambda) shared by every formula below.
struct Spectral {
  Vector d;   // singular values of X
  Vector vb;  // V^T b
  double outside_sq = 0.0;  // |b - V V^T b|^2
  double lambda = 0.0;

  explicit Spectral(const TheoryInputs& ti)
      : d(ti.x_svd.singvals), vb(ti.x_svd.right.transpose() * ti.beta_star), lambda(ti.lambda) {
    outside_sq = (ti.beta_star - ti.x_svd.right * vb).squaredNorm();
  }

  // sum over j of g(d_j^2) * weight_j
  template <typename F>
  double sum(F&& g) const {
    double total = 0.0;
    for (Eigen::Index j = 0; j < d.size(); ++j) total += g(d(j) * d(j), j);
    return total;
  }

  // tr(M M^T) = sum d^2 / (d^2 + lambda)^2
  double trace_mmt() const {
    return sum([&](double d2, Eigen::Index) { return d2 > 0.0 ? d2 / ((d2 + lambda) * (d2 + lambda)) : 0.0; });
  }
};

// Applies M = V diag(d / (d^2 + lambda)) U^T to an n-vector.
Vector apply_m(const TheoryInputs& ti, const Vector& v) {
  const Vector coords = ti.x_svd.left.transpose() * v;
  Vector scaled(coords.size());
  for (Eigen::Index j = 0; j < coords.size(); ++j) {
    const double dj = ti.x_svd.singvals(j);
    scaled(j) = dj * coords(j) / (dj * dj + ti.lambda);
  }
  return ti.x_svd.right * scaled;
}

// H y = U diag(d^2 / (d^2 + lambda)) U^T y
Vector apply_h(const TheoryInputs& ti, const Vector& y) {
  Vector coords = ti.x_svd.left.transpose() * y;
  for (Eigen::Index j = 0; j < coords.size(); ++j) {
    const double d2 = ti.x_svd.singvals(j) * ti.x_svd.singvals(j);
    coords(j) *= d2 / (d2 + ti.lambda);
  }
  return ti.x_svd.left * coords;
}

// (A - I) w with A = Q^T Q, never forming A.
Matrix apply_a_minus_i(const SparseSketch& sketch, const Matrix& w) {
  return apply_sketch_transpose(sketch, apply_sketch(sketch, w)) - w;
}

Vector unconditional_mean(const TheoryInputs& ti) {
  const Spectral sp(ti);
  Vector coords(sp.vb.size());
  for (Eigen::Index j = 0; j < coords.size(); ++j) {
    const double d2 = sp.d(j) * sp.d(j);
    coords(j) = sp.vb(j) * d2 / (d2 + ti.lambda);
  }
  return ti.x_svd.right * coords;
}

Moments conditional_moments(const TheoryInputs& ti, const Vector& v, const Vector& y) {
  if (y.size() != ti.n()) throw Error(ErrorKind::DimensionMismatch, "response length does not match design rows");
  const Spectral sp(ti);
  Moments out;
  out.mean = apply_m(ti, y);
  const double s2 = positive_part(ti.s - 2.0);
  out.var.sparsity = s2 / ti.q * apply_m(ti, v).squaredNorm();
  out.var.scale = v.squaredNorm() / ti.q * sp.trace_mmt();
  return out;
}

}  // namespace

void TheoryInputs::validate() const {
  if (beta_star.size() != p()) throw Error(ErrorKind::DimensionMismatch, "beta_star length does not match design columns");
  if (!(sigma2 >= 0.0)) throw Error(ErrorKind::InvalidInput, "sigma2 must be >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidLambda, "lambda must be finite and >= 0");
  if (!(q > 0.0)) throw Error(ErrorKind::InvalidInput, "q must be positive");
  if (!(s >= 1.0)) throw Error(ErrorKind::InvalidSparsity, "s must be >= 1");
}

TheoryInputs make_theory_inputs(const Matrix& x, Vector beta_star, double sigma2, double lambda, double q, double s) {
  TheoryInputs ti{thin_svd(x), std::move(beta_star), sigma2, lambda, q, s};
  ti.validate();
  return ti;
}

const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::Ridge: return "ridge";
    case Estimator::Fc: return "fc";
    case Estimator::Pc: return "pc";
  }
  return "unknown";
}

Estimator parse_estimator(const std::string& name) {
  if (name == "ridge") return Estimator::Ridge;
  if (name == "fc") return Estimator::Fc;
  if (name == "pc") return Estimator::Pc;
  throw Error(ErrorKind::InvalidInput, "unknown estimator '" + name + "'");
}

double ridge_bias_sq(const TheoryInputs& ti) {
  ti.validate();
  const Spectral sp(ti);
  const double lam = ti.lambda;
  double in_span = sp.sum([&](double d2, Eigen::Index j) {
    const double denom = d2 + lam;
    return denom > 0.0 ? lam * lam * sp.vb(j) * sp.vb(j) / (denom * denom) : sp.vb(j) * sp.vb(j);
  });
  // Directions outside span(V) are not identified and shrink entirely to zero.
  return in_span + sp.outside_sq;
}

double ridge_var_trace(const TheoryInputs& ti) {
  ti.validate();
  const Spectral sp(ti);
  return ti.sigma2 * sp.trace_mmt();
}

Moments fc_moments(const TheoryInputs& ti, const Vector& y) {
  ti.validate();
  const Vector residual = y - apply_h(ti, y);
  return conditional_moments(ti, residual, y);
}

Moments pc_moments(const TheoryInputs& ti, const Vector& y) {
  ti.validate();
  const Vector fitted = apply_h(ti, y);
  return conditional_moments(ti, fitted, y);
}

Moments fc_moments(const TheoryInputs& ti) {
  ti.validate();
  const Spectral sp(ti);
  const double lam = ti.lambda;
  const double sig2 = ti.sigma2;
  const double s2 = positive_part(ti.s - 2.0);
  Moments out;
  out.mean = unconditional_mean(ti);
  out.var.ridge = sig2 * sp.trace_mmt();

  // M (I-H) = V diag(lambda d / (d^2+lambda)^2) U^T
  const double mih_beta = sp.sum([&](double d2, Eigen::Index j) {
    const double denom = d2 + lam;
    return lam * lam * d2 * d2 * sp.vb(j) * sp.vb(j) / std::pow(denom, 4);
  });
  const double mih_noise = sp.sum([&](double d2, Eigen::Index) {
    const double denom = d2 + lam;
    return d2 > 0.0 ? lam * lam * d2 / std::pow(denom, 4) : 0.0;
  });
  out.var.sparsity = s2 / ti.q * (mih_beta + sig2 * mih_noise);

  // E[e^T e] = sigma^2 tr((I-H)^2) + b^T X^T (I-H)^2 X b
  const double rank = static_cast<double>(sp.d.size());
  const double trace_resid = static_cast<double>(ti.n()) - rank + sp.sum([&](double d2, Eigen::Index) {
                               const double r = lam / (d2 + lam);
                               return d2 + lam > 0.0 ? r * r : 1.0;
                             });
  const double resid_beta = sp.sum([&](double d2, Eigen::Index j) {
    const double denom = d2 + lam;
    return d2 > 0.0 ? lam * lam * d2 * sp.vb(j) * sp.vb(j) / (denom * denom) : 0.0;
  });
  out.var.scale = (sig2 * trace_resid + resid_beta) / ti.q * sp.trace_mmt();
  return out;
}

Moments pc_moments(const TheoryInputs& ti) {
  ti.validate();
  const Spectral sp(ti);
  const double lam = ti.lambda;
  const double sig2 = ti.sigma2;
  const double s2 = positive_part(ti.s - 2.0);
  Moments out;
  out.mean = unconditional_mean(ti);
  out.var.ridge = sig2 * sp.trace_mmt();

  // M H = V diag(d^3 / (d^2+lambda)^2) U^T
  const double mh_beta = sp.sum([&](double d2, Eigen::Index j) {
    const double denom = d2 + lam;
    return d2 > 0.0 ? d2 * d2 * d2 * d2 * sp.vb(j) * sp.vb(j) / std::pow(denom, 4) : 0.0;
  });
  const double mh_noise = sp.sum([&](double d2, Eigen::Index) {
    const double denom = d2 + lam;
    return d2 > 0.0 ? d2 * d2 * d2 / std::pow(denom, 4) : 0.0;
  });
  out.var.sparsity = s2 / ti.q * (mh_beta + sig2 * mh_noise);

  // E[Yhat^T Yhat] = sigma^2 tr(H^2) + b^T X^T H^2 X b
  const double trace_hat = sp.sum([&](double d2, Eigen::Index) {
    return d2 > 0.0 ? d2 * d2 / ((d2 + lam) * (d2 + lam)) : 0.0;
  });
  const double hat_beta = sp.sum([&](double d2, Eigen::Index j) {
    return d2 > 0.0 ? d2 * d2 * d2 * sp.vb(j) * sp.vb(j) / ((d2 + lam) * (d2 + lam)) : 0.0;
  });
  out.var.scale = (sig2 * trace_hat + hat_beta) / ti.q * sp.trace_mmt();
  return out;
}

double bias_sq(const TheoryInputs& ti, Estimator) { return ridge_bias_sq(ti); }

double bias_sq(const TheoryInputs& ti, Estimator which, const SparseSketch& sketch) {
  const double base = ridge_bias_sq(ti);
  if (which == Estimator::Ridge) return base;
  if (sketch.cols() != ti.n()) throw Error(ErrorKind::DimensionMismatch, "sketch columns must equal design rows");
  const Spectral sp(ti);
  const double lam = ti.lambda;

  // (MX - I) b = -V diag(lambda / (d^2+lambda)) V^T b - (I - V V^T) b
  Vector coords(sp.vb.size());
  for (Eigen::Index j = 0; j < coords.size(); ++j) coords(j) = -lam * sp.vb(j) / (sp.d(j) * sp.d(j) + lam);
  const Vector outside = ti.beta_star - ti.x_svd.right * sp.vb;
  const Vector mx_minus_i_b = ti.x_svd.right * coords - outside;

  // (I - H) X b or H X b as an n-vector.
  Vector w_coords(sp.vb.size());
  for (Eigen::Index j = 0; j < w_coords.size(); ++j) {
    const double d2 = sp.d(j) * sp.d(j);
    const double keep = which == Estimator::Fc ? lam / (d2 + lam) : d2 / (d2 + lam);
    w_coords(j) = keep * sp.d(j) * sp.vb(j);
  }
  const Vector w = ti.x_svd.left * w_coords;
  const Vector mz = apply_m(ti, apply_a_minus_i(sketch, w));
  const double inner = mx_minus_i_b.dot(mz);
  return which == Estimator::Fc ? base + 2.0 * inner : base - 2.0 * inner;
}

double var_trace_expansion(const TheoryInputs& ti, Estimator which) {
  switch (which) {
    case Estimator::Ridge: return ridge_var_trace(ti);
    case Estimator::Fc: return fc_moments(ti).var_trace();
    case Estimator::Pc: return pc_moments(ti).var_trace();
  }
  return 0.0;
}

double var_trace_expansion(const TheoryInputs& ti, Estimator which, const SparseSketch& sketch) {
  const double base = ridge_var_trace(ti);
  if (which == Estimator::Ridge) return base;
  if (sketch.cols() != ti.n()) throw Error(ErrorKind::DimensionMismatch, "sketch columns must equal design rows");
  const double lam = ti.lambda;
  // T = U^T (A - I) U, r x r
  const Matrix& u = ti.x_svd.left;
  const Matrix t = u.transpose() * apply_a_minus_i(sketch, u);
  double correction = 0.0;
  for (Eigen::Index j = 0; j < t.rows(); ++j) {
    const double d2 = ti.x_svd.singvals(j) * ti.x_svd.singvals(j);
    const double denom3 = std::pow(d2 + lam, 3);
    correction += which == Estimator::Fc ? lam * d2 * t(j, j) / denom3 : -d2 * d2 * t(j, j) / denom3;
  }
  return base + 2.0 * ti.sigma2 * correction;
}

MseBreakdown mse_breakdown(const TheoryInputs& ti, Estimator which) {
  MseBreakdown out;
  out.bias_sq = bias_sq(ti, which);
  out.var_trace = var_trace_expansion(ti, which);
  out.mse = out.bias_sq + out.var_trace;
  return out;
}

MseBreakdown mse_orthogonal(double theta, const OrthogonalSetting& st, Estimator which, MseForm form) {
  if (!(theta >= 0.0)) throw Error(ErrorKind::InvalidInput, "theta must be >= 0");
  if (!(st.n > 0.0 && st.p > 0.0 && st.q > 0.0 && st.b2 >= 0.0 && st.sigma2 >= 0.0)) {
    throw Error(ErrorKind::InvalidInput, "orthogonal setting needs positive n, p, q and nonnegative b2, sigma2");
  }
  if (!(st.s >= 1.0)) throw Error(ErrorKind::InvalidSparsity, "s must be >= 1");
  const double t = theta;
  const double a = 1.0 + t;
  const double a2 = a * a;
  const double a4 = a2 * a2;
  const double s2 = positive_part(st.s - 2.0);
  const double b2 = st.b2, sig2 = st.sigma2, n = st.n, p = st.p, q = st.q;

  MseBreakdown out;
  out.bias_sq = b2 * (t / a) * (t / a);
  out.var_trace = p * sig2 / (n * a2);
  if (which == Estimator::Fc) {
    if (form == MseForm::Displayed) {
      out.var_trace += b2 * p * t * t * s2 / (q * a4) + p * p * t * t * b2 / (q * a4);
    } else {
      out.var_trace += s2 / q * (b2 * t * t / a4 + sig2 * p * t * t / (n * a4));
      out.var_trace += (b2 * p * t * t / a4 + sig2 * p * ((n - p) + p * t * t / a2) / (n * a2)) / q;
    }
  } else if (which == Estimator::Pc) {
    if (form == MseForm::Displayed) {
      out.var_trace += p * s2 * b2 / (q * a2) + p * b2 / (q * a4);
    } else {
      out.var_trace += s2 / q * (b2 / a4 + sig2 * p / (n * a4));
      out.var_trace += (p * b2 / a4 + sig2 * p * p / (n * a4)) / q;
    }
  }
  out.mse = out.bias_sq + out.var_trace;
  return out;
}

double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double rel_tol) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = f(c), fd = f(d);
  for (int iter = 0; iter < 500; ++iter) {
    if (b - a <= rel_tol * std::max(std::abs(a) + std::abs(b), 1e-300)) break;
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double minimize_theta(const std::function<double(double)>& f, double theta_max) {
  // Grid: 0 followed by log-spaced points up to theta_max.
  constexpr int kPoints = 400;
  std::vector<double> grid{0.0};
  const double lo = theta_max * 1e-16;
  for (int k = 0; k < kPoints; ++k) {
    grid.push_back(lo * std::pow(theta_max / lo, static_cast<double>(k) / (kPoints - 1)));
  }
  std::size_t best = 0;
  double best_val = f(grid[0]);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double v = f(grid[k]);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  if (best == 0) return 0.0;
  const double a = grid[best - 1];
  const double b = best + 1 < grid.size() ? grid[best + 1] : grid[best];
  return golden_section_minimize(f, a, b);
}

double optimal_theta(Estimator which, const OrthogonalSetting& st, MseForm form) {
  if (which == Estimator::Ridge) {
    if (!(st.b2 > 0.0)) throw Error(ErrorKind::InvalidInput, "optimal ridge theta needs b2 > 0");
    return st.sigma2 * st.p / (st.n * st.b2);
  }
  return minimize_theta([&](double t) { return mse_orthogonal(t, st, which, form).mse; });
}

double bayes_theta(double sigma2, double n, double tau2) {
  if (!(sigma2 >= 0.0 && n > 0.0 && tau2 > 0.0)) throw Error(ErrorKind::InvalidInput, "bayes theta needs n, tau2 > 0");
  return sigma2 / (n * tau2);
}

}  // namespace sketchridge
