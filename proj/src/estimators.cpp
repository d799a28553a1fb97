#include "sketchridge/estimators.hpp"

#include <cassert>
#include <cmath>

#include "sketchridge/error.hpp"
#include "sketchridge/parallel.hpp"
#include "sketchridge/tuning.hpp"

namespace sketchridge {

Dataset::Dataset(Matrix x_, Vector y_) : x(std::move(x_)), y(std::move(y_)) { validate(); }

void Dataset::validate() const {
  if (x.rows() < 1 || x.cols() < 1) throw Error(ErrorKind::InvalidInput, "design must have n >= 1 and p >= 1");
  if (y.size() != x.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                "design has " + std::to_string(x.rows()) + " rows but response has " + std::to_string(y.size()));
  }
  require_finite(x, "design");
  require_finite(y, "response");
}

Vector fit_ols(const Dataset& data) {
  data.validate();
  const ThinSvd svd = thin_svd(data.x);
  const Vector uty = svd.left.transpose() * data.y;
  const double thresh = svd.rank_threshold();
  Vector coords = Vector::Zero(uty.size());
  for (Eigen::Index j = 0; j < uty.size(); ++j) {
    if (svd.singvals(j) > thresh) coords(j) = uty(j) / svd.singvals(j);
  }
  return svd.right * coords;
}

RidgePath::RidgePath(const Dataset& data) : svd_(thin_svd(data.x)), uty_(svd_.left.transpose() * data.y) {
  data.validate();
}

Vector RidgePath::fit(double lambda) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidLambda, "ridge lambda must be finite and >= 0");
  if (lambda == 0.0 && svd_.numerical_rank() < svd_.cols()) {
    throw Error(ErrorKind::SingularSystem, "ridge with lambda = 0 needs full column rank; use fit_ols");
  }
  const SpectralShrinker shrink{svd_.singvals, lambda};
  return svd_.right * shrink.factors().cwiseProduct(uty_);
}

double RidgePath::df(double lambda) const {
  double total = 0.0;
  for (Eigen::Index j = 0; j < svd_.singvals.size(); ++j) {
    const double d2 = svd_.singvals(j) * svd_.singvals(j);
    if (d2 > 0.0) total += d2 / (d2 + lambda);
  }
  return total;
}

Vector fit_ridge(const Dataset& data, double lambda) { return RidgePath(data).fit(lambda); }

void cross_products(const Dataset& data, Matrix& xtx, Vector& xty) {
  constexpr Eigen::Index kBlock = 512;
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  xtx = Matrix::Zero(p, p);
  xty = Vector::Zero(p);
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, n - start);
    const auto xb = data.x.middleRows(start, rows);
    xtx.selfadjointView<Eigen::Lower>().rankUpdate(xb.transpose());
    xty.noalias() += xb.transpose() * data.y.segment(start, rows);
  }
  xtx = xtx.selfadjointView<Eigen::Lower>();
}

CompressedDesign build_compressed(const Dataset& data, const SparseSketch& sketch, unsigned threads) {
  data.validate();
  if (sketch.cols() != data.n()) {
    throw Error(ErrorKind::DimensionMismatch, "sketch expects " + std::to_string(sketch.cols()) + " rows, data has " +
                                                  std::to_string(data.n()));
  }
  const Eigen::Index p = data.p();
  Matrix xy(data.n(), p + 1);
  xy.leftCols(p) = data.x;
  xy.col(p) = data.y;
  const Matrix qxy = apply_sketch(sketch, xy, threads);
  const Matrix qx = qxy.leftCols(p);
  const Vector qy = qxy.col(p);

  CompressedDesign cd;
  cd.spec = sketch.spec;
  cd.qx_svd = thin_svd(qx);
  Matrix xtx;
  cross_products(data, xtx, cd.xty);
  cd.qxt_qy = qx.transpose() * qy;
  const Matrix& r = cd.qx_svd.right;
  cd.rtxxr = r.transpose() * xtx * r;
  cd.trace_xx = xtx.trace();
  cd.sqy = cd.qx_svd.left.transpose() * qy;
  cd.rtxty = r.transpose() * cd.xty;
  cd.xty_complement = cd.xty - r * cd.rtxty;
  assert((cd.qxt_qy - r * (r.transpose() * cd.qxt_qy)).norm() <= 1e-8 * (1.0 + cd.qxt_qy.norm()));
  return cd;
}

Vector fit_fc(const CompressedDesign& cd, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidLambda, "FC lambda must be finite and >= 0");
  const ThinSvd& svd = cd.qx_svd;
  if (lambda == 0.0 && svd.numerical_rank() < svd.cols()) {
    throw Error(ErrorKind::SingularSystem, "FC with lambda = 0 needs QX of full column rank");
  }
  // (QX)^T QY = R L S^T QY lies in span(R), so no complement term is needed.
  const double thresh = svd.rank_threshold();
  Vector coords(svd.singvals.size());
  for (Eigen::Index j = 0; j < coords.size(); ++j) {
    const double l = svd.singvals(j);
    coords(j) = (lambda == 0.0 && l <= thresh) ? 0.0 : l * cd.sqy(j) / (l * l + lambda);
  }
  return svd.right * coords;
}

Vector fit_pc(const CompressedDesign& cd, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidLambda, "PC needs a finite lambda > 0");
  const ThinSvd& svd = cd.qx_svd;
  Vector coords(svd.singvals.size());
  for (Eigen::Index j = 0; j < coords.size(); ++j) {
    const double l = svd.singvals(j);
    coords(j) = cd.rtxty(j) / (l * l + lambda);
  }
  return svd.right * coords + cd.xty_complement / lambda;
}

ComboFit combine_fits(const Matrix& x, const Vector& y, const Vector& beta_fc, const Vector& beta_pc, bool constrained) {
  const Vector v_fc = x * beta_fc;
  const Vector v_pc = x * beta_pc;
  ComboFit out;
  if (constrained) {
    const Vector diff = v_fc - v_pc;
    const double diff2 = diff.squaredNorm();
    const double scale2 = v_fc.squaredNorm() + v_pc.squaredNorm();
    double a = 0.5;
    if (diff2 > 1e-24 * scale2 && diff2 > 0.0) {
      a = std::clamp((y - v_pc).dot(diff) / diff2, 0.0, 1.0);
    }
    out.alpha = Eigen::Vector2d(a, 1.0 - a);
  } else {
    Eigen::Matrix2d g;
    g << v_fc.squaredNorm(), v_fc.dot(v_pc), v_fc.dot(v_pc), v_pc.squaredNorm();
    const Eigen::Vector2d c(v_fc.dot(y), v_pc.dot(y));
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(g);
    const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
    out.alpha.setZero();
    for (int k = 0; k < 2; ++k) {
      const double ev = eig.eigenvalues()(k);
      if (top > 0.0 && ev > 1e-12 * top) {
        const Eigen::Vector2d u = eig.eigenvectors().col(k);
        out.alpha += u * (u.dot(c) / ev);
      }
    }
  }
  out.beta = out.alpha(0) * beta_fc + out.alpha(1) * beta_pc;
  return out;
}

ComboFit fit_combo(const CompressedDesign& cd, const Dataset& data, double lambda, bool constrained) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidLambda, "combination needs lambda > 0");
  return combine_fits(data.x, data.y, fit_fc(cd, lambda), fit_pc(cd, lambda), constrained);
}

double residual_sum_squares(const Matrix& x, const Vector& y, const Vector& beta) {
  return (y - x * beta).squaredNorm();
}

PathResult fit_path(const CompressedDesign& cd, const Dataset& data, const std::vector<double>& lambdas,
                    const PathOptions& options) {
  if (lambdas.empty()) throw Error(ErrorKind::EmptyGrid, "lambda grid is empty");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] > 0.0) || !std::isfinite(lambdas[k])) {
      throw Error(ErrorKind::InvalidLambda, "lambda grid must be finite and strictly positive");
    }
    if (k > 0 && !(lambdas[k] > lambdas[k - 1])) throw Error(ErrorKind::InvalidInput, "lambda grid must be strictly increasing");
  }
  std::optional<RidgePath> ridge;
  if (options.include_ridge) ridge.emplace(data);

  PathResult out;
  out.fits.resize(lambdas.size());
  parallel_for(lambdas.size(), options.threads, [&](std::size_t k) {
    const double lambda = lambdas[k];
    FitResult& f = out.fits[k];
    f.lambda = lambda;
    f.beta_fc = fit_fc(cd, lambda);
    f.beta_pc = fit_pc(cd, lambda);
    const ComboFit lin = combine_fits(data.x, data.y, f.beta_fc, f.beta_pc, false);
    const ComboFit cvx = combine_fits(data.x, data.y, f.beta_fc, f.beta_pc, true);
    f.beta_combo_linear = lin.beta;
    f.beta_combo_convex = cvx.beta;
    f.alpha_linear = lin.alpha;
    f.alpha_convex = cvx.alpha(0);
    f.df_fc = df_fc(cd, lambda);
    f.df_pc = df_pc(cd, lambda);
    f.df_combo_linear = df_combo(f.df_fc, f.df_pc, lin.alpha);
    f.df_combo_convex = df_combo(f.df_fc, f.df_pc, cvx.alpha);
    f.rss_fc = residual_sum_squares(data.x, data.y, f.beta_fc);
    f.rss_pc = residual_sum_squares(data.x, data.y, f.beta_pc);
    f.rss_combo_linear = residual_sum_squares(data.x, data.y, f.beta_combo_linear);
    f.rss_combo_convex = residual_sum_squares(data.x, data.y, f.beta_combo_convex);
    if (ridge) {
      f.beta_ridge = ridge->fit(lambda);
      f.df_ridge = ridge->df(lambda);
      f.rss_ridge = residual_sum_squares(data.x, data.y, *f.beta_ridge);
    }
  });
  return out;
}

Vector predict(const Vector& beta, const Matrix& x_new) {
  if (x_new.cols() != beta.size()) {
    throw Error(ErrorKind::DimensionMismatch, "prediction design has " + std::to_string(x_new.cols()) +
                                                  " columns, coefficients have " + std::to_string(beta.size()));
  }
  return x_new * beta;
}

}  // namespace sketchridge
