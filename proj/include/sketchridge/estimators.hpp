#pragma once

#include <optional>
#include <vector>

#include "sketchridge/linalg.hpp"
#include "sketchridge/sketch.hpp"

namespace sketchridge {

/// Fixed design X (n x p) and response Y (n) of the linear model Y = X b + noise.
struct Dataset {
  Matrix x;
  Vector y;

  Dataset() = default;
  Dataset(Matrix x_, Vector y_);

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
  void validate() const;
};

/// Minimum-norm least squares via the pseudoinverse on the numerical rank.
Vector fit_ols(const Dataset& data);

/// Ridge fits along a lambda path from one SVD of X.
class RidgePath {
 public:
  explicit RidgePath(const Dataset& data);

  /// V (D^2 + lambda)^{-1} D U^T Y. lambda = 0 with rank-deficient X throws
  /// SingularSystem; use fit_ols there.
  Vector fit(double lambda) const;
  /// sum d_j^2 / (d_j^2 + lambda)
  double df(double lambda) const;
  const ThinSvd& svd() const { return svd_; }

 private:
  ThinSvd svd_;
  Vector uty_;
};

Vector fit_ridge(const Dataset& data, double lambda);

/// Everything needed to sweep lambda for the compressed estimators after a
/// single pass over the data: the thin SVD S L R^T of QX and the
/// cross-products X^T Y, (QX)^T (QY), R^T (X^T X) R and tr(X^T X).
struct CompressedDesign {
  ThinSvd qx_svd;
  Vector xty;
  Vector qxt_qy;
  Matrix rtxxr;
  double trace_xx = 0.0;
  SketchSpec spec;

  // Spectral coordinates used on every lambda.
  Vector sqy;  // S^T (QY)
  Vector rtxty;  // R^T X^T Y
  Vector xty_complement;  // X^T Y - R R^T X^T Y

  Eigen::Index p() const { return qx_svd.cols(); }
};

/// X^T X and X^T Y accumulated over fixed row blocks in order.
void cross_products(const Dataset& data, Matrix& xtx, Vector& xty);

CompressedDesign build_compressed(const Dataset& data, const SparseSketch& sketch, unsigned threads = 1);

/// (X^T Q^T Q X + lambda I)^{-1} X^T Q^T Q Y. lambda = 0 is allowed when QX
/// has numerical rank p.
Vector fit_fc(const CompressedDesign& cd, double lambda);

/// (X^T Q^T Q X + lambda I)^{-1} X^T Y, lambda > 0 strictly.
Vector fit_pc(const CompressedDesign& cd, double lambda);

/// Weights are always ordered (FC, PC), matching B = [beta_fc, beta_pc].
struct ComboFit {
  Eigen::Vector2d alpha;
  Vector beta;
};

/// Combination given the two fits. Unconstrained: minimum-norm solution of
/// the 2x2 normal equations. Constrained: alpha* in [0, 1] with weights
/// (alpha*, 1 - alpha*); alpha* = 1/2 when the two fitted vectors coincide.
ComboFit combine_fits(const Matrix& x, const Vector& y, const Vector& beta_fc, const Vector& beta_pc, bool constrained);

ComboFit fit_combo(const CompressedDesign& cd, const Dataset& data, double lambda, bool constrained);

struct FitResult {
  double lambda = 0.0;
  Vector beta_fc;
  Vector beta_pc;
  std::optional<Vector> beta_ridge;
  Vector beta_combo_linear;
  Vector beta_combo_convex;
  Eigen::Vector2d alpha_linear = Eigen::Vector2d::Zero();
  double alpha_convex = 0.0;
  double df_fc = 0.0;
  double df_pc = 0.0;
  double df_combo_linear = 0.0;
  double df_combo_convex = 0.0;
  std::optional<double> df_ridge;
  double rss_fc = 0.0;
  double rss_pc = 0.0;
  double rss_combo_linear = 0.0;
  double rss_combo_convex = 0.0;
  std::optional<double> rss_ridge;
};

struct PathOptions {
  bool include_ridge = false;
  unsigned threads = 1;
};

struct PathResult {
  std::vector<FitResult> fits;
};

/// Evaluates every estimator on a strictly positive, increasing lambda grid.
/// Grid points are independent and may run on several threads; results are
/// stored by grid index.
PathResult fit_path(const CompressedDesign& cd, const Dataset& data, const std::vector<double>& lambdas,
                    const PathOptions& options = {});

Vector predict(const Vector& beta, const Matrix& x_new);

double residual_sum_squares(const Matrix& x, const Vector& y, const Vector& beta);

}  // namespace sketchridge
