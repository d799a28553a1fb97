#pragma once

#include <Eigen/Dense>

namespace sketchridge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Singular values below this fraction of the largest one count as zero.
inline constexpr double kRankTolerance = 1e-10;

/// Thin SVD M = left * diag(singvals) * right^T with r = min(rows, cols).
/// Trailing zero singular values are kept so r depends only on the shape.
struct ThinSvd {
  Matrix left;      // rows x r
  Vector singvals;  // r, nonincreasing
  Matrix right;     // cols x r

  Eigen::Index rank_bound() const { return singvals.size(); }
  Eigen::Index cols() const { return right.rows(); }

  /// Count of singular values above kRankTolerance * max.
  Eigen::Index numerical_rank() const;
  double rank_threshold() const;
};

/// Throws InvalidInput on empty or non-finite input. Each right singular
/// vector is sign-flipped so its largest-magnitude entry is positive.
ThinSvd thin_svd(const Matrix& m);

/// Per-direction ridge shrinkage l / (l^2 + lambda).
struct SpectralShrinker {
  Vector singvals;
  double lambda = 0.0;

  /// At lambda = 0 a zero singular value maps to 0 (pseudoinverse convention).
  double factor(Eigen::Index j) const;
  /// 1 / (l^2 + lambda), the diagonal of (L^2 + lambda I)^{-1}.
  double inverse_gram(Eigen::Index j) const;
  Vector factors() const;
};

/// (M^T M + lambda I)^{-1} v where svd = thin_svd(M), evaluated as
/// R (L^2 + lambda I)^{-1} R^T v + (v - R R^T v) / lambda. The second term
/// covers the orthogonal complement of span(R) and is always included.
/// lambda = 0 requires numerical rank p, otherwise SingularSystem.
Vector regularized_inverse_apply(const ThinSvd& svd, double lambda, const Vector& v);

/// Throws InvalidInput if any entry is non-finite.
void require_finite(const Matrix& m, const char* what);
void require_finite(const Vector& v, const char* what);

}  // namespace sketchridge
