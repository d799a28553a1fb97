#include "sketchridge/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "sketchridge/error.hpp"

namespace sketchridge {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorKind::InvalidInput, std::string(what) + " has non-finite entries");
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorKind::InvalidInput, std::string(what) + " has non-finite entries");
}

double ThinSvd::rank_threshold() const {
  if (singvals.size() == 0) return 0.0;
  return kRankTolerance * singvals(0);
}

Eigen::Index ThinSvd::numerical_rank() const {
  const double thresh = rank_threshold();
  Eigen::Index rank = 0;
  for (Eigen::Index j = 0; j < singvals.size(); ++j) {
    if (singvals(j) > thresh) ++rank;
  }
  return rank;
}

ThinSvd thin_svd(const Matrix& m) {
  if (m.rows() < 1 || m.cols() < 1) throw Error(ErrorKind::InvalidInput, "thin_svd needs a non-empty matrix");
  require_finite(m, "thin_svd input");

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};

  for (Eigen::Index j = 0; j < out.right.cols(); ++j) {
    Eigen::Index arg = 0;
    out.right.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.right(arg, j) < 0.0) {
      out.right.col(j) *= -1.0;
      out.left.col(j) *= -1.0;
    }
  }
  return out;
}

double SpectralShrinker::factor(Eigen::Index j) const {
  const double l = singvals(j);
  const double denom = l * l + lambda;
  if (denom == 0.0) return 0.0;
  return l / denom;
}

double SpectralShrinker::inverse_gram(Eigen::Index j) const {
  const double l = singvals(j);
  return 1.0 / (l * l + lambda);
}

Vector SpectralShrinker::factors() const {
  Vector out(singvals.size());
  for (Eigen::Index j = 0; j < singvals.size(); ++j) out(j) = factor(j);
  return out;
}

Vector regularized_inverse_apply(const ThinSvd& svd, double lambda, const Vector& v) {
  const Eigen::Index p = svd.cols();
  if (v.size() != p) throw Error(ErrorKind::DimensionMismatch, "vector length does not match column count");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidLambda, "lambda must be finite and >= 0");
  if (lambda == 0.0 && svd.numerical_rank() < p) {
    throw Error(ErrorKind::SingularSystem, "lambda = 0 with rank-deficient Gram matrix");
  }

  const Vector coords = svd.right.transpose() * v;
  Vector scaled(coords.size());
  for (Eigen::Index j = 0; j < coords.size(); ++j) {
    const double l = svd.singvals(j);
    scaled(j) = coords(j) / (l * l + lambda);
  }
  Vector out = svd.right * scaled;
  if (lambda > 0.0) {
    out += (v - svd.right * coords) / lambda;
  }
  return out;
}

}  // namespace sketchridge
