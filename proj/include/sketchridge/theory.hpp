#pragma once

#include <functional>
#include <string>

#include "sketchridge/linalg.hpp"
#include "sketchridge/sketch.hpp"

namespace sketchridge {

/// Inputs for the closed-form bias/variance expansions. Everything about X
/// enters through its thin SVD X = U D V^T; n x n objects such as H, A or
/// e e^T are only ever applied to vectors or thin factors.
struct TheoryInputs {
  ThinSvd x_svd;
  Vector beta_star;
  double sigma2 = 1.0;
  double lambda = 1.0;
  double q = 1.0;  // real-valued so the q -> infinity limit can be probed
  double s = 3.0;

  Eigen::Index n() const { return x_svd.left.rows(); }
  Eigen::Index p() const { return x_svd.right.rows(); }
  void validate() const;
};

TheoryInputs make_theory_inputs(const Matrix& x, Vector beta_star, double sigma2, double lambda, double q, double s);

enum class Estimator { Ridge, Fc, Pc };
const char* estimator_name(Estimator e);
Estimator parse_estimator(const std::string& name);

/// lambda^2 b^T V (D^2 + lambda)^{-2} V^T b, plus |b|^2 outside span(V).
double ridge_bias_sq(const TheoryInputs& ti);
/// sigma^2 sum d_j^2 / (d_j^2 + lambda)^2; at lambda = 0 zero singular
/// values are skipped.
double ridge_var_trace(const TheoryInputs& ti);

/// Additive pieces of a first-order variance trace: the ridge part, the
/// (s-2)_+ / q part and the 1/q part.
struct VarianceTerms {
  double ridge = 0.0;
  double sparsity = 0.0;
  double scale = 0.0;

  double total() const { return ridge + sparsity + scale; }
};

struct Moments {
  Vector mean;
  VarianceTerms var;

  double var_trace() const { return var.total(); }
};

/// Over the sketch only, given (X, Y): mean is the ridge fit and
/// tr V = (s-2)_+/q |M e|^2 + e^T e/q tr(M M^T), e = (I - H) Y.
Moments fc_moments(const TheoryInputs& ti, const Vector& y);
/// Over sketch and noise, given X. Includes the sigma^2 tr((I-H)^2)/q and
/// (s-2)_+ sigma^2 terms that follow from the total-variance argument.
Moments fc_moments(const TheoryInputs& ti);

/// Same with Yhat = H Y in place of the residual.
Moments pc_moments(const TheoryInputs& ti, const Vector& y);
Moments pc_moments(const TheoryInputs& ti);

/// Unconditional squared bias: identical to ridge_bias_sq for every estimator.
double bias_sq(const TheoryInputs& ti, Estimator which);
/// Conditional on a drawn sketch with A = Q^T Q: ridge bias plus the
/// first-order correction 2 b^T (MX - I) M (A - I)(I - H) X b (FC) or
/// 2 b^T (I - MX) M (A - I) H X b (PC).
double bias_sq(const TheoryInputs& ti, Estimator which, const SparseSketch& sketch);

/// Unconditional trace variance (ridge part plus both 1/q corrections).
double var_trace_expansion(const TheoryInputs& ti, Estimator which);
/// Conditional on a sketch: sigma^2 [sum d^2/(d^2+l)^2 + 2 tr(M (A-I)(I-H) M^T)]
/// for FC and sigma^2 [sum d^2/(d^2+l)^2 - 2 tr(M (A-I) H M^T)] for PC.
double var_trace_expansion(const TheoryInputs& ti, Estimator which, const SparseSketch& sketch);

struct MseBreakdown {
  double bias_sq = 0.0;
  double var_trace = 0.0;
  double mse = 0.0;
};

MseBreakdown mse_breakdown(const TheoryInputs& ti, Estimator which);

/// Orthogonal design X^T X = n I_p with b2 = |b|^2 and theta = lambda / n.
struct OrthogonalSetting {
  double b2 = 1.0;
  double sigma2 = 1.0;
  double n = 1.0;
  double p = 1.0;
  double q = 1.0;
  double s = 3.0;
};

/// Displayed: the short closed forms, which keep only the beta-driven
/// compression terms (and carry extra factors of p). Complete: every term of
/// the unconditional variance, including the noise cross terms; agrees with
/// var_trace_expansion on an explicit orthogonal design.
enum class MseForm { Displayed, Complete };

MseBreakdown mse_orthogonal(double theta, const OrthogonalSetting& setting, Estimator which,
                            MseForm form = MseForm::Displayed);

/// Golden-section search for a minimum of f on [lo, hi].
double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double rel_tol = 1e-10);

/// Scans a log grid over [0, theta_max] for a bracket, then refines by
/// golden section.
double minimize_theta(const std::function<double(double)>& f, double theta_max = 1e6);

/// Ridge: sigma^2 p / (n b^2). FC and PC: numeric minimization.
double optimal_theta(Estimator which, const OrthogonalSetting& setting, MseForm form = MseForm::Displayed);

/// sigma^2 / (n tau^2): the Bayes-optimal ridge level on the theta scale for
/// b ~ N(0, tau^2 I).
double bayes_theta(double sigma2, double n, double tau2);

}  // namespace sketchridge
