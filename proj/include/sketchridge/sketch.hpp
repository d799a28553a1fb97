#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sketchridge/linalg.hpp"

namespace sketchridge {

/// Shape and law of a sparse-Bernoulli compression matrix Q (q x n).
struct SketchSpec {
  std::int64_t n = 0;
  std::int64_t q = 0;
  double s = 3.0;
  std::uint64_t seed = 0;

  /// Throws InvalidSparsity for s < 1 and InvalidInput for empty shapes.
  void validate() const;

  std::string to_json() const;
  static SketchSpec from_json(const std::string& text);
};

struct SketchEntry {
  std::int64_t row;
  std::int64_t col;
  int sign;
};

/// Q stored as compressed sparse rows of signs; the materialized value of an
/// entry is sign * scale. Built from a spec, each cell (i, j) is zero with
/// probability 1 - 1/s and +-scale with probability 1/(2s) each, where
/// scale = sqrt(s/q) so that E[Q^T Q] = I_n.
class SparseSketch {
 public:
  SketchSpec spec;
  double scale = 1.0;

  std::int64_t rows() const { return spec.q; }
  std::int64_t cols() const { return spec.n; }
  std::size_t nonzeros() const { return col_index_.size(); }

  /// Triplets in row-major order.
  std::vector<SketchEntry> entries() const;
  Matrix dense() const;

  /// Test hook: Q = I_n with unit scale.
  static SparseSketch identity(std::int64_t n);
  /// Builds a sketch from explicit triplets (duplicates rejected).
  static SparseSketch from_entries(std::int64_t q, std::int64_t n, double scale, std::vector<SketchEntry> entries);

  const std::vector<std::int64_t>& row_offsets() const { return row_offset_; }
  const std::vector<std::int64_t>& col_indices() const { return col_index_; }
  const std::vector<signed char>& signs() const { return sign_; }

 private:
  friend SparseSketch generate_sketch(const SketchSpec& spec);

  std::vector<std::int64_t> row_offset_;
  std::vector<std::int64_t> col_index_;
  std::vector<signed char> sign_;
};

/// Counter-based draw for cell (row, col): a pure function of
/// (seed, row, col) returning -1, 0 or +1.
int sketch_cell(std::uint64_t seed, double s, std::int64_t row, std::int64_t col);

SparseSketch generate_sketch(const SketchSpec& spec);

/// Q * M using only the stored nonzeros. Rows of the output are split across
/// `threads` workers; every output cell sums its terms in increasing column
/// order, so the result is bitwise identical at any thread count.
Matrix apply_sketch(const SparseSketch& sketch, const Matrix& m, unsigned threads = 1);

/// Q^T * M (n x k) for M with q rows. Serial, fixed accumulation order.
Matrix apply_sketch_transpose(const SparseSketch& sketch, const Matrix& m);

/// Empirical first and second moments of A = Q^T Q over independent draws,
/// alongside the closed-form targets for the sparse-Bernoulli law.
struct MomentReport {
  std::int64_t draws = 0;
  Matrix mean;           // n x n empirical E[A]
  Matrix mean_se;        // standard error of each mean entry
  Matrix variance;       // n x n empirical Var(A_ij)
  Matrix variance_se;    // standard error of each variance estimate
  Matrix cov_transpose;  // n x n empirical Cov(A_ij, A_ji)
  Matrix vec_covariance; // n^2 x n^2 empirical Var[vec A], column-major vec
  double analytic_var_diag = 0.0;       // (s - 1) / q
  double analytic_var_offdiag = 0.0;    // 1 / q
  double analytic_cov_transpose = 0.0;  // 1 / q

  /// Analytic Var[vec A] entry for the pair (i, j), (k, l).
  double analytic_cov(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l) const;
  /// Largest |empirical Cov| over pairs whose analytic covariance is zero.
  double max_unrelated_cov() const;
};

/// Draw d uses seed mix(spec.seed, d). Requires n <= 12.
MomentReport gram_moment_check(const SketchSpec& spec, std::int64_t draws, unsigned threads = 1);

/// SplitMix64 finalizer; also used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace sketchridge
