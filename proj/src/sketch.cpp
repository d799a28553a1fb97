#include "sketchridge/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "sketchridge/error.hpp"
#include "sketchridge/parallel.hpp"

namespace sketchridge {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix64(base);
  h = mix64(h ^ (a * 0xD6E8FEB86659FD93ULL));
  h = mix64(h ^ (b * 0xA0761D6478BD642FULL));
  return h;
}

void SketchSpec::validate() const {
  if (!(s >= 1.0) || !std::isfinite(s)) throw Error(ErrorKind::InvalidSparsity, "sparsity s must be a finite value >= 1");
  if (n < 1 || q < 1) throw Error(ErrorKind::InvalidInput, "sketch needs n >= 1 and q >= 1");
}

std::string SketchSpec::to_json() const {
  nlohmann::ordered_json j;
  j["n"] = n;
  j["q"] = q;
  j["s"] = s;
  j["seed"] = seed;
  return j.dump();
}

SketchSpec SketchSpec::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SketchSpec spec;
    spec.n = j.at("n").get<std::int64_t>();
    spec.q = j.at("q").get<std::int64_t>();
    spec.s = j.at("s").get<double>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidInput, std::string("bad sketch spec JSON: ") + e.what());
  }
}

int sketch_cell(std::uint64_t seed, double s, std::int64_t row, std::int64_t col) {
  std::uint64_t h = mix64(seed ^ 0x5851F42D4C957F2DULL);
  h = mix64(h ^ (static_cast<std::uint64_t>(row) * 0x9E3779B97F4A7C15ULL));
  h = mix64(h ^ (static_cast<std::uint64_t>(col) * 0xC2B2AE3D27D4EB4FULL));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  const double half = 0.5 / s;
  if (u < half) return 1;
  if (u < 2.0 * half) return -1;
  return 0;
}

SparseSketch generate_sketch(const SketchSpec& spec) {
  spec.validate();
  SparseSketch out;
  out.spec = spec;
  out.scale = std::sqrt(spec.s / static_cast<double>(spec.q));
  out.row_offset_.reserve(static_cast<std::size_t>(spec.q) + 1);
  out.row_offset_.push_back(0);
  const auto expected = static_cast<std::size_t>(static_cast<double>(spec.q) * spec.n / spec.s);
  out.col_index_.reserve(expected + expected / 8 + 16);
  out.sign_.reserve(expected + expected / 8 + 16);
  for (std::int64_t i = 0; i < spec.q; ++i) {
    for (std::int64_t j = 0; j < spec.n; ++j) {
      const int sign = sketch_cell(spec.seed, spec.s, i, j);
      if (sign != 0) {
        out.col_index_.push_back(j);
        out.sign_.push_back(static_cast<signed char>(sign));
      }
    }
    out.row_offset_.push_back(static_cast<std::int64_t>(out.col_index_.size()));
  }
  return out;
}

SparseSketch SparseSketch::identity(std::int64_t n) {
  std::vector<SketchEntry> entries;
  entries.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) entries.push_back({i, i, 1});
  SparseSketch out = from_entries(n, n, 1.0, std::move(entries));
  out.spec.s = 1.0;
  return out;
}

SparseSketch SparseSketch::from_entries(std::int64_t q, std::int64_t n, double scale, std::vector<SketchEntry> entries) {
  if (q < 1 || n < 1) throw Error(ErrorKind::InvalidInput, "sketch needs n >= 1 and q >= 1");
  if (!(scale > 0.0)) throw Error(ErrorKind::InvalidInput, "sketch scale must be positive");
  std::sort(entries.begin(), entries.end(), [](const SketchEntry& a, const SketchEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseSketch out;
  out.spec.n = n;
  out.spec.q = q;
  out.spec.s = 1.0;
  out.scale = scale;
  out.row_offset_.assign(static_cast<std::size_t>(q) + 1, 0);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    if (e.row < 0 || e.row >= q || e.col < 0 || e.col >= n) throw Error(ErrorKind::InvalidInput, "sketch entry out of range");
    if (e.sign != 1 && e.sign != -1) throw Error(ErrorKind::InvalidInput, "sketch entry sign must be +-1");
    if (k > 0 && entries[k - 1].row == e.row && entries[k - 1].col == e.col) {
      throw Error(ErrorKind::InvalidInput, "duplicate sketch entry");
    }
    out.col_index_.push_back(e.col);
    out.sign_.push_back(static_cast<signed char>(e.sign));
    out.row_offset_[static_cast<std::size_t>(e.row) + 1] += 1;
  }
  for (std::size_t i = 1; i < out.row_offset_.size(); ++i) out.row_offset_[i] += out.row_offset_[i - 1];
  return out;
}

std::vector<SketchEntry> SparseSketch::entries() const {
  std::vector<SketchEntry> out;
  out.reserve(nonzeros());
  for (std::int64_t i = 0; i < rows(); ++i) {
    for (auto k = row_offset_[i]; k < row_offset_[i + 1]; ++k) {
      out.push_back({i, col_index_[k], sign_[k]});
    }
  }
  return out;
}

Matrix SparseSketch::dense() const {
  Matrix out = Matrix::Zero(rows(), cols());
  for (const auto& e : entries()) out(e.row, e.col) = e.sign * scale;
  return out;
}

Matrix apply_sketch(const SparseSketch& sketch, const Matrix& m, unsigned threads) {
  if (m.rows() != sketch.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "sketch has " + std::to_string(sketch.cols()) + " columns but matrix has " +
                                                  std::to_string(m.rows()) + " rows");
  }
  const auto& offsets = sketch.row_offsets();
  const auto& cols = sketch.col_indices();
  const auto& signs = sketch.signs();
  // Row-major copy so each nonzero touches a contiguous row.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(sketch.rows(), m.cols());
  out.setZero();
  parallel_for(static_cast<std::size_t>(sketch.rows()), threads, [&](std::size_t i) {
    auto acc = out.row(static_cast<Eigen::Index>(i));
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k) {
      if (signs[k] > 0) {
        acc += rm.row(cols[k]);
      } else {
        acc -= rm.row(cols[k]);
      }
    }
    acc *= sketch.scale;
  });
  return out;
}

Matrix apply_sketch_transpose(const SparseSketch& sketch, const Matrix& m) {
  if (m.rows() != sketch.rows()) throw Error(ErrorKind::DimensionMismatch, "transpose sketch row mismatch");
  Matrix out = Matrix::Zero(sketch.cols(), m.cols());
  const auto& offsets = sketch.row_offsets();
  const auto& cols = sketch.col_indices();
  const auto& signs = sketch.signs();
  for (std::int64_t i = 0; i < sketch.rows(); ++i) {
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k) {
      out.row(cols[k]) += (signs[k] * sketch.scale) * m.row(i);
    }
  }
  return out;
}

double MomentReport::analytic_cov(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l) const {
  if (i == j && k == l && i == k) return analytic_var_diag;
  if (i != j && i == k && j == l) return analytic_var_offdiag;
  if (i != j && i == l && j == k) return analytic_cov_transpose;
  return 0.0;
}

double MomentReport::max_unrelated_cov() const {
  const auto n = mean.rows();
  double worst = 0.0;
  for (Eigen::Index a = 0; a < n * n; ++a) {
    for (Eigen::Index b = 0; b < n * n; ++b) {
      const auto i = a % n, j = a / n, k = b % n, l = b / n;
      const bool related = (i == k && j == l) || (i == l && j == k);
      if (!related) worst = std::max(worst, std::abs(vec_covariance(a, b)));
    }
  }
  return worst;
}

MomentReport gram_moment_check(const SketchSpec& spec, std::int64_t draws, unsigned threads) {
  spec.validate();
  if (spec.n > 12) throw Error(ErrorKind::InstanceTooLarge, "moment check materializes n^2 x n^2 moments; needs n <= 12");
  if (draws < 2) throw Error(ErrorKind::InvalidInput, "moment check needs at least 2 draws");
  const Eigen::Index n = spec.n;
  const Eigen::Index nn = n * n;

  // Each block accumulates its own raw sums; blocks are folded in order.
  const std::size_t blocks = std::max<std::size_t>(1, std::min<std::size_t>(64, static_cast<std::size_t>(draws)));
  struct Sums {
    Vector s1, s2, s3, s4;
    Matrix outer;
  };
  std::vector<Sums> partial(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    Sums acc{Vector::Zero(nn), Vector::Zero(nn), Vector::Zero(nn), Vector::Zero(nn), Matrix::Zero(nn, nn)};
    const std::int64_t begin = draws * static_cast<std::int64_t>(b) / static_cast<std::int64_t>(blocks);
    const std::int64_t end = draws * static_cast<std::int64_t>(b + 1) / static_cast<std::int64_t>(blocks);
    SketchSpec draw_spec = spec;
    for (std::int64_t d = begin; d < end; ++d) {
      draw_spec.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(d), 0x6d6f6d656e74ULL);
      const Matrix q = generate_sketch(draw_spec).dense();
      const Matrix a = q.transpose() * q;
      const Eigen::Map<const Vector> v(a.data(), nn);
      acc.s1 += v;
      const Vector v2 = v.cwiseProduct(v);
      acc.s2 += v2;
      acc.s3 += v2.cwiseProduct(v);
      acc.s4 += v2.cwiseProduct(v2);
      acc.outer.selfadjointView<Eigen::Lower>().rankUpdate(v);
    }
    partial[b] = std::move(acc);
  });

  Sums total{Vector::Zero(nn), Vector::Zero(nn), Vector::Zero(nn), Vector::Zero(nn), Matrix::Zero(nn, nn)};
  for (const auto& p : partial) {
    total.s1 += p.s1;
    total.s2 += p.s2;
    total.s3 += p.s3;
    total.s4 += p.s4;
    total.outer += p.outer;
  }
  const double count = static_cast<double>(draws);
  const Vector mu = total.s1 / count;
  const Vector m2 = total.s2 / count;
  const Vector m3 = total.s3 / count;
  const Vector m4 = total.s4 / count;

  MomentReport report;
  report.draws = draws;
  report.mean = Eigen::Map<const Matrix>(mu.data(), n, n);
  Vector var(nn), var_se(nn), mean_se(nn);
  for (Eigen::Index k = 0; k < nn; ++k) {
    const double u = mu(k);
    const double central2 = std::max(0.0, m2(k) - u * u);
    const double central4 = m4(k) - 4 * u * m3(k) + 6 * u * u * m2(k) - 3 * u * u * u * u;
    var(k) = central2 * count / (count - 1.0);
    mean_se(k) = std::sqrt(var(k) / count);
    var_se(k) = std::sqrt(std::max(0.0, central4 - central2 * central2) / count);
  }
  report.mean_se = Eigen::Map<const Matrix>(mean_se.data(), n, n);
  report.variance = Eigen::Map<const Matrix>(var.data(), n, n);
  report.variance_se = Eigen::Map<const Matrix>(var_se.data(), n, n);

  Matrix outer = total.outer.selfadjointView<Eigen::Lower>();
  report.vec_covariance = (outer / count - mu * mu.transpose()) * (count / (count - 1.0));
  report.cov_transpose.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      report.cov_transpose(i, j) = report.vec_covariance(i + j * n, j + i * n);
    }
  }
  const double q = static_cast<double>(spec.q);
  report.analytic_var_diag = (spec.s - 1.0) / q;
  report.analytic_var_offdiag = 1.0 / q;
  report.analytic_cov_transpose = 1.0 / q;
  return report;
}

}  // namespace sketchridge
