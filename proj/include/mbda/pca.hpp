#pragma once

#include "mbda/config.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mbda {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Column means, scales and weights: x'[m] = w[m] * (x[m] - mean[m]) / scale[m].
struct PreprocessParams {
  Vector mean;
  Vector scale;   // > 0; 1 for constant columns or when only centering
  Vector weight;  // in [1, 10]
  std::vector<std::size_t> constant_columns;

  std::size_t size() const { return static_cast<std::size_t>(mean.size()); }
};

/// Mergeable first/second moments per column (pairwise update, so chunked
/// and whole-matrix results agree to rounding).
class MomentAccumulator {
 public:
  explicit MomentAccumulator(std::size_t columns);

  void add(std::span<const std::uint64_t> raw_row);
  void add(const Eigen::Ref<const Matrix>& rows);  // one observation per row
  void merge(const MomentAccumulator& other);

  std::uint64_t count() const { return n_; }
  const Vector& mean() const { return mean_; }
  /// Sample standard deviation (denominator n - 1).
  Vector stddev() const;

 private:
  std::uint64_t n_ = 0;
  Vector mean_;
  Vector m2_;
};

/// Throws ModelError when fewer than two observations were accumulated.
PreprocessParams finish_preprocess(const MomentAccumulator& moments, std::span<const double> weights,
                                   Scaling scaling);
PreprocessParams fit_preprocess(const Eigen::Ref<const Matrix>& raw, std::span<const double> weights,
                                Scaling scaling);

Vector apply_preprocess(std::span<const std::uint64_t> raw_row, const PreprocessParams& params);
Vector apply_preprocess(const Eigen::Ref<const Vector>& raw_row, const PreprocessParams& params);
/// Row-wise, for a chunk of observations.
Matrix apply_preprocess_rows(const Eigen::Ref<const Matrix>& raw, const PreprocessParams& params);

/// Running X'^T X' over preprocessed rows.
class CrossProductAccumulator {
 public:
  explicit CrossProductAccumulator(std::size_t columns);

  void accumulate(const Eigen::Ref<const Matrix>& chunk);
  void accumulate_row(const Eigen::Ref<const Vector>& row);
  void merge(const CrossProductAccumulator& other);

  std::uint64_t count() const { return n_; }
  std::size_t columns() const { return static_cast<std::size_t>(xtx_.rows()); }
  const Matrix& xtx() const { return xtx_; }

 private:
  std::uint64_t n_ = 0;
  Matrix xtx_;
};

struct PcaModel {
  PreprocessParams preprocess;
  Matrix loadings;         // M x A, orthonormal columns
  Vector eigenvalues;      // A, descending
  Vector all_eigenvalues;  // M, descending (clamped at 0)
  std::size_t components = 0;
  Matrix scores_cov;  // A x A
  double captured_variance_fraction = 0.0;
  double total_variance = 0.0;
  std::uint64_t n_calibration = 0;

  std::size_t features() const { return static_cast<std::size_t>(loadings.rows()); }
};

/// Eigen-decomposes the accumulated cross-product. Loading signs make the
/// largest-magnitude element of each column positive.
PcaModel fit_pca(const CrossProductAccumulator& acc, const ComponentPolicy& policy,
                 PreprocessParams preprocess);

Vector project(const Eigen::Ref<const Vector>& x, const PcaModel& model);
Vector residual(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& scores,
                const PcaModel& model);

}  // namespace mbda
