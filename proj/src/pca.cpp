#include "mbda/pca.hpp"

#include "mbda/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace mbda {

namespace {

void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(want) +
                                ", got " + std::to_string(got));
  }
}

// Rank tolerance relative to the largest eigenvalue.
constexpr double kRankTolerance = 1e-10;

}  // namespace

MomentAccumulator::MomentAccumulator(std::size_t columns)
    : mean_(Vector::Zero(static_cast<Eigen::Index>(columns))),
      m2_(Vector::Zero(static_cast<Eigen::Index>(columns))) {}

void MomentAccumulator::add(std::span<const std::uint64_t> raw_row) {
  check_size(raw_row.size(), static_cast<std::size_t>(mean_.size()), "MomentAccumulator::add");
  ++n_;
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (Eigen::Index m = 0; m < mean_.size(); ++m) {
    const double x = static_cast<double>(raw_row[static_cast<std::size_t>(m)]);
    const double delta = x - mean_[m];
    mean_[m] += delta * inv_n;
    m2_[m] += delta * (x - mean_[m]);
  }
}

void MomentAccumulator::add(const Eigen::Ref<const Matrix>& rows) {
  check_size(static_cast<std::size_t>(rows.cols()), static_cast<std::size_t>(mean_.size()),
             "MomentAccumulator::add");
  if (rows.rows() == 0) return;
  // Two-pass moments of the chunk, then a pairwise merge.
  MomentAccumulator chunk(static_cast<std::size_t>(rows.cols()));
  chunk.n_ = static_cast<std::uint64_t>(rows.rows());
  chunk.mean_ = rows.colwise().mean().transpose();
  chunk.m2_ = (rows.rowwise() - chunk.mean_.transpose()).colwise().squaredNorm().transpose();
  merge(chunk);
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  check_size(static_cast<std::size_t>(other.mean_.size()), static_cast<std::size_t>(mean_.size()),
             "MomentAccumulator::merge");
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const Vector delta = other.mean_ - mean_;
  mean_ += delta * (nb / n);
  m2_ += other.m2_ + delta.cwiseProduct(delta) * (na * nb / n);
  n_ += other.n_;
}

Vector MomentAccumulator::stddev() const {
  if (n_ < 2) return Vector::Zero(mean_.size());
  return (m2_.array().max(0.0) / static_cast<double>(n_ - 1)).sqrt().matrix();
}

PreprocessParams finish_preprocess(const MomentAccumulator& moments, std::span<const double> weights,
                                   Scaling scaling) {
  if (moments.count() < 2) {
    throw ModelError("calibration needs at least 2 observations, got " +
                     std::to_string(moments.count()));
  }
  const auto m = static_cast<std::size_t>(moments.mean().size());
  check_size(weights.size(), m, "weights");
  PreprocessParams p;
  p.mean = moments.mean();
  p.weight = Eigen::Map<const Vector>(weights.data(), static_cast<Eigen::Index>(m));
  p.scale = Vector::Ones(static_cast<Eigen::Index>(m));
  const Vector sd = moments.stddev();
  for (std::size_t j = 0; j < m; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    // Exact zero: counts are integers, so a constant column has m2 == 0.
    if (!(sd[jj] > 0.0)) {
      p.constant_columns.push_back(j);
    } else if (scaling == Scaling::kAutoscale) {
      p.scale[jj] = sd[jj];
    }
  }
  return p;
}

PreprocessParams fit_preprocess(const Eigen::Ref<const Matrix>& raw, std::span<const double> weights,
                                Scaling scaling) {
  MomentAccumulator acc(static_cast<std::size_t>(raw.cols()));
  acc.add(raw);
  return finish_preprocess(acc, weights, scaling);
}

Vector apply_preprocess(std::span<const std::uint64_t> raw_row, const PreprocessParams& params) {
  check_size(raw_row.size(), params.size(), "apply_preprocess");
  Vector x(static_cast<Eigen::Index>(raw_row.size()));
  for (std::size_t m = 0; m < raw_row.size(); ++m) x[static_cast<Eigen::Index>(m)] = static_cast<double>(raw_row[m]);
  return apply_preprocess(x, params);
}

Vector apply_preprocess(const Eigen::Ref<const Vector>& raw_row, const PreprocessParams& params) {
  check_size(static_cast<std::size_t>(raw_row.size()), params.size(), "apply_preprocess");
  return ((raw_row - params.mean).array() / params.scale.array() * params.weight.array()).matrix();
}

Matrix apply_preprocess_rows(const Eigen::Ref<const Matrix>& raw, const PreprocessParams& params) {
  check_size(static_cast<std::size_t>(raw.cols()), params.size(), "apply_preprocess_rows");
  const Eigen::RowVectorXd factor = (params.weight.array() / params.scale.array()).matrix().transpose();
  return ((raw.rowwise() - params.mean.transpose()).array().rowwise() * factor.array()).matrix();
}

CrossProductAccumulator::CrossProductAccumulator(std::size_t columns)
    : xtx_(Matrix::Zero(static_cast<Eigen::Index>(columns), static_cast<Eigen::Index>(columns))) {}

void CrossProductAccumulator::accumulate(const Eigen::Ref<const Matrix>& chunk) {
  check_size(static_cast<std::size_t>(chunk.cols()), columns(), "CrossProductAccumulator::accumulate");
  if (chunk.rows() == 0) return;
  Matrix lower = Matrix::Zero(xtx_.rows(), xtx_.cols());
  lower.selfadjointView<Eigen::Lower>().rankUpdate(chunk.transpose());
  xtx_ += lower.selfadjointView<Eigen::Lower>();
  n_ += static_cast<std::uint64_t>(chunk.rows());
}

void CrossProductAccumulator::accumulate_row(const Eigen::Ref<const Vector>& row) {
  check_size(static_cast<std::size_t>(row.size()), columns(), "CrossProductAccumulator::accumulate_row");
  // Outer product is exactly symmetric element-wise.
  xtx_.noalias() += row * row.transpose();
  ++n_;
}

void CrossProductAccumulator::merge(const CrossProductAccumulator& other) {
  check_size(other.columns(), columns(), "CrossProductAccumulator::merge");
  xtx_ += other.xtx_;
  n_ += other.n_;
}

PcaModel fit_pca(const CrossProductAccumulator& acc, const ComponentPolicy& policy,
                 PreprocessParams preprocess) {
  if (acc.count() < 2) {
    throw ModelError("PCA needs at least 2 calibration observations, got " + std::to_string(acc.count()));
  }
  const Eigen::Index m = static_cast<Eigen::Index>(acc.columns());
  if (m == 0) throw ModelError("PCA needs at least one feature");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(acc.xtx());
  if (solver.info() != Eigen::Success) throw ModelError("eigendecomposition of the cross-product failed");

  // Solver returns ascending order.
  Vector values = solver.eigenvalues().reverse().cwiseMax(0.0);
  Matrix vectors = solver.eigenvectors().rowwise().reverse();

  const double top = values[0];
  Eigen::Index rank = 0;
  while (rank < m && top > 0.0 && values[rank] > kRankTolerance * top) ++rank;
  if (rank == 0) throw ModelError("calibration data has no variance");

  const double total = acc.xtx().trace();
  Eigen::Index a = 0;
  if (const auto* fixed = std::get_if<FixedComponents>(&policy)) {
    a = static_cast<Eigen::Index>(fixed->count);
    if (a < 1 || a > m) {
      throw ModelError("requested " + std::to_string(a) + " components but there are " +
                       std::to_string(m) + " features");
    }
    if (a > rank) {
      throw ModelError("requested " + std::to_string(a) + " components but the calibration data has rank " +
                       std::to_string(rank));
    }
  } else {
    const double want = std::get<VarianceFraction>(policy).fraction;
    double cumulative = 0.0;
    while (a < rank) {
      cumulative += values[a];
      ++a;
      if (cumulative >= want * total * (1.0 - 1e-12)) break;
    }
  }

  for (Eigen::Index c = 0; c < m; ++c) {
    Eigen::Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }

  PcaModel model;
  model.preprocess = std::move(preprocess);
  model.components = static_cast<std::size_t>(a);
  model.loadings = vectors.leftCols(a);
  model.eigenvalues = values.head(a);
  model.all_eigenvalues = values;
  model.total_variance = total;
  model.captured_variance_fraction = std::min(1.0, model.eigenvalues.sum() / total);
  model.n_calibration = acc.count();
  model.scores_cov = Matrix(model.eigenvalues.asDiagonal()) / static_cast<double>(acc.count() - 1);
  return model;
}

Vector project(const Eigen::Ref<const Vector>& x, const PcaModel& model) {
  check_size(static_cast<std::size_t>(x.size()), model.features(), "project");
  return model.loadings.transpose() * x;
}

Vector residual(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& scores,
                const PcaModel& model) {
  check_size(static_cast<std::size_t>(x.size()), model.features(), "residual");
  check_size(static_cast<std::size_t>(scores.size()), model.components, "residual scores");
  return x - model.loadings * scores;
}

}  // namespace mbda
