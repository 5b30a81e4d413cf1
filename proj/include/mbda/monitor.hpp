#pragma once

#include "mbda/pca.hpp"
#include "mbda/time.hpp"

#include <Eigen/Cholesky>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mbda {

struct MonitorRecord {
  Instant timestamp;
  double d = 0.0;
  double q = 0.0;
  double tscore = 0.0;
};

struct ControlLimits {
  double ucl_d = 0.0;
  double ucl_q = 0.0;
  double percentile = 0.99;
  std::uint64_t n_calibration = 0;
};

struct ClusterPoint {
  double centroid_d = 0.0;  // in units of ucl_d
  double centroid_q = 0.0;  // in units of ucl_q
  std::size_t multiplicity = 0;
  std::vector<Instant> members;  // kept while multiplicity <= member cap
};

enum class Phase { kI = 1, kII = 2 };

/// D = t * inv(Sigma_T) * t^T via a Cholesky factor of the stored score
/// covariance. Construction fails with ModelError on a degenerate component.
class DStatistic {
 public:
  explicit DStatistic(const PcaModel& model);
  double operator()(const Eigen::Ref<const Vector>& scores) const;

 private:
  Eigen::LLT<Matrix> llt_;
  std::size_t components_;
};

double d_statistic(const Eigen::Ref<const Vector>& scores, const PcaModel& model);
double q_statistic(const Eigen::Ref<const Vector>& residuals);

/// D and Q for raw observations against a fixed model.
class StatisticsEvaluator {
 public:
  explicit StatisticsEvaluator(const PcaModel& model) : model_(model), d_(model) {}

  struct Result {
    double d;
    double q;
  };
  Result evaluate_preprocessed(const Eigen::Ref<const Vector>& x) const;
  Result evaluate(std::span<const std::uint64_t> raw_row) const;

 private:
  const PcaModel& model_;
  DStatistic d_;
};

/// Nearest-rank percentile: element ceil(p * N) (1-based) of the ascending sort.
double compute_ucl(std::span<const double> values, double percentile);
ControlLimits compute_limits(std::span<const double> d, std::span<const double> q, double percentile);

double tscore(double d, double q, const ControlLimits& limits, double alpha);
double phase_alpha(const PcaModel& model, Phase phase);

/// Fills in tscore for every record.
void apply_tscores(std::span<MonitorRecord> records, const ControlLimits& limits, double alpha);

struct Anomaly {
  Instant window_start;
  Instant window_end;  // start of the last interval in the window
  Instant peak;
  double tscore_max = 0.0;
  std::size_t rank = 0;  // 1-based
  std::size_t intervals = 0;
};

/// Record indices by Tscore descending, earlier timestamp first on ties.
std::vector<std::size_t> rank_records(std::span<const MonitorRecord> records);

/// True when a record exceeds either control limit.
bool exceeds_limits(const MonitorRecord& r, const ControlLimits& limits);

/// Top-k anomalies by Tscore. With `coalesce`, a record above a control
/// limit absorbs the run of adjacent (one interval apart) records that are
/// also above a limit into one window.
std::vector<Anomaly> triage(std::span<const MonitorRecord> records, const ControlLimits& limits,
                            std::size_t top_k, bool coalesce, std::int64_t interval_seconds);

/// Sequential agglomeration of (d/ucl_d, q/ucl_q) points into at most
/// `max_clusters` multiplicity-weighted centroids. A record joins an existing
/// centroid only when it lies within `join_radius` of it.
std::vector<ClusterPoint> cluster_plot(std::span<const MonitorRecord> records, const ControlLimits& limits,
                                       std::size_t max_clusters, std::size_t member_cap = 16,
                                       double join_radius = 0.0);

struct VarianceCheck {
  std::vector<double> full_fraction;   // per-PC share of total variance, with outliers
  std::vector<double> clean_fraction;  // without outliers
  std::vector<double> relative_change;
  double max_relative_change = 0.0;
  double threshold = 0.10;
  bool polluted = false;
};

/// Compares per-PC variance shares of models fitted with and without the
/// suspected outliers, over the first max(A_full, A_clean) components.
VarianceCheck phase1_variance_check(const PcaModel& full, const PcaModel& clean, double threshold = 0.10);

}  // namespace mbda
