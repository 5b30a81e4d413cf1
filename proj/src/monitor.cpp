#include "mbda/monitor.hpp"

#include "mbda/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mbda {

DStatistic::DStatistic(const PcaModel& model) : components_(model.components) {
  const Matrix& cov = model.scores_cov;
  if (static_cast<std::size_t>(cov.rows()) != components_ || cov.rows() != cov.cols()) {
    throw ModelError("score covariance has the wrong shape");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();  // ascending
  const double top = ev.size() > 0 ? ev[ev.size() - 1] : 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (!(ev[i] >= 1e-12 * top) || !(top > 0.0)) {
      throw ModelError("score covariance is singular: component " + std::to_string(ev.size() - i) +
                       " has eigenvalue " + std::to_string(ev[i]));
    }
  }
  llt_.compute(cov);
  if (llt_.info() != Eigen::Success) throw ModelError("score covariance is not positive definite");
}

double DStatistic::operator()(const Eigen::Ref<const Vector>& scores) const {
  if (static_cast<std::size_t>(scores.size()) != components_) {
    throw std::invalid_argument("d_statistic: expected " + std::to_string(components_) + " scores");
  }
  if (components_ == 0) return 0.0;
  const Vector solved = llt_.solve(scores);
  return std::max(0.0, scores.dot(solved));
}

double d_statistic(const Eigen::Ref<const Vector>& scores, const PcaModel& model) {
  return DStatistic(model)(scores);
}

double q_statistic(const Eigen::Ref<const Vector>& residuals) { return residuals.squaredNorm(); }

StatisticsEvaluator::Result StatisticsEvaluator::evaluate_preprocessed(const Eigen::Ref<const Vector>& x) const {
  const Vector t = project(x, model_);
  const Vector e = residual(x, t, model_);
  return {d_(t), q_statistic(e)};
}

StatisticsEvaluator::Result StatisticsEvaluator::evaluate(std::span<const std::uint64_t> raw_row) const {
  return evaluate_preprocessed(apply_preprocess(raw_row, model_.preprocess));
}

double compute_ucl(std::span<const double> values, double percentile) {
  if (values.empty()) throw DataError("cannot compute a control limit from no values");
  std::vector<double> sorted(values.begin(), values.end());
  const double n = static_cast<double>(sorted.size());
  const double r = percentile * n;
  // Guard ceil() against representation error, e.g. 0.99 * 500 = 495.00000000000006.
  const double nearest = std::round(r);
  double rank = std::abs(r - nearest) <= 8.0 * std::numeric_limits<double>::epsilon() * r ? nearest : std::ceil(r);
  rank = std::clamp(rank, 1.0, n);
  const auto k = static_cast<std::size_t>(rank) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  return sorted[k];
}

ControlLimits compute_limits(std::span<const double> d, std::span<const double> q, double percentile) {
  ControlLimits l;
  l.ucl_d = compute_ucl(d, percentile);
  l.ucl_q = compute_ucl(q, percentile);
  l.percentile = percentile;
  l.n_calibration = d.size();
  if (!(l.ucl_d > 0.0) || !(l.ucl_q > 0.0)) {
    throw ModelError("calibration control limits must be positive (ucl_d = " + std::to_string(l.ucl_d) +
                     ", ucl_q = " + std::to_string(l.ucl_q) + ")");
  }
  return l;
}

double tscore(double d, double q, const ControlLimits& limits, double alpha) {
  return alpha * d / limits.ucl_d + (1.0 - alpha) * q / limits.ucl_q;
}

double phase_alpha(const PcaModel& model, Phase phase) {
  if (phase == Phase::kI) return model.captured_variance_fraction;
  return static_cast<double>(model.components) / static_cast<double>(model.features());
}

void apply_tscores(std::span<MonitorRecord> records, const ControlLimits& limits, double alpha) {
  for (auto& r : records) r.tscore = tscore(r.d, r.q, limits, alpha);
}

std::vector<std::size_t> rank_records(std::span<const MonitorRecord> records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].tscore != records[b].tscore) return records[a].tscore > records[b].tscore;
    return records[a].timestamp < records[b].timestamp;
  });
  return order;
}

bool exceeds_limits(const MonitorRecord& r, const ControlLimits& limits) {
  return r.d > limits.ucl_d || r.q > limits.ucl_q;
}

std::vector<Anomaly> triage(std::span<const MonitorRecord> records, const ControlLimits& limits,
                            std::size_t top_k, bool coalesce, std::int64_t interval_seconds) {
  std::vector<Anomaly> out;
  if (top_k == 0 || records.empty()) return out;

  // Time order for adjacency; rank order for selection.
  std::vector<std::size_t> by_time(records.size());
  std::iota(by_time.begin(), by_time.end(), 0);
  std::stable_sort(by_time.begin(), by_time.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].timestamp < records[b].timestamp; });
  std::vector<std::size_t> position(records.size());
  for (std::size_t p = 0; p < by_time.size(); ++p) position[by_time[p]] = p;

  auto adjacent = [&](std::size_t p, std::size_t next) {
    return epoch_seconds(records[by_time[next]].timestamp) - epoch_seconds(records[by_time[p]].timestamp) ==
           interval_seconds;
  };

  std::vector<bool> consumed(records.size(), false);
  for (std::size_t idx : rank_records(records)) {
    if (out.size() >= top_k) break;
    if (consumed[idx]) continue;
    std::size_t lo = position[idx];
    std::size_t hi = lo;
    if (coalesce && exceeds_limits(records[idx], limits)) {
      while (lo > 0 && adjacent(lo - 1, lo) && exceeds_limits(records[by_time[lo - 1]], limits)) --lo;
      while (hi + 1 < by_time.size() && adjacent(hi, hi + 1) &&
             exceeds_limits(records[by_time[hi + 1]], limits)) {
        ++hi;
      }
    }
    for (std::size_t p = lo; p <= hi; ++p) consumed[by_time[p]] = true;
    Anomaly a;
    a.window_start = records[by_time[lo]].timestamp;
    a.window_end = records[by_time[hi]].timestamp;
    a.peak = records[idx].timestamp;
    a.tscore_max = records[idx].tscore;
    a.rank = out.size() + 1;
    a.intervals = hi - lo + 1;
    out.push_back(a);
  }
  return out;
}

namespace {

struct Cluster {
  double x = 0.0;
  double y = 0.0;
  std::size_t multiplicity = 0;
  std::vector<Instant> members;
  bool members_dropped = false;
  // Nearest other live cluster.
  std::size_t nn = 0;
  double nn_dist = std::numeric_limits<double>::infinity();
};

double dist2(const Cluster& a, const Cluster& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

}  // namespace

std::vector<ClusterPoint> cluster_plot(std::span<const MonitorRecord> records, const ControlLimits& limits,
                                       std::size_t max_clusters, std::size_t member_cap, double join_radius) {
  if (max_clusters == 0) throw std::invalid_argument("cluster_plot: max_clusters must be >= 1");
  std::vector<Cluster> clusters;
  clusters.reserve(max_clusters + 1);
  const double join2 = join_radius * join_radius;

  auto refresh_nn = [&](std::size_t i) {
    clusters[i].nn_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < clusters.size(); ++j) {
      if (j == i) continue;
      const double d = dist2(clusters[i], clusters[j]);
      if (d < clusters[i].nn_dist) {
        clusters[i].nn_dist = d;
        clusters[i].nn = j;
      }
    }
  };

  auto add_members = [&](Cluster& dst, const std::vector<Instant>& src, bool src_dropped) {
    if (dst.members_dropped || src_dropped || dst.multiplicity > member_cap) {
      dst.members.clear();
      dst.members_dropped = true;
      return;
    }
    dst.members.insert(dst.members.end(), src.begin(), src.end());
  };

  for (const auto& r : records) {
    Cluster c;
    c.x = r.d / limits.ucl_d;
    c.y = r.q / limits.ucl_q;

    // Join the nearest centroid when close enough.
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < clusters.size(); ++j) {
      const double d = dist2(c, clusters[j]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (!clusters.empty() && best_d <= join2) {
      Cluster& dst = clusters[best];
      const double w = static_cast<double>(dst.multiplicity);
      dst.x = (dst.x * w + c.x) / (w + 1.0);
      dst.y = (dst.y * w + c.y) / (w + 1.0);
      ++dst.multiplicity;
      add_members(dst, {r.timestamp}, false);
      if (dst.x != c.x || dst.y != c.y) {
        for (std::size_t j = 0; j < clusters.size(); ++j) refresh_nn(j);
      }
      continue;
    }

    c.multiplicity = 1;
    add_members(c, {r.timestamp}, false);
    const std::size_t idx = clusters.size();
    clusters.push_back(std::move(c));
    refresh_nn(idx);
    for (std::size_t j = 0; j < idx; ++j) {
      const double d = dist2(clusters[j], clusters[idx]);
      if (d < clusters[j].nn_dist) {
        clusters[j].nn_dist = d;
        clusters[j].nn = idx;
      }
    }

    if (clusters.size() <= max_clusters) continue;

    // Merge the closest pair (lowest indices on ties).
    std::size_t a = 0;
    for (std::size_t j = 1; j < clusters.size(); ++j) {
      if (clusters[j].nn_dist < clusters[a].nn_dist) a = j;
    }
    std::size_t b = clusters[a].nn;
    if (b < a) std::swap(a, b);
    Cluster& keep = clusters[a];
    Cluster& gone = clusters[b];
    const double wa = static_cast<double>(keep.multiplicity);
    const double wb = static_cast<double>(gone.multiplicity);
    keep.x = (keep.x * wa + gone.x * wb) / (wa + wb);
    keep.y = (keep.y * wa + gone.y * wb) / (wa + wb);
    keep.multiplicity += gone.multiplicity;
    add_members(keep, gone.members, gone.members_dropped);
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(b));

    for (std::size_t j = 0; j < clusters.size(); ++j) {
      if (j == a || clusters[j].nn == a || clusters[j].nn == b) {
        refresh_nn(j);
      } else {
        if (clusters[j].nn > b) --clusters[j].nn;
        const double d = dist2(clusters[j], clusters[a]);
        if (d < clusters[j].nn_dist) {
          clusters[j].nn_dist = d;
          clusters[j].nn = a;
        }
      }
    }
  }

  std::vector<ClusterPoint> out;
  out.reserve(clusters.size());
  for (auto& c : clusters) {
    if (c.multiplicity > member_cap) c.members.clear();
    out.push_back({c.x, c.y, c.multiplicity, std::move(c.members)});
  }
  return out;
}

VarianceCheck phase1_variance_check(const PcaModel& full, const PcaModel& clean, double threshold) {
  if (full.features() != clean.features()) {
    throw ModelError("variance check needs models over the same features (" + std::to_string(full.features()) +
                     " vs " + std::to_string(clean.features()) + ")");
  }
  VarianceCheck out;
  out.threshold = threshold;
  const std::size_t k = std::min(full.features(), std::max(full.components, clean.components));
  for (std::size_t i = 0; i < k; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double f = full.all_eigenvalues[ii] / full.total_variance;
    const double c = clean.all_eigenvalues[ii] / clean.total_variance;
    double rel = 0.0;
    if (f > 0.0) {
      rel = std::abs(c - f) / f;
    } else if (c > 0.0) {
      rel = std::numeric_limits<double>::infinity();
    }
    out.full_fraction.push_back(f);
    out.clean_fraction.push_back(c);
    out.relative_change.push_back(rel);
    out.max_relative_change = std::max(out.max_relative_change, rel);
  }
  out.polluted = out.max_relative_change > threshold;
  return out;
}

}  // namespace mbda
