#include "mbda/fusion.hpp"

#include "mbda/errors.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace mbda {

FeatureStream resample(const FeatureStream& stream, std::int64_t common_interval) {
  if (common_interval < 1 || common_interval % stream.interval_seconds != 0) {
    throw ConfigError("source '" + stream.source + "': common interval " +
                      std::to_string(common_interval) + " is not an integer multiple of " +
                      std::to_string(stream.interval_seconds));
  }
  IntervalCounts coarse(stream.feature_names.size());
  for (const auto& row : stream.rows) {
    auto& dst = coarse.row(floor_to_interval(row.interval_start, common_interval));
    for (std::size_t f = 0; f < dst.size(); ++f) dst[f] += row.counts[f];
  }
  FeatureStream out{stream.source, common_interval, stream.feature_names, {}};
  out.rows = coarse.to_rows(common_interval);
  return out;
}

FusedMatrix fuse(std::span<const FeatureStream> streams, std::int64_t common_interval) {
  FusedMatrix m;
  std::set<std::string> seen;
  std::vector<std::size_t> offsets;
  std::set<std::int64_t> keys;
  for (const auto& s : streams) {
    if (s.interval_seconds != common_interval) {
      throw ConfigError("source '" + s.source + "' is not at the common interval");
    }
    offsets.push_back(m.feature_names.size());
    for (const auto& f : s.feature_names) {
      std::string q = s.source + "." + f;
      if (!seen.insert(q).second) throw ConfigError("duplicate qualified feature name '" + q + "'");
      m.feature_names.push_back(std::move(q));
    }
    for (const auto& r : s.rows) keys.insert(epoch_seconds(r.interval_start));
  }
  if (keys.empty()) return m;

  const std::int64_t first = *keys.begin();
  const std::int64_t last = *keys.rbegin();
  const std::size_t n = static_cast<std::size_t>((last - first) / common_interval + 1);
  const std::size_t cols = m.feature_names.size();
  m.timestamps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.timestamps.push_back(from_epoch(first + static_cast<std::int64_t>(i) * common_interval));
  }
  m.counts.assign(n * cols, 0);
  for (std::size_t s = 0; s < streams.size(); ++s) {
    for (const auto& r : streams[s].rows) {
      const std::int64_t t = epoch_seconds(r.interval_start);
      if ((t - first) % common_interval != 0) {
        throw DataError("source '" + streams[s].source + "' has a row off the common grid at " +
                        format_iso8601(r.interval_start));
      }
      const auto i = static_cast<std::size_t>((t - first) / common_interval);
      auto* dst = m.counts.data() + i * cols + offsets[s];
      for (std::size_t f = 0; f < r.counts.size(); ++f) dst[f] += r.counts[f];
    }
  }
  return m;
}

FusedMatrix fuse_with_config(std::span<const FeatureStream> streams, const PipelineConfig& config) {
  std::vector<FeatureStream> ordered;
  for (const auto& src : config.sources) {
    auto it = std::find_if(streams.begin(), streams.end(),
                           [&](const FeatureStream& s) { return s.source == src.name; });
    if (it == streams.end()) {
      throw ConfigError("no feature stream supplied for source '" + src.name + "'");
    }
    std::vector<std::string> expected;
    for (const auto& f : src.features) expected.push_back(f.name);
    if (it->feature_names != expected) {
      throw ConfigError("feature stream for source '" + src.name + "' does not match the configuration");
    }
    ordered.push_back(resample(*it, config.common_interval_seconds));
  }
  if (ordered.size() != streams.size()) {
    throw ConfigError("feature streams supplied for sources not in the configuration");
  }
  return fuse(ordered, config.common_interval_seconds);
}

}  // namespace mbda
