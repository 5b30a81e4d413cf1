#pragma once

#include "mbda/config.hpp"
#include "mbda/log_parser.hpp"
#include "mbda/time.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mbda {

/// N x M observation matrix at the common sampling rate.
struct FusedMatrix {
  std::vector<Instant> timestamps;
  std::vector<std::string> feature_names;  // "source.feature"
  std::vector<std::uint64_t> counts;       // row-major, N * M

  std::size_t rows() const { return timestamps.size(); }
  std::size_t cols() const { return feature_names.size(); }
  std::span<const std::uint64_t> row(std::size_t i) const {
    return {counts.data() + i * cols(), cols()};
  }

  bool operator==(const FusedMatrix&) const = default;
};

/// Sums fine intervals into `common_interval`-second intervals.
/// Throws ConfigError when common_interval is not a multiple of the stream interval.
FeatureStream resample(const FeatureStream& stream, std::int64_t common_interval);

/// Appends the columns of streams already at the common rate. Rows span the
/// union of interval starts; an absent source contributes zeros.
FusedMatrix fuse(std::span<const FeatureStream> streams, std::int64_t common_interval);

/// Resamples each stream per `config` and fuses them in source order.
FusedMatrix fuse_with_config(std::span<const FeatureStream> streams, const PipelineConfig& config);

}  // namespace mbda
