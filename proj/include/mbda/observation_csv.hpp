#pragma once

#include "mbda/fusion.hpp"
#include "mbda/log_parser.hpp"

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

namespace mbda {

// Observation CSV: header "timestamp,<source.feature>,...", ISO-8601 UTC
// timestamps, integer cells. Used for per-source streams and the fused matrix.

void write_observations(std::ostream& out, const FusedMatrix& m);
void write_observations(const std::string& path, const FusedMatrix& m);
void write_stream(const std::string& path, const FeatureStream& stream);

FusedMatrix read_observations(const std::string& path);

/// Reads a per-source stream file; every column must share one source prefix.
FeatureStream read_stream(const std::string& path, std::int64_t interval_seconds);

/// Streaming reader so calibration never needs the whole matrix in memory.
class ObservationReader {
 public:
  explicit ObservationReader(const std::string& path);

  const std::vector<std::string>& feature_names() const { return names_; }
  /// Next row; false at end of file. Throws DataError on malformed rows.
  bool next(Instant& timestamp, std::vector<std::uint64_t>& counts);

 private:
  std::string path_;
  std::ifstream in_;
  std::vector<std::string> names_;
  std::string line_;
  std::size_t line_no_ = 1;
};

}  // namespace mbda
