#pragma once

#include "mbda/config.hpp"
#include "mbda/time.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mbda {

struct LogLine {
  std::string source;
  Instant timestamp;
  std::string raw;  // the line without its terminator
  std::uint64_t byte_offset = 0;  // within the (decompressed) input
};

struct FeatureRow {
  Instant interval_start;
  std::vector<std::uint64_t> counts;

  bool operator==(const FeatureRow&) const = default;
};

/// Per-interval feature counts of one source.
struct FeatureStream {
  std::string source;
  std::int64_t interval_seconds = 0;
  std::vector<std::string> feature_names;  // unqualified
  std::vector<FeatureRow> rows;            // strictly increasing interval_start

  bool operator==(const FeatureStream&) const = default;
};

struct ParseStats {
  std::uint64_t bytes_read = 0;
  std::uint64_t lines_read = 0;
  std::uint64_t lines_unparseable = 0;
  std::uint64_t intervals = 0;

  ParseStats& operator+=(const ParseStats& o);
};

struct ParseResult {
  FeatureStream stream;
  ParseStats stats;
};

/// Timestamp of the first timestamp_pattern match, parsed with the
/// source's format. nullopt when the line is unparseable.
std::optional<Instant> extract_timestamp(std::string_view line, const SourceSpec& spec);

/// Total non-overlapping occurrences of each feature pattern over `lines`.
std::vector<std::uint64_t> count_features(std::span<const LogLine> lines, const SourceSpec& spec);

/// Mergeable per-interval accumulator; the unit of chunk-parallel parsing.
class IntervalCounts {
 public:
  explicit IntervalCounts(std::size_t features) : features_(features) {}

  std::vector<std::uint64_t>& row(Instant interval_start);
  void merge(const IntervalCounts& other);
  std::size_t size() const { return rows_.size(); }

  /// Rows from the first to the last observed interval, zero-filling gaps.
  std::vector<FeatureRow> to_rows(std::int64_t interval_seconds) const;

 private:
  std::size_t features_;
  std::map<std::int64_t, std::vector<std::uint64_t>> rows_;
  std::int64_t last_key_ = 0;
  std::vector<std::uint64_t>* last_row_ = nullptr;
};

/// Streaming line counter for one source. Not thread-safe; use one per worker.
class SourceParser {
 public:
  explicit SourceParser(const SourceSpec& spec);

  /// Buckets and counts one line. Returns false when its timestamp is unparseable.
  bool add_line(std::string_view line);
  void add_text(std::string_view text);  // newline-delimited block

  const IntervalCounts& counts() const { return counts_; }
  const ParseStats& stats() const { return stats_; }

 private:
  const SourceSpec& spec_;
  PatternSet patterns_;
  IntervalCounts counts_;
  ParseStats stats_;
  PatternSet::Scratch scratch_;
  std::string cached_text_;
  std::optional<Instant> cached_instant_;
};

/// Reads newline-delimited text from a plain or gzip-compressed file.
/// Calls `on_line(line, byte_offset)` for every line, in order.
void for_each_line(const std::string& path,
                   const std::function<void(std::string_view, std::uint64_t)>& on_line);

struct ParseOptions {
  std::size_t workers = 1;
  std::size_t block_bytes = 4u << 20;
};

/// Parses every input of one source into a FeatureStream.
/// Throws DataError naming the input when it cannot be read.
ParseResult parse_source(const std::vector<std::string>& inputs, const SourceSpec& spec,
                         const ParseOptions& options = {});
/// Same, over an in-memory newline-delimited buffer.
ParseResult parse_text(std::string_view text, const SourceSpec& spec);

/// Row-wise merge of partial streams of the same source (counts summed per interval).
FeatureStream merge_streams(const FeatureStream& a, const FeatureStream& b);

}  // namespace mbda
