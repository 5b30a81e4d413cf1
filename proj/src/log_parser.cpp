#include "mbda/log_parser.hpp"

#include "mbda/errors.hpp"

#include <zlib.h>

#include <algorithm>
#include <future>
#include <memory>
#include <thread>

namespace mbda {

ParseStats& ParseStats::operator+=(const ParseStats& o) {
  bytes_read += o.bytes_read;
  lines_read += o.lines_read;
  lines_unparseable += o.lines_unparseable;
  intervals += o.intervals;
  return *this;
}

std::optional<Instant> extract_timestamp(std::string_view line, const SourceSpec& spec) {
  const auto captured = spec.timestamp_pattern->first_capture(line);
  if (!captured) return std::nullopt;
  return parse_with_format(std::string(*captured), spec.timestamp_format, spec.utc_offset_seconds);
}

std::vector<std::uint64_t> count_features(std::span<const LogLine> lines, const SourceSpec& spec) {
  std::vector<std::uint64_t> counts(spec.features.size(), 0);
  for (const auto& line : lines) {
    for (std::size_t f = 0; f < spec.features.size(); ++f) {
      counts[f] += spec.features[f].pattern->count(line.raw);
    }
  }
  return counts;
}

std::vector<std::uint64_t>& IntervalCounts::row(Instant interval_start) {
  const std::int64_t key = epoch_seconds(interval_start);
  if (last_row_ != nullptr && key == last_key_) return *last_row_;
  auto [it, inserted] = rows_.try_emplace(key);
  if (inserted) it->second.assign(features_, 0);
  last_key_ = key;
  last_row_ = &it->second;
  return it->second;
}

void IntervalCounts::merge(const IntervalCounts& other) {
  for (const auto& [key, counts] : other.rows_) {
    auto [it, inserted] = rows_.try_emplace(key, counts);
    if (!inserted) {
      for (std::size_t f = 0; f < features_; ++f) it->second[f] += counts[f];
    }
  }
  last_row_ = nullptr;
}

std::vector<FeatureRow> IntervalCounts::to_rows(std::int64_t interval_seconds) const {
  std::vector<FeatureRow> out;
  if (rows_.empty()) return out;
  const std::int64_t first = rows_.begin()->first;
  const std::int64_t last = rows_.rbegin()->first;
  out.reserve(static_cast<std::size_t>((last - first) / interval_seconds + 1));
  auto it = rows_.begin();
  for (std::int64_t t = first; t <= last; t += interval_seconds) {
    if (it != rows_.end() && it->first == t) {
      out.push_back({from_epoch(t), it->second});
      ++it;
    } else {
      out.push_back({from_epoch(t), std::vector<std::uint64_t>(features_, 0)});
    }
  }
  return out;
}

namespace {

std::vector<const Pattern*> feature_patterns(const SourceSpec& spec) {
  std::vector<const Pattern*> p;
  p.reserve(spec.features.size());
  for (const auto& f : spec.features) p.push_back(f.pattern.get());
  return p;
}

template <typename F>
void split_lines(std::string_view text, F&& on_line) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    on_line(line, pos);
    pos = end + 1;
  }
}

struct GzFile {
  gzFile handle = nullptr;
  explicit GzFile(const std::string& path) : handle(gzopen(path.c_str(), "rb")) {
    if (handle != nullptr) gzbuffer(handle, 1u << 17);
  }
  ~GzFile() {
    if (handle != nullptr) gzclose(handle);
  }
  GzFile(const GzFile&) = delete;
  GzFile& operator=(const GzFile&) = delete;
};

// Reads `path` in newline-aligned blocks. `on_block(text, offset)` receives
// only complete lines (the final line may lack a terminator).
template <typename F>
void for_each_block(const std::string& path, std::size_t block_bytes, F&& on_block) {
  GzFile file(path);
  if (file.handle == nullptr) throw DataError("cannot open input '" + path + "'");
  std::string carry;
  std::uint64_t offset = 0;
  std::vector<char> buf(block_bytes);
  for (;;) {
    const int n = gzread(file.handle, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) {
      int code = 0;
      const char* msg = gzerror(file.handle, &code);
      throw DataError("cannot read input '" + path + "': " + (msg ? msg : "gzip error"));
    }
    if (n == 0) break;
    std::string block = std::move(carry);
    carry.clear();
    block.append(buf.data(), static_cast<std::size_t>(n));
    const std::size_t last_nl = block.rfind('\n');
    if (last_nl == std::string::npos) {
      carry = std::move(block);
      continue;
    }
    carry.assign(block, last_nl + 1, std::string::npos);
    block.resize(last_nl + 1);
    const std::uint64_t block_offset = offset;
    offset += block.size();
    on_block(std::move(block), block_offset);
  }
  if (!carry.empty()) on_block(std::move(carry), offset);
}

}  // namespace

SourceParser::SourceParser(const SourceSpec& spec)
    : spec_(spec), patterns_(feature_patterns(spec)), counts_(spec.features.size()) {}

bool SourceParser::add_line(std::string_view line) {
  ++stats_.lines_read;
  const auto captured = spec_.timestamp_pattern->first_capture(line);
  if (!captured) {
    ++stats_.lines_unparseable;
    return false;
  }
  if (*captured != cached_text_ || cached_text_.empty()) {
    cached_text_.assign(*captured);
    cached_instant_ = parse_with_format(cached_text_, spec_.timestamp_format, spec_.utc_offset_seconds);
  }
  if (!cached_instant_) {
    ++stats_.lines_unparseable;
    return false;
  }
  auto& row = counts_.row(floor_to_interval(*cached_instant_, spec_.interval_seconds));
  patterns_.count_into(line, row, scratch_);
  return true;
}

void SourceParser::add_text(std::string_view text) {
  stats_.bytes_read += text.size();
  split_lines(text, [this](std::string_view line, std::size_t) { add_line(line); });
}

void for_each_line(const std::string& path,
                   const std::function<void(std::string_view, std::uint64_t)>& on_line) {
  for_each_block(path, 4u << 20, [&](std::string block, std::uint64_t offset) {
    split_lines(block, [&](std::string_view line, std::size_t pos) { on_line(line, offset + pos); });
  });
}

namespace {

struct Partial {
  IntervalCounts counts;
  ParseStats stats;
};

Partial parse_block(const std::string& block, const SourceSpec& spec) {
  SourceParser parser(spec);
  parser.add_text(block);
  return {parser.counts(), parser.stats()};
}

ParseResult finish(const SourceSpec& spec, const IntervalCounts& counts, ParseStats stats) {
  ParseResult r;
  r.stream.source = spec.name;
  r.stream.interval_seconds = spec.interval_seconds;
  for (const auto& f : spec.features) r.stream.feature_names.push_back(f.name);
  r.stream.rows = counts.to_rows(spec.interval_seconds);
  stats.intervals = r.stream.rows.size();
  r.stats = stats;
  return r;
}

}  // namespace

ParseResult parse_source(const std::vector<std::string>& inputs, const SourceSpec& spec,
                         const ParseOptions& options) {
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  IntervalCounts total(spec.features.size());
  ParseStats stats;

  if (workers == 1) {
    SourceParser parser(spec);
    for (const auto& path : inputs) {
      for_each_block(path, options.block_bytes,
                     [&](std::string block, std::uint64_t) { parser.add_text(block); });
    }
    return finish(spec, parser.counts(), parser.stats());
  }

  std::vector<std::future<Partial>> in_flight;
  auto drain_one = [&] {
    Partial p = in_flight.front().get();
    in_flight.erase(in_flight.begin());
    total.merge(p.counts);
    stats += p.stats;
  };
  for (const auto& path : inputs) {
    for_each_block(path, options.block_bytes, [&](std::string block, std::uint64_t) {
      if (in_flight.size() >= workers) drain_one();
      in_flight.push_back(std::async(std::launch::async,
                                     [b = std::move(block), &spec] { return parse_block(b, spec); }));
    });
  }
  while (!in_flight.empty()) drain_one();
  return finish(spec, total, stats);
}

ParseResult parse_text(std::string_view text, const SourceSpec& spec) {
  SourceParser parser(spec);
  parser.add_text(text);
  return finish(spec, parser.counts(), parser.stats());
}

FeatureStream merge_streams(const FeatureStream& a, const FeatureStream& b) {
  if (a.feature_names != b.feature_names || a.interval_seconds != b.interval_seconds) {
    throw DataError("cannot merge streams with different features or intervals");
  }
  IntervalCounts counts(a.feature_names.size());
  for (const auto* s : {&a, &b}) {
    for (const auto& row : s->rows) {
      auto& dst = counts.row(row.interval_start);
      for (std::size_t f = 0; f < dst.size(); ++f) dst[f] += row.counts[f];
    }
  }
  FeatureStream out{a.source.empty() ? b.source : a.source, a.interval_seconds, a.feature_names, {}};
  out.rows = counts.to_rows(a.interval_seconds);
  return out;
}

}  // namespace mbda
