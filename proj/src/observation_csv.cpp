#include "mbda/observation_csv.hpp"

#include "mbda/errors.hpp"

#include <charconv>
#include <ostream>

namespace mbda {

namespace {

void write_header(std::ostream& out, const std::vector<std::string>& names) {
  out << "timestamp";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
}

void write_row(std::ostream& out, Instant t, std::span<const std::uint64_t> counts) {
  std::string line = format_iso8601(t);
  char buf[24];
  for (std::uint64_t c : counts) {
    line.push_back(',');
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, c);
    line.append(buf, end);
  }
  line.push_back('\n');
  out << line;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t c = s.find(',', pos);
    out.push_back(s.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
    if (c == std::string_view::npos) break;
    pos = c + 1;
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

}  // namespace

void write_observations(std::ostream& out, const FusedMatrix& m) {
  write_header(out, m.feature_names);
  for (std::size_t i = 0; i < m.rows(); ++i) write_row(out, m.timestamps[i], m.row(i));
}

void write_observations(const std::string& path, const FusedMatrix& m) {
  auto out = open_out(path);
  write_observations(out, m);
  if (!out) throw DataError("failed writing '" + path + "'");
}

void write_stream(const std::string& path, const FeatureStream& stream) {
  auto out = open_out(path);
  std::vector<std::string> names;
  for (const auto& f : stream.feature_names) names.push_back(stream.source + "." + f);
  write_header(out, names);
  for (const auto& r : stream.rows) write_row(out, r.interval_start, r.counts);
  if (!out) throw DataError("failed writing '" + path + "'");
}

ObservationReader::ObservationReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw DataError("cannot open observation file '" + path + "'");
  if (!std::getline(in_, line_)) throw DataError(path + ": empty observation file");
  if (!line_.empty() && line_.back() == '\r') line_.pop_back();
  auto fields = split_commas(line_);
  if (fields.empty() || fields[0] != "timestamp") {
    throw DataError(path + ": header must start with 'timestamp'");
  }
  for (std::size_t i = 1; i < fields.size(); ++i) names_.emplace_back(fields[i]);
}

bool ObservationReader::next(Instant& timestamp, std::vector<std::uint64_t>& counts) {
  while (std::getline(in_, line_)) {
    ++line_no_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    if (line_.empty()) continue;
    const auto fields = split_commas(line_);
    const std::string where = path_ + ":" + std::to_string(line_no_);
    if (fields.size() != names_.size() + 1) {
      throw DataError(where + ": expected " + std::to_string(names_.size() + 1) + " fields, found " +
                      std::to_string(fields.size()));
    }
    const auto t = parse_iso8601(fields[0]);
    if (!t) throw DataError(where + ": bad timestamp '" + std::string(fields[0]) + "'");
    timestamp = *t;
    counts.resize(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) {
      const auto f = fields[i + 1];
      auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), counts[i]);
      if (ec != std::errc{} || end != f.data() + f.size()) {
        throw DataError(where + ": bad count '" + std::string(f) + "'");
      }
    }
    return true;
  }
  return false;
}

FusedMatrix read_observations(const std::string& path) {
  ObservationReader reader(path);
  FusedMatrix m;
  m.feature_names = reader.feature_names();
  Instant t;
  std::vector<std::uint64_t> row;
  while (reader.next(t, row)) {
    if (!m.timestamps.empty() && t <= m.timestamps.back()) {
      throw DataError(path + ": timestamps are not strictly increasing at " + format_iso8601(t));
    }
    m.timestamps.push_back(t);
    m.counts.insert(m.counts.end(), row.begin(), row.end());
  }
  return m;
}

FeatureStream read_stream(const std::string& path, std::int64_t interval_seconds) {
  FusedMatrix m = read_observations(path);
  FeatureStream s;
  s.interval_seconds = interval_seconds;
  for (const auto& q : m.feature_names) {
    const auto dot = q.find('.');
    if (dot == std::string::npos) throw DataError(path + ": column '" + q + "' is not source-qualified");
    const std::string src = q.substr(0, dot);
    if (s.source.empty()) s.source = src;
    if (src != s.source) throw DataError(path + ": columns from more than one source");
    s.feature_names.push_back(q.substr(dot + 1));
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    s.rows.push_back({m.timestamps[i], {r.begin(), r.end()}});
  }
  return s;
}

}  // namespace mbda
