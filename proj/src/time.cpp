#include "mbda/time.hpp"

#include <cstdio>
#include <ctime>

namespace mbda {

Instant floor_to_interval(Instant t, std::int64_t interval_seconds) {
  const std::int64_t s = epoch_seconds(t);
  std::int64_t q = s / interval_seconds;
  if (s % interval_seconds != 0 && s < 0) --q;
  return from_epoch(q * interval_seconds);
}

std::string format_iso8601(Instant t) {
  const std::time_t tt = static_cast<std::time_t>(epoch_seconds(t));
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<Instant> parse_iso8601(std::string_view text) {
  if (!text.empty() && (text.back() == 'Z' || text.back() == 'z')) text.remove_suffix(1);
  if (text.size() != 19 || (text[10] != 'T' && text[10] != ' ')) return std::nullopt;
  std::string copy(text);
  copy[10] = 'T';
  return parse_with_format(copy, "%Y-%m-%dT%H:%M:%S");
}

std::optional<Instant> parse_with_format(const std::string& text, const std::string& format,
                                         std::int64_t utc_offset_seconds) {
  std::tm tm{};
  tm.tm_year = 70;
  tm.tm_mday = 1;
  const char* end = strptime(text.c_str(), format.c_str(), &tm);
  if (end == nullptr || *end != '\0') return std::nullopt;
  tm.tm_isdst = 0;
  const std::time_t t = timegm(&tm);
  return from_epoch(static_cast<std::int64_t>(t) - utc_offset_seconds);
}

}  // namespace mbda
