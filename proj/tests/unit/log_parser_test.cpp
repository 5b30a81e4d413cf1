#include "mbda/config.hpp"
#include "mbda/errors.hpp"
#include "mbda/log_parser.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <zlib.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace mbda;
namespace fs = std::filesystem;

namespace {

const char* kConfig = R"(common_interval: 60
sources:
  - name: fw
    interval: 60
    timestamp_pattern: '^(\w{3} \d{2} \d{4} \d{2}:\d{2}:\d{2})'
    timestamp_format: '%b %d %Y %H:%M:%S'
    features:
      - {name: deny,   pattern: 'deny'}
      - {name: telnet, pattern: 'port 23'}
)";

LogLine line(const std::string& raw) { return {"fw", from_epoch(0), raw, 0}; }

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mbda_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_SUITE("log_parser") {
  TEST_CASE("timestamp extraction") {
    const PipelineConfig c = load_config(kConfig);
    const SourceSpec& s = c.sources[0];
    CHECK(extract_timestamp("Apr 05 2012 17:51:26 deny tcp src outside", s) ==
          parse_iso8601("2012-04-05T17:51:26Z"));
    CHECK_FALSE(extract_timestamp("no timestamp at all", s));
    CHECK_FALSE(extract_timestamp("Apr 35 2012 17:51:26 garbage", s));
  }

  TEST_CASE("feature counts use occurrence semantics") {
    const PipelineConfig c = load_config(kConfig);
    const std::vector<LogLine> two = {line("deny tcp dst port 23"), line("permit udp")};
    CHECK(count_features(two, c.sources[0]) == std::vector<std::uint64_t>{1, 1});
    const std::vector<LogLine> twice = {line("port 23 port 23")};
    CHECK(count_features(twice, c.sources[0])[1] == 2);
    CHECK(count_features({}, c.sources[0]) == std::vector<std::uint64_t>{0, 0});
  }

  TEST_CASE("floor bucketing and zero fill") {
    const PipelineConfig c = load_config(kConfig);
    const ParseResult r = parse_text(
        "Apr 05 2012 17:51:05 deny\n"
        "Apr 05 2012 17:51:59 port 23\n"
        "Apr 05 2012 17:52:01 deny deny\n"
        "garbage line\n"
        "Apr 05 2012 17:55:00 port 23\n",
        c.sources[0]);
    REQUIRE(r.stream.rows.size() == 5);
    CHECK(r.stream.rows[0].interval_start == *parse_iso8601("2012-04-05T17:51:00Z"));
    CHECK(r.stream.rows[0].counts == std::vector<std::uint64_t>{1, 1});
    CHECK(r.stream.rows[1].interval_start == *parse_iso8601("2012-04-05T17:52:00Z"));
    CHECK(r.stream.rows[1].counts == std::vector<std::uint64_t>{2, 0});
    CHECK(r.stream.rows[2].counts == std::vector<std::uint64_t>{0, 0});
    CHECK(r.stream.rows[3].counts == std::vector<std::uint64_t>{0, 0});
    CHECK(r.stream.rows[4].counts == std::vector<std::uint64_t>{0, 1});
    CHECK(r.stats.lines_read == 5);
    CHECK(r.stats.lines_unparseable == 1);
    CHECK(r.stats.intervals == 5);
    CHECK(r.stream.feature_names == std::vector<std::string>{"deny", "telnet"});
  }

  TEST_CASE("three lines in two minutes") {
    const PipelineConfig c = load_config(kConfig);
    const ParseResult r =
        parse_text("Apr 05 2012 17:51:05 a\nApr 05 2012 17:51:59 b\nApr 05 2012 17:52:01 c\n", c.sources[0]);
    REQUIRE(r.stream.rows.size() == 2);
    CHECK(format_iso8601(r.stream.rows[0].interval_start) == "2012-04-05T17:51:00Z");
    CHECK(format_iso8601(r.stream.rows[1].interval_start) == "2012-04-05T17:52:00Z");
  }

  TEST_CASE("carriage returns and missing final newline") {
    const PipelineConfig c = load_config(kConfig);
    const ParseResult a = parse_text("Apr 05 2012 17:51:05 deny\r\nApr 05 2012 17:51:06 deny", c.sources[0]);
    CHECK(a.stats.lines_read == 2);
    CHECK(a.stream.rows.at(0).counts[0] == 2);
    const ParseResult empty = parse_text("", c.sources[0]);
    CHECK(empty.stream.rows.empty());
    CHECK(empty.stats.lines_read == 0);
  }

  TEST_CASE("split at any line boundary and merge equals single pass") {
    const PipelineConfig c = load_config(testing::scenario_config());
    testing::ScenarioOptions o;
    o.intervals = 30;
    o.burst_first = 10;
    const testing::Scenario s = testing::make_scenario(o);
    const SourceSpec& fw = c.sources[0];
    const FeatureStream whole = parse_text(s.fw_text, fw).stream;

    std::vector<std::size_t> cuts;
    for (std::size_t i = 0; i < s.fw_text.size(); ++i) {
      if (s.fw_text[i] == '\n') cuts.push_back(i + 1);
    }
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
      const std::size_t cut = cuts[rng() % cuts.size()];
      const std::string_view text(s.fw_text);
      const FeatureStream a = parse_text(text.substr(0, cut), fw).stream;
      const FeatureStream b = parse_text(text.substr(cut), fw).stream;
      CHECK(merge_streams(a, b) == whole);
      CHECK(merge_streams(b, a) == whole);
    }
  }

  TEST_CASE("interval totals equal one count over all parseable lines") {
    const PipelineConfig c = load_config(testing::scenario_config());
    testing::ScenarioOptions o;
    o.intervals = 20;
    o.burst_first = 5;
    const testing::Scenario s = testing::make_scenario(o);
    for (std::size_t src = 0; src < 2; ++src) {
      const SourceSpec& spec = c.sources[src];
      const std::string& text = src == 0 ? s.fw_text : s.ids_text;
      const FeatureStream stream = parse_text(text, spec).stream;
      std::vector<LogLine> lines;
      std::size_t pos = 0;
      while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        lines.push_back(line(text.substr(pos, nl - pos)));
        pos = nl + 1;
      }
      const auto expected = count_features(lines, spec);
      std::vector<std::uint64_t> total(spec.features.size(), 0);
      for (const auto& r : stream.rows) {
        for (std::size_t f = 0; f < total.size(); ++f) total[f] += r.counts[f];
      }
      CHECK(total == expected);
    }
  }

  TEST_CASE("files, gzip and worker counts give the same stream") {
    const PipelineConfig c = load_config(testing::scenario_config());
    testing::ScenarioOptions o;
    o.intervals = 60;
    o.burst_first = 20;
    const testing::Scenario s = testing::make_scenario(o);
    const SourceSpec& fw = c.sources[0];
    const FeatureStream expected = parse_text(s.fw_text, fw).stream;

    const fs::path dir = temp_dir("parser");
    write_file(dir / "fw.log", s.fw_text);
    gzFile gz = gzopen((dir / "fw.log.gz").string().c_str(), "wb");
    gzwrite(gz, s.fw_text.data(), static_cast<unsigned>(s.fw_text.size()));
    gzclose(gz);
    const std::size_t half = s.fw_text.find('\n', s.fw_text.size() / 2) + 1;
    write_file(dir / "a.log", s.fw_text.substr(0, half));
    write_file(dir / "b.log", s.fw_text.substr(half));

    for (std::size_t workers : {1u, 2u, 3u}) {
      ParseOptions opt;
      opt.workers = workers;
      opt.block_bytes = 4096;
      CHECK(parse_source({(dir / "fw.log").string()}, fw, opt).stream == expected);
      CHECK(parse_source({(dir / "fw.log.gz").string()}, fw, opt).stream == expected);
      CHECK(parse_source({(dir / "b.log").string(), (dir / "a.log").string()}, fw, opt).stream == expected);
    }
    const ParseResult r = parse_source({(dir / "fw.log").string()}, fw);
    CHECK(r.stats.bytes_read == s.fw_text.size());
    CHECK_THROWS_AS(parse_source({(dir / "missing.log").string()}, fw), DataError);
    try {
      parse_source({(dir / "missing.log").string()}, fw);
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("missing.log") != std::string::npos);
    }
  }

  TEST_CASE("line reader keeps raw bytes and offsets") {
    const fs::path dir = temp_dir("reader");
    const std::string text = std::string("first \xff\xfe line\nsecond\n\nfourth");
    write_file(dir / "raw.log", text);
    std::vector<std::pair<std::string, std::uint64_t>> got;
    for_each_line((dir / "raw.log").string(),
                  [&](std::string_view l, std::uint64_t off) { got.emplace_back(std::string(l), off); });
    REQUIRE(got.size() == 4);
    CHECK(got[0].first == "first \xff\xfe line");
    CHECK(got[1] == std::make_pair(std::string("second"), std::uint64_t{14}));
    CHECK(got[2].first.empty());
    CHECK(got[3] == std::make_pair(std::string("fourth"), std::uint64_t{22}));
  }
}
