// Acceptance suite: one PASS/FAIL/SKIP line per criterion, nonzero exit on any FAIL.

#include "mbda/commands.hpp"
#include "mbda/config.hpp"
#include "mbda/diagnosis.hpp"
#include "mbda/fusion.hpp"
#include "mbda/log_parser.hpp"
#include "mbda/monitor.hpp"
#include "mbda/observation_csv.hpp"
#include "mbda/pca.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace mbda;
namespace fs = std::filesystem;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kFail;
  std::string detail;
};

Outcome fail(std::string detail) { return {Status::kFail, std::move(detail)}; }
Outcome skip(std::string detail) { return {Status::kSkip, std::move(detail)}; }
Outcome verdict(bool ok, std::string detail) { return {ok ? Status::kPass : Status::kFail, std::move(detail)}; }

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<double> random_weights(std::size_t m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1.0, 10.0);
  std::vector<double> w(m);
  for (auto& v : w) v = rng() % 2 ? 1.0 : u(rng);
  return w;
}

PcaModel fit_chunked(const Matrix& raw, std::span<const double> weights, const ComponentPolicy& policy,
                     Eigen::Index chunk) {
  MomentAccumulator moments(static_cast<std::size_t>(raw.cols()));
  for (Eigen::Index r = 0; r < raw.rows(); r += chunk) moments.add(raw.middleRows(r, std::min(chunk, raw.rows() - r)));
  PreprocessParams pre = finish_preprocess(moments, weights, Scaling::kAutoscale);
  CrossProductAccumulator acc(static_cast<std::size_t>(raw.cols()));
  for (Eigen::Index r = 0; r < raw.rows(); r += chunk) {
    acc.accumulate(apply_preprocess_rows(raw.middleRows(r, std::min(chunk, raw.rows() - r)), pre));
  }
  return fit_pca(acc, policy, std::move(pre));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "mbda_acceptance" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// 1. Streaming PCA against a dense decomposition.
Outcome pca_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double worst_eig = 0.0;
  double worst_angle = 0.0;
  double worst_stat = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix raw = testing::random_counts(200, 20, rng);
    const auto w = random_weights(20, rng);
    const Eigen::VectorXd weights = Eigen::Map<const Eigen::VectorXd>(w.data(), 20);
    const testing::DensePca dense = testing::dense_pca(raw, weights);
    const std::size_t a = 1 + rng() % 19;
    const testing::DenseStatistics stats = testing::dense_statistics(dense, a);
    for (Eigen::Index chunk : {1, 7, 50, 200}) {
      const PcaModel full = fit_chunked(raw, w, FixedComponents{20}, chunk);
      for (Eigen::Index k = 0; k < 20; ++k) {
        worst_eig = std::max(worst_eig, rel(full.all_eigenvalues[k], dense.eigenvalues[k]));
        worst_angle = std::max(worst_angle, testing::axis_angle(full.loadings.col(k), dense.eigenvectors.col(k)));
      }
      const PcaModel m = fit_chunked(raw, w, FixedComponents{a}, chunk);
      const StatisticsEvaluator eval(m);
      const Matrix x = apply_preprocess_rows(raw, m.preprocess);
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const auto r = eval.evaluate_preprocessed(x.row(i).transpose());
        worst_stat = std::max({worst_stat, std::abs(r.d - stats.d[i]), std::abs(r.q - stats.q[i])});
      }
    }
  }
  const double elapsed = seconds_since(t0);
  const bool ok = worst_eig <= 1e-8 && worst_angle <= 1e-6 && worst_stat <= 1e-8 && elapsed < 5.0;
  return verdict(ok, "max eigenvalue rel err " + fmt("%.2e", worst_eig) + ", max loading angle " +
                         fmt("%.2e", worst_angle) + " rad, max |dD|,|dQ| " + fmt("%.2e", worst_stat) + ", " +
                         fmt("%.2f", elapsed) + " s");
}

// 2. Calibration identities and the nearest-rank exceedance guarantee.
Outcome calibration_identities() {
  std::mt19937_64 rng(2002);
  double worst_mean = 0.0;
  double worst_split = 0.0;
  std::string exceed_detail;
  bool exceed_ok = true;
  bool ucl_ok = true;
  for (std::size_t n : {50, 101, 200, 537, 1000, 2345}) {
    const std::size_t m = 5 + rng() % 30;
    const Matrix raw = testing::random_counts(n, m, rng);
    const auto w = random_weights(m, rng);
    for (const ComponentPolicy& policy : {ComponentPolicy{FixedComponents{1 + rng() % (m - 1)}},
                                          ComponentPolicy{VarianceFraction{0.8}}}) {
      const PcaModel model = fit_chunked(raw, w, policy, 64);
      const StatisticsEvaluator eval(model);
      const Matrix x = apply_preprocess_rows(raw, model.preprocess);
      std::vector<double> d;
      std::vector<double> q;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Vector xi = x.row(i).transpose();
        const auto r = eval.evaluate_preprocessed(xi);
        d.push_back(r.d);
        q.push_back(r.q);
        const Vector t = project(xi, model);
        const double lhs = xi.squaredNorm();
        const double rhs = t.squaredNorm() + residual(xi, t, model).squaredNorm();
        if (lhs > 0.0) worst_split = std::max(worst_split, rel(rhs, lhs));
      }
      double mean_d = 0.0;
      for (double v : d) mean_d += v;
      mean_d /= static_cast<double>(n);
      const double a = static_cast<double>(model.components);
      worst_mean = std::max(worst_mean, rel(mean_d, a * static_cast<double>(n - 1) / static_cast<double>(n)));

      const ControlLimits limits = compute_limits(d, q, 0.99);
      ucl_ok = ucl_ok && limits.ucl_d == testing::order_statistic_ucl(d, 99, 100) &&
               limits.ucl_q == testing::order_statistic_ucl(q, 99, 100);
      const auto cap = static_cast<std::size_t>((n + 99) / 100);
      const auto above_d = static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [&](double v) { return v > limits.ucl_d; }));
      const auto above_q = static_cast<std::size_t>(std::count_if(q.begin(), q.end(), [&](double v) { return v > limits.ucl_q; }));
      if (above_d > cap || above_q > cap) {
        exceed_ok = false;
        exceed_detail += " N=" + std::to_string(n) + ":" + std::to_string(above_d) + "/" + std::to_string(above_q);
      }
    }
  }
  const bool ok = worst_mean <= 1e-6 && worst_split <= 1e-8 && exceed_ok && ucl_ok;
  return verdict(ok, "mean D rel err " + fmt("%.2e", worst_mean) + ", split rel err " + fmt("%.2e", worst_split) +
                         ", exceedance within ceil(0.01 N): " + (exceed_ok ? "yes" : "no" + exceed_detail) +
                         ", UCL equals order statistic: " + (ucl_ok ? "yes" : "no"));
}

// 3. Tscore limits, pivot and monotonicity.
Outcome tscore_properties() {
  std::mt19937_64 rng(3003);
  std::uniform_real_distribution<double> stat(0.0, 100.0);
  std::uniform_real_distribution<double> lim(0.01, 50.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t bad_ends = 0;
  std::size_t bad_pivot = 0;
  std::size_t bad_mono = 0;
  for (int i = 0; i < 10000; ++i) {
    const ControlLimits limits{lim(rng), lim(rng), 0.99, 0};
    const double d = stat(rng);
    const double q = stat(rng);
    const double alpha = i % 17 == 0 ? 0.0 : i % 19 == 0 ? 1.0 : unit(rng);
    if (tscore(d, q, limits, 1.0) != d / limits.ucl_d) ++bad_ends;
    if (tscore(d, q, limits, 0.0) != q / limits.ucl_q) ++bad_ends;
    if (std::abs(tscore(limits.ucl_d, limits.ucl_q, limits, alpha) - 1.0) > 4 * std::numeric_limits<double>::epsilon()) {
      ++bad_pivot;
    }
    const double t = tscore(d, q, limits, alpha);
    const double dd = d + stat(rng) + 1e-3;
    const double dq = q + stat(rng) + 1e-3;
    const double td = tscore(dd, q, limits, alpha);
    const double tq = tscore(d, dq, limits, alpha);
    if (td < t || tq < t) ++bad_mono;
    if ((alpha > 0.0 && !(td > t)) || (alpha < 1.0 && !(tq > t))) ++bad_mono;
  }
  const bool ok = bad_ends == 0 && bad_pivot == 0 && bad_mono == 0;
  return verdict(ok, "10000 triples: endpoint mismatches " + std::to_string(bad_ends) + ", pivot mismatches " +
                         std::to_string(bad_pivot) + ", monotonicity violations " + std::to_string(bad_mono));
}

// 4. Univariate-squared contributions.
Outcome us_property() {
  std::mt19937_64 rng(4004);
  std::normal_distribution<double> g(0.0, 4.0);
  std::size_t bad_values = 0;
  double worst_sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 300);
    Vector x(m);
    for (auto& v : x) v = rng() % 10 == 0 ? 0.0 : g(rng);
    std::vector<std::string> names(static_cast<std::size_t>(m), "s.f");
    const ContributionVector c = us_contributions(x, std::move(names));
    for (Eigen::Index k = 0; k < m; ++k) {
      const double sign = x[k] > 0.0 ? 1.0 : x[k] < 0.0 ? -1.0 : 0.0;
      if (c.values[k] != sign * x[k] * x[k]) ++bad_values;
    }
    const double expected = x.dot(x.cwiseAbs());
    worst_sum = std::max({worst_sum, std::abs(c.values.sum() - expected) / std::max(1.0, c.values.cwiseAbs().sum()),
                          std::abs(c.scalar - expected) / std::max(1.0, c.values.cwiseAbs().sum())});
  }
  const bool ok = bad_values == 0 && worst_sum <= 1e-10;
  return verdict(ok, "10000 vectors: value mismatches " + std::to_string(bad_values) + ", sum rel err " +
                         fmt("%.2e", worst_sum));
}

// 5. De-parsing against brute-force level extraction.
Outcome deparse_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(5005);
  const std::vector<std::string> pool = {"deny",   "accept",     "port 22\\b", "port 5900", "tcp",
                                         "udp",    "icmp",       "flags S+",   "dst [0-9]+\\.1\\b",
                                         "scan",   "\\[\\*\\*\\]", "prio=[12]", "user root", "ssh",
                                         "vnc",    "ERROR",      "x{2,3}y"};
  const std::vector<std::string> tokens = {"deny",  "accept", "port 22",  "port 5900", "tcp",    "udp",  "icmp",
                                           "flags SS", "dst 10.1", "dst 7.1", "scan",  "[**]", "prio=1", "prio=3",
                                           "user root", "ssh",   "vnc",  "ERROR", "xxy", "xy", "filler"};
  std::size_t mismatches = 0;
  std::size_t retrieved = 0;
  for (int corpus = 0; corpus < 100; ++corpus) {
    std::vector<std::string> patterns = pool;
    std::shuffle(patterns.begin(), patterns.end(), rng);
    patterns.resize(1 + rng() % 10);
    std::string doc = "common_interval: 60\nsources:\n  - name: s\n    interval: 60\n"
                      "    timestamp_pattern: '^(\\d+)'\n    timestamp_format: '%s'\n    features:\n";
    for (std::size_t f = 0; f < patterns.size(); ++f) {
      doc += "      - {name: f" + std::to_string(f) + ", pattern: '" + patterns[f] + "'}\n";
    }
    const PipelineConfig config = load_config(doc);

    std::vector<std::string> feature_names;
    std::vector<std::string> feature_patterns;
    for (std::size_t f = 0; f < patterns.size(); ++f) {
      if (f == 0 || rng() % 3 != 0) {
        feature_names.push_back("f" + std::to_string(f));
        feature_patterns.push_back(patterns[f]);
      }
    }
    std::vector<LogLine> lines;
    std::vector<std::string> raw;
    const std::size_t n = rng() % 1001;
    for (std::size_t i = 0; i < n; ++i) {
      std::string l = std::to_string(1000 + i);
      const std::size_t words = rng() % 6;
      for (std::size_t k = 0; k < words; ++k) l += " " + tokens[rng() % tokens.size()];
      raw.push_back(l);
      lines.push_back({"s", from_epoch(0), l, i});
    }
    const std::size_t threshold = 1 + rng() % 1200;
    const SourceDeparse d = deparse_lines(config.sources[0], lines, feature_names, threshold);
    const auto expected = testing::brute_force_deparse(raw, feature_patterns, threshold);
    bool same = d.lines.size() == expected.size();
    for (std::size_t i = 0; same && i < expected.size(); ++i) same = d.lines[i].line.raw == raw[expected[i]];
    if (!same) ++mismatches;
    retrieved += d.lines.size();
  }
  const double elapsed = seconds_since(t0);
  return verdict(mismatches == 0 && elapsed < 10.0,
                 "100 corpora: " + std::to_string(mismatches) + " mismatches, " + std::to_string(retrieved) +
                     " lines retrieved, " + fmt("%.2f", elapsed) + " s");
}

// 6. Any line-boundary partition parses to the same fused CSV.
Outcome parse_determinism() {
  PipelineConfig config = load_config(testing::scenario_config());
  config.sources.resize(1);
  const SourceSpec& spec = config.sources[0];
  const std::string text = testing::firewall_corpus(100000, 6006);

  auto csv = [&](const FeatureStream& s) {
    const std::vector<FeatureStream> one = {s};
    std::ostringstream out;
    write_observations(out, fuse_with_config(one, config));
    return out.str();
  };
  const std::string reference = csv(parse_text(text, spec).stream);

  std::vector<std::size_t> starts;
  for (std::size_t p = 0; p < text.size();) {
    starts.push_back(p);
    p = text.find('\n', p);
    if (p == std::string::npos) break;
    ++p;
  }
  std::mt19937_64 rng(6006);
  std::size_t differing = 0;
  const int partitions = 30;
  for (int trial = 0; trial < partitions; ++trial) {
    const std::size_t pieces = 2 + rng() % 40;
    std::set<std::size_t> cuts;
    while (cuts.size() < pieces - 1) cuts.insert(starts[1 + rng() % (starts.size() - 1)]);
    cuts.insert(text.size());
    FeatureStream merged;
    std::size_t from = 0;
    bool first = true;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (std::size_t to : cuts) {
      ranges.emplace_back(from, to);
      from = to;
    }
    if (trial % 2) std::shuffle(ranges.begin(), ranges.end(), rng);
    for (const auto& [a, b] : ranges) {
      const FeatureStream part = parse_text(std::string_view(text).substr(a, b - a), spec).stream;
      merged = first ? part : merge_streams(merged, part);
      first = false;
    }
    if (csv(merged) != reference) ++differing;
  }

  const fs::path dir = scratch("determinism");
  write_file(dir / "fw.log", text);
  std::size_t differing_files = 0;
  for (std::size_t workers : {1, 2, 3, 8}) {
    for (std::size_t block : {std::size_t{4096}, std::size_t{65537}, std::size_t{4u << 20}}) {
      ParseOptions o;
      o.workers = workers;
      o.block_bytes = block;
      if (csv(parse_source({(dir / "fw.log").string()}, spec, o).stream) != reference) ++differing_files;
    }
  }
  return verdict(differing == 0 && differing_files == 0,
                 "100000 lines: " + std::to_string(differing) + "/" + std::to_string(partitions) +
                     " random partitions differ, " + std::to_string(differing_files) +
                     "/12 worker and block settings differ");
}

// Lines of a deparse_<source>.txt file with the fscore column removed.
std::vector<std::string> deparsed_lines(const fs::path& path) {
  std::vector<std::string> out;
  std::ifstream in(path);
  std::string l;
  while (std::getline(in, l)) out.push_back(l.substr(l.find('\t') + 1));
  return out;
}

// 7. Planted scan burst end to end.
Outcome end_to_end() {
  const auto t0 = Clock::now();
  const testing::Scenario sc = testing::make_scenario({});
  const fs::path dir = scratch("scenario");
  write_file(dir / "config.yaml", testing::scenario_config());
  write_file(dir / "fw.log", sc.fw_text);
  write_file(dir / "ids.log", sc.ids_text);

  CommandOptions o;
  o.config_path = (dir / "config.yaml").string();
  o.inputs = {"fw=" + (dir / "fw.log").string(), "ids=" + (dir / "ids.log").string()};
  o.out_dir = (dir / "out").string();
  o.threshold = 500;
  o.workers = 1;
  const auto t_run = Clock::now();
  cmd_run(o);
  const double run_seconds = seconds_since(t_run);
  const fs::path out = dir / "out";

  std::ifstream anomalies(out / "anomalies.jsonl");
  std::string first;
  std::getline(anomalies, first);
  if (first.empty()) return fail("no anomalies reported");
  const auto a = nlohmann::json::parse(first);
  const Instant ws = *parse_iso8601(a.at("window_start").get<std::string>());
  const Instant we = *parse_iso8601(a.at("window_end").get<std::string>());
  const bool covers = ws <= sc.burst_start && we >= sc.burst_end;

  std::ifstream monitor(out / "calibration_monitor.csv");
  std::string row;
  std::getline(monitor, row);
  double best = -1.0;
  std::string peak;
  while (std::getline(monitor, row)) {
    const double t = std::stod(row.substr(row.rfind(',') + 1));
    if (t > best) {
      best = t;
      peak = row.substr(0, row.find(','));
    }
  }
  const Instant peak_at = *parse_iso8601(peak);
  const bool peak_in_burst = peak_at >= sc.burst_start && peak_at <= sc.burst_end;

  std::size_t retrieved = 0;
  std::size_t true_pos = 0;
  for (const char* src : {"fw", "ids"}) {
    for (const auto& l : deparsed_lines(out / "anomaly_1" / (std::string("deparse_") + src + ".txt"))) {
      ++retrieved;
      true_pos += sc.planted.count(l);
    }
  }
  const auto summary = nlohmann::json::parse(read_file(out / "anomaly_1" / "deparse_summary.json"));
  std::uint64_t in_window = 0;
  for (const auto& s : summary.at("sources")) in_window += s.at("lines_in_window").get<std::uint64_t>();
  const std::size_t false_pos = retrieved - true_pos;
  const double precision = retrieved ? static_cast<double>(true_pos) / static_cast<double>(retrieved) : 0.0;
  const double recall = static_cast<double>(true_pos) / static_cast<double>(sc.planted_count);
  const double negatives = static_cast<double>(in_window) - static_cast<double>(sc.planted_count);
  const double tnr = negatives > 0 ? (negatives - static_cast<double>(false_pos)) / negatives : 1.0;
  const double elapsed = seconds_since(t0);

  const bool ok = covers && peak_in_burst && precision >= 0.99 && tnr >= 0.99 && recall >= 0.95 && elapsed < 60.0;
  return verdict(ok, std::string("rank-1 window ") + format_iso8601(ws) + ".." + format_iso8601(we) +
                         (covers ? " covers" : " misses") + " the burst, peak " + peak +
                         (peak_in_burst ? " inside" : " outside") + "; " + std::to_string(true_pos) + "/" +
                         std::to_string(retrieved) + " retrieved lines planted (specificity " +
                         fmt("%.4f", precision) + ", true negative rate " + fmt("%.4f", tnr) + "), recall " +
                         fmt("%.4f", recall) + "; run " + fmt("%.1f", run_seconds) + " s, total " +
                         fmt("%.1f", elapsed) + " s");
}

// 8. VAST 2012 mini-challenge 2, when the corpus and a replicated configuration are supplied.
Outcome vast_dataset() {
  const char* config = std::getenv("MBDA_VAST_CONFIG");
  const char* fw = std::getenv("MBDA_VAST_FIREWALL");
  const char* ids = std::getenv("MBDA_VAST_IDS");
  if (!config || !fw || !ids) {
    return skip("set MBDA_VAST_CONFIG, MBDA_VAST_FIREWALL and MBDA_VAST_IDS to run against the VAST 2012 corpus");
  }
  const fs::path out = scratch("vast");
  CommandOptions o;
  o.config_path = config;
  o.inputs = {std::string("fw=") + fw, std::string("ids=") + ids};
  o.out_dir = out.string();
  o.coalesce = false;
  const std::size_t workers = std::thread::hardware_concurrency();
  o.workers = workers ? workers : 1;
  cmd_run(o);

  const FusedMatrix m = read_observations((out / "fused.csv").string());
  const bool shape = m.rows() == 2345 && m.cols() == 265;
  std::set<std::size_t> top;
  std::ifstream anomalies(out / "anomalies.jsonl");
  std::string line;
  while (std::getline(anomalies, line)) {
    const Instant t = *parse_iso8601(nlohmann::json::parse(line).at("window_start").get<std::string>());
    const auto it = std::lower_bound(m.timestamps.begin(), m.timestamps.end(), t);
    top.insert(static_cast<std::size_t>(it - m.timestamps.begin()) + 1);
  }
  const std::set<std::size_t> expected = {369, 370, 1413, 389, 384};
  std::uint64_t lines = 0;
  for (int rank = 1; rank <= 5; ++rank) {
    const fs::path summary = out / ("anomaly_" + std::to_string(rank)) / "deparse_summary.json";
    if (!fs::exists(summary)) continue;
    const auto j = nlohmann::json::parse(read_file(summary));
    lines += j.at("totals").at("lines_retrieved").get<std::uint64_t>();
  }
  const bool count_ok = lines >= 360 && lines <= 540;
  std::string got;
  for (std::size_t v : top) got += (got.empty() ? "" : ",") + std::to_string(v);
  return verdict(shape && top == expected && count_ok,
                 std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " matrix, top-5 {" + got + "}, " +
                     std::to_string(lines) + " lines de-parsed");
}

// 9. Single-thread parse throughput with 100 features.
Outcome throughput() {
  const PipelineConfig config = load_config(testing::throughput_config());
  const SourceSpec& spec = config.sources[0];
  const std::string text = testing::firewall_corpus(400000, 9009, 200);
  double best = 0.0;
  std::uint64_t lines = 0;
  for (int rep = 0; rep < 3; ++rep) {
    const auto t0 = Clock::now();
    SourceParser parser(spec);
    parser.add_text(text);
    const double s = seconds_since(t0);
    lines = parser.stats().lines_read;
    best = std::max(best, static_cast<double>(text.size()) / 1e6 / s);
  }
  return verdict(best >= 50.0, fmt("%.1f", best) + " MB/s over " + fmt("%.1f", static_cast<double>(text.size()) / 1e6) +
                                   " MB (" + std::to_string(lines) + " lines, " +
                                   std::to_string(spec.features.size()) + " features)");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "PCA oracle equivalence", pca_oracle},
      {2, "calibration identities", calibration_identities},
      {3, "Tscore properties", tscore_properties},
      {4, "univariate-squared property", us_property},
      {5, "de-parsing oracle", deparse_oracle},
      {6, "parse determinism", parse_determinism},
      {7, "end-to-end planted burst", end_to_end},
      {8, "VAST 2012 dataset", vast_dataset},
      {9, "parse throughput", throughput},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kSkip ? "SKIP" : "FAIL";
    if (o.status == Status::kFail) ++failed;
    std::cout << tag << "  " << c.id << "  " << c.name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
