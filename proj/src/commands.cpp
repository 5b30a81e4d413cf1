#include "mbda/commands.hpp"

#include "mbda/config.hpp"
#include "mbda/diagnosis.hpp"
#include "mbda/errors.hpp"
#include "mbda/fusion.hpp"
#include "mbda/log_parser.hpp"
#include "mbda/model_io.hpp"
#include "mbda/observation_csv.hpp"
#include "mbda/pca.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace mbda {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr Eigen::Index kChunkRows = 4096;

std::string out_path(const CommandOptions& o, const std::string& name) {
  return (fs::path(o.out_dir) / name).string();
}

void ensure_out_dir(const CommandOptions& o) {
  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec) throw DataError("cannot create output directory '" + o.out_dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

void write_json(const std::string& path, const ordered_json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

class Manifest {
 public:
  Manifest(std::string command, const CommandOptions& options) : command_(std::move(command)), options_(options) {}

  void config(const PipelineConfig& c) { digest_ = c.digest; }
  void input(const std::string& path) {
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    inputs_.push_back({{"path", path}, {"bytes", ec ? 0 : size}});
  }
  void count(const std::string& name, std::uint64_t value) { counts_[name] = value; }

  template <typename F>
  auto step(const std::string& name, F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      timings_[name] =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto result = fn();
      finish();
      return result;
    }
  }

  void write() const {
    ordered_json j;
    j["tool"] = "mbda";
    j["version"] = kToolVersion;
    j["command"] = command_;
    j["config_digest"] = digest_;
    j["inputs"] = inputs_;
    j["timings_ms"] = timings_;
    j["counts"] = counts_;
    write_json(out_path(options_, "manifest_" + command_ + ".json"), j);
  }

 private:
  std::string command_;
  const CommandOptions& options_;
  std::string digest_;
  ordered_json inputs_ = ordered_json::array();
  ordered_json timings_ = ordered_json::object();
  ordered_json counts_ = ordered_json::object();
};

PipelineConfig require_config(const CommandOptions& o) {
  if (o.config_path.empty()) throw ConfigError("--config is required");
  return load_config_file(o.config_path);
}

std::vector<std::string> source_names(const PipelineConfig& c) {
  std::vector<std::string> names;
  for (const auto& s : c.sources) names.push_back(s.name);
  return names;
}

std::map<std::string, std::vector<std::string>> raw_inputs(const CommandOptions& o, const PipelineConfig& c) {
  if (o.inputs.empty()) throw ConfigError("at least one --input is required");
  std::map<std::string, std::vector<std::string>> by_source;
  for (const auto& arg : o.inputs) {
    auto [src, path] = split_source_input(arg, source_names(c));
    by_source[src].push_back(path);
  }
  return by_source;
}

const std::string& single_input(const CommandOptions& o, const char* what) {
  if (o.inputs.size() != 1) throw ConfigError(std::string("expected exactly one --input (") + what + ")");
  return o.inputs.front();
}

std::pair<Instant, Instant> require_window(const CommandOptions& o) {
  if (!o.window) throw ConfigError("--window START END is required");
  if (o.window->second < o.window->first) throw ConfigError("--window END precedes START");
  return *o.window;
}

std::set<Instant> read_exclusions(const std::string& path) {
  std::set<Instant> out;
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw DataError("cannot read exclusion file '" + path + "'");
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto t = parse_iso8601(line);
    if (!t) throw DataError(path + ":" + std::to_string(no) + ": bad timestamp '" + line + "'");
    out.insert(*t);
  }
  return out;
}

// Streams observation rows in chunks, skipping excluded timestamps.
template <typename F>
void for_each_chunk(const std::string& path, const std::set<Instant>& excluded, F&& on_chunk) {
  ObservationReader reader(path);
  const auto m = static_cast<Eigen::Index>(reader.feature_names().size());
  Matrix chunk(kChunkRows, m);
  std::vector<Instant> stamps;
  Eigen::Index filled = 0;
  Instant t;
  std::vector<std::uint64_t> row;
  auto flush = [&] {
    if (filled == 0) return;
    on_chunk(chunk.topRows(filled), std::span<const Instant>(stamps));
    filled = 0;
    stamps.clear();
  };
  while (reader.next(t, row)) {
    if (excluded.count(t)) continue;
    for (Eigen::Index j = 0; j < m; ++j) chunk(filled, j) = static_cast<double>(row[static_cast<std::size_t>(j)]);
    stamps.push_back(t);
    if (++filled == kChunkRows) flush();
  }
  flush();
}

std::vector<std::string> observation_names(const std::string& path) {
  return ObservationReader(path).feature_names();
}

void check_names(const std::vector<std::string>& got, const std::vector<std::string>& want,
                 const std::string& what) {
  if (got != want) {
    throw DataError(what + ": feature columns do not match (" + std::to_string(got.size()) + " vs " +
                    std::to_string(want.size()) + " features)");
  }
}

PcaModel fit_model(const std::string& path, const PipelineConfig& config, const std::set<Instant>& excluded) {
  const auto weights = config.weights();
  MomentAccumulator moments(weights.size());
  for_each_chunk(path, excluded, [&](const auto& chunk, auto) { moments.add(chunk); });
  PreprocessParams pre = finish_preprocess(moments, weights, config.scaling);

  CrossProductAccumulator xtx(weights.size());
  for_each_chunk(path, excluded,
                 [&](const auto& chunk, auto) { xtx.accumulate(apply_preprocess_rows(chunk, pre)); });
  return fit_pca(xtx, config.component_policy, std::move(pre));
}

std::vector<MonitorRecord> evaluate_rows(const std::string& path, const PcaModel& model,
                                         const std::set<Instant>& excluded) {
  StatisticsEvaluator eval(model);
  std::vector<MonitorRecord> records;
  for_each_chunk(path, excluded, [&](const auto& chunk, std::span<const Instant> stamps) {
    const Matrix x = apply_preprocess_rows(chunk, model.preprocess);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto r = eval.evaluate_preprocessed(x.row(i).transpose());
      records.push_back({stamps[static_cast<std::size_t>(i)], r.d, r.q, 0.0});
    }
  });
  return records;
}

void write_monitor_csv(const std::string& path, std::span<const MonitorRecord> records) {
  auto out = open_out(path);
  out << "timestamp,d,q,tscore\n";
  for (const auto& r : records) {
    out << format_iso8601(r.timestamp) << ',' << format_double(r.d) << ',' << format_double(r.q) << ','
        << format_double(r.tscore) << '\n';
  }
}

void write_anomalies(const std::string& path, std::span<const Anomaly> anomalies) {
  auto out = open_out(path);
  for (const auto& a : anomalies) {
    ordered_json j;
    j["window_start"] = format_iso8601(a.window_start);
    j["window_end"] = format_iso8601(a.window_end);
    j["tscore_max"] = a.tscore_max;
    j["rank"] = a.rank;
    out << j.dump() << '\n';
  }
}

void write_clusters(const std::string& path, std::span<const ClusterPoint> clusters) {
  auto out = open_out(path);
  out << "centroid_d,centroid_q,multiplicity,members\n";
  for (const auto& c : clusters) {
    out << format_double(c.centroid_d) << ',' << format_double(c.centroid_q) << ',' << c.multiplicity << ',';
    for (std::size_t i = 0; i < c.members.size(); ++i) {
      if (i) out << ';';
      out << format_iso8601(c.members[i]);
    }
    out << '\n';
  }
}

void write_monitoring(const CommandOptions& o, const PipelineConfig& config, std::span<const MonitorRecord> records,
                      const ControlLimits& limits, const std::string& csv_name, Manifest& manifest) {
  write_monitor_csv(out_path(o, csv_name), records);
  const auto anomalies = triage(records, limits, o.top_k, o.coalesce, config.common_interval_seconds);
  write_anomalies(out_path(o, "anomalies.jsonl"), anomalies);
  const auto clusters = manifest.step("cluster_plot", [&] {
    return cluster_plot(records, limits, o.max_clusters.value_or(config.max_clusters), config.cluster_member_cap);
  });
  write_clusters(out_path(o, "cluster_plot.csv"), clusters);
  std::uint64_t exceed = 0;
  for (const auto& r : records) exceed += exceeds_limits(r, limits) ? 1 : 0;
  manifest.count("observations", records.size());
  manifest.count("above_limits", exceed);
  manifest.count("anomalies", anomalies.size());
}

ordered_json selected_json(const SelectedFeatures& s) {
  ordered_json arr = ordered_json::array();
  for (const auto& f : s.features) arr.push_back({{"feature", f.name}, {"contribution", f.contribution}});
  return arr;
}

SelectedFeatures read_features(const std::string& spec) {
  SelectedFeatures out;
  if (spec.empty()) throw ConfigError("--features is required");
  if (fs::exists(spec)) {
    std::ifstream in(spec);
    try {
      const json j = json::parse(in);
      for (const auto& f : j.at("selected")) {
        out.features.push_back({f.at("feature").get<std::string>(), 0, f.at("contribution").get<double>()});
      }
    } catch (const json::exception& e) {
      throw DataError(spec + ": not a diagnosis file: " + e.what());
    }
    return out;
  }
  std::stringstream ss(spec);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (!name.empty()) out.features.push_back({name, 0, 0.0});
  }
  return out;
}

}  // namespace

std::pair<std::string, std::string> split_source_input(const std::string& arg,
                                                       const std::vector<std::string>& names) {
  const auto eq = arg.find('=');
  if (eq != std::string::npos) {
    const std::string src = arg.substr(0, eq);
    for (const auto& n : names) {
      if (n == src) return {src, arg.substr(eq + 1)};
    }
  }
  if (names.size() == 1) return {names.front(), arg};
  throw ConfigError("input '" + arg + "' must be given as SOURCE=PATH with a configured source name");
}

void cmd_parse(const CommandOptions& o) {
  const PipelineConfig config = require_config(o);
  const auto inputs = raw_inputs(o, config);
  ensure_out_dir(o);
  Manifest manifest("parse", o);
  manifest.config(config);

  ordered_json stats = ordered_json::object();
  std::uint64_t parseable = 0;
  for (const auto& spec : config.sources) {
    auto it = inputs.find(spec.name);
    const std::vector<std::string> paths = it == inputs.end() ? std::vector<std::string>{} : it->second;
    for (const auto& p : paths) manifest.input(p);
    ParseOptions popt;
    popt.workers = o.workers;
    const ParseResult r = manifest.step("parse_" + spec.name, [&] { return parse_source(paths, spec, popt); });
    write_stream(out_path(o, "stream_" + spec.name + ".csv"), r.stream);
    stats[spec.name] = {{"inputs", paths},
                        {"bytes_read", r.stats.bytes_read},
                        {"lines_read", r.stats.lines_read},
                        {"lines_unparseable", r.stats.lines_unparseable},
                        {"intervals", r.stats.intervals}};
    manifest.count(spec.name + ".lines_read", r.stats.lines_read);
    manifest.count(spec.name + ".lines_unparseable", r.stats.lines_unparseable);
    manifest.count(spec.name + ".intervals", r.stats.intervals);
    if (r.stats.lines_unparseable > 0) {
      std::cerr << "warning: source '" << spec.name << "': " << r.stats.lines_unparseable << " of "
                << r.stats.lines_read << " lines have no parseable timestamp\n";
    }
    parseable += r.stats.lines_read - r.stats.lines_unparseable;
  }
  write_json(out_path(o, "parse_stats.json"), stats);
  manifest.write();
  if (parseable == 0) throw DataError("no parseable log lines in any input");
}

void cmd_fuse(const CommandOptions& o) {
  const PipelineConfig config = require_config(o);
  if (o.inputs.empty()) throw ConfigError("at least one --input stream file is required");
  ensure_out_dir(o);
  Manifest manifest("fuse", o);
  manifest.config(config);

  std::vector<FeatureStream> streams;
  for (const auto& path : o.inputs) {
    manifest.input(path);
    const auto names = observation_names(path);
    if (names.empty()) throw DataError(path + ": stream file has no feature columns");
    const std::string src = names.front().substr(0, names.front().find('.'));
    const SourceSpec* spec = config.find_source(src);
    if (spec == nullptr) throw ConfigError(path + ": source '" + src + "' is not in the configuration");
    streams.push_back(read_stream(path, spec->interval_seconds));
  }
  const FusedMatrix m = manifest.step("fuse", [&] { return fuse_with_config(streams, config); });
  write_observations(out_path(o, "fused.csv"), m);
  manifest.count("rows", m.rows());
  manifest.count("features", m.cols());
  manifest.write();
}

void cmd_calibrate(const CommandOptions& o) {
  const PipelineConfig config = require_config(o);
  const std::string& path = single_input(o, "fused observation file");
  ensure_out_dir(o);
  Manifest manifest("calibrate", o);
  manifest.config(config);
  manifest.input(path);
  check_names(observation_names(path), config.qualified_feature_names(), path);

  const std::set<Instant> excluded = read_exclusions(o.exclude_path);
  const PcaModel model = manifest.step("fit", [&] { return fit_model(path, config, excluded); });
  for (std::size_t c : model.preprocess.constant_columns) {
    std::cerr << "warning: feature '" << config.qualified_feature_names()[c]
              << "' is constant in the calibration data; its scale is set to 1\n";
  }

  if (!o.exclude_path.empty()) {
    const PcaModel full = manifest.step("fit_with_outliers", [&] { return fit_model(path, config, {}); });
    const VarianceCheck check = phase1_variance_check(full, model, config.pollution_threshold);
    ordered_json j;
    j["excluded"] = excluded.size();
    j["threshold"] = check.threshold;
    j["max_relative_change"] = check.max_relative_change;
    j["polluted"] = check.polluted;
    j["with_outliers"] = check.full_fraction;
    j["without_outliers"] = check.clean_fraction;
    j["relative_change"] = check.relative_change;
    write_json(out_path(o, "variance_check.json"), j);
  }

  std::vector<MonitorRecord> records = manifest.step("statistics", [&] { return evaluate_rows(path, model, excluded); });
  std::vector<double> d;
  std::vector<double> q;
  for (const auto& r : records) {
    d.push_back(r.d);
    q.push_back(r.q);
  }
  const ControlLimits limits = compute_limits(d, q, config.ucl_percentile);
  apply_tscores(records, limits, phase_alpha(model, Phase::kI));

  save_model(out_path(o, "model.json"), {model, limits, config.qualified_feature_names(), config.digest});
  write_monitoring(o, config, records, limits, "calibration_monitor.csv", manifest);
  manifest.count("components", model.components);
  manifest.count("excluded", excluded.size());
  manifest.write();
}

void cmd_monitor(const CommandOptions& o) {
  const PipelineConfig config = require_config(o);
  const std::string& path = single_input(o, "fused observation file");
  if (o.model_path.empty()) throw ConfigError("--model is required");
  ensure_out_dir(o);
  Manifest manifest("monitor", o);
  manifest.config(config);
  manifest.input(o.model_path);
  manifest.input(path);

  const ModelFile mf = load_model(o.model_path);
  if (mf.config_digest != config.digest) {
    std::cerr << "warning: model was calibrated with a different configuration document\n";
  }
  check_names(observation_names(path), mf.feature_names, path);
  std::vector<MonitorRecord> records =
      manifest.step("statistics", [&] { return evaluate_rows(path, mf.model, {}); });
  apply_tscores(records, mf.limits, phase_alpha(mf.model, o.phase.value_or(Phase::kII)));
  write_monitoring(o, config, records, mf.limits, "monitor.csv", manifest);
  manifest.write();
}

void cmd_diagnose(const CommandOptions& o) {
  const PipelineConfig config = require_config(o);
  const std::string& path = single_input(o, "fused observation file");
  if (o.model_path.empty()) throw ConfigError("--model is required");
  const auto [start, end] = require_window(o);
  ensure_out_dir(o);
  Manifest manifest("diagnose", o);
  manifest.config(config);
  manifest.input(o.model_path);
  manifest.input(path);

  const ModelFile mf = load_model(o.model_path);
  check_names(observation_names(path), mf.feature_names, path);
  const ContributionVector c =
      manifest.step("contributions", [&] { return window_contributions(path, mf.model, start, end); });
  const SelectedFeatures selected = select_features(c, config.feature_selection);
  for (const auto& n : selected.notes) std::cerr << "note: " << n << '\n';

  ordered_json j;
  j["window"] = {{"start", format_iso8601(start)}, {"end", format_iso8601(end)}};
  j["observations"] = c.observations;
  j["scalar_d2"] = c.scalar;
  j["selected"] = selected_json(selected);
  j["notes"] = selected.notes;
  ordered_json all = ordered_json::array();
  for (std::size_t m = 0; m < c.feature_names.size(); ++m) {
    all.push_back({{"feature", c.feature_names[m]}, {"contribution", c.values[static_cast<Eigen::Index>(m)]}});
  }
  j["contributions"] = all;
  write_json(out_path(o, "diagnosis.json"), j);
  manifest.count("selected", selected.features.size());
  manifest.write();
}

void cmd_deparse(const CommandOptions& o) {
  const PipelineConfig config = require_config(o);
  const auto inputs = raw_inputs(o, config);
  const auto [start, end] = require_window(o);
  const SelectedFeatures selected = read_features(o.features);
  const std::size_t threshold = o.threshold.value_or(config.deparse_threshold);
  if (threshold < 1) throw ConfigError("--threshold must be >= 1");
  ensure_out_dir(o);
  Manifest manifest("deparse", o);
  manifest.config(config);
  for (const auto& [src, paths] : inputs) {
    for (const auto& p : paths) manifest.input(p);
  }

  const DeparseResult r =
      manifest.step("deparse", [&] { return deparse(config, inputs, start, end, selected, threshold); });
  for (const auto& n : r.notices) std::cerr << "notice: " << n << '\n';

  ordered_json sources = ordered_json::array();
  std::set<std::string> signatures;
  for (const auto& s : r.sources) {
    auto out = open_out(out_path(o, "deparse_" + s.source + ".txt"));
    for (const auto& l : s.lines) {
      out << l.fscore << '\t' << l.line.raw << '\n';
      signatures.insert(s.source + ":" + l.signature);
    }
    ordered_json levels = ordered_json::object();
    for (auto it = s.lines_per_level.rbegin(); it != s.lines_per_level.rend(); ++it) {
      levels[std::to_string(it->first)] = it->second;
    }
    sources.push_back({{"source", s.source},
                       {"features", s.features},
                       {"lines_in_window", s.lines_in_window},
                       {"lines_retrieved", s.lines.size()},
                       {"lines_per_level", levels},
                       {"distinct_signatures", s.distinct_signatures}});
  }
  ordered_json j;
  j["window"] = {{"start", format_iso8601(start)}, {"end", format_iso8601(end)}};
  j["threshold"] = threshold;
  j["features"] = selected_json(selected);
  j["sources"] = sources;
  j["totals"] = {{"lines_retrieved", r.total_lines()}, {"distinct_signatures", signatures.size()}};
  j["notices"] = r.notices;
  write_json(out_path(o, "deparse_summary.json"), j);
  manifest.count("lines_retrieved", r.total_lines());
  manifest.write();
}

void cmd_run(const CommandOptions& o) {
  const PipelineConfig config = require_config(o);
  const Phase phase = o.phase.value_or(Phase::kI);
  if (phase == Phase::kII && o.model_path.empty()) throw ConfigError("--phase 2 requires --model");
  ensure_out_dir(o);
  Manifest manifest("run", o);
  manifest.config(config);

  manifest.step("parse", [&] { cmd_parse(o); });

  CommandOptions fuse = o;
  fuse.inputs.clear();
  for (const auto& s : config.sources) fuse.inputs.push_back(out_path(o, "stream_" + s.name + ".csv"));
  manifest.step("fuse", [&] { cmd_fuse(fuse); });

  CommandOptions detect = o;
  detect.inputs = {out_path(o, "fused.csv")};
  std::string model = o.model_path;
  if (phase == Phase::kI) {
    manifest.step("calibrate", [&] { cmd_calibrate(detect); });
    model = out_path(o, "model.json");
  } else {
    manifest.step("monitor", [&] { cmd_monitor(detect); });
  }

  std::ifstream anomalies(out_path(o, "anomalies.jsonl"));
  std::string line;
  std::size_t count = 0;
  while (std::getline(anomalies, line)) {
    const json a = json::parse(line);
    const auto start = parse_iso8601(a.at("window_start").get<std::string>());
    const auto end = parse_iso8601(a.at("window_end").get<std::string>());
    const std::string rank = std::to_string(a.at("rank").get<std::size_t>());
    const std::string dir = out_path(o, "anomaly_" + rank);

    CommandOptions diag = o;
    diag.inputs = {out_path(o, "fused.csv")};
    diag.model_path = model;
    diag.window = {{*start, *end}};
    diag.out_dir = dir;
    manifest.step("diagnose_" + rank, [&] { cmd_diagnose(diag); });

    CommandOptions dep = o;
    dep.window = diag.window;
    dep.features = (fs::path(dir) / "diagnosis.json").string();
    dep.out_dir = dir;
    manifest.step("deparse_" + rank, [&] { cmd_deparse(dep); });
    ++count;
  }
  manifest.count("anomalies", count);
  manifest.write();
}

}  // namespace mbda
