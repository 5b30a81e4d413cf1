#pragma once

#include "mbda/monitor.hpp"
#include "mbda/time.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mbda {

inline constexpr const char* kToolVersion = "0.1.0";

/// Options shared by all subcommands; each command reads the ones it needs.
struct CommandOptions {
  std::string config_path;
  std::vector<std::string> inputs;  // raw logs as SOURCE=PATH, or stream/observation files
  std::string out_dir = ".";
  std::optional<Phase> phase;
  std::size_t top_k = 5;
  std::optional<std::pair<Instant, Instant>> window;
  std::string exclude_path;
  std::optional<std::size_t> max_clusters;
  std::optional<std::size_t> threshold;
  std::string model_path;
  std::string features;  // diagnosis.json path or comma-separated qualified names
  bool coalesce = true;
  std::size_t workers = 1;
};

// Each command writes its artifacts plus manifest_<command>.json into out_dir.
// Errors surface as ConfigError / DataError / ModelError.

/// stream_<source>.csv per source and parse_stats.json.
void cmd_parse(const CommandOptions& options);
/// fused.csv from per-source stream files.
void cmd_fuse(const CommandOptions& options);
/// model.json, calibration_monitor.csv, anomalies.jsonl, cluster_plot.csv,
/// and variance_check.json when outliers are excluded.
void cmd_calibrate(const CommandOptions& options);
/// monitor.csv, anomalies.jsonl, cluster_plot.csv.
void cmd_monitor(const CommandOptions& options);
/// diagnosis.json for one window.
void cmd_diagnose(const CommandOptions& options);
/// deparse_<source>.txt per source and deparse_summary.json.
void cmd_deparse(const CommandOptions& options);
/// parse -> fuse -> calibrate (phase 1) or monitor (phase 2) -> per anomaly
/// diagnose and deparse into anomaly_<rank>/.
void cmd_run(const CommandOptions& options);

/// Parses "SOURCE=PATH". A bare path is accepted when the config has one source.
std::pair<std::string, std::string> split_source_input(const std::string& arg,
                                                       const std::vector<std::string>& source_names);

}  // namespace mbda
