// mbda: parse, fuse, calibrate, monitor, diagnose and de-parse text logs.

#include "mbda/commands.hpp"
#include "mbda/errors.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <thread>

namespace {

struct Flags {
  mbda::CommandOptions options;
  std::vector<std::string> window;
  int phase = 0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.options.config_path, "Pipeline configuration file")->required();
  cmd->add_option("--out", f.options.out_dir, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate log anomaly detection and de-parsing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mbda::kToolVersion);

  Flags f;
  f.options.workers = std::max(1u, std::thread::hardware_concurrency());
  std::function<void(const mbda::CommandOptions&)> action;

  auto sub = [&](const char* name, const char* help, void (*fn)(const mbda::CommandOptions&)) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, f);
    cmd->callback([&action, fn] { action = fn; });
    return cmd;
  };

  auto input = [&](CLI::App* cmd, const char* help) {
    cmd->add_option("--input", f.options.inputs, help)->required()->expected(1, -1);
  };
  auto window = [&](CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--window", f.window, "Anomaly window: START END (ISO-8601, interval starts)")
                    ->expected(2);
    if (required) opt->required();
  };
  auto monitoring = [&](CLI::App* cmd) {
    cmd->add_option("--top-k", f.options.top_k, "Number of anomalies to report")->check(CLI::PositiveNumber);
    cmd->add_option("--max-clusters", f.options.max_clusters, "Cluster count of the D-vs-Q plot data")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--no-coalesce{false}", f.options.coalesce, "Report consecutive anomalous intervals separately");
  };

  {
    auto* cmd = sub("parse", "Count feature matches per interval for every source", mbda::cmd_parse);
    input(cmd, "Raw log files as SOURCE=PATH (plain or gzip)");
    cmd->add_option("--workers", f.options.workers, "Parser threads")->check(CLI::PositiveNumber);
  }
  {
    auto* cmd = sub("fuse", "Resample streams to the common interval and append columns", mbda::cmd_fuse);
    input(cmd, "Per-source stream files from 'parse'");
  }
  {
    auto* cmd = sub("calibrate", "Fit the PCA model and control limits (Phase I)", mbda::cmd_calibrate);
    input(cmd, "Fused observation file");
    cmd->add_option("--exclude", f.options.exclude_path, "File of timestamps to drop before refitting");
    monitoring(cmd);
  }
  {
    auto* cmd = sub("monitor", "Score observations against a calibrated model", mbda::cmd_monitor);
    input(cmd, "Fused observation file");
    cmd->add_option("--model", f.options.model_path, "Model file from 'calibrate'")->required();
    cmd->add_option("--phase", f.phase, "Tscore weighting: 1 = captured variance, 2 = A/M (default)")
        ->check(CLI::IsMember({1, 2}));
    monitoring(cmd);
  }
  {
    auto* cmd = sub("diagnose", "Univariate-squared contributions of one anomaly window", mbda::cmd_diagnose);
    input(cmd, "Fused observation file");
    cmd->add_option("--model", f.options.model_path, "Model file from 'calibrate'")->required();
    window(cmd, true);
  }
  {
    auto* cmd = sub("deparse", "Retrieve the raw log lines behind an anomaly", mbda::cmd_deparse);
    input(cmd, "Raw log files as SOURCE=PATH (plain or gzip)");
    window(cmd, true);
    cmd->add_option("--features", f.options.features, "diagnosis.json or comma-separated source.feature names")
        ->required();
    cmd->add_option("--threshold", f.options.threshold, "Stop once this many lines per source are retrieved")
        ->check(CLI::PositiveNumber);
  }
  {
    auto* cmd = sub("run", "parse, fuse, detect, then diagnose and de-parse the top anomalies", mbda::cmd_run);
    input(cmd, "Raw log files as SOURCE=PATH (plain or gzip)");
    cmd->add_option("--phase", f.phase, "1 = calibrate on the inputs (default), 2 = monitor with --model")
        ->check(CLI::IsMember({1, 2}));
    cmd->add_option("--model", f.options.model_path, "Model file for phase 2");
    cmd->add_option("--threshold", f.options.threshold, "De-parse line threshold per source")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--exclude", f.options.exclude_path, "File of timestamps to drop before calibrating");
    cmd->add_option("--workers", f.options.workers, "Parser threads")->check(CLI::PositiveNumber);
    monitoring(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (f.phase != 0) f.options.phase = static_cast<mbda::Phase>(f.phase);
    if (f.window.size() == 2) {
      const auto start = mbda::parse_iso8601(f.window[0]);
      const auto end = mbda::parse_iso8601(f.window[1]);
      if (!start || !end) throw mbda::ConfigError("--window expects two ISO-8601 timestamps");
      f.options.window = {{*start, *end}};
    }
    action(f.options);
    return 0;
  } catch (const mbda::ConfigError& e) {
    std::cerr << "mbda: configuration error: " << e.what() << '\n';
    return 1;
  } catch (const mbda::DataError& e) {
    std::cerr << "mbda: data error: " << e.what() << '\n';
    return 2;
  } catch (const mbda::ModelError& e) {
    std::cerr << "mbda: model error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mbda: internal error: " << e.what() << '\n';
    return 3;
  }
}
