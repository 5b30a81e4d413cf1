#pragma once

#include "mbda/pattern.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mbda {

struct FeatureSpec {
  std::string name;
  std::shared_ptr<const Pattern> pattern;
  double weight = 1.0;
};

struct SourceSpec {
  std::string name;
  std::shared_ptr<const Pattern> timestamp_pattern;  // exactly one capture group
  std::string timestamp_format;                      // strptime-style
  std::int64_t utc_offset_seconds = 0;               // zone of zone-less timestamps
  std::int64_t interval_seconds = 0;
  std::vector<FeatureSpec> features;

  /// Index of a feature by (unqualified) name, or npos.
  std::size_t feature_index(std::string_view feature) const;
};

struct FixedComponents {
  std::size_t count;
};
struct VarianceFraction {
  double fraction;
};
using ComponentPolicy = std::variant<FixedComponents, VarianceFraction>;

struct RelativeSelection {
  double fraction;
};
struct TopKSelection {
  std::size_t k;
};
using SelectionPolicy = std::variant<RelativeSelection, TopKSelection>;

enum class Scaling { kAutoscale, kCenter };

struct PipelineConfig {
  std::vector<SourceSpec> sources;
  std::int64_t common_interval_seconds = 0;
  double ucl_percentile = 0.99;
  ComponentPolicy component_policy = VarianceFraction{0.9};
  Scaling scaling = Scaling::kAutoscale;
  std::size_t deparse_threshold = 500;
  SelectionPolicy feature_selection = RelativeSelection{0.1};
  std::size_t max_clusters = 100;
  std::size_t cluster_member_cap = 16;
  double pollution_threshold = 0.10;
  /// FNV-1a 64 of the configuration document, hex encoded.
  std::string digest;

  /// Fused feature count M.
  std::size_t feature_count() const;
  /// "source.feature" names in fused column order.
  std::vector<std::string> qualified_feature_names() const;
  /// Per-column weights in fused column order.
  std::vector<double> weights() const;
  const SourceSpec* find_source(std::string_view name) const;
};

/// Parses and validates a configuration document. Throws ConfigError with
/// the offending source/feature and document position.
PipelineConfig load_config(std::string_view document);
PipelineConfig load_config_file(const std::string& path);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace mbda
