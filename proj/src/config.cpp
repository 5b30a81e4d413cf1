#include "mbda/config.hpp"

#include "mbda/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mbda {

std::size_t SourceSpec::feature_index(std::string_view feature) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == feature) return i;
  }
  return static_cast<std::size_t>(-1);
}

std::size_t PipelineConfig::feature_count() const {
  std::size_t m = 0;
  for (const auto& s : sources) m += s.features.size();
  return m;
}

std::vector<std::string> PipelineConfig::qualified_feature_names() const {
  std::vector<std::string> names;
  names.reserve(feature_count());
  for (const auto& s : sources) {
    for (const auto& f : s.features) names.push_back(s.name + "." + f.name);
  }
  return names;
}

std::vector<double> PipelineConfig::weights() const {
  std::vector<double> w;
  w.reserve(feature_count());
  for (const auto& s : sources) {
    for (const auto& f : s.features) w.push_back(f.weight);
  }
  return w;
}

const SourceSpec* PipelineConfig::find_source(std::string_view name) const {
  for (const auto& s : sources) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::string where(const YAML::Node& node) {
  const YAML::Mark m = node.Mark();
  if (m.is_null()) return "";
  return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
}

[[noreturn]] void fail(const std::string& context, const std::string& message,
                       const YAML::Node& node) {
  throw ConfigError(context + ": " + message + where(node));
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!map.IsMap()) fail(context, "expected a mapping", map);
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(context, "unknown key '" + key + "'", kv.first);
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& context, const std::string& what) {
  if (!node.IsScalar()) fail(context, what + " must be a scalar", node);
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(context, "invalid value for " + what + ": '" + node.Scalar() + "'", node);
  }
}

std::int64_t positive_int(const YAML::Node& node, const std::string& context,
                          const std::string& what) {
  const auto v = scalar<long long>(node, context, what);
  if (v < 1) fail(context, what + " must be a positive integer", node);
  return v;
}

bool valid_identifier(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

std::string identifier(const YAML::Node& node, const std::string& context) {
  if (!node) fail(context, "missing 'name'", node);
  const auto s = scalar<std::string>(node, context, "name");
  if (!valid_identifier(s)) {
    fail(context, "name '" + s + "' must be non-empty and use only [A-Za-z0-9_-]", node);
  }
  return s;
}

std::shared_ptr<const Pattern> compile_pattern(const YAML::Node& node, const std::string& context,
                                               const std::string& what) {
  if (!node) fail(context, "missing '" + what + "'", node);
  const auto text = scalar<std::string>(node, context, what);
  try {
    return std::make_shared<const Pattern>(text);
  } catch (const std::invalid_argument& e) {
    fail(context, "invalid regular expression in " + what + " '" + text + "': " + e.what(), node);
  }
}

std::int64_t parse_offset(const YAML::Node& node, const std::string& context) {
  const auto text = scalar<std::string>(node, context, "utc_offset");
  if (text == "Z" || text == "UTC") return 0;
  int hh = 0;
  int mm = 0;
  char sign = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%c%2d:%2d%c", &sign, &hh, &mm, &tail) == 3 &&
      (sign == '+' || sign == '-') && hh <= 23 && mm <= 59) {
    const std::int64_t s = hh * 3600 + mm * 60;
    return sign == '-' ? -s : s;
  }
  fail(context, "utc_offset must look like +HH:MM, -HH:MM or Z", node);
}

FeatureSpec load_feature(const YAML::Node& node, const std::string& source_ctx) {
  const std::string ctx0 = source_ctx + ", feature";
  check_keys(node, {"name", "pattern", "weight"}, ctx0);
  FeatureSpec f;
  f.name = identifier(node["name"], ctx0);
  const std::string ctx = source_ctx + ", feature '" + f.name + "'";
  f.pattern = compile_pattern(node["pattern"], ctx, "pattern");
  if (f.pattern->matches("")) fail(ctx, "pattern matches the empty string", node["pattern"]);
  if (node["weight"]) {
    f.weight = scalar<double>(node["weight"], ctx, "weight");
    if (!(f.weight >= 1.0 && f.weight <= 10.0)) fail(ctx, "weight must lie in [1, 10]", node["weight"]);
  }
  return f;
}

SourceSpec load_source(const YAML::Node& node) {
  check_keys(node,
             {"name", "interval", "timestamp_pattern", "timestamp_format", "utc_offset", "features"},
             "source");
  SourceSpec s;
  s.name = identifier(node["name"], "source");
  const std::string ctx = "source '" + s.name + "'";
  if (!node["interval"]) fail(ctx, "missing 'interval'", node);
  s.interval_seconds = positive_int(node["interval"], ctx, "interval");
  s.timestamp_pattern = compile_pattern(node["timestamp_pattern"], ctx, "timestamp_pattern");
  if (s.timestamp_pattern->capture_groups() != 1) {
    fail(ctx, "timestamp_pattern must have exactly one capture group (found " +
                  std::to_string(s.timestamp_pattern->capture_groups()) + ")",
         node["timestamp_pattern"]);
  }
  if (!node["timestamp_format"]) fail(ctx, "missing 'timestamp_format'", node);
  s.timestamp_format = scalar<std::string>(node["timestamp_format"], ctx, "timestamp_format");
  if (node["utc_offset"]) s.utc_offset_seconds = parse_offset(node["utc_offset"], ctx);

  const YAML::Node features = node["features"];
  if (!features || !features.IsSequence() || features.size() == 0) {
    fail(ctx, "'features' must be a non-empty list", features ? features : node);
  }
  std::set<std::string> seen;
  for (const auto& fn : features) {
    FeatureSpec f = load_feature(fn, ctx);
    if (!seen.insert(f.name).second) fail(ctx, "duplicate feature name '" + f.name + "'", fn);
    s.features.push_back(std::move(f));
  }
  return s;
}

void load_components(const YAML::Node& node, PipelineConfig& cfg) {
  check_keys(node, {"fixed", "variance_fraction"}, "components");
  if (node.size() != 1) fail("components", "expected exactly one of {fixed, variance_fraction}", node);
  if (node["fixed"]) {
    cfg.component_policy =
        FixedComponents{static_cast<std::size_t>(positive_int(node["fixed"], "components", "fixed"))};
  } else {
    const double f = scalar<double>(node["variance_fraction"], "components", "variance_fraction");
    if (!(f > 0.0 && f <= 1.0)) fail("components", "variance_fraction must lie in (0, 1]", node);
    cfg.component_policy = VarianceFraction{f};
  }
}

void load_selection(const YAML::Node& node, PipelineConfig& cfg) {
  check_keys(node, {"relative", "top_k"}, "feature_selection");
  if (node.size() != 1) fail("feature_selection", "expected exactly one of {relative, top_k}", node);
  if (node["relative"]) {
    const double r = scalar<double>(node["relative"], "feature_selection", "relative");
    if (!(r > 0.0 && r <= 1.0)) fail("feature_selection", "relative must lie in (0, 1]", node);
    cfg.feature_selection = RelativeSelection{r};
  } else {
    cfg.feature_selection = TopKSelection{
        static_cast<std::size_t>(positive_int(node["top_k"], "feature_selection", "top_k"))};
  }
}

}  // namespace

PipelineConfig load_config(std::string_view document) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(document));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  if (!root || root.IsNull()) throw ConfigError("configuration: empty document");
  check_keys(root,
             {"common_interval", "ucl_percentile", "components", "preprocessing", "deparse_threshold",
              "feature_selection", "max_clusters", "cluster_member_cap", "pollution_threshold",
              "sources"},
             "configuration");

  PipelineConfig cfg;
  cfg.digest = fnv1a_hex(document);
  if (!root["common_interval"]) fail("configuration", "missing 'common_interval'", root);
  cfg.common_interval_seconds = positive_int(root["common_interval"], "configuration", "common_interval");

  if (root["ucl_percentile"]) {
    cfg.ucl_percentile = scalar<double>(root["ucl_percentile"], "configuration", "ucl_percentile");
    if (!(cfg.ucl_percentile > 0.0 && cfg.ucl_percentile < 1.0)) {
      fail("configuration", "ucl_percentile must lie in (0, 1)", root["ucl_percentile"]);
    }
  }
  if (root["components"]) load_components(root["components"], cfg);
  if (root["preprocessing"]) {
    const auto p = scalar<std::string>(root["preprocessing"], "configuration", "preprocessing");
    if (p == "autoscale") {
      cfg.scaling = Scaling::kAutoscale;
    } else if (p == "center") {
      cfg.scaling = Scaling::kCenter;
    } else {
      fail("configuration", "preprocessing must be 'autoscale' or 'center'", root["preprocessing"]);
    }
  }
  if (root["deparse_threshold"]) {
    cfg.deparse_threshold = static_cast<std::size_t>(
        positive_int(root["deparse_threshold"], "configuration", "deparse_threshold"));
  }
  if (root["feature_selection"]) load_selection(root["feature_selection"], cfg);
  if (root["max_clusters"]) {
    cfg.max_clusters =
        static_cast<std::size_t>(positive_int(root["max_clusters"], "configuration", "max_clusters"));
  }
  if (root["cluster_member_cap"]) {
    const auto cap = scalar<long long>(root["cluster_member_cap"], "configuration", "cluster_member_cap");
    if (cap < 0) fail("configuration", "cluster_member_cap must be >= 0", root["cluster_member_cap"]);
    cfg.cluster_member_cap = static_cast<std::size_t>(cap);
  }
  if (root["pollution_threshold"]) {
    cfg.pollution_threshold =
        scalar<double>(root["pollution_threshold"], "configuration", "pollution_threshold");
    if (!(cfg.pollution_threshold > 0.0)) {
      fail("configuration", "pollution_threshold must be positive", root["pollution_threshold"]);
    }
  }

  const YAML::Node sources = root["sources"];
  if (!sources || !sources.IsSequence() || sources.size() == 0) {
    fail("configuration", "'sources' must be a non-empty list", sources ? sources : root);
  }
  std::set<std::string> names;
  for (const auto& sn : sources) {
    SourceSpec s = load_source(sn);
    if (!names.insert(s.name).second) fail("configuration", "duplicate source name '" + s.name + "'", sn);
    if (cfg.common_interval_seconds % s.interval_seconds != 0) {
      fail("source '" + s.name + "'",
           "common interval " + std::to_string(cfg.common_interval_seconds) +
               " is not an integer multiple of the source interval " +
               std::to_string(s.interval_seconds),
           sn["interval"]);
    }
    cfg.sources.push_back(std::move(s));
  }
  return cfg;
}

PipelineConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read configuration file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return load_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace mbda
