#include "mbda/diagnosis.hpp"

#include "mbda/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace mbda {

Vector signed_square(const Eigen::Ref<const Vector>& x) { return x.cwiseProduct(x.cwiseAbs()); }

ContributionVector us_contributions(const Eigen::Ref<const Vector>& x, std::vector<std::string> feature_names) {
  if (static_cast<std::size_t>(x.size()) != feature_names.size()) {
    throw std::invalid_argument("us_contributions: expected " + std::to_string(feature_names.size()) +
                                " values, got " + std::to_string(x.size()));
  }
  ContributionVector c;
  c.feature_names = std::move(feature_names);
  c.values = signed_square(x);
  c.scalar = x.dot(x.cwiseAbs());
  c.observations = 1;
  return c;
}

namespace {

ContributionVector finish_window(const Vector& sum, std::size_t n, std::vector<std::string> names,
                                 Instant start, Instant end) {
  if (n == 0) {
    throw DataError("no observation falls inside the window " + format_iso8601(start) + " .. " +
                    format_iso8601(end));
  }
  ContributionVector c = us_contributions(sum / static_cast<double>(n), std::move(names));
  c.window_start = start;
  c.window_end = end;
  c.observations = n;
  return c;
}

void check_columns(const std::vector<std::string>& names, const PcaModel& model) {
  if (names.size() != model.features()) {
    throw DataError("observations have " + std::to_string(names.size()) + " features but the model has " +
                    std::to_string(model.features()));
  }
}

}  // namespace

ContributionVector window_contributions(const std::string& observations_path, const PcaModel& model,
                                        Instant start, Instant end) {
  ObservationReader reader(observations_path);
  check_columns(reader.feature_names(), model);
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(model.features()));
  std::size_t n = 0;
  Instant t;
  std::vector<std::uint64_t> row;
  while (reader.next(t, row)) {
    if (t < start || t > end) continue;
    sum += apply_preprocess(row, model.preprocess);
    ++n;
  }
  return finish_window(sum, n, reader.feature_names(), start, end);
}

ContributionVector window_contributions(const FusedMatrix& observations, const PcaModel& model,
                                        Instant start, Instant end) {
  check_columns(observations.feature_names, model);
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(model.features()));
  std::size_t n = 0;
  for (std::size_t i = 0; i < observations.rows(); ++i) {
    const Instant t = observations.timestamps[i];
    if (t < start || t > end) continue;
    sum += apply_preprocess(observations.row(i), model.preprocess);
    ++n;
  }
  return finish_window(sum, n, observations.feature_names, start, end);
}

SelectedFeatures select_features(const ContributionVector& c, const SelectionPolicy& policy) {
  SelectedFeatures out;
  const Vector& v = c.values;
  const double top = v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0;
  if (!(top > 0.0)) {
    out.notes.push_back("all contributions are zero; no feature selected");
    return out;
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(v[static_cast<Eigen::Index>(a)]) > std::abs(v[static_cast<Eigen::Index>(b)]);
  });

  std::size_t keep = 0;
  if (const auto* rel = std::get_if<RelativeSelection>(&policy)) {
    const double cut = rel->fraction * top;
    while (keep < order.size() && std::abs(v[static_cast<Eigen::Index>(order[keep])]) >= cut) ++keep;
  } else {
    const std::size_t k = std::get<TopKSelection>(policy).k;
    while (keep < order.size() && keep < k && v[static_cast<Eigen::Index>(order[keep])] != 0.0) ++keep;
  }

  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t col = order[i];
    const double value = v[static_cast<Eigen::Index>(col)];
    out.features.push_back({c.feature_names[col], col, value});
    if (value < 0.0) {
      out.notes.push_back("feature '" + c.feature_names[col] +
                          "' is below its normal level; de-parsing cannot retrieve absent events");
    }
  }
  return out;
}

std::size_t fscore(std::string_view line, std::span<const Pattern* const> features) {
  std::size_t n = 0;
  for (const Pattern* p : features) {
    if (p->matches(line)) ++n;
  }
  return n;
}

std::vector<std::size_t> extract_levels(std::span<const std::size_t> fscores, std::size_t levels,
                                        std::size_t threshold) {
  std::vector<std::vector<std::size_t>> by_level(levels + 1);
  for (std::size_t i = 0; i < fscores.size(); ++i) {
    if (fscores[i] > levels) throw std::invalid_argument("extract_levels: fscore above the level count");
    by_level[fscores[i]].push_back(i);
  }
  std::vector<std::size_t> out;
  for (std::size_t level = levels; level > 0 && out.size() < threshold; --level) {
    out.insert(out.end(), by_level[level].begin(), by_level[level].end());
  }
  return out;
}

std::size_t DeparseResult::total_lines() const {
  std::size_t n = 0;
  for (const auto& s : sources) n += s.lines.size();
  return n;
}

SourceDeparse deparse_lines(const SourceSpec& spec, std::vector<LogLine> lines_in_window,
                            const std::vector<std::string>& features, std::size_t threshold) {
  if (threshold < 1) throw std::invalid_argument("deparse: threshold must be >= 1");
  SourceDeparse out;
  out.source = spec.name;
  out.features = features;
  out.lines_in_window = lines_in_window.size();

  std::vector<const Pattern*> patterns;
  for (const auto& f : features) {
    const std::size_t idx = spec.feature_index(f);
    if (idx == static_cast<std::size_t>(-1)) {
      throw ConfigError("source '" + spec.name + "' has no feature '" + f + "'");
    }
    patterns.push_back(spec.features[idx].pattern.get());
  }

  std::vector<std::size_t> scores(lines_in_window.size());
  std::vector<std::string> signatures(lines_in_window.size());
  for (std::size_t i = 0; i < lines_in_window.size(); ++i) {
    std::string sig(patterns.size(), '0');
    std::size_t n = 0;
    for (std::size_t f = 0; f < patterns.size(); ++f) {
      if (patterns[f]->matches(lines_in_window[i].raw)) {
        sig[f] = '1';
        ++n;
      }
    }
    scores[i] = n;
    signatures[i] = std::move(sig);
  }

  std::set<std::string> distinct;
  for (std::size_t i : extract_levels(scores, patterns.size(), threshold)) {
    ++out.lines_per_level[scores[i]];
    distinct.insert(signatures[i]);
    out.lines.push_back({std::move(lines_in_window[i]), scores[i], std::move(signatures[i])});
  }
  out.distinct_signatures = distinct.size();
  return out;
}

DeparseResult deparse(const PipelineConfig& config, const std::map<std::string, std::vector<std::string>>& inputs,
                      Instant start, Instant end, const SelectedFeatures& selected, std::size_t threshold) {
  if (threshold < 1) throw std::invalid_argument("deparse: threshold must be >= 1");
  DeparseResult result;
  result.window_start = start;
  result.window_end = end;
  const Instant stop = end + std::chrono::seconds{config.common_interval_seconds};

  std::set<std::string> known;
  for (const auto& q : config.qualified_feature_names()) known.insert(q);
  for (const auto& f : selected.features) {
    if (!known.count(f.name)) throw ConfigError("selected feature '" + f.name + "' is not in the configuration");
  }

  std::uint64_t in_window = 0;
  for (const auto& spec : config.sources) {
    std::vector<std::string> features;
    const std::string prefix = spec.name + ".";
    for (const auto& f : selected.features) {
      if (f.name.compare(0, prefix.size(), prefix) == 0) features.push_back(f.name.substr(prefix.size()));
    }

    std::vector<LogLine> lines;
    auto it = inputs.find(spec.name);
    if (it != inputs.end() && !features.empty()) {
      for (const auto& path : it->second) {
        for_each_line(path, [&](std::string_view raw, std::uint64_t offset) {
          const auto ts = extract_timestamp(raw, spec);
          if (!ts || *ts < start || *ts >= stop) return;
          lines.push_back({spec.name, *ts, std::string(raw), offset});
        });
      }
    }
    in_window += lines.size();
    result.sources.push_back(deparse_lines(spec, std::move(lines), features, threshold));
  }
  if (selected.features.empty()) result.notices.push_back("no features selected; nothing to de-parse");
  if (in_window == 0 && !selected.features.empty()) {
    result.notices.push_back("no log line falls inside the window " + format_iso8601(start) + " .. " +
                             format_iso8601(end));
  }
  return result;
}

}  // namespace mbda
