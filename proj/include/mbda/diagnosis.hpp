#pragma once

#include "mbda/config.hpp"
#include "mbda/log_parser.hpp"
#include "mbda/observation_csv.hpp"
#include "mbda/pca.hpp"
#include "mbda/time.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mbda {

struct ContributionVector {
  Instant window_start;
  Instant window_end;
  std::vector<std::string> feature_names;
  Vector values;        // signed squares, one per feature
  double scalar = 0.0;  // x^T |x|, the sum of values
  std::size_t observations = 0;
};

/// values[m] = x[m] * |x[m]|.
Vector signed_square(const Eigen::Ref<const Vector>& x);

/// Univariate-squared contributions of one preprocessed observation.
ContributionVector us_contributions(const Eigen::Ref<const Vector>& x, std::vector<std::string> feature_names);

/// US of the element-wise mean of the preprocessed rows whose timestamps fall
/// in [start, end]. Throws DataError when the window holds no observation.
ContributionVector window_contributions(const std::string& observations_path, const PcaModel& model,
                                        Instant start, Instant end);
ContributionVector window_contributions(const FusedMatrix& observations, const PcaModel& model,
                                        Instant start, Instant end);

struct SelectedFeature {
  std::string name;  // "source.feature"
  std::size_t column = 0;
  double contribution = 0.0;
};

struct SelectedFeatures {
  std::vector<SelectedFeature> features;  // descending |contribution|
  std::vector<std::string> notes;
};

SelectedFeatures select_features(const ContributionVector& c, const SelectionPolicy& policy);

/// Number of distinct patterns that match `line` at least once.
std::size_t fscore(std::string_view line, std::span<const Pattern* const> features);

/// Core level extraction over precomputed scores: indices to return, in
/// extraction order (level descending, input order within a level).
std::vector<std::size_t> extract_levels(std::span<const std::size_t> fscores, std::size_t levels,
                                        std::size_t threshold);

struct DeparsedLine {
  LogLine line;
  std::size_t fscore = 0;
  std::string signature;  // '1'/'0' per source feature of F
};

struct SourceDeparse {
  std::string source;
  std::vector<std::string> features;  // F restricted to this source, unqualified
  std::vector<DeparsedLine> lines;    // extraction order
  std::map<std::size_t, std::size_t> lines_per_level;
  std::size_t distinct_signatures = 0;
  std::uint64_t lines_in_window = 0;
};

struct DeparseResult {
  Instant window_start;
  Instant window_end;
  std::vector<SourceDeparse> sources;  // config order
  std::vector<std::string> notices;

  std::size_t total_lines() const;
};

/// Recovers the raw lines of the window [start, end + common interval) ranked
/// by fscore. `inputs` maps source name to its raw files.
DeparseResult deparse(const PipelineConfig& config, const std::map<std::string, std::vector<std::string>>& inputs,
                      Instant start, Instant end, const SelectedFeatures& selected, std::size_t threshold);

/// Same over in-memory lines of one source (timestamps already extracted).
SourceDeparse deparse_lines(const SourceSpec& spec, std::vector<LogLine> lines_in_window,
                            const std::vector<std::string>& features, std::size_t threshold);

}  // namespace mbda
