#pragma once

#include "mbda/monitor.hpp"
#include "mbda/pca.hpp"

#include <string>
#include <vector>

namespace mbda {

inline constexpr const char* kModelFormat = "mbda-model/1";

/// Everything Phase II monitoring needs from calibration.
struct ModelFile {
  PcaModel model;
  ControlLimits limits;
  std::vector<std::string> feature_names;
  std::string config_digest;
};

/// JSON document; doubles are written in shortest round-trip form.
void save_model(const std::string& path, const ModelFile& file);
/// Throws DataError on unreadable files or an unknown format tag.
ModelFile load_model(const std::string& path);

}  // namespace mbda
