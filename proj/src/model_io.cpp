#include "mbda/model_io.hpp"

#include "mbda/errors.hpp"

#include <json.hpp>

#include <fstream>

namespace mbda {

using nlohmann::json;

namespace {

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Vector vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw DataError("matrix data has the wrong size");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

}  // namespace

void save_model(const std::string& path, const ModelFile& file) {
  const PcaModel& m = file.model;
  json j;
  j["format"] = kModelFormat;
  j["config_digest"] = file.config_digest;
  j["features"] = file.feature_names;
  j["n_calibration"] = m.n_calibration;
  j["components"] = m.components;
  j["captured_variance_fraction"] = m.captured_variance_fraction;
  j["total_variance"] = m.total_variance;
  j["preprocess"] = {{"mean", vector_json(m.preprocess.mean)},
                     {"scale", vector_json(m.preprocess.scale)},
                     {"weight", vector_json(m.preprocess.weight)},
                     {"constant_columns", m.preprocess.constant_columns}};
  j["loadings"] = matrix_json(m.loadings);
  j["eigenvalues"] = vector_json(m.eigenvalues);
  j["all_eigenvalues"] = vector_json(m.all_eigenvalues);
  j["scores_cov"] = matrix_json(m.scores_cov);
  j["limits"] = {{"ucl_d", file.limits.ucl_d},
                 {"ucl_q", file.limits.ucl_q},
                 {"percentile", file.limits.percentile},
                 {"n_calibration", file.limits.n_calibration}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model file '" + path + "'");
  out << j.dump(1) << '\n';
  if (!out) throw DataError("failed writing model file '" + path + "'");
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file '" + path + "'");
  try {
    const json j = json::parse(in);
    if (j.value("format", "") != kModelFormat) {
      throw DataError(path + ": not an " + std::string(kModelFormat) + " model file");
    }
    ModelFile f;
    f.config_digest = j.at("config_digest").get<std::string>();
    f.feature_names = j.at("features").get<std::vector<std::string>>();
    PcaModel& m = f.model;
    m.n_calibration = j.at("n_calibration").get<std::uint64_t>();
    m.components = j.at("components").get<std::size_t>();
    m.captured_variance_fraction = j.at("captured_variance_fraction").get<double>();
    m.total_variance = j.at("total_variance").get<double>();
    const json& p = j.at("preprocess");
    m.preprocess.mean = vector_from(p.at("mean"));
    m.preprocess.scale = vector_from(p.at("scale"));
    m.preprocess.weight = vector_from(p.at("weight"));
    m.preprocess.constant_columns = p.at("constant_columns").get<std::vector<std::size_t>>();
    m.loadings = matrix_from(j.at("loadings"));
    m.eigenvalues = vector_from(j.at("eigenvalues"));
    m.all_eigenvalues = vector_from(j.at("all_eigenvalues"));
    m.scores_cov = matrix_from(j.at("scores_cov"));
    const json& l = j.at("limits");
    f.limits.ucl_d = l.at("ucl_d").get<double>();
    f.limits.ucl_q = l.at("ucl_q").get<double>();
    f.limits.percentile = l.at("percentile").get<double>();
    f.limits.n_calibration = l.at("n_calibration").get<std::uint64_t>();

    const auto features = f.feature_names.size();
    if (m.preprocess.size() != features || m.features() != features ||
        static_cast<std::size_t>(m.loadings.cols()) != m.components ||
        static_cast<std::size_t>(m.eigenvalues.size()) != m.components) {
      throw DataError(path + ": inconsistent model dimensions");
    }
    return f;
  } catch (const json::exception& e) {
    throw DataError(path + ": malformed model file: " + e.what());
  }
}

}  // namespace mbda
