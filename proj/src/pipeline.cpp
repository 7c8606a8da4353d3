#include "sfa/pipeline.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sfa/error.hpp"

namespace sfa {

SfaModel train_sfa(const std::map<std::string, FeatureSet>& features,
                   const std::map<std::string, double>& scores, const PlsrConfig& cfg) {
  if (scores.size() < 2) throw Error(ErrorCode::TooFewSamples, "need >= 2 scored images");
  for (const auto& [id, score] : scores) {
    (void)score;
    if (!features.count(id)) throw Error(ErrorCode::MissingFeatures, id);
  }

  const Eigen::Index n_images = static_cast<Eigen::Index>(scores.size());
  Eigen::VectorXd y(n_images);
  {
    Eigen::Index row = 0;
    for (const auto& [id, score] : scores) {
      (void)id;
      y[row++] = score;
    }
  }

  SfaModel model;
  for (size_t a = 0; a < kSfaAggregators.size(); ++a) {
    const AggregationKind kind = kSfaAggregators[a];
    Eigen::MatrixXd X;
    Eigen::Index row = 0;
    for (const auto& [id, score] : scores) {
      (void)score;
      const AggregatedFeature agg = aggregate(features.at(id), kind);
      if (X.size() == 0) X.resize(n_images, agg.values.size());
      if (agg.values.size() != X.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "inconsistent feature dims across images");
      }
      X.row(row++) = agg.values;
    }
    PlsrConfig sub_cfg = cfg;
    sub_cfg.n_components =
        std::min<int>(cfg.n_components,
                      static_cast<int>(std::min<Eigen::Index>(n_images - 1, X.cols())));
    model.models[a] = fit(X, y, sub_cfg).model;
    model.models[a].n_components = cfg.n_components;
  }
  model.extractor_cfg = features.begin()->second.config;
  model.patch_spec = features.begin()->second.config.patch_spec;
  return model;
}

std::array<double, 3> sub_model_scores(const SfaModel& model, const FeatureSet& fs) {
  std::array<double, 3> out{};
  for (size_t a = 0; a < kSfaAggregators.size(); ++a) {
    const AggregatedFeature agg = aggregate(fs, kSfaAggregators[a]);
    out[a] = predict(model.models[a], agg.values);
  }
  return out;
}

double score_image(const SfaModel& model, const FeatureSet& fs) {
  if (fs.dim() == 0) throw Error(ErrorCode::EmptyFeatureSet, fs.image_id);
  if (!model.ensemble.average) {
    for (size_t a = 0; a < kSfaAggregators.size(); ++a) {
      if (kSfaAggregators[a] == model.ensemble.single) {
        const AggregatedFeature agg = aggregate(fs, kSfaAggregators[a]);
        return predict(model.models[a], agg.values);
      }
    }
    throw Error(ErrorCode::ConfigInvalid, "ensemble names a non-SFA aggregator");
  }
  const auto scores = sub_model_scores(model, fs);
  return (scores[0] + scores[1] + scores[2]) / 3.0;
}

std::string sfa_model_to_json(const SfaModel& model) {
  nlohmann::json j;
  j["version"] = 1;
  j["ensemble"] = model.ensemble.average
                      ? std::string("average-quality")
                      : std::string("single:") + aggregation_kind_name(model.ensemble.single);
  j["extractor"] = {{"backend", backend_kind_name(model.extractor_cfg.backend)},
                    {"extractor_tag", model.extractor_cfg.extractor_tag},
                    {"layer_tag", model.extractor_cfg.layer_tag},
                    {"dim", model.extractor_cfg.dim}};
  j["patch_spec"] = {{"patch_size", model.patch_spec.patch_size},
                     {"stride", model.patch_spec.stride}};
  j["provenance"] = model.provenance;
  for (size_t a = 0; a < kSfaAggregators.size(); ++a) {
    j["models"][aggregation_kind_name(kSfaAggregators[a])] =
        nlohmann::json::parse(plsr_model_to_json(model.models[a]));
  }
  return j.dump(2);
}

SfaModel sfa_model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad model JSON: ") + e.what());
  }
  if (j.value("version", 0) != 1) throw Error(ErrorCode::VersionUnsupported, "model version");

  SfaModel model;
  const std::string ensemble = j.at("ensemble").get<std::string>();
  if (ensemble == "average-quality") {
    model.ensemble.average = true;
  } else if (ensemble.rfind("single:", 0) == 0) {
    model.ensemble.average = false;
    model.ensemble.single = parse_aggregation_kind(ensemble.substr(7));
  } else {
    throw Error(ErrorCode::ParseError, "bad ensemble rule '" + ensemble + "'");
  }
  const auto& ext = j.at("extractor");
  model.extractor_cfg.backend = parse_backend_kind(ext.at("backend").get<std::string>());
  model.extractor_cfg.extractor_tag = ext.at("extractor_tag").get<std::string>();
  model.extractor_cfg.layer_tag = ext.at("layer_tag").get<std::string>();
  model.extractor_cfg.dim = ext.at("dim").get<int>();
  model.patch_spec.patch_size = j.at("patch_spec").at("patch_size").get<int>();
  model.patch_spec.stride = j.at("patch_spec").at("stride").get<int>();
  model.extractor_cfg.patch_spec = model.patch_spec;
  model.provenance = j.value("provenance", "");
  for (size_t a = 0; a < kSfaAggregators.size(); ++a) {
    model.models[a] = plsr_model_from_json(
        j.at("models").at(aggregation_kind_name(kSfaAggregators[a])).dump());
  }
  return model;
}

void save_sfa_model(const SfaModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  out << sfa_model_to_json(model) << '\n';
}

SfaModel load_sfa_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return sfa_model_from_json(buffer.str());
}

}  // namespace sfa
