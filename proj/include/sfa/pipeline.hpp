#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>

#include "sfa/aggregation.hpp"
#include "sfa/feature_backend.hpp"
#include "sfa/plsr.hpp"

namespace sfa {

/// The three statistical aggregators whose predictions are ensembled.
constexpr std::array<AggregationKind, 3> kSfaAggregators = {
    AggregationKind::MeanStd, AggregationKind::Quantile, AggregationKind::Moment};

struct EnsembleRule {
  bool average = true;                    // average-quality ensemble
  AggregationKind single = AggregationKind::MeanStd;  // used when !average
};

/// Trained artifact: one PLSR model per aggregator plus the ensemble rule.
struct SfaModel {
  std::array<PlsrModel, 3> models;  // aligned with kSfaAggregators
  EnsembleRule ensemble;
  ExtractorConfig extractor_cfg;
  PatchSpec patch_spec;
  std::string provenance;  // config hash + seed of the producing run
};

SfaModel train_sfa(const std::map<std::string, FeatureSet>& features,
                   const std::map<std::string, double>& scores, const PlsrConfig& cfg);

double score_image(const SfaModel& model, const FeatureSet& fs);

/// The three sub-model predictions in aggregator order.
std::array<double, 3> sub_model_scores(const SfaModel& model, const FeatureSet& fs);

std::string sfa_model_to_json(const SfaModel& model);
SfaModel sfa_model_from_json(const std::string& text);

void save_sfa_model(const SfaModel& model, const std::string& path);
SfaModel load_sfa_model(const std::string& path);

}  // namespace sfa
