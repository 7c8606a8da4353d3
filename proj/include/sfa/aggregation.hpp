#pragma once

#include <string>

#include <Eigen/Core>

#include "sfa/feature_backend.hpp"

namespace sfa {

enum class AggregationKind { Mean, MeanStd, Quantile, Moment, Concat };

struct AggregatedFeature {
  AggregationKind kind = AggregationKind::Mean;
  Eigen::VectorXd values;
  Eigen::Index source_dim = 0;  // l
  Eigen::Index n_patches = 0;   // n
};

/// Column means: values[i] = sum_j d_ji / n.
AggregatedFeature agg_mean(const FeatureSet& fs);

/// Mean block followed by the per-column standard deviation (divisor n-1).
AggregatedFeature agg_mean_std(const FeatureSet& fs);

/// Five quartile blocks q0..q4 per column; linear interpolation between
/// order statistics at index (n-1)*t/4, so q0/q2/q4 are min/median/max.
AggregatedFeature agg_quantile(const FeatureSet& fs);

/// Mean block followed by signed k-th roots of the k-th central moments
/// (k = 2, 3, 4; divisor n).
AggregatedFeature agg_moment(const FeatureSet& fs);

/// Row concatenation d_1 + ... + d_n in grid order, length n*l.
AggregatedFeature agg_concat(const FeatureSet& fs);

AggregatedFeature aggregate(const FeatureSet& fs, AggregationKind kind);

Eigen::Index aggregated_length(AggregationKind kind, Eigen::Index source_dim,
                               Eigen::Index n_patches);

AggregationKind parse_aggregation_kind(const std::string& text);
const char* aggregation_kind_name(AggregationKind kind);

}  // namespace sfa
