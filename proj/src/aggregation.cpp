#include "sfa/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sfa/error.hpp"

namespace sfa {
namespace {

void require_nonempty(const FeatureSet& fs) {
  if (fs.features.rows() < 1 || fs.features.cols() < 1) {
    throw Error(ErrorCode::EmptyFeatureSet, fs.image_id);
  }
}

double signed_root(double m, int k) {
  if (k % 2 == 0) return std::pow(std::max(m, 0.0), 1.0 / k);
  return std::copysign(std::pow(std::abs(m), 1.0 / k), m);
}

}  // namespace

AggregatedFeature agg_mean(const FeatureSet& fs) {
  require_nonempty(fs);
  AggregatedFeature out;
  out.kind = AggregationKind::Mean;
  out.source_dim = fs.dim();
  out.n_patches = fs.n_patches();
  out.values = fs.features.colwise().mean();
  return out;
}

AggregatedFeature agg_mean_std(const FeatureSet& fs) {
  require_nonempty(fs);
  const Eigen::Index n = fs.n_patches();
  const Eigen::Index l = fs.dim();
  if (n < 2) throw Error(ErrorCode::NeedAtLeastTwoPatches, fs.image_id);

  AggregatedFeature out;
  out.kind = AggregationKind::MeanStd;
  out.source_dim = l;
  out.n_patches = n;
  out.values.resize(2 * l);

  const Eigen::RowVectorXd mean = fs.features.colwise().mean();
  const Eigen::MatrixXd centered = fs.features.rowwise() - mean;
  out.values.head(l) = mean;
  out.values.tail(l) =
      (centered.array().square().colwise().sum() / static_cast<double>(n - 1)).sqrt();
  return out;
}

AggregatedFeature agg_quantile(const FeatureSet& fs) {
  require_nonempty(fs);
  const Eigen::Index n = fs.n_patches();
  const Eigen::Index l = fs.dim();

  AggregatedFeature out;
  out.kind = AggregationKind::Quantile;
  out.source_dim = l;
  out.n_patches = n;
  out.values.resize(5 * l);

  std::vector<double> column(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < l; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) column[static_cast<size_t>(j)] = fs.features(j, i);
    std::sort(column.begin(), column.end());
    for (int t = 0; t <= 4; ++t) {
      const double pos = static_cast<double>(n - 1) * t / 4.0;
      const auto lo = static_cast<Eigen::Index>(std::floor(pos));
      const auto hi = static_cast<Eigen::Index>(std::ceil(pos));
      const double frac = pos - static_cast<double>(lo);
      out.values[t * l + i] = (1.0 - frac) * column[static_cast<size_t>(lo)] +
                              frac * column[static_cast<size_t>(hi)];
    }
  }
  return out;
}

AggregatedFeature agg_moment(const FeatureSet& fs) {
  require_nonempty(fs);
  const Eigen::Index n = fs.n_patches();
  const Eigen::Index l = fs.dim();

  AggregatedFeature out;
  out.kind = AggregationKind::Moment;
  out.source_dim = l;
  out.n_patches = n;
  out.values.resize(4 * l);

  const Eigen::RowVectorXd mean = fs.features.colwise().mean();
  const Eigen::MatrixXd centered = fs.features.rowwise() - mean;
  out.values.head(l) = mean;
  for (int k = 2; k <= 4; ++k) {
    const Eigen::RowVectorXd moment =
        centered.array().pow(k).colwise().sum() / static_cast<double>(n);
    for (Eigen::Index i = 0; i < l; ++i) {
      out.values[(k - 1) * l + i] = signed_root(moment[i], k);
    }
  }
  return out;
}

AggregatedFeature agg_concat(const FeatureSet& fs) {
  require_nonempty(fs);
  AggregatedFeature out;
  out.kind = AggregationKind::Concat;
  out.source_dim = fs.dim();
  out.n_patches = fs.n_patches();
  out.values.resize(fs.n_patches() * fs.dim());
  for (Eigen::Index j = 0; j < fs.n_patches(); ++j) {
    out.values.segment(j * fs.dim(), fs.dim()) = fs.features.row(j);
  }
  return out;
}

AggregatedFeature aggregate(const FeatureSet& fs, AggregationKind kind) {
  switch (kind) {
    case AggregationKind::Mean: return agg_mean(fs);
    case AggregationKind::MeanStd: return agg_mean_std(fs);
    case AggregationKind::Quantile: return agg_quantile(fs);
    case AggregationKind::Moment: return agg_moment(fs);
    case AggregationKind::Concat: return agg_concat(fs);
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown aggregation kind");
}

Eigen::Index aggregated_length(AggregationKind kind, Eigen::Index source_dim,
                               Eigen::Index n_patches) {
  switch (kind) {
    case AggregationKind::Mean: return source_dim;
    case AggregationKind::MeanStd: return 2 * source_dim;
    case AggregationKind::Quantile: return 5 * source_dim;
    case AggregationKind::Moment: return 4 * source_dim;
    case AggregationKind::Concat: return n_patches * source_dim;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown aggregation kind");
}

AggregationKind parse_aggregation_kind(const std::string& text) {
  if (text == "mean") return AggregationKind::Mean;
  if (text == "meanstd") return AggregationKind::MeanStd;
  if (text == "quantile") return AggregationKind::Quantile;
  if (text == "moment") return AggregationKind::Moment;
  if (text == "concat") return AggregationKind::Concat;
  throw Error(ErrorCode::ConfigInvalid, "unknown aggregation '" + text + "'");
}

const char* aggregation_kind_name(AggregationKind kind) {
  switch (kind) {
    case AggregationKind::Mean: return "mean";
    case AggregationKind::MeanStd: return "meanstd";
    case AggregationKind::Quantile: return "quantile";
    case AggregationKind::Moment: return "moment";
    case AggregationKind::Concat: return "concat";
  }
  return "unknown";
}

}  // namespace sfa
