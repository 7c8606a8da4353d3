#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sfa/manifest.hpp"
#include "sfa/pipeline.hpp"

namespace sfa {

/// f(x) = (tau1 - tau2) / (1 + exp((x - tau3)/tau4)) + tau2
struct LogisticParams {
  double tau1 = 0.0;
  double tau2 = 0.0;
  double tau3 = 0.0;
  double tau4 = -1.0;
};

double logistic_apply(const LogisticParams& params, double x);

struct LogisticFit {
  LogisticParams params;
  double sse = 0.0;
  bool converged = true;  // best-so-far is returned either way
};

/// Damped least-squares fit of the four-parameter curve mapping objective
/// scores onto the subjective scale. Deterministic; never worse than its
/// documented initialization.
LogisticFit fit_logistic(const Eigen::VectorXd& objective, const Eigen::VectorXd& subjective);

/// Spearman rank-order correlation: Pearson on tie-averaged ranks.
double srocc(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

double plcc(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

double rmse(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Tie-averaged ranks (1-based averages over tied groups).
Eigen::VectorXd tie_averaged_ranks(const Eigen::VectorXd& values);

struct SplitPlan {
  std::uint64_t seed = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  double train_ratio = 0.8;
};

/// Seeded content-disjoint train/test plans. Per run, content groups are
/// shuffled and round-half-up(ratio * #contents) of them assigned to train;
/// excluded entries appear on neither side.
std::vector<SplitPlan> make_splits(const DatasetManifest& manifest, double train_ratio,
                                   int n_runs, std::uint64_t seed);

struct PerImageResult {
  std::string image_id;
  double subjective = 0.0;
  double objective = 0.0;
  double mapped = 0.0;
};

struct EvalReport {
  double srocc = 0.0;
  double plcc = 0.0;
  double rmse = 0.0;
  int n_test = 0;
  double outlier_ratio = 0.0;
  std::optional<LogisticParams> logistic;
  std::vector<PerImageResult> per_image;
};

/// Metrics for subjective/objective pairs. Learning-based predictions are
/// evaluated raw; the logistic map is fitted only for the mapped column and
/// the outlier ratio.
EvalReport evaluate_predictions(const std::vector<PerImageResult>& pairs);

struct RunMetrics {
  double srocc = 0.0;
  double plcc = 0.0;
  double rmse = 0.0;
  std::array<double, 3> sub_srocc{};  // per-aggregator single-model SROCC
};

struct MonteCarloSummary {
  double median_srocc = 0.0;
  double median_plcc = 0.0;
  double median_rmse = 0.0;
  double mean_srocc = 0.0;
  double mean_plcc = 0.0;
  double mean_rmse = 0.0;
  std::array<double, 3> median_sub_srocc{};
  std::vector<RunMetrics> runs;
};

/// Content-disjoint Monte-Carlo cross validation: train_sfa per run on the
/// train side, score the test side, metrics on raw predictions.
MonteCarloSummary montecarlo_eval(const DatasetManifest& manifest,
                                  const std::map<std::string, FeatureSet>& features,
                                  const PlsrConfig& cfg, int n_runs, double train_ratio,
                                  std::uint64_t seed, int jobs = 1);

/// Single train on the full source dataset, test on the full target.
EvalReport cross_dataset_eval(const DatasetManifest& train_manifest,
                              const DatasetManifest& test_manifest,
                              const std::map<std::string, FeatureSet>& features,
                              const PlsrConfig& cfg);

struct SweepRow {
  double ratio = 0.0;
  MonteCarloSummary summary;
};

std::vector<SweepRow> ratio_sweep(const DatasetManifest& manifest,
                                  const std::map<std::string, FeatureSet>& features,
                                  const PlsrConfig& cfg, const std::vector<double>& ratios,
                                  int n_runs, std::uint64_t seed, int jobs = 1);

/// Fraction of points whose residual about the fitted logistic curve
/// exceeds twice the residual standard deviation.
double outlier_ratio(const std::vector<std::pair<double, double>>& subjective_prediction);

double median(std::vector<double> values);

}  // namespace sfa
