#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sfa {

struct PlsrConfig {
  int n_components = 10;
  int max_inner_iterations = 100;  // reserved for a multi-target extension
  double convergence_tol = 1e-12;
};

/// Collapsed linear predictor from the latent-component fit:
/// prediction(x) = intercept + coefficients . x.
struct PlsrModel {
  Eigen::VectorXd feature_mean;
  double target_mean = 0.0;
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  int n_components = 0;  // requested
  int components_used = 0;
  std::string training_meta;

  // Latent score vectors (columns), kept for orthogonality checks.
  Eigen::MatrixXd scores;
};

/// Degenerate targets (constant y) fit as intercept-only models with a
/// warning status rather than failing.
struct PlsrFitResult {
  PlsrModel model;
  bool degenerate_target = false;
};

PlsrFitResult fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const PlsrConfig& cfg);

double predict(const PlsrModel& model, const Eigen::VectorXd& x);

Eigen::VectorXd predict_rows(const PlsrModel& model, const Eigen::MatrixXd& X);

/// k-fold cross-validation over candidate component counts; lowest mean
/// fold RMSE wins, ties broken by the smaller candidate.
int select_components(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const std::vector<int>& candidates, int k_folds, std::uint64_t seed);

std::string plsr_model_to_json(const PlsrModel& model);
PlsrModel plsr_model_from_json(const std::string& text);

}  // namespace sfa
