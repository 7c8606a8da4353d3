#include "sfa/plsr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <json.hpp>

#include "sfa/error.hpp"
#include "sfa/rng.hpp"

namespace sfa {

PlsrFitResult fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const PlsrConfig& cfg) {
  const Eigen::Index n = X.rows();
  const Eigen::Index l = X.cols();
  if (n < 2) throw Error(ErrorCode::TooFewSamples, std::to_string(n) + " samples");
  if (y.size() != n) throw Error(ErrorCode::LengthMismatch, "X rows vs y length");
  if (cfg.n_components < 1 ||
      cfg.n_components > std::min<Eigen::Index>(n - 1, l)) {
    throw Error(ErrorCode::TooManyComponents, std::to_string(cfg.n_components));
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw Error(ErrorCode::DegenerateInput, "non-finite training data");
  }

  PlsrFitResult result;
  PlsrModel& model = result.model;
  model.feature_mean = X.colwise().mean();
  model.target_mean = y.mean();
  model.n_components = cfg.n_components;

  Eigen::MatrixXd residual_x = X.rowwise() - model.feature_mean.transpose();
  Eigen::VectorXd residual_y = y.array() - model.target_mean;

  const double x_scale = residual_x.norm();
  const double y_scale = residual_y.norm();
  if (y_scale <= cfg.convergence_tol * std::max(1.0, std::abs(model.target_mean))) {
    model.coefficients = Eigen::VectorXd::Zero(l);
    model.intercept = model.target_mean;
    model.scores.resize(n, 0);
    result.degenerate_target = true;
    return result;
  }

  const int max_components = cfg.n_components;
  Eigen::MatrixXd weights(l, max_components);
  Eigen::MatrixXd loadings(l, max_components);
  Eigen::VectorXd target_loadings(max_components);
  Eigen::MatrixXd scores(n, max_components);

  // Single-response deflation: the weight direction has a closed form per
  // component, so no inner iteration is needed.
  int used = 0;
  for (int a = 0; a < max_components; ++a) {
    Eigen::VectorXd w = residual_x.transpose() * residual_y;
    const double w_norm = w.norm();
    if (w_norm <= cfg.convergence_tol * std::max(1.0, x_scale * y_scale)) break;
    w /= w_norm;

    const Eigen::VectorXd t = residual_x * w;
    const double tt = t.squaredNorm();
    if (tt <= cfg.convergence_tol * std::max(1.0, x_scale * x_scale)) break;

    const Eigen::VectorXd p = residual_x.transpose() * t / tt;
    const double q = residual_y.dot(t) / tt;

    weights.col(a) = w;
    loadings.col(a) = p;
    target_loadings[a] = q;
    scores.col(a) = t;
    ++used;

    residual_x.noalias() -= t * p.transpose();
    residual_y -= q * t;

    if (residual_y.norm() <= cfg.convergence_tol * y_scale) break;
  }

  model.components_used = used;
  model.scores = scores.leftCols(used);
  if (used == 0) {
    model.coefficients = Eigen::VectorXd::Zero(l);
    model.intercept = model.target_mean;
    result.degenerate_target = true;
    return result;
  }

  const Eigen::MatrixXd W = weights.leftCols(used);
  const Eigen::MatrixXd P = loadings.leftCols(used);
  const Eigen::VectorXd q = target_loadings.head(used);

  // B = W (P^T W)^{-1} q collapses the latent pipeline to one linear map.
  const Eigen::MatrixXd PtW = P.transpose() * W;
  model.coefficients = W * PtW.colPivHouseholderQr().solve(q);
  model.intercept = model.target_mean - model.feature_mean.dot(model.coefficients);

  if (!model.coefficients.allFinite()) {
    throw Error(ErrorCode::DegenerateInput, "non-finite coefficients after fit");
  }
  return result;
}

double predict(const PlsrModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.coefficients.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(model.coefficients.size()) + " features, got " +
                    std::to_string(x.size()));
  }
  return model.intercept + model.coefficients.dot(x);
}

Eigen::VectorXd predict_rows(const PlsrModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.coefficients.size()) {
    throw Error(ErrorCode::DimensionMismatch, "feature width mismatch");
  }
  return (X * model.coefficients).array() + model.intercept;
}

int select_components(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const std::vector<int>& candidates, int k_folds, std::uint64_t seed) {
  if (candidates.empty()) throw Error(ErrorCode::ConfigInvalid, "no candidates");
  if (k_folds < 2) throw Error(ErrorCode::ConfigInvalid, "k_folds must be >= 2");
  const Eigen::Index n = X.rows();
  if (n < k_folds) throw Error(ErrorCode::TooFewSamples, "fewer samples than folds");

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  SplitMix64 rng = derive_stream(seed, 0);
  fisher_yates_shuffle(order, rng);

  double best_rmse = std::numeric_limits<double>::infinity();
  int best_p = candidates.front();
  for (int p : candidates) {
    double rmse_sum = 0.0;
    for (int fold = 0; fold < k_folds; ++fold) {
      std::vector<Eigen::Index> train, test;
      for (size_t i = 0; i < order.size(); ++i) {
        (static_cast<int>(i % k_folds) == fold ? test : train).push_back(order[i]);
      }
      Eigen::MatrixXd Xtr(train.size(), X.cols());
      Eigen::VectorXd ytr(train.size());
      for (size_t i = 0; i < train.size(); ++i) {
        Xtr.row(static_cast<Eigen::Index>(i)) = X.row(train[i]);
        ytr[static_cast<Eigen::Index>(i)] = y[train[i]];
      }
      PlsrConfig cfg;
      cfg.n_components =
          std::min<int>(p, static_cast<int>(std::min<Eigen::Index>(Xtr.rows() - 1, X.cols())));
      const PlsrModel model = fit(Xtr, ytr, cfg).model;

      double sse = 0.0;
      for (Eigen::Index idx : test) {
        const double err = predict(model, X.row(idx).transpose()) - y[idx];
        sse += err * err;
      }
      rmse_sum += std::sqrt(sse / static_cast<double>(test.size()));
    }
    const double mean_rmse = rmse_sum / k_folds;
    if (mean_rmse < best_rmse || (mean_rmse == best_rmse && p < best_p)) {
      best_rmse = mean_rmse;
      best_p = p;
    }
  }
  return best_p;
}

std::string plsr_model_to_json(const PlsrModel& model) {
  nlohmann::json j = {
      {"version", 1},
      {"n_components", model.n_components},
      {"components_used", model.components_used},
      {"feature_mean", std::vector<double>(model.feature_mean.begin(), model.feature_mean.end())},
      {"target_mean", model.target_mean},
      {"coefficients",
       std::vector<double>(model.coefficients.begin(), model.coefficients.end())},
      {"intercept", model.intercept},
      {"training_meta", model.training_meta},
  };
  return j.dump(2);
}

PlsrModel plsr_model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad model JSON: ") + e.what());
  }
  if (j.value("version", 0) != 1) {
    throw Error(ErrorCode::VersionUnsupported, "model version");
  }
  PlsrModel model;
  model.n_components = j.at("n_components").get<int>();
  model.components_used = j.at("components_used").get<int>();
  const auto fm = j.at("feature_mean").get<std::vector<double>>();
  model.feature_mean = Eigen::Map<const Eigen::VectorXd>(fm.data(), fm.size());
  model.target_mean = j.at("target_mean").get<double>();
  const auto coef = j.at("coefficients").get<std::vector<double>>();
  model.coefficients = Eigen::Map<const Eigen::VectorXd>(coef.data(), coef.size());
  model.intercept = j.at("intercept").get<double>();
  model.training_meta = j.value("training_meta", "");
  return model;
}

}  // namespace sfa
