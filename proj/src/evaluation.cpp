#include "sfa/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include <Eigen/Dense>

#include "sfa/error.hpp"
#include "sfa/rng.hpp"

namespace sfa {
namespace {

void require_same_length(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                         Eigen::Index min_len) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "vector lengths differ");
  if (x.size() < min_len) {
    throw Error(ErrorCode::LengthMismatch, "need >= " + std::to_string(min_len) + " points");
  }
}

double stable_sigmoid(double u) {
  // 1 / (1 + exp(u)) without overflow.
  if (u >= 0.0) {
    const double e = std::exp(-std::min(u, 500.0));
    return e / (1.0 + e);
  }
  const double e = std::exp(std::max(u, -500.0));
  return 1.0 / (1.0 + e);
}

double logistic_sse(const LogisticParams& p, const Eigen::VectorXd& objective,
                    const Eigen::VectorXd& subjective) {
  double sse = 0.0;
  for (Eigen::Index i = 0; i < objective.size(); ++i) {
    const double r = logistic_apply(p, objective[i]) - subjective[i];
    sse += r * r;
  }
  return sse;
}

}  // namespace

double logistic_apply(const LogisticParams& params, double x) {
  return (params.tau1 - params.tau2) * stable_sigmoid((x - params.tau3) / params.tau4) +
         params.tau2;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::DegenerateInput, "median of empty set");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Eigen::VectorXd tie_averaged_ranks(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });

  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (Eigen::Index k = i; k <= j; ++k) ranks[order[k]] = avg_rank;
    i = j + 1;
  }
  return ranks;
}

double plcc(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  require_same_length(x, y, 2);
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double denom = xc.norm() * yc.norm();
  if (denom == 0.0) throw Error(ErrorCode::DegenerateInput, "constant input to plcc");
  return xc.dot(yc) / denom;
}

double srocc(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  require_same_length(x, y, 3);
  const Eigen::VectorXd rx = tie_averaged_ranks(x);
  const Eigen::VectorXd ry = tie_averaged_ranks(y);
  try {
    return plcc(rx, ry);
  } catch (const Error&) {
    throw Error(ErrorCode::DegenerateInput, "all ranks equal in srocc");
  }
}

double rmse(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  require_same_length(x, y, 1);
  return std::sqrt((x - y).squaredNorm() / static_cast<double>(x.size()));
}

LogisticFit fit_logistic(const Eigen::VectorXd& objective, const Eigen::VectorXd& subjective) {
  require_same_length(objective, subjective, 5);
  if (!objective.allFinite() || !subjective.allFinite()) {
    throw Error(ErrorCode::DegenerateInput, "non-finite input to fit_logistic");
  }

  const double obj_std = std::sqrt(
      (objective.array() - objective.mean()).square().sum() /
      static_cast<double>(objective.size() - 1));
  if (obj_std == 0.0) throw Error(ErrorCode::DegenerateInput, "constant objective scores");

  std::vector<double> sorted_obj(objective.begin(), objective.end());
  LogisticParams init;
  init.tau1 = subjective.maxCoeff();
  init.tau2 = subjective.minCoeff();
  init.tau3 = median(sorted_obj);
  init.tau4 = -obj_std / 4.0;
  {
    LogisticParams flipped = init;
    flipped.tau4 = -init.tau4;
    if (logistic_sse(flipped, objective, subjective) <
        logistic_sse(init, objective, subjective)) {
      init = flipped;
    }
  }

  LogisticParams p = init;
  double sse = logistic_sse(p, objective, subjective);
  double lambda = 1e-3;
  const int max_iterations = 500;
  const double gradient_tol = 1e-12;
  bool converged = false;

  for (int iter = 0; iter < max_iterations; ++iter) {
    const Eigen::Index n = objective.size();
    Eigen::MatrixXd J(n, 4);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = (objective[i] - p.tau3) / p.tau4;
      const double g = stable_sigmoid(u);
      const double gg = g * (1.0 - g);
      const double span = p.tau1 - p.tau2;
      r[i] = span * g + p.tau2 - subjective[i];
      J(i, 0) = g;
      J(i, 1) = 1.0 - g;
      J(i, 2) = span * gg / p.tau4;
      J(i, 3) = span * gg * (objective[i] - p.tau3) / (p.tau4 * p.tau4);
    }
    const Eigen::VectorXd gradient = J.transpose() * r;
    if (gradient.norm() <= gradient_tol * std::max(1.0, sse)) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;

    bool accepted = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd damped = JtJ;
      damped.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = damped.ldlt().solve(-gradient);
      LogisticParams trial = p;
      trial.tau1 += step[0];
      trial.tau2 += step[1];
      trial.tau3 += step[2];
      trial.tau4 += step[3];
      if (trial.tau4 != 0.0 && std::isfinite(trial.tau4)) {
        const double trial_sse = logistic_sse(trial, objective, subjective);
        if (std::isfinite(trial_sse) && trial_sse < sse) {
          p = trial;
          sse = trial_sse;
          lambda = std::max(lambda / 10.0, 1e-12);
          accepted = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      converged = gradient.norm() <= 1e-6 * std::max(1.0, sse);
      break;
    }
  }

  LogisticFit fit;
  fit.params = p;
  fit.sse = sse;
  fit.converged = converged;
  return fit;
}

std::vector<SplitPlan> make_splits(const DatasetManifest& manifest, double train_ratio,
                                   int n_runs, std::uint64_t seed) {
  if (train_ratio <= 0.0 || train_ratio >= 1.0) {
    throw Error(ErrorCode::ConfigInvalid, "train_ratio must be in (0,1)");
  }
  std::vector<std::string> contents = manifest.content_groups();
  if (contents.size() < 2) throw Error(ErrorCode::TooFewContents, manifest.name);

  std::map<std::string, std::vector<std::string>> by_content;
  for (const auto& e : manifest.entries) {
    if (!e.excluded) by_content[e.content_id].push_back(e.image_id);
  }

  // round half up
  const size_t n_train_contents = static_cast<size_t>(
      std::floor(train_ratio * static_cast<double>(contents.size()) + 0.5));

  std::vector<SplitPlan> plans;
  plans.reserve(static_cast<size_t>(n_runs));
  for (int run = 0; run < n_runs; ++run) {
    SplitMix64 rng = derive_stream(seed, static_cast<std::uint64_t>(run));
    std::vector<std::string> shuffled = contents;
    fisher_yates_shuffle(shuffled, rng);

    SplitPlan plan;
    plan.seed = seed;
    plan.train_ratio = train_ratio;
    for (size_t i = 0; i < shuffled.size(); ++i) {
      auto& side = i < n_train_contents ? plan.train_ids : plan.test_ids;
      const auto& ids = by_content.at(shuffled[i]);
      side.insert(side.end(), ids.begin(), ids.end());
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

EvalReport evaluate_predictions(const std::vector<PerImageResult>& pairs) {
  if (pairs.size() < 2) throw Error(ErrorCode::LengthMismatch, "need >= 2 predictions");
  EvalReport report;
  report.n_test = static_cast<int>(pairs.size());
  Eigen::VectorXd subjective(report.n_test), objective(report.n_test);
  for (int i = 0; i < report.n_test; ++i) {
    subjective[i] = pairs[static_cast<size_t>(i)].subjective;
    objective[i] = pairs[static_cast<size_t>(i)].objective;
  }
  report.srocc = srocc(objective, subjective);
  report.plcc = plcc(objective, subjective);
  report.rmse = rmse(objective, subjective);
  report.per_image = pairs;

  if (pairs.size() >= 5) {
    try {
      const LogisticFit fit = fit_logistic(objective, subjective);
      report.logistic = fit.params;
      std::vector<std::pair<double, double>> sp;
      sp.reserve(pairs.size());
      for (const auto& p : pairs) sp.emplace_back(p.subjective, p.objective);
      report.outlier_ratio = outlier_ratio(sp);
      for (auto& p : report.per_image) p.mapped = logistic_apply(fit.params, p.objective);
    } catch (const Error&) {
      // Degenerate predictions: raw metrics stand, mapped column left zero.
    }
  }
  return report;
}

namespace {

RunMetrics evaluate_one_run(const SplitPlan& plan, const DatasetManifest& manifest,
                            const std::map<std::string, FeatureSet>& features,
                            const PlsrConfig& cfg) {
  std::map<std::string, double> score_by_id;
  for (const auto& e : manifest.entries) score_by_id[e.image_id] = e.score;

  std::map<std::string, FeatureSet> train_features;
  std::map<std::string, double> train_scores;
  for (const auto& id : plan.train_ids) {
    auto it = features.find(id);
    if (it == features.end()) throw Error(ErrorCode::MissingFeatures, id);
    train_features.emplace(id, it->second);
    train_scores[id] = score_by_id.at(id);
  }
  const SfaModel model = train_sfa(train_features, train_scores, cfg);

  const size_t n_test = plan.test_ids.size();
  Eigen::VectorXd subjective(static_cast<Eigen::Index>(n_test));
  Eigen::VectorXd ensemble(static_cast<Eigen::Index>(n_test));
  std::array<Eigen::VectorXd, 3> subs;
  for (auto& s : subs) s.resize(static_cast<Eigen::Index>(n_test));

  for (size_t i = 0; i < n_test; ++i) {
    const auto& id = plan.test_ids[i];
    auto it = features.find(id);
    if (it == features.end()) throw Error(ErrorCode::MissingFeatures, id);
    const auto sub_scores = sub_model_scores(model, it->second);
    const auto idx = static_cast<Eigen::Index>(i);
    subjective[idx] = score_by_id.at(id);
    ensemble[idx] = (sub_scores[0] + sub_scores[1] + sub_scores[2]) / 3.0;
    for (size_t a = 0; a < 3; ++a) subs[a][idx] = sub_scores[a];
  }

  RunMetrics metrics;
  metrics.srocc = srocc(ensemble, subjective);
  metrics.plcc = plcc(ensemble, subjective);
  metrics.rmse = rmse(ensemble, subjective);
  for (size_t a = 0; a < 3; ++a) metrics.sub_srocc[a] = srocc(subs[a], subjective);
  return metrics;
}

}  // namespace

MonteCarloSummary montecarlo_eval(const DatasetManifest& manifest,
                                  const std::map<std::string, FeatureSet>& features,
                                  const PlsrConfig& cfg, int n_runs, double train_ratio,
                                  std::uint64_t seed, int jobs) {
  for (const auto& e : manifest.entries) {
    if (!e.excluded && !features.count(e.image_id)) {
      throw Error(ErrorCode::MissingFeatures, e.image_id);
    }
  }
  const auto plans = make_splits(manifest, train_ratio, n_runs, seed);

  MonteCarloSummary summary;
  summary.runs.resize(plans.size());

  const int workers = std::max(1, jobs);
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= plans.size()) break;
      try {
        summary.runs[i] = evaluate_one_run(plans[i], manifest, features, cfg);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<double> sroccs, plccs, rmses;
  std::array<std::vector<double>, 3> sub_sroccs;
  for (const auto& run : summary.runs) {
    sroccs.push_back(run.srocc);
    plccs.push_back(run.plcc);
    rmses.push_back(run.rmse);
    for (size_t a = 0; a < 3; ++a) sub_sroccs[a].push_back(run.sub_srocc[a]);
  }
  summary.median_srocc = median(sroccs);
  summary.median_plcc = median(plccs);
  summary.median_rmse = median(rmses);
  const auto mean_of = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  summary.mean_srocc = mean_of(sroccs);
  summary.mean_plcc = mean_of(plccs);
  summary.mean_rmse = mean_of(rmses);
  for (size_t a = 0; a < 3; ++a) summary.median_sub_srocc[a] = median(sub_sroccs[a]);
  return summary;
}

EvalReport cross_dataset_eval(const DatasetManifest& train_manifest,
                              const DatasetManifest& test_manifest,
                              const std::map<std::string, FeatureSet>& features,
                              const PlsrConfig& cfg) {
  std::map<std::string, FeatureSet> train_features;
  std::map<std::string, double> train_scores;
  for (const auto& e : train_manifest.entries) {
    if (e.excluded) continue;
    auto it = features.find(e.image_id);
    if (it == features.end()) throw Error(ErrorCode::MissingFeatures, e.image_id);
    train_features.emplace(e.image_id, it->second);
    train_scores[e.image_id] = e.score;
  }
  const SfaModel model = train_sfa(train_features, train_scores, cfg);

  std::vector<PerImageResult> pairs;
  for (const auto& e : test_manifest.entries) {
    if (e.excluded) continue;
    auto it = features.find(e.image_id);
    if (it == features.end()) throw Error(ErrorCode::MissingFeatures, e.image_id);
    PerImageResult r;
    r.image_id = e.image_id;
    r.subjective = e.score;
    r.objective = score_image(model, it->second);
    pairs.push_back(std::move(r));
  }
  return evaluate_predictions(pairs);
}

std::vector<SweepRow> ratio_sweep(const DatasetManifest& manifest,
                                  const std::map<std::string, FeatureSet>& features,
                                  const PlsrConfig& cfg, const std::vector<double>& ratios,
                                  int n_runs, std::uint64_t seed, int jobs) {
  for (double r : ratios) {
    if (r <= 0.0 || r >= 1.0) throw Error(ErrorCode::ConfigInvalid, "ratio outside (0,1)");
  }
  std::vector<SweepRow> rows;
  rows.reserve(ratios.size());
  for (double r : ratios) {
    SweepRow row;
    row.ratio = r;
    row.summary = montecarlo_eval(manifest, features, cfg, n_runs, r, seed, jobs);
    rows.push_back(std::move(row));
  }
  return rows;
}

double outlier_ratio(const std::vector<std::pair<double, double>>& subjective_prediction) {
  if (subjective_prediction.size() < 5) {
    throw Error(ErrorCode::LengthMismatch, "need >= 5 points for outlier ratio");
  }
  const auto n = static_cast<Eigen::Index>(subjective_prediction.size());
  Eigen::VectorXd subjective(n), prediction(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    subjective[i] = subjective_prediction[static_cast<size_t>(i)].first;
    prediction[i] = subjective_prediction[static_cast<size_t>(i)].second;
  }
  const LogisticFit fit = fit_logistic(prediction, subjective);

  Eigen::VectorXd residuals(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    residuals[i] = subjective[i] - logistic_apply(fit.params, prediction[i]);
  }
  const double sigma = std::sqrt(residuals.squaredNorm() / static_cast<double>(n));
  if (sigma == 0.0) return 0.0;
  Eigen::Index outliers = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(residuals[i]) > 2.0 * sigma) ++outliers;
  }
  return static_cast<double>(outliers) / static_cast<double>(n);
}

}  // namespace sfa
