#include <doctest.h>

#include <cstring>

#include <Eigen/Dense>

#include "sfa/error.hpp"
#include "sfa/plsr.hpp"
#include "test_helpers.hpp"

using namespace sfa;

namespace {

// Normal-equations least squares on centered data, the reference both for
// the rank-limit property and the acceptance suite.
Eigen::VectorXd ols_predictions(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::VectorXd beta =
      (Xc.transpose() * Xc).ldlt().solve(Xc.transpose() * yc);
  return (Xc * beta).array() + y.mean();
}

}  // namespace

TEST_CASE("rank-1 exact fit with one component") {
  test::SplitMix64 rng(1);
  const Eigen::Index n = 12;
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = test::uniform(rng, 0.0, 5.0);
  Eigen::MatrixXd X(n, 1);
  X.col(0) = y;

  PlsrConfig cfg;
  cfg.n_components = 1;
  const PlsrModel model = fit(X, y, cfg).model;
  CHECK(model.components_used == 1);
  const Eigen::VectorXd pred = predict_rows(model, X);
  CHECK((pred - y).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("full-rank fit matches the OLS oracle on training data") {
  test::SplitMix64 rng(2);
  const Eigen::MatrixXd X = test::random_matrix(rng, 8, 5);
  Eigen::VectorXd y(8);
  for (Eigen::Index i = 0; i < 8; ++i) y[i] = test::uniform(rng, -3.0, 3.0);

  PlsrConfig cfg;
  cfg.n_components = 5;
  const PlsrModel model = fit(X, y, cfg).model;
  const Eigen::VectorXd pls_pred = predict_rows(model, X);
  const Eigen::VectorXd ols_pred = ols_predictions(X, y);
  CHECK((pls_pred - ols_pred).norm() <= 1e-8 * std::max(1.0, ols_pred.norm()));
}

TEST_CASE("constant target degenerates to intercept-only with a warning") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(6, 4);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(6, 2.5);
  PlsrConfig cfg;
  cfg.n_components = 2;
  const PlsrFitResult result = fit(X, y, cfg);
  CHECK(result.degenerate_target);
  CHECK(result.model.intercept == doctest::Approx(2.5));
  CHECK(result.model.coefficients.norm() == doctest::Approx(0.0));
}

TEST_CASE("predict at the feature mean returns the target mean") {
  test::SplitMix64 rng(4);
  const Eigen::MatrixXd X = test::random_matrix(rng, 10, 6);
  Eigen::VectorXd y(10);
  for (Eigen::Index i = 0; i < 10; ++i) y[i] = test::uniform(rng, 0.0, 10.0);
  PlsrConfig cfg;
  cfg.n_components = 3;
  const PlsrModel model = fit(X, y, cfg).model;
  CHECK(predict(model, model.feature_mean) == doctest::Approx(model.target_mean).epsilon(1e-10));
}

TEST_CASE("planted linear model is recovered on held-out data") {
  test::SplitMix64 rng(6);
  const Eigen::Index dim = 4;
  Eigen::VectorXd w(dim);
  for (Eigen::Index i = 0; i < dim; ++i) w[i] = test::uniform(rng, -2.0, 2.0);
  const double b = 1.3;

  const Eigen::MatrixXd X = test::random_matrix(rng, 40, dim);
  const Eigen::VectorXd y = (X * w).array() + b;

  PlsrConfig cfg;
  cfg.n_components = static_cast<int>(dim);
  const PlsrModel model = fit(X, y, cfg).model;

  const Eigen::MatrixXd X_test = test::random_matrix(rng, 10, dim);
  const Eigen::VectorXd y_test = (X_test * w).array() + b;
  CHECK((predict_rows(model, X_test) - y_test).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("latent scores are pairwise orthogonal") {
  test::SplitMix64 rng(8);
  const Eigen::MatrixXd X = test::random_matrix(rng, 30, 12);
  Eigen::VectorXd y(30);
  for (Eigen::Index i = 0; i < 30; ++i) y[i] = test::uniform(rng, 0.0, 5.0);
  PlsrConfig cfg;
  cfg.n_components = 6;
  const PlsrModel model = fit(X, y, cfg).model;
  for (int a = 0; a < model.components_used; ++a) {
    for (int b = a + 1; b < model.components_used; ++b) {
      const double dot = std::abs(model.scores.col(a).dot(model.scores.col(b)));
      CHECK(dot <= 1e-8 * model.scores.col(a).norm() * model.scores.col(b).norm());
    }
  }
}

TEST_CASE("prediction is linear in the input") {
  test::SplitMix64 rng(10);
  const Eigen::MatrixXd X = test::random_matrix(rng, 15, 5);
  Eigen::VectorXd y(15);
  for (Eigen::Index i = 0; i < 15; ++i) y[i] = test::uniform(rng, 0.0, 5.0);
  PlsrConfig cfg;
  cfg.n_components = 3;
  const PlsrModel model = fit(X, y, cfg).model;

  const Eigen::VectorXd x1 = X.row(0), x2 = X.row(1);
  for (double alpha : {0.0, 0.25, 0.5, 0.9}) {
    const double mixed = predict(model, alpha * x1 + (1.0 - alpha) * x2);
    const double expected = alpha * predict(model, x1) + (1.0 - alpha) * predict(model, x2);
    CHECK(mixed == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("error paths") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(5, 3);
  Eigen::VectorXd y = Eigen::VectorXd::Random(5);
  PlsrConfig cfg;
  cfg.n_components = 4;  // > min(n-1, dim) = 3
  CHECK_THROWS_WITH_AS(fit(X, y, cfg), doctest::Contains("TooManyComponents"), Error);

  cfg.n_components = 1;
  CHECK_THROWS_WITH_AS(fit(X.topRows(1), y.head(1), cfg), doctest::Contains("TooFewSamples"),
                       Error);

  const PlsrModel model = fit(X, y, cfg).model;
  CHECK_THROWS_WITH_AS(predict(model, Eigen::VectorXd::Zero(7)),
                       doctest::Contains("DimensionMismatch"), Error);
}

TEST_CASE("determinism: identical inputs give bitwise-identical models") {
  test::SplitMix64 rng(12);
  const Eigen::MatrixXd X = test::random_matrix(rng, 20, 8);
  Eigen::VectorXd y(20);
  for (Eigen::Index i = 0; i < 20; ++i) y[i] = test::uniform(rng, 0.0, 5.0);
  PlsrConfig cfg;
  cfg.n_components = 4;
  const PlsrModel a = fit(X, y, cfg).model;
  const PlsrModel b = fit(X, y, cfg).model;
  CHECK(std::memcmp(a.coefficients.data(), b.coefficients.data(),
                    sizeof(double) * static_cast<size_t>(a.coefficients.size())) == 0);
  CHECK(a.intercept == b.intercept);
}

TEST_CASE("component selection by cross-validation") {
  std::vector<int> single = {7};
  test::SplitMix64 rng(14);
  const Eigen::MatrixXd X = test::random_matrix(rng, 30, 10);
  Eigen::VectorXd y(30);
  for (Eigen::Index i = 0; i < 30; ++i) y[i] = test::uniform(rng, 0.0, 5.0);
  CHECK(select_components(X, y, single, 5, 3) == 7);

  // planted latent rank 3: X built from 3 factors, y linear in them
  const Eigen::Index n = 60, dim = 30;
  const Eigen::MatrixXd factors = test::random_matrix(rng, n, 3);
  const Eigen::MatrixXd mixing = test::random_matrix(rng, 3, dim);
  Eigen::MatrixXd Xr = factors * mixing;
  for (Eigen::Index i = 0; i < Xr.size(); ++i) Xr.data()[i] += 0.001 * test::gaussian(rng);
  Eigen::VectorXd w(3);
  w << 1.0, -2.0, 0.5;
  Eigen::VectorXd yr = factors * w;
  for (Eigen::Index i = 0; i < n; ++i) yr[i] += 0.001 * test::gaussian(rng);

  const int chosen = select_components(Xr, yr, {1, 3, 30}, 5, 99);
  CHECK(chosen == 3);

  // deterministic given the seed
  CHECK(select_components(Xr, yr, {1, 3, 30}, 5, 99) == chosen);
}

TEST_CASE("model JSON round-trips") {
  test::SplitMix64 rng(16);
  const Eigen::MatrixXd X = test::random_matrix(rng, 12, 5);
  Eigen::VectorXd y(12);
  for (Eigen::Index i = 0; i < 12; ++i) y[i] = test::uniform(rng, 0.0, 5.0);
  PlsrConfig cfg;
  cfg.n_components = 3;
  PlsrModel model = fit(X, y, cfg).model;
  model.training_meta = "centering-only;seed=16";

  const PlsrModel loaded = plsr_model_from_json(plsr_model_to_json(model));
  CHECK(loaded.intercept == model.intercept);
  CHECK(loaded.target_mean == model.target_mean);
  CHECK(loaded.components_used == model.components_used);
  CHECK(loaded.training_meta == model.training_meta);
  CHECK((loaded.coefficients - model.coefficients).norm() == 0.0);
  CHECK((loaded.feature_mean - model.feature_mean).norm() == 0.0);
}
