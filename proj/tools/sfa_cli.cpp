#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfa/aggregation.hpp"
#include "sfa/error.hpp"
#include "sfa/evaluation.hpp"
#include "sfa/feature_backend.hpp"
#include "sfa/feature_file.hpp"
#include "sfa/image.hpp"
#include "sfa/manifest.hpp"
#include "sfa/patch_layout.hpp"
#include "sfa/pipeline.hpp"
#include "sfa/plsr.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DatasetFlags {
  std::string manifest_path;
  std::string name = "dataset";
  std::string score_kind = "MOS";
  double score_lo = 0.0;
  double score_hi = 100.0;

  sfa::DatasetManifest load() const {
    return sfa::load_manifest(manifest_path, name, sfa::parse_score_kind(score_kind), score_lo,
                              score_hi);
  }
};

void add_dataset_flags(CLI::App* cmd, DatasetFlags& flags, const std::string& prefix = "") {
  const std::string dash = prefix.empty() ? "--" : "--" + prefix + "-";
  cmd->add_option(dash + "manifest", flags.manifest_path, "manifest CSV path")->required();
  cmd->add_option(dash + "dataset-name", flags.name, "dataset name");
  cmd->add_option(dash + "score-kind", flags.score_kind, "MOS or DMOS");
  cmd->add_option(dash + "score-lo", flags.score_lo, "score range low");
  cmd->add_option(dash + "score-hi", flags.score_hi, "score range high");
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(int argc, char** argv) {
  std::string all;
  for (int i = 0; i < argc; ++i) {
    all += argv[i];
    all += '\n';
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(all)));
  return buf;
}

std::map<std::string, sfa::FeatureSet> load_feature_dir(const std::string& dir,
                                                        const sfa::DatasetManifest& manifest) {
  std::map<std::string, sfa::FeatureSet> features;
  for (const auto& e : manifest.entries) {
    if (e.excluded) continue;
    const fs::path path = fs::path(dir) / (e.image_id + ".sfaf");
    if (!fs::exists(path)) {
      throw sfa::Error(sfa::ErrorCode::UpstreamArtifactMissing, path.string());
    }
    features.emplace(e.image_id, sfa::from_file(path.string()));
  }
  return features;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw sfa::Error(sfa::ErrorCode::IoError, "cannot open " + path.string());
  out << text;
}

void write_index(const fs::path& out_dir, const std::string& command, const std::string& hash,
                 std::uint64_t seed, const std::vector<std::string>& artifacts) {
  json index = {{"command", command},
                {"config_hash", hash},
                {"seed", seed},
                {"artifacts", artifacts}};
  write_text(out_dir / "index.json", index.dump(2) + "\n");
}

json summary_to_json(const sfa::MonteCarloSummary& summary) {
  return json{{"median", {{"srocc", summary.median_srocc},
                          {"plcc", summary.median_plcc},
                          {"rmse", summary.median_rmse}}},
              {"mean", {{"srocc", summary.mean_srocc},
                        {"plcc", summary.mean_plcc},
                        {"rmse", summary.mean_rmse}}},
              {"median_sub_srocc", {{"meanstd", summary.median_sub_srocc[0]},
                                    {"quantile", summary.median_sub_srocc[1]},
                                    {"moment", summary.median_sub_srocc[2]}}},
              {"n_runs", summary.runs.size()}};
}

std::string runs_csv(const sfa::MonteCarloSummary& summary) {
  std::ostringstream out;
  out.precision(17);
  out << "run,srocc,plcc,rmse,srocc_meanstd,srocc_quantile,srocc_moment\n";
  for (size_t i = 0; i < summary.runs.size(); ++i) {
    const auto& r = summary.runs[i];
    out << i << ',' << r.srocc << ',' << r.plcc << ',' << r.rmse << ',' << r.sub_srocc[0]
        << ',' << r.sub_srocc[1] << ',' << r.sub_srocc[2] << '\n';
  }
  return out.str();
}

json report_to_json(const sfa::EvalReport& report) {
  json j = {{"srocc", report.srocc},
            {"plcc", report.plcc},
            {"rmse", report.rmse},
            {"n_test", report.n_test},
            {"outlier_ratio", report.outlier_ratio}};
  if (report.logistic) {
    j["logistic"] = {{"tau1", report.logistic->tau1},
                     {"tau2", report.logistic->tau2},
                     {"tau3", report.logistic->tau3},
                     {"tau4", report.logistic->tau4}};
  }
  return j;
}

std::string scatter_csv(const sfa::EvalReport& report) {
  // Plot-ready scatter/band dump; band half-width is 2 sigma of the
  // residuals about the fitted curve.
  double sigma = 0.0;
  if (report.logistic) {
    double sse = 0.0;
    for (const auto& p : report.per_image) {
      const double r = p.subjective - p.mapped;
      sse += r * r;
    }
    sigma = std::sqrt(sse / static_cast<double>(report.per_image.size()));
  }
  std::ostringstream out;
  out.precision(17);
  out << "image_id,subjective,objective,mapped,band_lo,band_hi\n";
  for (const auto& p : report.per_image) {
    out << p.image_id << ',' << p.subjective << ',' << p.objective << ',' << p.mapped << ','
        << p.mapped - 2.0 * sigma << ',' << p.mapped + 2.0 * sigma << '\n';
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SFA-PLSR no-reference blur image quality assessment"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; explicit flags win");

  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = "out";
  app.add_option("--seed", seed, "RNG seed for stochastic commands")->capture_default_str();
  app.add_option("--jobs", jobs, "worker threads")->capture_default_str();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();

  int patch_size = 224;
  int stride = -1;  // default: half patch size
  auto patch_spec = [&]() {
    sfa::PatchSpec spec;
    spec.patch_size = patch_size;
    spec.stride = stride > 0 ? stride : patch_size / 2;
    return spec;
  };

  // layout
  auto* layout = app.add_subcommand("layout", "print the patch grid as JSON");
  int width = 0, height = 0;
  std::string mode = "multipatch";
  layout->add_option("--width", width)->required();
  layout->add_option("--height", height)->required();
  layout->add_option("--patch-size", patch_size)->capture_default_str();
  layout->add_option("--stride", stride, "default: patch_size/2");
  layout->add_option("--mode", mode, "multipatch|crop|scale|pad")->capture_default_str();

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "write per-image feature files");
  DatasetFlags extract_ds;
  add_dataset_flags(extract_cmd, extract_ds);
  std::string backend = "builtin";
  std::string external_command;
  std::string extractor_tag = "builtin-lowlevel";
  std::string layer_tag = "stats";
  int feature_dim = sfa::kBuiltinFeatureDim;
  extract_cmd->add_option("--backend", backend, "builtin|external")->capture_default_str();
  extract_cmd->add_option("--external-command", external_command,
                          "adapter command for the external backend");
  extract_cmd->add_option("--extractor-tag", extractor_tag)->capture_default_str();
  extract_cmd->add_option("--layer-tag", layer_tag)->capture_default_str();
  extract_cmd->add_option("--dim", feature_dim)->capture_default_str();
  extract_cmd->add_option("--patch-size", patch_size)->capture_default_str();
  extract_cmd->add_option("--stride", stride, "default: patch_size/2");

  // aggregate
  auto* aggregate_cmd = app.add_subcommand("aggregate", "aggregate feature files");
  std::vector<std::string> feature_paths;
  std::string agg_kind = "meanstd";
  aggregate_cmd->add_option("--features", feature_paths, "feature file paths")->required();
  aggregate_cmd->add_option("--kind", agg_kind, "mean|meanstd|quantile|moment|concat")
      ->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "train an SFA model");
  DatasetFlags train_ds;
  add_dataset_flags(train_cmd, train_ds);
  std::string features_dir;
  int n_components = 10;
  bool select = false;
  std::vector<int> candidates = {5, 10, 15, 20, 25, 30};
  int k_folds = 5;
  train_cmd->add_option("--features-dir", features_dir)->required();
  train_cmd->add_option("--components", n_components)->capture_default_str();
  train_cmd->add_flag("--select-components", select,
                      "pick components by k-fold cross-validation");
  train_cmd->add_option("--candidates", candidates)->capture_default_str();
  train_cmd->add_option("--folds", k_folds)->capture_default_str();

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "score feature files with a model");
  std::string model_path;
  std::vector<std::string> predict_features;
  predict_cmd->add_option("--model", model_path)->required();
  predict_cmd->add_option("--features", predict_features, "feature file paths")->required();

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "evaluate a model on a dataset");
  DatasetFlags eval_ds;
  add_dataset_flags(evaluate_cmd, eval_ds);
  evaluate_cmd->add_option("--model", model_path)->required();
  evaluate_cmd->add_option("--features-dir", features_dir)->required();

  // montecarlo
  auto* mc_cmd = app.add_subcommand("montecarlo", "Monte-Carlo cross validation");
  DatasetFlags mc_ds;
  add_dataset_flags(mc_cmd, mc_ds);
  int n_runs = 1000;
  double train_ratio = 0.8;
  mc_cmd->add_option("--features-dir", features_dir)->required();
  mc_cmd->add_option("--runs", n_runs)->capture_default_str();
  mc_cmd->add_option("--ratio", train_ratio)->capture_default_str();
  mc_cmd->add_option("--components", n_components)->capture_default_str();

  // crosseval
  auto* cross_cmd = app.add_subcommand("crosseval", "train on one dataset, test on another");
  DatasetFlags cross_train_ds, cross_test_ds;
  add_dataset_flags(cross_cmd, cross_train_ds, "train");
  add_dataset_flags(cross_cmd, cross_test_ds, "test");
  cross_cmd->add_option("--features-dir", features_dir)->required();
  cross_cmd->add_option("--components", n_components)->capture_default_str();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "training-ratio sweep");
  DatasetFlags sweep_ds;
  add_dataset_flags(sweep_cmd, sweep_ds);
  std::vector<double> ratios = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  sweep_cmd->add_option("--features-dir", features_dir)->required();
  sweep_cmd->add_option("--ratios", ratios)->capture_default_str();
  sweep_cmd->add_option("--runs", n_runs)->capture_default_str();
  sweep_cmd->add_option("--components", n_components)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  const std::string hash = config_hash(argc, argv);

  try {
    if (layout->parsed()) {
      const sfa::RepresentationPlan plan = sfa::represent(
          {width, height}, sfa::parse_representation_mode(mode), patch_spec());
      json j = {{"dims", {{"width", width}, {"height", height}}},
                {"spec", {{"patch_size", plan.spec.patch_size}, {"stride", plan.spec.stride}}},
                {"mode", mode},
                {"config_hash", hash}};
      for (const auto& r : plan.rects) {
        json rect = {{"x", r.x}, {"y", r.y}, {"width", r.width}, {"height", r.height}};
        if (r.resample) {
          rect["resample"] = "bilinear";
          rect["target_width"] = r.target_width;
          rect["target_height"] = r.target_height;
          rect["pad_to_square"] = r.pad_to_square;
        }
        j["rects"].push_back(rect);
        if (mode == "multipatch") j["origins"].push_back({r.x, r.y});
      }
      std::cout << j.dump(2) << '\n';
    } else if (extract_cmd->parsed()) {
      const sfa::DatasetManifest manifest = extract_ds.load();
      sfa::ExtractorConfig cfg;
      cfg.backend = sfa::parse_backend_kind(backend);
      cfg.extractor_tag = extractor_tag;
      cfg.layer_tag = layer_tag;
      cfg.dim = feature_dim;
      cfg.patch_spec = patch_spec();
      cfg.external_command = external_command;

      fs::create_directories(out_dir);
      std::vector<std::string> artifacts;
      for (const auto& e : manifest.entries) {
        if (e.excluded) continue;
        const sfa::RawImage image = sfa::read_pnm(e.path);
        const sfa::PatchGrid grid = sfa::compute_grid(image.dims(), cfg.patch_spec);
        sfa::FeatureSet fs_out = sfa::extract(image, grid, cfg);
        fs_out.image_id = e.image_id;
        const fs::path path = fs::path(out_dir) / (e.image_id + ".sfaf");
        sfa::write_feature_file(sfa::to_feature_file(fs_out), path.string());
        artifacts.push_back(path.filename().string());
      }
      write_index(out_dir, "extract", hash, seed, artifacts);
    } else if (aggregate_cmd->parsed()) {
      fs::create_directories(out_dir);
      std::vector<std::string> artifacts;
      const sfa::AggregationKind kind = sfa::parse_aggregation_kind(agg_kind);
      for (const auto& path : feature_paths) {
        const sfa::FeatureSet fs_in = sfa::from_file(path);
        const sfa::AggregatedFeature agg = sfa::aggregate(fs_in, kind);
        sfa::FeatureFile out_file;
        out_file.image_id = fs_in.image_id;
        out_file.extractor_tag = fs_in.config.extractor_tag;
        out_file.layer_tag = std::string("agg:") + sfa::aggregation_kind_name(kind);
        out_file.values = agg.values.transpose().cast<float>();
        const fs::path out_path =
            fs::path(out_dir) / (fs::path(path).stem().string() + "." + agg_kind + ".sfaf");
        sfa::write_feature_file(out_file, out_path.string());
        artifacts.push_back(out_path.filename().string());
      }
      write_index(out_dir, "aggregate", hash, seed, artifacts);
    } else if (train_cmd->parsed()) {
      const sfa::DatasetManifest manifest = train_ds.load();
      const auto features = load_feature_dir(features_dir, manifest);
      std::map<std::string, double> scores;
      for (const auto& e : manifest.entries) {
        if (!e.excluded) scores[e.image_id] = e.score;
      }
      sfa::PlsrConfig cfg;
      cfg.n_components = n_components;
      if (select) {
        // Component selection on the mean&std design matrix.
        Eigen::MatrixXd X;
        Eigen::VectorXd y(static_cast<Eigen::Index>(scores.size()));
        Eigen::Index row = 0;
        for (const auto& [id, score] : scores) {
          const sfa::AggregatedFeature agg =
              sfa::aggregate(features.at(id), sfa::AggregationKind::MeanStd);
          if (X.size() == 0) X.resize(static_cast<Eigen::Index>(scores.size()), agg.values.size());
          X.row(row) = agg.values;
          y[row++] = score;
        }
        cfg.n_components = sfa::select_components(X, y, candidates, k_folds, seed);
      }
      sfa::SfaModel model = sfa::train_sfa(features, scores, cfg);
      model.provenance = "config_hash=" + hash + ";seed=" + std::to_string(seed);
      fs::create_directories(out_dir);
      const fs::path path = fs::path(out_dir) / "sfa_model.json";
      sfa::save_sfa_model(model, path.string());
      write_index(out_dir, "train", hash, seed, {path.filename().string()});
      std::cout << json{{"model", path.string()}, {"components", cfg.n_components}}.dump()
                << '\n';
    } else if (predict_cmd->parsed()) {
      const sfa::SfaModel model = sfa::load_sfa_model(model_path);
      for (const auto& path : predict_features) {
        const sfa::FeatureSet fs_in = sfa::from_file(path);
        const double score = sfa::score_image(model, fs_in);
        std::cout << json{{"image_id", fs_in.image_id}, {"score", score}}.dump() << '\n';
      }
    } else if (evaluate_cmd->parsed()) {
      const sfa::DatasetManifest manifest = eval_ds.load();
      const auto features = load_feature_dir(features_dir, manifest);
      const sfa::SfaModel model = sfa::load_sfa_model(model_path);
      std::vector<sfa::PerImageResult> pairs;
      for (const auto& e : manifest.entries) {
        if (e.excluded) continue;
        sfa::PerImageResult r;
        r.image_id = e.image_id;
        r.subjective = e.score;
        r.objective = sfa::score_image(model, features.at(e.image_id));
        pairs.push_back(std::move(r));
      }
      const sfa::EvalReport report = sfa::evaluate_predictions(pairs);
      json j = report_to_json(report);
      j["config_hash"] = hash;
      j["seed"] = seed;
      fs::create_directories(out_dir);
      write_text(fs::path(out_dir) / "report.json", j.dump(2) + "\n");
      write_text(fs::path(out_dir) / "scatter.csv", scatter_csv(report));
      write_index(out_dir, "evaluate", hash, seed, {"report.json", "scatter.csv"});
      std::cout << j.dump(2) << '\n';
    } else if (mc_cmd->parsed()) {
      const sfa::DatasetManifest manifest = mc_ds.load();
      const auto features = load_feature_dir(features_dir, manifest);
      sfa::PlsrConfig cfg;
      cfg.n_components = n_components;
      const sfa::MonteCarloSummary summary =
          sfa::montecarlo_eval(manifest, features, cfg, n_runs, train_ratio, seed, jobs);
      json j = summary_to_json(summary);
      j["config_hash"] = hash;
      j["seed"] = seed;
      j["ratio"] = train_ratio;
      fs::create_directories(out_dir);
      write_text(fs::path(out_dir) / "summary.json", j.dump(2) + "\n");
      write_text(fs::path(out_dir) / "runs.csv", runs_csv(summary));
      write_index(out_dir, "montecarlo", hash, seed, {"summary.json", "runs.csv"});
      std::cout << j.dump(2) << '\n';
    } else if (cross_cmd->parsed()) {
      const sfa::DatasetManifest train_manifest = cross_train_ds.load();
      const sfa::DatasetManifest test_manifest = cross_test_ds.load();
      auto features = load_feature_dir(features_dir, train_manifest);
      auto test_features = load_feature_dir(features_dir, test_manifest);
      features.merge(test_features);
      sfa::PlsrConfig cfg;
      cfg.n_components = n_components;
      const sfa::EvalReport report =
          sfa::cross_dataset_eval(train_manifest, test_manifest, features, cfg);
      json j = report_to_json(report);
      j["config_hash"] = hash;
      j["seed"] = seed;
      fs::create_directories(out_dir);
      write_text(fs::path(out_dir) / "crosseval.json", j.dump(2) + "\n");
      write_index(out_dir, "crosseval", hash, seed, {"crosseval.json"});
      std::cout << j.dump(2) << '\n';
    } else if (sweep_cmd->parsed()) {
      const sfa::DatasetManifest manifest = sweep_ds.load();
      const auto features = load_feature_dir(features_dir, manifest);
      sfa::PlsrConfig cfg;
      cfg.n_components = n_components;
      const auto rows = sfa::ratio_sweep(manifest, features, cfg, ratios, n_runs, seed, jobs);
      std::ostringstream csv;
      csv.precision(17);
      csv << "ratio,median_srocc,median_plcc,median_rmse,mean_srocc,mean_plcc,mean_rmse\n";
      for (const auto& row : rows) {
        const auto& s = row.summary;
        csv << row.ratio << ',' << s.median_srocc << ',' << s.median_plcc << ','
            << s.median_rmse << ',' << s.mean_srocc << ',' << s.mean_plcc << ','
            << s.mean_rmse << '\n';
      }
      fs::create_directories(out_dir);
      write_text(fs::path(out_dir) / "sweep.csv", csv.str());
      json j = {{"config_hash", hash}, {"seed", seed}, {"rows", rows.size()}};
      write_text(fs::path(out_dir) / "sweep.json", j.dump(2) + "\n");
      write_index(out_dir, "sweep", hash, seed, {"sweep.csv", "sweep.json"});
      std::cout << csv.str();
    }
  } catch (const sfa::Error& e) {
    std::cerr << json{{"error", sfa::error_code_name(e.code())}, {"detail", e.what()}}.dump()
              << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "Unhandled"}, {"detail", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
