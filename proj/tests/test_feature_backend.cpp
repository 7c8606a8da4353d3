#include <doctest.h>

#include <fstream>

#include "sfa/error.hpp"
#include "sfa/feature_backend.hpp"
#include "test_helpers.hpp"

using namespace sfa;

TEST_CASE("constant patch collapses to mean only") {
  const Eigen::MatrixXd patch = Eigen::MatrixXd::Constant(16, 16, 128.0);
  const Eigen::VectorXd f = builtin_lowlevel_features(patch);
  REQUIRE(f.size() == kBuiltinFeatureDim);
  CHECK(f[0] == doctest::Approx(128.0));
  for (int i = 1; i < kBuiltinFeatureDim; ++i) CHECK(f[i] == doctest::Approx(0.0));
}

TEST_CASE("vertical step edge excites horizontal differences only") {
  // left half 0, right half 255
  Eigen::MatrixXd patch = Eigen::MatrixXd::Zero(16, 16);
  patch.rightCols(8).setConstant(255.0);
  const Eigen::VectorXd f = builtin_lowlevel_features(patch);
  CHECK(f[0] == doctest::Approx(127.5));
  // |hdiff| averages one 255 jump per row over 15 positions
  CHECK(f[2] == doctest::Approx(255.0 / 15.0));
  CHECK(f[3] == doctest::Approx(0.0));
  CHECK(f[4] > 0.0);
  // histogram over gradient magnitudes sums to 1
  CHECK(f.segment(6, 6).sum() == doctest::Approx(1.0));
}

TEST_CASE("gaussian blur strictly reduces gradient energy on an edge patch") {
  Eigen::MatrixXd sharp = Eigen::MatrixXd::Zero(16, 16);
  sharp.rightCols(8).setConstant(255.0);
  double previous = std::numeric_limits<double>::infinity();
  for (double sigma : {0.0, 1.0, 2.0, 4.0}) {
    const Eigen::VectorXd f = builtin_lowlevel_features(test::gaussian_blur(sharp, sigma));
    CHECK(f[4] < previous);
    previous = f[4];
  }
}

TEST_CASE("extract emits one row per grid origin, in grid order") {
  test::SplitMix64 rng(3);
  const RawImage image = test::synthetic_image(448, 448, rng, 0.8);
  const PatchGrid grid = compute_grid(image.dims(), {224, 112});
  ExtractorConfig cfg;
  const FeatureSet fs = extract(image, grid, cfg);
  CHECK(fs.n_patches() == 9);
  CHECK(fs.dim() == kBuiltinFeatureDim);
  CHECK(fs.features.allFinite());
}

TEST_CASE("rows depend only on patch content (locality)") {
  test::SplitMix64 rng(5);
  const RawImage image = test::synthetic_image(300, 300, rng, 0.6);
  const PatchGrid grid = compute_grid(image.dims(), {64, 32});
  const FeatureSet fs = extract(image, grid, ExtractorConfig{
                                    BackendKind::BuiltinLowLevel, "b", "s",
                                    kBuiltinFeatureDim, {64, 32}, ""});
  // oracle: run the extractor on each isolated patch
  for (size_t j = 0; j < grid.origins.size(); ++j) {
    const auto& o = grid.origins[j];
    const Eigen::VectorXd isolated =
        builtin_lowlevel_features(luminance_patch(image, o.x, o.y, 64));
    CHECK((fs.features.row(static_cast<Eigen::Index>(j)).transpose() - isolated).norm() ==
          doctest::Approx(0.0));
  }
}

TEST_CASE("constant image yields identical rows") {
  RawImage image;
  image.width = 128;
  image.height = 128;
  image.channels = 1;
  image.pixels.assign(128 * 128, 77);
  const PatchGrid grid = compute_grid(image.dims(), {32, 16});
  const FeatureSet fs = extract(image, grid, ExtractorConfig{
                                    BackendKind::BuiltinLowLevel, "b", "s",
                                    kBuiltinFeatureDim, {32, 16}, ""});
  for (Eigen::Index j = 1; j < fs.n_patches(); ++j) {
    CHECK((fs.features.row(j) - fs.features.row(0)).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("feature set round-trips through the feature file") {
  test::TempDir dir("backend");
  test::SplitMix64 rng(9);
  const RawImage image = test::synthetic_image(256, 256, rng, 0.5);
  const PatchGrid grid = compute_grid(image.dims(), {128, 64});
  FeatureSet fs = extract(image, grid, ExtractorConfig{});
  fs.image_id = "roundtrip";
  const auto path = dir.file("r.sfaf");
  write_feature_file(to_feature_file(fs), path);
  const FeatureSet loaded = from_file(path);
  CHECK(loaded.image_id == "roundtrip");
  CHECK(loaded.config.backend == BackendKind::FromFile);
  CHECK(loaded.n_patches() == fs.n_patches());
  CHECK((loaded.features.cast<float>() - fs.features.cast<float>()).norm() == 0.0f);
}

TEST_CASE("pnm io round-trips gray and color") {
  test::TempDir dir("pnm");
  test::SplitMix64 rng(21);
  RawImage gray = test::synthetic_image(40, 30, rng, 0.4);
  write_pnm(gray, dir.file("g.pgm"));
  const RawImage gray2 = read_pnm(dir.file("g.pgm"));
  CHECK(gray2.pixels == gray.pixels);
  CHECK(gray2.channels == 1);

  RawImage color;
  color.width = 8;
  color.height = 4;
  color.channels = 3;
  for (int i = 0; i < 8 * 4 * 3; ++i) {
    color.pixels.push_back(static_cast<std::uint8_t>(rng.next_below(256)));
  }
  write_pnm(color, dir.file("c.ppm"));
  const RawImage color2 = read_pnm(dir.file("c.ppm"));
  CHECK(color2.pixels == color.pixels);
  CHECK(color2.channels == 3);
}

TEST_CASE("external adapter conformance: per-channel mean over the line protocol") {
  // Adapter stub: reads the JSON header line and the pixel line, answers
  // with the overall pixel mean repeated 3 times.
  test::TempDir dir("ext");
  const std::string script = dir.file("adapter.py");
  {
    std::ofstream out(script);
    out << "import sys, json\n"
           "for header_line in sys.stdin:\n"
           "    header = json.loads(header_line)\n"
           "    values = [float(v) for v in sys.stdin.readline().split()]\n"
           "    mean = sum(values) / len(values)\n"
           "    print(' '.join([repr(mean)] * 3), flush=True)\n";
  }
  RawImage image;
  image.width = 8;
  image.height = 8;
  image.channels = 1;
  image.pixels.assign(64, 0);
  for (int i = 0; i < 64; ++i) image.pixels[static_cast<size_t>(i)] = static_cast<std::uint8_t>(i);

  ExtractorConfig cfg;
  cfg.backend = BackendKind::ExternalModel;
  cfg.external_command = "python3 " + script;
  cfg.dim = 3;
  cfg.extractor_tag = "mean-stub";
  cfg.layer_tag = "pool";
  cfg.patch_spec = {4, 2};

  const PatchGrid grid = compute_grid(image.dims(), cfg.patch_spec);
  const FeatureSet fs = extract(image, grid, cfg);
  REQUIRE(fs.dim() == 3);
  for (Eigen::Index j = 0; j < fs.n_patches(); ++j) {
    const auto& o = grid.origins[static_cast<size_t>(j)];
    const double expected = luminance_patch(image, o.x, o.y, 4).mean();
    CHECK(fs.features(j, 0) == doctest::Approx(expected));
    CHECK(fs.features(j, 2) == doctest::Approx(expected));
  }
}

TEST_CASE("external adapter dim mismatch is reported") {
  test::TempDir dir("ext");
  const std::string script = dir.file("adapter.sh");
  {
    std::ofstream out(script);
    out << "#!/bin/sh\nwhile read header; do read pixels; echo 1 2; done\n";
  }
  RawImage image;
  image.width = 4;
  image.height = 4;
  image.channels = 1;
  image.pixels.assign(16, 10);
  ExtractorConfig cfg;
  cfg.backend = BackendKind::ExternalModel;
  cfg.external_command = "sh " + script;
  cfg.dim = 5;
  cfg.patch_spec = {4, 2};
  CHECK_THROWS_WITH_AS(extract(image, compute_grid(image.dims(), cfg.patch_spec), cfg),
                       doctest::Contains("DimMismatch"), Error);
}

TEST_CASE("missing external command is BackendUnavailable") {
  RawImage image;
  image.width = 4;
  image.height = 4;
  image.channels = 1;
  image.pixels.assign(16, 10);
  ExtractorConfig cfg;
  cfg.backend = BackendKind::ExternalModel;
  cfg.patch_spec = {4, 2};
  CHECK_THROWS_WITH_AS(extract(image, compute_grid(image.dims(), cfg.patch_spec), cfg),
                       doctest::Contains("BackendUnavailable"), Error);
}
