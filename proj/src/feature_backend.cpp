#include "sfa/feature_backend.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "sfa/error.hpp"

namespace sfa {

Eigen::VectorXd builtin_lowlevel_features(const Eigen::MatrixXd& patch) {
  const Eigen::Index p = patch.rows();
  if (p != patch.cols() || p < 2) {
    throw Error(ErrorCode::ConfigInvalid, "builtin features need a square patch, size >= 2");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kBuiltinFeatureDim);

  const double mean = patch.mean();
  const double variance = (patch.array() - mean).square().mean();
  out[0] = mean;
  out[1] = std::sqrt(variance);

  // Forward differences. Horizontal = along x (columns).
  const Eigen::MatrixXd hdiff = patch.rightCols(p - 1) - patch.leftCols(p - 1);
  const Eigen::MatrixXd vdiff = patch.bottomRows(p - 1) - patch.topRows(p - 1);
  out[2] = hdiff.array().abs().mean();
  out[3] = vdiff.array().abs().mean();
  out[4] = (hdiff.array().square().sum() + vdiff.array().square().sum()) /
           static_cast<double>(hdiff.size() + vdiff.size());

  if (variance > 0.0) {
    // 4-neighbor Laplacian on interior pixels.
    double lap_energy = 0.0;
    for (Eigen::Index y = 1; y < p - 1; ++y) {
      for (Eigen::Index x = 1; x < p - 1; ++x) {
        const double lap = patch(y - 1, x) + patch(y + 1, x) + patch(y, x - 1) +
                           patch(y, x + 1) - 4.0 * patch(y, x);
        lap_energy += lap * lap;
      }
    }
    lap_energy /= static_cast<double>((p - 2) * (p - 2));
    out[5] = lap_energy / variance;

    // Gradient magnitudes where both forward diffs exist, binned over the
    // full 8-bit magnitude range.
    const double max_mag = 255.0 * std::sqrt(2.0);
    Eigen::VectorXd hist = Eigen::VectorXd::Zero(6);
    for (Eigen::Index y = 0; y < p - 1; ++y) {
      for (Eigen::Index x = 0; x < p - 1; ++x) {
        const double mag = std::hypot(hdiff(y, x), vdiff(y, x));
        int bin = static_cast<int>(6.0 * mag / max_mag);
        if (bin > 5) bin = 5;
        hist[bin] += 1.0;
      }
    }
    out.segment(6, 6) = hist / hist.sum();
  }
  return out;
}

FeatureSet extract(const RawImage& image, const PatchGrid& grid, const ExtractorConfig& cfg) {
  if (cfg.backend == BackendKind::FromFile) {
    throw Error(ErrorCode::ConfigInvalid, "extract requires a computing backend");
  }
  if (grid.origins.empty()) throw Error(ErrorCode::ConfigInvalid, "empty patch grid");

  FeatureSet fs;
  fs.config = cfg;
  fs.features.resize(static_cast<Eigen::Index>(grid.origins.size()), cfg.dim);

  if (cfg.backend == BackendKind::BuiltinLowLevel) {
    if (cfg.dim != kBuiltinFeatureDim) {
      throw Error(ErrorCode::DimMismatch,
                  "builtin backend emits dim " + std::to_string(kBuiltinFeatureDim));
    }
    for (size_t j = 0; j < grid.origins.size(); ++j) {
      const auto& o = grid.origins[j];
      fs.features.row(static_cast<Eigen::Index>(j)) =
          builtin_lowlevel_features(luminance_patch(image, o.x, o.y, grid.spec.patch_size));
    }
  } else {
    if (cfg.external_command.empty()) {
      throw Error(ErrorCode::BackendUnavailable, "no external command configured");
    }
    ExternalModelSession session(cfg.external_command);
    for (size_t j = 0; j < grid.origins.size(); ++j) {
      const auto& o = grid.origins[j];
      Eigen::VectorXd row =
          session.extract_patch(image, o.x, o.y, grid.spec.patch_size, cfg.layer_tag);
      if (row.size() != cfg.dim) {
        throw Error(ErrorCode::DimMismatch, "backend emitted dim " + std::to_string(row.size()) +
                                                ", expected " + std::to_string(cfg.dim));
      }
      fs.features.row(static_cast<Eigen::Index>(j)) = row;
    }
  }
  return fs;
}

FeatureSet from_file(const std::string& path) {
  const FeatureFile file = read_feature_file(path);
  FeatureSet fs;
  fs.image_id = file.image_id;
  fs.features = file.values.cast<double>();
  fs.config.backend = BackendKind::FromFile;
  fs.config.extractor_tag = file.extractor_tag;
  fs.config.layer_tag = file.layer_tag;
  fs.config.dim = static_cast<int>(file.dim());
  return fs;
}

FeatureFile to_feature_file(const FeatureSet& fs) {
  FeatureFile file;
  file.image_id = fs.image_id;
  file.extractor_tag = fs.config.extractor_tag;
  file.layer_tag = fs.config.layer_tag;
  file.values = fs.features.cast<float>();
  return file;
}

ExternalModelSession::ExternalModelSession(const std::string& command) {
  int to_pipe[2];
  int from_pipe[2];
  if (pipe(to_pipe) != 0 || pipe(from_pipe) != 0) {
    throw Error(ErrorCode::BackendUnavailable, "pipe failed");
  }
  const pid_t pid = fork();
  if (pid < 0) throw Error(ErrorCode::BackendUnavailable, "fork failed");
  if (pid == 0) {
    dup2(to_pipe[0], STDIN_FILENO);
    dup2(from_pipe[1], STDOUT_FILENO);
    close(to_pipe[0]);
    close(to_pipe[1]);
    close(from_pipe[0]);
    close(from_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_pipe[0]);
  close(from_pipe[1]);
  child_pid_ = pid;
  to_child_ = to_pipe[1];
  from_child_ = from_pipe[0];
}

ExternalModelSession::~ExternalModelSession() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (child_pid_ > 0) {
    int status = 0;
    waitpid(child_pid_, &status, 0);
  }
}

namespace {

void write_all(int fd, const std::string& data) {
  size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = write(fd, data.data() + off, data.size() - off);
    if (n <= 0) throw Error(ErrorCode::BackendUnavailable, "write to adapter failed");
    off += static_cast<size_t>(n);
  }
}

}  // namespace

Eigen::VectorXd ExternalModelSession::extract_patch(const RawImage& image, int x0, int y0,
                                                    int patch_size,
                                                    const std::string& layer_tag) {
  nlohmann::json header = {{"layer_tag", layer_tag},
                           {"width", patch_size},
                           {"height", patch_size},
                           {"channels", image.channels}};
  std::ostringstream request;
  request << header.dump() << '\n';
  request.precision(9);
  for (int y = 0; y < patch_size; ++y) {
    for (int x = 0; x < patch_size; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        if (y || x || c) request << ' ';
        request << static_cast<double>(image.sample(x0 + x, y0 + y, c));
      }
    }
  }
  request << '\n';
  write_all(to_child_, request.str());

  std::string line;
  while (true) {
    const auto nl = read_buffer_.find('\n');
    if (nl != std::string::npos) {
      line = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      break;
    }
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof(chunk));
    if (n <= 0) throw Error(ErrorCode::BackendUnavailable, "adapter closed its output");
    read_buffer_.append(chunk, static_cast<size_t>(n));
  }

  std::istringstream in(line);
  std::vector<double> values;
  double v;
  while (in >> v) values.push_back(v);
  if (values.empty()) throw Error(ErrorCode::BackendUnavailable, "empty adapter response");
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

BackendKind parse_backend_kind(const std::string& text) {
  if (text == "from-file") return BackendKind::FromFile;
  if (text == "builtin") return BackendKind::BuiltinLowLevel;
  if (text == "external") return BackendKind::ExternalModel;
  throw Error(ErrorCode::ConfigInvalid, "unknown backend '" + text + "'");
}

const char* backend_kind_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::FromFile: return "from-file";
    case BackendKind::BuiltinLowLevel: return "builtin";
    case BackendKind::ExternalModel: return "external";
  }
  return "unknown";
}

}  // namespace sfa
