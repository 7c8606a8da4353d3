#include "sfa/feature_file.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "sfa/error.hpp"

namespace sfa {
namespace {

constexpr char kMagic[4] = {'S', 'F', 'A', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw Error(ErrorCode::TruncatedPayload, "short read in header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

bool FeatureFile::operator==(const FeatureFile& other) const {
  return image_id == other.image_id && extractor_tag == other.extractor_tag &&
         layer_tag == other.layer_tag && values.rows() == other.values.rows() &&
         values.cols() == other.values.cols() &&
         std::memcmp(values.data(), other.values.data(),
                     sizeof(float) * static_cast<size_t>(values.size())) == 0;
}

void write_feature_file(const FeatureFile& f, const std::string& path) {
  if (f.values.rows() < 1 || f.values.cols() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "feature matrix must be non-empty");
  }
  if (!f.values.allFinite()) {
    throw Error(ErrorCode::DimensionMismatch, "feature matrix has non-finite entries");
  }
  nlohmann::json header = {
      {"image_id", f.image_id},
      {"extractor_tag", f.extractor_tag},
      {"layer_tag", f.layer_tag},
      {"n_patches", f.values.rows()},
      {"dim", f.values.cols()},
  };
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(header_str.size()));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  static_assert(sizeof(float) == 4);
  // Row-major storage matches the on-disk patch-major layout directly.
  out.write(reinterpret_cast<const char*>(f.values.data()),
            static_cast<std::streamsize>(sizeof(float) * f.values.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

FeatureFile read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorCode::MagicMismatch, path);
  }
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) {
    throw Error(ErrorCode::VersionUnsupported, "version " + std::to_string(version));
  }
  const std::uint32_t header_len = get_u32(in);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), header_len);
  if (!in) throw Error(ErrorCode::TruncatedPayload, "header cut short in " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad feature header: ") + e.what());
  }

  FeatureFile f;
  std::int64_t n_patches = 0;
  std::int64_t dim = 0;
  try {
    f.image_id = header.at("image_id").get<std::string>();
    f.extractor_tag = header.at("extractor_tag").get<std::string>();
    f.layer_tag = header.at("layer_tag").get<std::string>();
    n_patches = header.at("n_patches").get<std::int64_t>();
    dim = header.at("dim").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad feature header: ") + e.what());
  }
  if (n_patches < 1 || dim < 1) {
    throw Error(ErrorCode::DimensionMismatch,
                "n_patches=" + std::to_string(n_patches) + " dim=" + std::to_string(dim));
  }

  f.values.resize(n_patches, dim);
  in.read(reinterpret_cast<char*>(f.values.data()),
          static_cast<std::streamsize>(sizeof(float) * f.values.size()));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(float) * f.values.size())) {
    throw Error(ErrorCode::TruncatedPayload, path);
  }
  // Trailing bytes mean the header dims disagree with the payload.
  char extra;
  if (in.read(&extra, 1)) {
    throw Error(ErrorCode::DimensionMismatch, "payload larger than header dims in " + path);
  }
  for (Eigen::Index i = 0; i < f.values.size(); ++i) {
    if (!std::isfinite(f.values.data()[i])) {
      throw Error(ErrorCode::ParseError, "non-finite feature value in " + path);
    }
  }
  return f;
}

}  // namespace sfa
