#include "sfa/image.hpp"

#include <fstream>

#include "sfa/error.hpp"

namespace sfa {
namespace {

int read_pnm_token(std::istream& in) {
  // Skips whitespace and '#' comments between header fields.
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  return in ? value : -1;
}

}  // namespace

RawImage read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path);

  char p, type;
  in.get(p);
  in.get(type);
  if (!in || p != 'P' || (type != '5' && type != '6')) {
    throw Error(ErrorCode::ParseError, "not a binary PGM/PPM: " + path);
  }
  RawImage image;
  image.channels = (type == '5') ? 1 : 3;
  image.width = read_pnm_token(in);
  image.height = read_pnm_token(in);
  const int maxval = read_pnm_token(in);
  if (image.width < 1 || image.height < 1 || maxval != 255) {
    throw Error(ErrorCode::ParseError, "bad PNM header in " + path);
  }
  in.get();  // single whitespace after maxval

  const size_t n = static_cast<size_t>(image.width) * image.height * image.channels;
  image.pixels.resize(n);
  in.read(reinterpret_cast<char*>(image.pixels.data()), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw Error(ErrorCode::TruncatedPayload, path);
  }
  return image;
}

void write_pnm(const RawImage& image, const std::string& path) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorCode::ConfigInvalid, "channels must be 1 or 3");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  out << (image.channels == 1 ? "P5" : "P6") << '\n'
      << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

Eigen::MatrixXd luminance_patch(const RawImage& image, int x0, int y0, int patch_size) {
  Eigen::MatrixXd lum(patch_size, patch_size);
  for (int y = 0; y < patch_size; ++y) {
    for (int x = 0; x < patch_size; ++x) {
      if (image.channels == 1) {
        lum(y, x) = image.sample(x0 + x, y0 + y, 0);
      } else {
        lum(y, x) = 0.299 * image.sample(x0 + x, y0 + y, 0) +
                    0.587 * image.sample(x0 + x, y0 + y, 1) +
                    0.114 * image.sample(x0 + x, y0 + y, 2);
      }
    }
  }
  return lum;
}

}  // namespace sfa
