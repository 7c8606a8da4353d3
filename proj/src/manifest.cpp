#include "sfa/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "sfa/error.hpp"

namespace sfa {
namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) fields.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

bool parse_bool(const std::string& s, int line_no) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false" || s.empty()) return false;
  throw Error(ErrorCode::ParseError,
              "line " + std::to_string(line_no) + ": bad excluded flag '" + s + "'");
}

}  // namespace

std::vector<std::string> DatasetManifest::content_groups() const {
  std::vector<std::string> groups;
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (e.excluded) continue;
    if (seen.insert(e.content_id).second) groups.push_back(e.content_id);
  }
  return groups;
}

DatasetManifest load_manifest(const std::string& path,
                              const std::string& name,
                              ScoreKind kind,
                              double score_lo,
                              double score_hi) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path);

  DatasetManifest manifest;
  manifest.name = name;
  manifest.score_kind = kind;
  manifest.score_lo = score_lo;
  manifest.score_hi = score_hi;

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty manifest " + path);
  auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "image_id" || header[1] != "path" ||
      header[2] != "score" || header[3] != "content_id") {
    throw Error(ErrorCode::ParseError, "line 1: bad header in " + path);
  }
  const bool has_excluded = header.size() >= 5 && header[4] == "excluded";

  std::unordered_set<std::string> seen_ids;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() < 4) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected >=4 fields");
    }
    ImageEntry entry;
    entry.image_id = fields[0];
    entry.path = fields[1];
    try {
      size_t pos = 0;
      entry.score = std::stod(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument(fields[2]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": bad score '" + fields[2] + "'");
    }
    entry.content_id = fields[3];
    if (has_excluded && fields.size() >= 5) entry.excluded = parse_bool(fields[4], line_no);

    if (entry.image_id.empty() || entry.path.empty() || entry.content_id.empty()) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": empty required field");
    }
    if (entry.score < score_lo || entry.score > score_hi) {
      throw Error(ErrorCode::ScoreOutOfRange, entry.image_id);
    }
    if (!seen_ids.insert(entry.image_id).second) {
      throw Error(ErrorCode::DuplicateImageId, entry.image_id);
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void write_manifest_csv(const DatasetManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  out << "image_id,path,score,content_id,excluded\n";
  out.precision(17);
  for (const auto& e : manifest.entries) {
    out << e.image_id << ',' << e.path << ',' << e.score << ',' << e.content_id << ','
        << (e.excluded ? 1 : 0) << '\n';
  }
}

const char* score_kind_name(ScoreKind kind) {
  return kind == ScoreKind::MOS ? "MOS" : "DMOS";
}

ScoreKind parse_score_kind(const std::string& text) {
  if (text == "MOS" || text == "mos") return ScoreKind::MOS;
  if (text == "DMOS" || text == "dmos") return ScoreKind::DMOS;
  throw Error(ErrorCode::ConfigInvalid, "score_kind must be MOS or DMOS, got '" + text + "'");
}

}  // namespace sfa
