#pragma once

#include <string>
#include <vector>

namespace sfa {

enum class ScoreKind { MOS, DMOS };

struct ImageEntry {
  std::string image_id;
  std::string path;
  double score = 0.0;
  std::string content_id;
  bool excluded = false;
};

/// A dataset of subjectively scored images. Scores stay on the native
/// database scale (BID 0-5, CLIVE 0-100, TID2008 0-9, LIVE DMOS 0-100);
/// DMOS direction is preserved, not flipped.
struct DatasetManifest {
  std::string name;
  ScoreKind score_kind = ScoreKind::MOS;
  double score_lo = 0.0;
  double score_hi = 0.0;
  std::vector<ImageEntry> entries;

  /// Distinct content_ids in first-appearance order, excluded entries skipped.
  std::vector<std::string> content_groups() const;
};

/// Parses the CSV manifest `image_id,path,score,content_id[,excluded]`.
/// Dataset-level metadata (name, kind, range) comes from the caller.
/// Rows violating invariants reject the whole load.
DatasetManifest load_manifest(const std::string& path,
                              const std::string& name,
                              ScoreKind kind,
                              double score_lo,
                              double score_hi);

void write_manifest_csv(const DatasetManifest& manifest, const std::string& path);

const char* score_kind_name(ScoreKind kind);
ScoreKind parse_score_kind(const std::string& text);

}  // namespace sfa
