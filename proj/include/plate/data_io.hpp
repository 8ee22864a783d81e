#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "plate/errors.hpp"
#include "plate/geometry.hpp"

namespace plate::io {

enum class Split { kTrain, kVal, kTest };

const char* split_name(Split split);
Split split_from_name(const std::string& name);  // throws ParseError

/// One labeled plate image. `image` is a path relative to the manifest file;
/// `plate` is the canonical label (uppercase, no separators); `tag` names the
/// jurisdiction / font profile the record came from.
struct PlateRecord {
  std::string image;
  std::string plate;
  BBox box;
  std::string tag;
  Split split = Split::kTrain;

  /// True when the plate contains characters outside the default alphabet.
  /// Flagged records are excluded from training and counted in reports
  /// instead of failing the whole manifest.
  bool flagged() const;

  bool operator==(const PlateRecord& o) const {
    return image == o.image && plate == o.plate && tag == o.tag &&
           split == o.split && box.x_min == o.box.x_min &&
           box.y_min == o.box.y_min && box.x_max == o.box.x_max &&
           box.y_max == o.box.y_max;
  }
};

/// Canonical dataset description, stored as JSON:
///   {"version": 1, "alphabet": "...", "records": [
///     {"image": ..., "plate": ..., "box": [x_min,y_min,x_max,y_max],
///      "tag": ..., "split": "train"|"val"|"test"}, ...]}
/// Field order is fixed so identical manifests are byte-identical on disk.
struct Manifest {
  int version = 1;
  std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::vector<PlateRecord> records;

  /// {train, val, test} record counts.
  std::vector<std::size_t> split_counts() const;
};

/// Uppercases and strips the separator characters ' ' and '-'. Anything else
/// passes through (and will flag the record if outside the alphabet).
std::string canonical_plate(const std::string& raw);

/// Result of parsing one key-value annotation file; unknown keys are kept in
/// file order so callers can round-trip vendor-specific extras.
struct Annotation {
  PlateRecord record;
  std::vector<std::pair<std::string, std::string>> metadata;
};

/// Parses the "key: value" annotation dialect. Required keys:
///   plate: <string>            (canonicalized via canonical_plate)
///   position_plate: x y w h    (4 integers, converted to corner form)
/// Later duplicates of a required key win. Throws ParseError with a line
/// number for syntax errors, missing keys, or degenerate boxes.
Annotation parse_kv_annotation(const std::string& text);

/// Manifest IO. Loading rejects unknown schema versions, malformed records,
/// and duplicate image paths; saving re-checks path uniqueness and writes
/// keys in the documented order. save -> load -> save is byte-stable.
Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& manifest, const std::string& path);

struct SplitFractions {
  double train = 0.4;
  double val = 0.2;
  double test = 0.4;
};

/// Seeded shuffle of record indices, then contiguous assignment: the first
/// floor(n*train) shuffled records become train, the next floor(n*val) val,
/// and the remainder test. Record order in the vector is untouched; only the
/// split field changes. Fractions must be nonnegative and sum to 1.
void assign_splits(std::vector<PlateRecord>& records,
                   const SplitFractions& fractions, std::uint64_t seed);

}  // namespace plate::io
