#include "plate/data_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "plate/alphabet.hpp"
#include "plate/rng.hpp"

namespace plate::io {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail_line(std::size_t line_no, const std::string& what) {
  throw ParseError("annotation line " + std::to_string(line_no) + ": " + what);
}

void require_unique_paths(const std::vector<PlateRecord>& records,
                          const char* op) {
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.image).second)
      throw ArgumentError(std::string(op) + ": duplicate image path '" +
                          r.image + "'");
  }
}

}  // namespace

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  throw ArgumentError("split_name: invalid split value");
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ParseError("unknown split '" + name + "'");
}

bool PlateRecord::flagged() const {
  const Alphabet alphabet;
  return !std::all_of(plate.begin(), plate.end(),
                      [&](char c) { return alphabet.contains(c); });
}

std::vector<std::size_t> Manifest::split_counts() const {
  std::vector<std::size_t> counts(3, 0);
  for (const auto& r : records) ++counts[static_cast<int>(r.split)];
  return counts;
}

std::string canonical_plate(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (c == ' ' || c == '-') continue;
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

Annotation parse_kv_annotation(const std::string& text) {
  Annotation out;
  bool have_plate = false, have_position = false;

  std::istringstream stream(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos)
      fail_line(line_no, "expected 'key: value'");
    const std::string key = trim(line.substr(0, colon));
    const std::string value = trim(line.substr(colon + 1));
    if (key.empty()) fail_line(line_no, "empty key");

    if (key == "plate") {
      out.record.plate = canonical_plate(value);
      if (out.record.plate.empty()) fail_line(line_no, "empty plate string");
      have_plate = true;
    } else if (key == "position_plate") {
      std::istringstream nums(value);
      long x = 0, y = 0, w = 0, h = 0;
      std::string extra;
      if (!(nums >> x >> y >> w >> h) || (nums >> extra))
        fail_line(line_no, "position_plate needs exactly 4 integers, got '" +
                               value + "'");
      if (w <= 0 || h <= 0)
        fail_line(line_no, "position_plate box has non-positive size " +
                               std::to_string(w) + "x" + std::to_string(h));
      out.record.box.x_min = static_cast<double>(x);
      out.record.box.y_min = static_cast<double>(y);
      out.record.box.x_max = static_cast<double>(x + w);
      out.record.box.y_max = static_cast<double>(y + h);
      have_position = true;
    } else {
      out.metadata.emplace_back(key, value);
    }
  }

  if (!have_plate) throw ParseError("annotation: missing required key 'plate'");
  if (!have_position)
    throw ParseError("annotation: missing required key 'position_plate'");
  out.record.box.label = out.record.plate;
  return out;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_manifest: cannot open " + path);

  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("load_manifest: " + path + ": " + e.what());
  }

  Manifest m;
  try {
    m.version = doc.at("version").get<int>();
    if (m.version != 1)
      throw FormatError("load_manifest: unsupported schema version " +
                        std::to_string(m.version));
    m.alphabet = doc.at("alphabet").get<std::string>();
    m.records.clear();
    for (const auto& rec : doc.at("records")) {
      PlateRecord r;
      r.image = rec.at("image").get<std::string>();
      r.plate = rec.at("plate").get<std::string>();
      const auto& box = rec.at("box");
      if (!box.is_array() || box.size() != 4)
        throw FormatError("load_manifest: record box must be [x0,y0,x1,y1]");
      r.box.x_min = box[0].get<double>();
      r.box.y_min = box[1].get<double>();
      r.box.x_max = box[2].get<double>();
      r.box.y_max = box[3].get<double>();
      r.box.label = r.plate;
      r.tag = rec.at("tag").get<std::string>();
      r.split = split_from_name(rec.at("split").get<std::string>());
      if (r.plate.empty())
        throw FormatError("load_manifest: record '" + r.image +
                          "' has an empty plate string");
      r.box.require_valid(("manifest record '" + r.image + "' box").c_str());
      m.records.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("load_manifest: " + path + ": " + e.what());
  } catch (const DomainError& e) {
    throw FormatError(std::string("load_manifest: ") + e.what());
  } catch (const ParseError& e) {
    throw FormatError(std::string("load_manifest: ") + e.what());
  }
  require_unique_paths(m.records, "load_manifest");
  return m;
}

void save_manifest(const Manifest& manifest, const std::string& path) {
  require_unique_paths(manifest.records, "save_manifest");

  ordered_json doc;
  doc["version"] = manifest.version;
  doc["alphabet"] = manifest.alphabet;
  doc["records"] = ordered_json::array();
  for (const auto& r : manifest.records) {
    ordered_json rec;
    rec["image"] = r.image;
    rec["plate"] = r.plate;
    rec["box"] = {r.box.x_min, r.box.y_min, r.box.x_max, r.box.y_max};
    rec["tag"] = r.tag;
    rec["split"] = split_name(r.split);
    doc["records"].push_back(std::move(rec));
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_manifest: cannot open " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw IoError("save_manifest: write failed for " + path);
}

void assign_splits(std::vector<PlateRecord>& records,
                   const SplitFractions& fractions, std::uint64_t seed) {
  const double sum = fractions.train + fractions.val + fractions.test;
  if (fractions.train < 0.0 || fractions.val < 0.0 || fractions.test < 0.0 ||
      std::abs(sum - 1.0) > 1e-9)
    throw ArgumentError("assign_splits: fractions must be >= 0 and sum to 1");

  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  shuffle(order, rng);

  // floor() on the double product, with a hair of slack so fractions like
  // 0.3 that are not exactly representable still floor to the intended count.
  const auto take = [n](double frac) {
    return static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * frac + 1e-9));
  };
  const std::size_t n_train = take(fractions.train);
  const std::size_t n_val = take(fractions.val);
  for (std::size_t i = 0; i < n; ++i) {
    Split s = Split::kTest;
    if (i < n_train)
      s = Split::kTrain;
    else if (i < n_train + n_val)
      s = Split::kVal;
    records[order[i]].split = s;
  }
}

}  // namespace plate::io
