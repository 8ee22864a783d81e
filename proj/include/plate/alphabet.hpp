#pragma once

#include <optional>
#include <string>
#include <vector>

#include "plate/errors.hpp"

namespace plate {

/// Ordered symbol set plus the reserved CTC blank.
///
/// The blank is always the LAST class index (`blank_index() == size()`), so a
/// K-class logit row is [symbols..., blank]. Checkpoints depend on this
/// placement; do not reorder.
class Alphabet {
 public:
  /// Default plate alphabet: A-Z then 0-9.
  Alphabet() : Alphabet("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789") {}

  explicit Alphabet(std::string symbols) : symbols_(std::move(symbols)) {
    if (symbols_.empty()) throw ArgumentError("alphabet: empty symbol set");
    for (int i = 0; i < 256; ++i) index_of_[i] = -1;
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      unsigned char c = static_cast<unsigned char>(symbols_[i]);
      if (index_of_[c] >= 0)
        throw ArgumentError(std::string("alphabet: duplicate symbol '") +
                            symbols_[i] + "'");
      index_of_[c] = static_cast<int>(i);
    }
  }

  int size() const { return static_cast<int>(symbols_.size()); }
  int blank_index() const { return size(); }
  /// Classes including blank; the K of a logit matrix.
  int num_classes() const { return size() + 1; }

  const std::string& symbols() const { return symbols_; }
  char symbol(int index) const { return symbols_.at(static_cast<std::size_t>(index)); }

  std::optional<int> index(char c) const {
    int i = index_of_[static_cast<unsigned char>(c)];
    return i < 0 ? std::nullopt : std::optional<int>(i);
  }

  bool contains(char c) const { return index_of_[static_cast<unsigned char>(c)] >= 0; }

  /// Text -> class indices. Throws EncodingError naming the first unknown
  /// character.
  std::vector<int> encode(const std::string& text) const {
    std::vector<int> out;
    out.reserve(text.size());
    for (char c : text) {
      auto i = index(c);
      if (!i) throw EncodingError(std::string(1, c) + " not in alphabet");
      out.push_back(*i);
    }
    return out;
  }

  std::string decode(const std::vector<int>& indices) const {
    std::string out;
    out.reserve(indices.size());
    for (int i : indices) {
      if (i < 0 || i >= size())
        throw ArgumentError("decode: class index " + std::to_string(i) +
                            " out of range (blank is not decodable)");
      out.push_back(symbols_[static_cast<std::size_t>(i)]);
    }
    return out;
  }

 private:
  std::string symbols_;
  int index_of_[256];
};

}  // namespace plate
