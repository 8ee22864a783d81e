#pragma once

#include <string>
#include <utility>
#include <vector>

#include "plate/alphabet.hpp"
#include "plate/errors.hpp"

namespace plate::text {

enum class EditOp { Match, Substitute, Insert, Delete };

/// One step of a minimal edit script from ground truth to prediction.
/// Match/Substitute carry both characters, Insert only `pred`, Delete only `gt`.
struct AlignStep {
  EditOp op;
  char gt = 0;
  char pred = 0;
};

struct EditResult {
  int distance = 0;
  std::vector<AlignStep> alignment;
};

/// Unit-cost Levenshtein distance with a deterministic backtrace.
/// Ties resolve match > substitute > delete > insert, so confusion counts are
/// reproducible.
EditResult edit_distance(const std::string& gt, const std::string& pred);

/// Applies an alignment to the ground-truth string; used to check that an
/// alignment really is an edit script for (gt, pred).
std::string apply_alignment(const std::string& gt,
                            const std::vector<AlignStep>& alignment);

using StringPair = std::pair<std::string, std::string>;  // (gt, pred)

/// Character error rate: total edit distance / total ground-truth length.
double cer(const std::vector<StringPair>& pairs);

/// Fraction of pairs read exactly.
double recognition_rate(const std::vector<StringPair>& pairs);

/// Character-level recall: ground-truth characters aligned as Match, over all
/// ground-truth characters.
double recall_chars(const std::vector<StringPair>& pairs);

/// Substitution counts plus insertion/deletion marginals, indexed by alphabet
/// symbols.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(Alphabet alphabet);

  const Alphabet& alphabet() const { return alphabet_; }

  long count(char gt, char pred) const;
  long insertions(char symbol) const;
  long deletions(char symbol) const;

  void add_substitution(char gt, char pred);
  void add_match(char symbol);
  void add_insertion(char symbol);
  void add_deletion(char symbol);

  long total_substitutions() const;

  /// CSV: header row/column of symbols plus INS/DEL marginal columns.
  std::string to_csv() const;
  static ConfusionMatrix from_csv(const std::string& text);

 private:
  int idx(char c, const char* what) const;

  Alphabet alphabet_;
  std::vector<long> counts_;   // size * size, row = gt, col = pred
  std::vector<long> inserts_;  // per symbol
  std::vector<long> deletes_;  // per symbol
};

/// Accumulates alignments of all pairs into one confusion matrix.
ConfusionMatrix confusion(const std::vector<StringPair>& pairs,
                          const Alphabet& alphabet);

struct ConfusionEntry {
  char gt;
  char pred;
  long count;
};

/// Off-diagonal entries ranked by count descending, ties lexicographic by
/// (gt, pred). Zero entries are omitted.
std::vector<ConfusionEntry> top_confusions(const ConfusionMatrix& matrix, int k);

}  // namespace plate::text
