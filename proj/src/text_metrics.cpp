#include "plate/text_metrics.hpp"

#include <algorithm>
#include <sstream>

namespace plate::text {

EditResult edit_distance(const std::string& gt, const std::string& pred) {
  const int m = static_cast<int>(gt.size());
  const int n = static_cast<int>(pred.size());
  // d(i,j) = distance between gt[0..i) and pred[0..j).
  std::vector<int> d(static_cast<std::size_t>(m + 1) * (n + 1));
  auto D = [&](int i, int j) -> int& { return d[static_cast<std::size_t>(i) * (n + 1) + j]; };
  for (int i = 0; i <= m; ++i) D(i, 0) = i;
  for (int j = 0; j <= n; ++j) D(0, j) = j;
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= n; ++j) {
      const int sub = D(i - 1, j - 1) + (gt[i - 1] != pred[j - 1] ? 1 : 0);
      const int del = D(i - 1, j) + 1;
      const int ins = D(i, j - 1) + 1;
      D(i, j) = std::min({sub, del, ins});
    }
  }

  EditResult result;
  result.distance = D(m, n);

  // Backtrace with the documented tie order: match > substitute > delete > insert.
  std::vector<AlignStep> rev;
  int i = m, j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && gt[i - 1] == pred[j - 1] && D(i, j) == D(i - 1, j - 1)) {
      rev.push_back({EditOp::Match, gt[i - 1], pred[j - 1]});
      --i, --j;
    } else if (i > 0 && j > 0 && gt[i - 1] != pred[j - 1] &&
               D(i, j) == D(i - 1, j - 1) + 1) {
      rev.push_back({EditOp::Substitute, gt[i - 1], pred[j - 1]});
      --i, --j;
    } else if (i > 0 && D(i, j) == D(i - 1, j) + 1) {
      rev.push_back({EditOp::Delete, gt[i - 1], 0});
      --i;
    } else {
      rev.push_back({EditOp::Insert, 0, pred[j - 1]});
      --j;
    }
  }
  result.alignment.assign(rev.rbegin(), rev.rend());
  return result;
}

std::string apply_alignment(const std::string& gt,
                            const std::vector<AlignStep>& alignment) {
  std::string out;
  std::size_t gi = 0;
  for (const AlignStep& s : alignment) {
    switch (s.op) {
      case EditOp::Match:
        if (gi >= gt.size() || gt[gi] != s.gt)
          throw ArgumentError("apply_alignment: match step does not fit gt");
        out.push_back(gt[gi++]);
        break;
      case EditOp::Substitute:
        if (gi >= gt.size() || gt[gi] != s.gt)
          throw ArgumentError("apply_alignment: substitute step does not fit gt");
        out.push_back(s.pred);
        ++gi;
        break;
      case EditOp::Insert:
        out.push_back(s.pred);
        break;
      case EditOp::Delete:
        if (gi >= gt.size() || gt[gi] != s.gt)
          throw ArgumentError("apply_alignment: delete step does not fit gt");
        ++gi;
        break;
    }
  }
  if (gi != gt.size()) throw ArgumentError("apply_alignment: gt not consumed");
  return out;
}

namespace {

long total_gt_chars(const std::vector<StringPair>& pairs) {
  long total = 0;
  for (const auto& [gt, pred] : pairs) total += static_cast<long>(gt.size());
  return total;
}

}  // namespace

double cer(const std::vector<StringPair>& pairs) {
  const long total = total_gt_chars(pairs);
  if (total == 0) throw DomainError("cer: no ground-truth characters");
  long dist = 0;
  for (const auto& [gt, pred] : pairs) dist += edit_distance(gt, pred).distance;
  return static_cast<double>(dist) / static_cast<double>(total);
}

double recognition_rate(const std::vector<StringPair>& pairs) {
  if (pairs.empty()) throw DomainError("recognition_rate: empty input");
  long exact = 0;
  for (const auto& [gt, pred] : pairs) exact += (gt == pred) ? 1 : 0;
  return static_cast<double>(exact) / static_cast<double>(pairs.size());
}

double recall_chars(const std::vector<StringPair>& pairs) {
  const long total = total_gt_chars(pairs);
  if (total == 0) throw DomainError("recall_chars: no ground-truth characters");
  long matches = 0;
  for (const auto& [gt, pred] : pairs) {
    for (const AlignStep& s : edit_distance(gt, pred).alignment)
      matches += (s.op == EditOp::Match) ? 1 : 0;
  }
  return static_cast<double>(matches) / static_cast<double>(total);
}

ConfusionMatrix::ConfusionMatrix(Alphabet alphabet)
    : alphabet_(std::move(alphabet)),
      counts_(static_cast<std::size_t>(alphabet_.size()) * alphabet_.size(), 0),
      inserts_(static_cast<std::size_t>(alphabet_.size()), 0),
      deletes_(static_cast<std::size_t>(alphabet_.size()), 0) {}

int ConfusionMatrix::idx(char c, const char* what) const {
  auto i = alphabet_.index(c);
  if (!i)
    throw EncodingError(std::string(what) + ": '" + std::string(1, c) +
                        "' not in alphabet");
  return *i;
}

long ConfusionMatrix::count(char gt, char pred) const {
  return counts_[static_cast<std::size_t>(idx(gt, "confusion")) * alphabet_.size() +
                 idx(pred, "confusion")];
}

long ConfusionMatrix::insertions(char symbol) const {
  return inserts_[static_cast<std::size_t>(idx(symbol, "confusion"))];
}

long ConfusionMatrix::deletions(char symbol) const {
  return deletes_[static_cast<std::size_t>(idx(symbol, "confusion"))];
}

void ConfusionMatrix::add_substitution(char gt, char pred) {
  counts_[static_cast<std::size_t>(idx(gt, "confusion")) * alphabet_.size() +
          idx(pred, "confusion")] += 1;
}

void ConfusionMatrix::add_match(char symbol) {
  const int i = idx(symbol, "confusion");
  counts_[static_cast<std::size_t>(i) * alphabet_.size() + i] += 1;
}

void ConfusionMatrix::add_insertion(char symbol) {
  inserts_[static_cast<std::size_t>(idx(symbol, "confusion"))] += 1;
}

void ConfusionMatrix::add_deletion(char symbol) {
  deletes_[static_cast<std::size_t>(idx(symbol, "confusion"))] += 1;
}

long ConfusionMatrix::total_substitutions() const {
  long total = 0;
  const int n = alphabet_.size();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) total += counts_[static_cast<std::size_t>(i) * n + j];
  return total;
}

std::string ConfusionMatrix::to_csv() const {
  std::ostringstream out;
  const int n = alphabet_.size();
  out << "gt\\pred";
  for (int j = 0; j < n; ++j) out << ',' << alphabet_.symbol(j);
  out << ",INS,DEL\n";
  for (int i = 0; i < n; ++i) {
    out << alphabet_.symbol(i);
    for (int j = 0; j < n; ++j) out << ',' << counts_[static_cast<std::size_t>(i) * n + j];
    out << ',' << inserts_[static_cast<std::size_t>(i)] << ','
        << deletes_[static_cast<std::size_t>(i)] << '\n';
  }
  return out.str();
}

ConfusionMatrix ConfusionMatrix::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("confusion csv: empty input");
  std::vector<std::string> header;
  {
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 4 || header[header.size() - 2] != "INS" ||
      header.back() != "DEL")
    throw ParseError("confusion csv: bad header");
  std::string symbols;
  for (std::size_t j = 1; j + 2 < header.size(); ++j) {
    if (header[j].size() != 1)
      throw ParseError("confusion csv: bad symbol column '" + header[j] + "'");
    symbols.push_back(header[j][0]);
  }
  ConfusionMatrix m{Alphabet(symbols)};
  int row = 0;
  const int n = m.alphabet_.size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= n) throw ParseError("confusion csv: too many rows");
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');
    if (cell.size() != 1 || cell[0] != symbols[static_cast<std::size_t>(row)])
      throw ParseError("confusion csv: row label mismatch at row " +
                       std::to_string(row + 2));
    for (int j = 0; j < n + 2; ++j) {
      if (!std::getline(ls, cell, ','))
        throw ParseError("confusion csv: short row " + std::to_string(row + 2));
      long v = 0;
      try {
        v = std::stol(cell);
      } catch (const std::exception&) {
        throw ParseError("confusion csv: bad count '" + cell + "'");
      }
      if (j < n)
        m.counts_[static_cast<std::size_t>(row) * n + j] = v;
      else if (j == n)
        m.inserts_[static_cast<std::size_t>(row)] = v;
      else
        m.deletes_[static_cast<std::size_t>(row)] = v;
    }
    ++row;
  }
  if (row != n) throw ParseError("confusion csv: missing rows");
  return m;
}

ConfusionMatrix confusion(const std::vector<StringPair>& pairs,
                          const Alphabet& alphabet) {
  ConfusionMatrix m{alphabet};
  for (const auto& [gt, pred] : pairs) {
    for (const AlignStep& s : edit_distance(gt, pred).alignment) {
      switch (s.op) {
        case EditOp::Match:
          m.add_match(s.gt);
          break;
        case EditOp::Substitute:
          m.add_substitution(s.gt, s.pred);
          break;
        case EditOp::Insert:
          m.add_insertion(s.pred);
          break;
        case EditOp::Delete:
          m.add_deletion(s.gt);
          break;
      }
    }
  }
  return m;
}

std::vector<ConfusionEntry> top_confusions(const ConfusionMatrix& matrix, int k) {
  if (k < 1) throw ArgumentError("top_confusions: k must be >= 1");
  const Alphabet& a = matrix.alphabet();
  std::vector<ConfusionEntry> entries;
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < a.size(); ++j) {
      if (i == j) continue;
      long c = matrix.count(a.symbol(i), a.symbol(j));
      if (c > 0) entries.push_back({a.symbol(i), a.symbol(j), c});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const ConfusionEntry& x, const ConfusionEntry& y) {
    if (x.count != y.count) return x.count > y.count;
    if (x.gt != y.gt) return x.gt < y.gt;
    return x.pred < y.pred;
  });
  if (static_cast<int>(entries.size()) > k) entries.resize(static_cast<std::size_t>(k));
  return entries;
}

}  // namespace plate::text
