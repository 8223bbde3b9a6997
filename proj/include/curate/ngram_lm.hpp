#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "curate/document.hpp"

namespace curate::lm {

inline constexpr std::string_view kBegin = "<s>";
inline constexpr std::string_view kEnd = "</s>";
inline constexpr std::string_view kUnknown = "<unk>";

// Log10 probability assigned to <s>, which is only ever conditioned on.
inline constexpr double kBeginLogProb = -99.0;

inline constexpr int kMaxOrder = 6;

struct NGramEntry {
  double log10_prob = 0.0;
  double log10_backoff = 0.0;  // 0 when the n-gram is never a context
};

struct ModelMeta {
  std::uint64_t documents = 0;
  std::uint64_t tokens = 0;  // word tokens, markers excluded
  bool normalized = false;
};

// N-gram table keyed by the space-joined words of each n-gram. Tokens never
// contain a space because they come from a whitespace split. Immutable once
// built; concurrent queries are safe.
class NGramModel {
 public:
  using Table = std::unordered_map<std::string, NGramEntry>;

  NGramModel(int order, std::vector<Table> tables, std::vector<double> discounts,
             ModelMeta meta);

  int order() const { return order_; }
  const ModelMeta& meta() const { return meta_; }
  bool normalized() const { return meta_.normalized; }
  const std::vector<double>& discounts() const { return discounts_; }

  // n-grams with exactly n words, 1 <= n <= order().
  const Table& table(int n) const { return tables_.at(static_cast<std::size_t>(n - 1)); }

  bool in_vocabulary(std::string_view word) const;
  // Sorted unigram keys, markers included.
  std::vector<std::string> vocabulary() const;

  // log10 p(word | context) by the ARPA backoff recursion. Only the last
  // order()-1 context words are used; out-of-vocabulary words (in the
  // context or as the predicted word) are read as <unk>.
  double log10_prob(std::span<const std::string> context, std::string_view word) const;

 private:
  int order_;
  std::vector<Table> tables_;
  std::vector<double> discounts_;
  ModelMeta meta_;
};

// Whitespace tokens of a document, optionally after normalize_text. Literal
// marker strings are mapped to <unk>.
std::vector<std::string> tokenize(std::string_view text, bool normalize);

// Raw n-gram counts for orders 1..order over <s> w1 .. wT </s> sequences.
// Merging is associative and commutative, so sharded counting gives the same
// totals as a single pass.
class NGramCounter {
 public:
  NGramCounter(int order, bool normalize);

  void add_document(std::string_view text);
  void merge(const NGramCounter& other);

  int order() const { return order_; }
  bool normalize() const { return normalize_; }
  std::uint64_t documents() const { return documents_; }
  std::uint64_t tokens() const { return tokens_; }
  // counts()[n-1] holds the n-gram counts.
  const std::vector<std::unordered_map<std::string, std::uint64_t>>& counts() const {
    return counts_;
  }

 private:
  int order_;
  bool normalize_;
  std::uint64_t documents_ = 0;
  std::uint64_t tokens_ = 0;
  std::vector<std::unordered_map<std::string, std::uint64_t>> counts_;
};

struct TrainOptions {
  int order = 3;
  bool normalize = false;
  int workers = 1;
  // Lowest probability <unk> may receive at the unigram level.
  double unk_floor = 1e-7;
};

// Interpolated Kneser-Ney estimate from merged counts.
NGramModel estimate(const NGramCounter& counter, double unk_floor = 1e-7);

NGramModel train(std::span<const std::string> texts, const TrainOptions& options);
NGramModel train(std::span<const Document> documents, const TrainOptions& options);

struct PerplexityScore {
  std::string id;
  double perplexity = 0.0;
  std::size_t tokens = 0;  // scored tokens, end marker included
};

// 10^(-(1/T) sum log10 p) over the words and the end marker.
PerplexityScore perplexity(const NGramModel& model, std::string_view id, std::string_view text);
PerplexityScore perplexity(const NGramModel& model, const Document& document);

// ARPA text layout with a leading '#' metadata comment. Probabilities are
// written in shortest round-trip form, so load(save(m)) is exact.
void save_arpa(const NGramModel& model, std::ostream& out);
NGramModel load_arpa(std::istream& in);

}  // namespace curate::lm
