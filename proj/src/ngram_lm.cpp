#include "curate/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "curate/errors.hpp"
#include "curate/parallel.hpp"
#include "curate/text.hpp"

namespace curate::lm {
namespace {

using CountTable = std::unordered_map<std::string, std::uint64_t>;

std::string join(std::span<const std::string> words) {
  std::string key;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) key += ' ';
    key += words[i];
  }
  return key;
}

bool starts_with_begin(std::string_view key) {
  return key.substr(0, kBegin.size()) == kBegin &&
         (key.size() == kBegin.size() || key[kBegin.size()] == ' ');
}

// "a b c" -> ("a b", "c"); a unigram has an empty context.
std::pair<std::string_view, std::string_view> split_last(std::string_view key) {
  const auto pos = key.rfind(' ');
  if (pos == std::string_view::npos) return {std::string_view{}, key};
  return {key.substr(0, pos), key.substr(pos + 1)};
}

// "a b c" -> "b c"
std::string_view drop_first(std::string_view key) {
  const auto pos = key.find(' ');
  return pos == std::string_view::npos ? std::string_view{} : key.substr(pos + 1);
}

double discount(const CountTable& adjusted, bool skip_begin) {
  std::uint64_t n1 = 0;
  std::uint64_t n2 = 0;
  for (const auto& [key, a] : adjusted) {
    if (skip_begin && key == kBegin) continue;
    if (a == 1) ++n1;
    if (a == 2) ++n2;
  }
  if (n1 + 2 * n2 == 0) return 0.1;
  const double d = static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
  return std::clamp(d, 0.1, 0.99);
}

void check_order(int order) {
  if (order < 1 || order > kMaxOrder)
    throw DataError("order must be in [1, " + std::to_string(kMaxOrder) + "], got " +
                    std::to_string(order));
}

}  // namespace

NGramModel::NGramModel(int order, std::vector<Table> tables, std::vector<double> discounts,
                       ModelMeta meta)
    : order_(order),
      tables_(std::move(tables)),
      discounts_(std::move(discounts)),
      meta_(meta) {
  check_order(order_);
  if (tables_.size() != static_cast<std::size_t>(order_))
    throw DataError("model needs one table per order");
  if (!tables_[0].count(std::string(kUnknown))) throw DataError("model has no <unk> unigram");
}

bool NGramModel::in_vocabulary(std::string_view word) const {
  return tables_[0].count(std::string(word)) != 0;
}

std::vector<std::string> NGramModel::vocabulary() const {
  std::vector<std::string> words;
  words.reserve(tables_[0].size());
  for (const auto& [w, e] : tables_[0]) words.push_back(w);
  std::sort(words.begin(), words.end());
  return words;
}

double NGramModel::log10_prob(std::span<const std::string> context,
                              std::string_view word) const {
  const std::size_t use = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
  std::vector<std::string> words;
  words.reserve(use + 1);
  for (std::size_t i = context.size() - use; i < context.size(); ++i)
    words.push_back(in_vocabulary(context[i]) ? context[i] : std::string(kUnknown));
  words.push_back(in_vocabulary(word) ? std::string(word) : std::string(kUnknown));

  double backoff = 0.0;
  for (std::size_t len = use + 1; len >= 1; --len) {
    const std::span<const std::string> gram(words.data() + (words.size() - len), len);
    const auto& table = tables_[len - 1];
    if (auto it = table.find(join(gram)); it != table.end()) return backoff + it->second.log10_prob;
    const auto history = gram.first(len - 1);
    if (!history.empty()) {
      const auto& lower = tables_[len - 2];
      if (auto h = lower.find(join(history)); h != lower.end()) backoff += h->second.log10_backoff;
    }
  }
  // The unigram table always holds the (possibly <unk>-mapped) word.
  throw std::logic_error("unreachable: word missing from unigram table");
}

std::vector<std::string> tokenize(std::string_view text, bool normalize) {
  std::string normalized;
  if (normalize) {
    normalized = normalize_text(text);
    text = normalized;
  }
  std::vector<std::string> tokens;
  for (auto w : split_whitespace(text)) {
    if (w == kBegin || w == kEnd)
      tokens.emplace_back(kUnknown);
    else
      tokens.emplace_back(w);
  }
  return tokens;
}

NGramCounter::NGramCounter(int order, bool normalize)
    : order_(order), normalize_(normalize), counts_(static_cast<std::size_t>(order)) {
  check_order(order);
}

void NGramCounter::add_document(std::string_view text) {
  auto words = tokenize(text, normalize_);
  if (words.empty()) return;
  tokens_ += words.size();
  ++documents_;
  std::vector<std::string> seq;
  seq.reserve(words.size() + 2);
  seq.emplace_back(kBegin);
  for (auto& w : words) seq.push_back(std::move(w));
  seq.emplace_back(kEnd);
  const std::span<const std::string> all(seq);
  for (int n = 1; n <= order_; ++n) {
    auto& table = counts_[static_cast<std::size_t>(n - 1)];
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= seq.size(); ++i)
      ++table[join(all.subspan(i, static_cast<std::size_t>(n)))];
  }
}

void NGramCounter::merge(const NGramCounter& other) {
  if (other.order_ != order_ || other.normalize_ != normalize_)
    throw std::invalid_argument("cannot merge counters with different settings");
  documents_ += other.documents_;
  tokens_ += other.tokens_;
  for (std::size_t n = 0; n < counts_.size(); ++n)
    for (const auto& [key, c] : other.counts_[n]) counts_[n][key] += c;
}

NGramModel estimate(const NGramCounter& counter, double unk_floor) {
  if (counter.documents() == 0) throw DataError("empty corpus");
  const int order = counter.order();
  const auto& raw = counter.counts();

  // Adjusted counts: continuation counts below the top order, except for
  // n-grams that start at <s>, which have no left context.
  std::vector<CountTable> adjusted(static_cast<std::size_t>(order));
  adjusted.back() = raw.back();
  for (int n = order - 1; n >= 1; --n) {
    auto& adj = adjusted[static_cast<std::size_t>(n - 1)];
    for (const auto& [key, c] : raw[static_cast<std::size_t>(n - 1)])
      if (starts_with_begin(key)) adj[key] = c;
    for (const auto& [key, c] : raw[static_cast<std::size_t>(n)]) {
      const std::string_view suffix = drop_first(key);
      if (!starts_with_begin(suffix)) ++adj[std::string(suffix)];
    }
  }

  std::vector<double> discounts;
  for (int n = 1; n <= order; ++n)
    discounts.push_back(discount(adjusted[static_cast<std::size_t>(n - 1)], n == 1));

  std::vector<NGramModel::Table> tables(static_cast<std::size_t>(order));

  // Unigrams: interpolate with a uniform distribution over the predictive
  // vocabulary (everything but <s>, plus <unk>).
  {
    CountTable uni = adjusted[0];
    uni.erase(std::string(kBegin));
    uni.try_emplace(std::string(kUnknown), 0);
    double total = 0.0;
    double types = 0.0;
    for (const auto& [w, a] : uni) {
      total += static_cast<double>(a);
      if (a > 0) types += 1.0;
    }
    const double d = discounts[0];
    const double uniform = d * types / total / static_cast<double>(uni.size());
    std::unordered_map<std::string, double> p;
    for (const auto& [w, a] : uni)
      p[w] = std::max(static_cast<double>(a) - d, 0.0) / total + uniform;
    const std::string unk(kUnknown);
    if (p[unk] < unk_floor) {
      const double scale = (1.0 - unk_floor) / (1.0 - p[unk]);
      for (auto& [w, v] : p) v *= scale;
      p[unk] = unk_floor;
    }
    auto& table = tables[0];
    for (const auto& [w, v] : p) table[w].log10_prob = std::log10(v);
    table[std::string(kBegin)].log10_prob = kBeginLogProb;
  }

  for (int n = 2; n <= order; ++n) {
    const auto& adj = adjusted[static_cast<std::size_t>(n - 1)];
    const double d = discounts[static_cast<std::size_t>(n - 1)];
    struct ContextStats {
      double total = 0.0;
      double types = 0.0;
    };
    std::unordered_map<std::string_view, ContextStats> contexts;
    for (const auto& [key, a] : adj) {
      auto& s = contexts[split_last(key).first];
      s.total += static_cast<double>(a);
      s.types += 1.0;
    }
    auto& lower = tables[static_cast<std::size_t>(n - 2)];
    auto& table = tables[static_cast<std::size_t>(n - 1)];
    for (const auto& [key, a] : adj) {
      const auto [history, word] = split_last(key);
      const auto& s = contexts.at(history);
      const double gamma = d * s.types / s.total;
      // The shorter n-gram is always present: it has at least this left context.
      const double lower_p = std::pow(10.0, lower.at(std::string(drop_first(key))).log10_prob);
      const double p = std::max(static_cast<double>(a) - d, 0.0) / s.total + gamma * lower_p;
      table[key].log10_prob = std::log10(p);
    }
    for (const auto& [history, s] : contexts)
      lower.at(std::string(history)).log10_backoff = std::log10(d * s.types / s.total);
  }

  ModelMeta meta{counter.documents(), counter.tokens(), counter.normalize()};
  return NGramModel(order, std::move(tables), std::move(discounts), meta);
}

NGramModel train(std::span<const std::string> texts, const TrainOptions& options) {
  check_order(options.order);
  const int workers = std::max(1, options.workers);
  std::vector<NGramCounter> shards(static_cast<std::size_t>(workers),
                                   NGramCounter(options.order, options.normalize));
  parallel_chunks(texts.size(), workers, [&](std::size_t b, std::size_t e, std::size_t shard) {
    for (std::size_t i = b; i < e; ++i) shards[shard].add_document(texts[i]);
  });
  NGramCounter total(options.order, options.normalize);
  for (const auto& s : shards) total.merge(s);
  return estimate(total, options.unk_floor);
}

NGramModel train(std::span<const Document> documents, const TrainOptions& options) {
  std::vector<std::string> texts;
  texts.reserve(documents.size());
  for (const auto& d : documents) texts.push_back(d.text);
  return train(std::span<const std::string>(texts), options);
}

PerplexityScore perplexity(const NGramModel& model, std::string_view id, std::string_view text) {
  const auto words = tokenize(text, model.normalized());
  if (words.empty()) throw DataError("unscorable document " + std::string(id));
  std::vector<std::string> context{std::string(kBegin)};
  double sum = 0.0;
  for (const auto& w : words) {
    sum += model.log10_prob(context, w);
    context.push_back(w);
  }
  sum += model.log10_prob(context, kEnd);
  const std::size_t scored = words.size() + 1;
  return {std::string(id), std::pow(10.0, -sum / static_cast<double>(scored)), scored};
}

PerplexityScore perplexity(const NGramModel& model, const Document& document) {
  return perplexity(model, document.id, document.text);
}

}  // namespace curate::lm
