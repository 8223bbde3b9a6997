#include "curate/genre_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "curate/errors.hpp"
#include "curate/hash.hpp"
#include "curate/text.hpp"

namespace curate::pipeline {
namespace {

constexpr std::uint64_t kFeatureKey = 0x9e3779b97f4a7c15ULL;
constexpr double kTrainShare = 0.9;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

HashedLogisticClassifier::HashedLogisticClassifier(LogisticOptions options)
    : options_(options) {
  if (options_.buckets == 0 || (options_.buckets & (options_.buckets - 1)) != 0)
    throw UsageError("feature buckets must be a power of two");
}

HashedLogisticClassifier::Features HashedLogisticClassifier::features(std::string_view text) const {
  std::map<std::uint32_t, double> counts;
  const std::string normalized = normalize_text(text);
  for (auto w : split_whitespace(normalized))
    counts[static_cast<std::uint32_t>(stable_hash64(w, kFeatureKey) & (options_.buckets - 1))] += 1.0;
  double norm = 0.0;
  for (const auto& [b, c] : counts) norm += c * c;
  norm = std::sqrt(norm);
  Features out(counts.begin(), counts.end());
  if (norm > 0)
    for (auto& f : out) f.second /= norm;
  return out;
}

void HashedLogisticClassifier::train(std::span<const Document> examples) {
  weights_.assign(options_.buckets, 0.0);
  bias_ = 0.0;
  std::vector<std::pair<Features, double>> data;
  data.reserve(examples.size());
  for (const auto& d : examples)
    data.emplace_back(features(d.text), d.genre == Genre::fiction ? 1.0 : 0.0);
  for (int epoch = 0; epoch < options_.epochs; ++epoch) {
    const double lr = options_.learning_rate / (1.0 + epoch);
    for (const auto& [x, y] : data) {
      double z = bias_;
      for (const auto& [i, v] : x) z += weights_[i] * v;
      const double g = sigmoid(z) - y;
      bias_ -= lr * g;
      for (const auto& [i, v] : x) weights_[i] -= lr * (g * v + options_.l2 * weights_[i]);
    }
  }
}

double HashedLogisticClassifier::probability(std::string_view text) const {
  if (weights_.empty()) throw std::logic_error("classifier used before training");
  double z = bias_;
  for (const auto& [i, v] : features(text)) z += weights_[i] * v;
  return sigmoid(z);
}

Genre HashedLogisticClassifier::predict(std::string_view text) const {
  return probability(text) >= 0.5 ? Genre::fiction : Genre::nonfiction;
}

std::vector<Document> impute_genre(std::span<const Document> labeled,
                                   std::span<const Document> unlabeled, std::uint64_t seed,
                                   GenreClassifier* classifier, ImputeReport* report) {
  std::vector<Document> train_set;
  std::vector<const Document*> heldout;
  for (const auto& d : labeled) {
    if (d.genre == Genre::unknown) continue;
    if (unit_threshold(d.id, seed) < kTrainShare)
      train_set.push_back(d);
    else
      heldout.push_back(&d);
  }
  const bool has_fiction = std::any_of(train_set.begin(), train_set.end(),
                                       [](const Document& d) { return d.genre == Genre::fiction; });
  const bool has_nonfiction = std::any_of(train_set.begin(), train_set.end(), [](const Document& d) {
    return d.genre == Genre::nonfiction;
  });
  if (!has_fiction || !has_nonfiction) throw DataError("single-class training set");

  HashedLogisticClassifier fallback;
  GenreClassifier& model = classifier ? *classifier : fallback;
  model.train(train_set);

  ImputeReport r;
  r.training = train_set.size();
  r.heldout = heldout.size();
  for (const Document* d : heldout)
    if (model.predict(d->text) == d->genre) ++r.heldout_correct;
  r.heldout_accuracy = heldout.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : static_cast<double>(r.heldout_correct) /
                                             static_cast<double>(r.heldout);

  std::vector<Document> out(labeled.begin(), labeled.end());
  out.reserve(labeled.size() + unlabeled.size());
  for (const auto& d : unlabeled) {
    Document copy = d;
    if (copy.doc_type == DocType::book && copy.genre == Genre::unknown) {
      copy.genre = model.predict(copy.text);
      ++r.imputed;
    } else {
      ++r.passed_through;
    }
    out.push_back(std::move(copy));
  }
  if (report) *report = r;
  return out;
}

}  // namespace curate::pipeline
