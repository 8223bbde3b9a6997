#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "curate/document.hpp"

namespace curate::pipeline {

// Fiction/nonfiction classifier behind impute_genre.
class GenreClassifier {
 public:
  virtual ~GenreClassifier() = default;
  // Examples carry genre fiction or nonfiction.
  virtual void train(std::span<const Document> examples) = 0;
  virtual Genre predict(std::string_view text) const = 0;
};

struct LogisticOptions {
  std::size_t buckets = std::size_t{1} << 18;  // power of two
  int epochs = 20;
  double learning_rate = 0.5;
  double l2 = 1e-6;
};

// Hashed bag of words over normalized tokens (L2-normalized term counts)
// feeding an L2-regularized logistic model trained by SGD in input order.
class HashedLogisticClassifier : public GenreClassifier {
 public:
  explicit HashedLogisticClassifier(LogisticOptions options = {});

  void train(std::span<const Document> examples) override;
  Genre predict(std::string_view text) const override;
  // P(fiction | text)
  double probability(std::string_view text) const;

 private:
  using Features = std::vector<std::pair<std::uint32_t, double>>;
  Features features(std::string_view text) const;

  LogisticOptions options_;
  std::vector<double> weights_;
  double bias_ = 0.0;
};

struct ImputeReport {
  std::size_t training = 0;
  std::size_t heldout = 0;
  std::size_t heldout_correct = 0;
  double heldout_accuracy = 0.0;  // NaN when the held-out split is empty
  std::size_t imputed = 0;
  std::size_t passed_through = 0;
};

// Trains on the labeled documents that carry a genre (90% split by
// u(id, seed) < 0.9, the rest held out) and labels unlabeled books whose genre
// is unknown. Existing labels are never changed. Output: labeled documents,
// then unlabeled ones, each in input order. A null classifier selects
// HashedLogisticClassifier.
std::vector<Document> impute_genre(std::span<const Document> labeled,
                                   std::span<const Document> unlabeled, std::uint64_t seed,
                                   GenreClassifier* classifier = nullptr,
                                   ImputeReport* report = nullptr);

}  // namespace curate::pipeline
