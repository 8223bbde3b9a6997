#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "curate/document.hpp"
#include "curate/errors.hpp"
#include "curate/ngram_lm.hpp"

namespace curate::sampler {

// Type-7 (linear interpolation between order statistics) quantile of an
// ascending sequence, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

struct Histogram {
  double lo = 0.0;     // smallest value
  double hi = 0.0;     // clip point (99.9th percentile)
  double width = 0.0;  // (hi - lo) / bins; 0 for a constant sample
  std::vector<std::uint64_t> counts;

  std::size_t bins() const { return counts.size(); }
  std::uint64_t total() const;
  double center(std::size_t bin) const;
  std::size_t bin_of(double value) const;
};

struct PerplexityDistribution {
  std::vector<std::string> ids;
  std::vector<double> values;  // input order, paired with ids
  double min = 0.0;
  double max = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  Histogram histogram;
};

inline constexpr std::size_t kDefaultBins = 10000;
inline constexpr double kClipQuantile = 0.999;

// Quartiles and an equal-width histogram over [min, p99.9]; larger values go
// to the last bin. Needs at least 4 scores, all positive and finite.
PerplexityDistribution build_distribution(std::span<const lm::PerplexityScore> scores,
                                          std::size_t bins = kDefaultBins);

struct FitOptions {
  double tolerance = 1e-3;
  int max_iterations = 100;
  // Re-center mu on the mean of the values inside [q1, q3].
  bool adjust_mu = false;
};

struct GaussianFit {
  double mu = 0.0;
  double sigma = 0.0;
  double N = 0.0;  // normalization factor
  double R = 0.0;  // target ratio
  double R0 = 0.0; // Gaussian-weighted ratio of the initial curve
  double tolerance = 0.0;
  int iterations_used = 0;
  double expected_ratio = 0.0;  // histogram estimate of the retained fraction
  bool adjust_mu = false;
  // Audit copy of what the fit was computed from.
  double q1 = 0.0;
  double q3 = 0.0;
  double value_min = 0.0;
  double value_max = 0.0;
  std::size_t sample_size = 0;
  std::size_t bins = 0;
  double histogram_lo = 0.0;
  double histogram_hi = 0.0;

  double weight(double perplexity) const;
  // min(1, N * weight(p))
  double retention(double perplexity) const;
};

inline constexpr double kZ75 = 0.6744897501960817;

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, GaussianFit best, double residual)
      : std::runtime_error(what), best_(best), residual_(residual) {}
  const GaussianFit& best() const { return best_; }
  double residual() const { return residual_; }

 private:
  GaussianFit best_;
  double residual_;
};

// Fits the retention curve so the histogram-expected retained fraction is
// within tolerance of R. N is found by bisection; sigma widens only when the
// cap keeps R out of reach.
GaussianFit fit_gaussian(const PerplexityDistribution& dist, double R, const FitOptions& options = {});

// Expected retained fraction of the histogram under a fit.
double expected_ratio(const Histogram& histogram, const GaussianFit& fit);

// Keeps document s iff retention(p_s) >= u(s) with u from stable_hash64(id, seed).
// Input order is preserved and the result does not depend on workers.
std::vector<Document> subsample(std::span<const Document> documents, const GaussianFit& fit,
                                std::uint64_t seed, int workers = 1);

// Per-document keep flags, the parallel core of subsample.
std::vector<char> retention_mask(std::span<const Document> documents, const GaussianFit& fit,
                                 std::uint64_t seed, int workers = 1);

QualitySegment classify(double perplexity, double q1, double q3);

struct Segments {
  std::vector<Document> good;
  std::vector<Document> medium;
  std::vector<Document> bad;
};

// Labels every document by quartile band and shuffles each band by a seeded,
// order-independent permutation. Documents get their segment field set.
Segments segment(std::span<const Document> documents, const PerplexityDistribution& dist,
                 std::uint64_t seed);

}  // namespace curate::sampler
