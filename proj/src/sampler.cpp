#include "curate/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "curate/hash.hpp"
#include "curate/parallel.hpp"

namespace curate::sampler {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::uint64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

double Histogram::center(std::size_t bin) const {
  return lo + (static_cast<double>(bin) + 0.5) * width;
}

std::size_t Histogram::bin_of(double value) const {
  if (width <= 0.0 || value <= lo) return 0;
  const double idx = std::floor((value - lo) / width);
  if (idx >= static_cast<double>(counts.size() - 1)) return counts.size() - 1;
  return static_cast<std::size_t>(idx);
}

PerplexityDistribution build_distribution(std::span<const lm::PerplexityScore> scores,
                                          std::size_t bins) {
  if (scores.size() < 4) throw DataError("insufficient sample");
  if (bins < 2) throw DataError("histogram needs at least 2 bins");
  PerplexityDistribution dist;
  dist.ids.reserve(scores.size());
  dist.values.reserve(scores.size());
  for (const auto& s : scores) {
    if (!std::isfinite(s.perplexity) || s.perplexity <= 0.0)
      throw DataError("non-positive perplexity for document " + s.id);
    dist.ids.push_back(s.id);
    dist.values.push_back(s.perplexity);
  }
  std::vector<double> sorted = dist.values;
  std::sort(sorted.begin(), sorted.end());
  dist.min = sorted.front();
  dist.max = sorted.back();
  dist.q1 = quantile_sorted(sorted, 0.25);
  dist.q3 = quantile_sorted(sorted, 0.75);

  auto& h = dist.histogram;
  h.lo = dist.min;
  h.hi = quantile_sorted(sorted, kClipQuantile);
  h.width = (h.hi - h.lo) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double v : dist.values) ++h.counts[h.bin_of(v)];
  return dist;
}

double GaussianFit::weight(double perplexity) const {
  const double z = (perplexity - mu) / sigma;
  return std::exp(-0.5 * z * z);
}

double GaussianFit::retention(double perplexity) const {
  return std::min(1.0, N * weight(perplexity));
}

double expected_ratio(const Histogram& histogram, const GaussianFit& fit) {
  double kept = 0.0;
  double total = 0.0;
  for (std::size_t b = 0; b < histogram.bins(); ++b) {
    if (histogram.counts[b] == 0) continue;
    const auto c = static_cast<double>(histogram.counts[b]);
    kept += c * fit.retention(histogram.center(b));
    total += c;
  }
  return total > 0.0 ? kept / total : 0.0;
}

namespace {

// Share of the histogram with a non-zero weight: the retained fraction as
// N grows without bound.
double reachable_ratio(const Histogram& h, const GaussianFit& fit) {
  double reach = 0.0;
  double total = 0.0;
  for (std::size_t b = 0; b < h.bins(); ++b) {
    if (h.counts[b] == 0) continue;
    const auto c = static_cast<double>(h.counts[b]);
    if (fit.weight(h.center(b)) > 0.0) reach += c;
    total += c;
  }
  return reach / total;
}

double weighted_ratio(const Histogram& h, const GaussianFit& fit) {
  double sum = 0.0;
  double total = 0.0;
  for (std::size_t b = 0; b < h.bins(); ++b) {
    if (h.counts[b] == 0) continue;
    const auto c = static_cast<double>(h.counts[b]);
    sum += c * fit.weight(h.center(b));
    total += c;
  }
  return sum / total;
}

}  // namespace

GaussianFit fit_gaussian(const PerplexityDistribution& dist, double R, const FitOptions& options) {
  if (!(R > 0.0 && R <= 1.0)) throw DataError("target ratio must be in (0, 1]");
  if (!(dist.q1 < dist.q3)) throw DataError("degenerate quartiles");
  if (!(options.tolerance > 0.0)) throw DataError("tolerance must be positive");

  const Histogram& h = dist.histogram;
  GaussianFit fit;
  fit.R = R;
  fit.tolerance = options.tolerance;
  fit.adjust_mu = options.adjust_mu;
  fit.q1 = dist.q1;
  fit.q3 = dist.q3;
  fit.value_min = dist.min;
  fit.value_max = dist.max;
  fit.sample_size = dist.values.size();
  fit.bins = h.bins();
  fit.histogram_lo = h.lo;
  fit.histogram_hi = h.hi;

  fit.mu = 0.5 * (dist.q1 + dist.q3);
  if (options.adjust_mu) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : dist.values) {
      if (v >= dist.q1 && v <= dist.q3) {
        sum += v;
        ++n;
      }
    }
    if (n > 0) fit.mu = sum / static_cast<double>(n);
  }
  fit.sigma = (dist.q3 - dist.q1) / (2.0 * kZ75);
  fit.R0 = weighted_ratio(h, fit);
  fit.N = R / fit.R0;

  GaussianFit best = fit;
  double best_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;

  auto evaluate = [&](double N) {
    if (iterations >= options.max_iterations) {
      best.iterations_used = iterations;
      throw ConvergenceError("sampler fit did not converge in " +
                                 std::to_string(options.max_iterations) + " iterations",
                             best, best_residual);
    }
    ++iterations;
    fit.N = N;
    fit.expected_ratio = expected_ratio(h, fit);
    const double residual = std::abs(fit.expected_ratio - R);
    if (residual < best_residual) {
      best_residual = residual;
      best = fit;
    }
    return fit.expected_ratio;
  };
  auto widen = [&] {
    if (iterations >= options.max_iterations) evaluate(fit.N);  // throws
    ++iterations;
    fit.sigma *= 2.0;
  };
  auto done = [&] {
    fit.iterations_used = iterations;
    return fit;
  };

  while (true) {
    if (R >= 1.0) {
      // Keep everything: P must reach 1 at both extremes of the sample.
      const double w_min = std::min(fit.weight(dist.min), fit.weight(dist.max));
      const double N = 1.0 / w_min;
      if (w_min > 0.0 && std::isfinite(N)) {
        evaluate(N * (1.0 + 1e-12));
        return done();
      }
      widen();
      continue;
    }
    if (reachable_ratio(h, fit) < R) {
      widen();
      continue;
    }
    double lo = R / weighted_ratio(h, fit);
    double e = evaluate(lo);
    if (std::abs(e - R) <= options.tolerance) return done();
    // E(N) <= N * R0, so the uncapped start never overshoots; grow until it does.
    double hi = 2.0 * lo;
    while ((e = evaluate(hi)) < R) {
      if (std::abs(e - R) <= options.tolerance) return done();
      lo = hi;
      hi *= 2.0;
    }
    if (std::abs(e - R) <= options.tolerance) return done();
    while (true) {
      const double mid = 0.5 * (lo + hi);
      e = evaluate(mid);
      if (std::abs(e - R) <= options.tolerance) return done();
      (e < R ? lo : hi) = mid;
    }
  }
}

std::vector<char> retention_mask(std::span<const Document> documents, const GaussianFit& fit,
                                 std::uint64_t seed, int workers) {
  std::vector<char> keep(documents.size(), 0);
  parallel_for(documents.size(), workers, [&](std::size_t i) {
    const Document& d = documents[i];
    if (!d.perplexity) throw DataError("missing perplexity for document " + d.id);
    keep[i] = fit.retention(*d.perplexity) >= unit_threshold(d.id, seed) ? 1 : 0;
  });
  return keep;
}

std::vector<Document> subsample(std::span<const Document> documents, const GaussianFit& fit,
                                std::uint64_t seed, int workers) {
  const auto keep = retention_mask(documents, fit, seed, workers);
  std::vector<Document> out;
  for (std::size_t i = 0; i < documents.size(); ++i)
    if (keep[i]) out.push_back(documents[i]);
  return out;
}

QualitySegment classify(double perplexity, double q1, double q3) {
  if (perplexity < q1) return QualitySegment::good;
  if (perplexity > q3) return QualitySegment::bad;
  return QualitySegment::medium;
}

Segments segment(std::span<const Document> documents, const PerplexityDistribution& dist,
                 std::uint64_t seed) {
  Segments out;
  for (const auto& d : documents) {
    if (!d.perplexity) throw DataError("missing perplexity for document " + d.id);
    Document copy = d;
    copy.segment = classify(*d.perplexity, dist.q1, dist.q3);
    switch (*copy.segment) {
      case QualitySegment::good: out.good.push_back(std::move(copy)); break;
      case QualitySegment::medium: out.medium.push_back(std::move(copy)); break;
      case QualitySegment::bad: out.bad.push_back(std::move(copy)); break;
    }
  }
  auto shuffle = [seed](std::vector<Document>& docs) {
    std::vector<std::pair<std::uint64_t, std::size_t>> keys;
    keys.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) keys.emplace_back(stable_hash64(docs[i].id, seed), i);
    std::sort(keys.begin(), keys.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return docs[a.second].id < docs[b.second].id;
    });
    std::vector<Document> shuffled;
    shuffled.reserve(docs.size());
    for (const auto& k : keys) shuffled.push_back(std::move(docs[k.second]));
    docs = std::move(shuffled);
  };
  shuffle(out.good);
  shuffle(out.medium);
  shuffle(out.bad);
  return out;
}

}  // namespace curate::sampler
