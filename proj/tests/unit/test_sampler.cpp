#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "curate/errors.hpp"
#include "curate/sampler.hpp"
#include "doctest.h"

using namespace curate;
using namespace curate::sampler;

namespace {

std::vector<lm::PerplexityScore> scores_of(const std::vector<double>& values) {
  std::vector<lm::PerplexityScore> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    out.push_back({"d" + std::to_string(i), values[i], 10});
  return out;
}

std::vector<double> one_to_hundred() {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  return v;
}

std::vector<Document> docs_of(const std::vector<double>& values) {
  std::vector<Document> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    Document d;
    d.id = "d" + std::to_string(i);
    d.text = "x";
    d.perplexity = values[i];
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<double> lognormal(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> dist(5.0, 0.6);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

// Type-7 reference: h = (n-1)p, interpolate between floor(h) and floor(h)+1.
double type7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (double(v.size()) - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
}

}  // namespace

TEST_CASE("quartiles use linear interpolation") {
  const auto d = build_distribution(scores_of(one_to_hundred()));
  CHECK(d.q1 == doctest::Approx(25.75));
  CHECK(d.q3 == doctest::Approx(75.25));
  CHECK(d.min == 1);
  CHECK(d.max == 100);
  CHECK(d.histogram.total() == 100);
  CHECK(d.histogram.bins() == kDefaultBins);

  const auto v = lognormal(1001, 4);
  const auto l = build_distribution(scores_of(v), 100);
  CHECK(l.q1 == doctest::Approx(type7(v, 0.25)).epsilon(1e-12));
  CHECK(l.q3 == doctest::Approx(type7(v, 0.75)).epsilon(1e-12));
  CHECK(l.histogram.hi == doctest::Approx(type7(v, 0.999)).epsilon(1e-12));
}

TEST_CASE("constant and tiny samples") {
  const auto d = build_distribution(scores_of({7, 7, 7, 7, 7}));
  CHECK(d.q1 == 7);
  CHECK(d.q3 == 7);
  CHECK_THROWS_WITH_AS(build_distribution(scores_of({1, 2, 3})), doctest::Contains("insufficient sample"),
                       DataError);
  CHECK_THROWS_AS(build_distribution(scores_of({1, 2, 3, -4})), DataError);
  CHECK_THROWS_WITH_AS(fit_gaussian(d, 0.5), doctest::Contains("degenerate quartiles"), DataError);
}

TEST_CASE("initial curve aligns with the quartiles") {
  const auto d = build_distribution(scores_of({50, 50, 50, 50, 150, 150, 150, 150}));
  REQUIRE(d.q1 == 50);
  REQUIRE(d.q3 == 150);
  const auto f = fit_gaussian(d, 0.5);
  CHECK(f.mu == 100);
  CHECK(f.sigma == doctest::Approx(100.0 / (2 * 0.6744897501960817)).epsilon(1e-12));
  CHECK(f.sigma == doctest::Approx(74.13011).epsilon(1e-6));
  CHECK(std::abs(f.expected_ratio - 0.5) <= 1e-3);
}

TEST_CASE("ratio one keeps everything") {
  const auto v = lognormal(5000, 8);
  const auto d = build_distribution(scores_of(v));
  const auto f = fit_gaussian(d, 1.0);
  CHECK(f.expected_ratio == 1.0);
  for (double p : v) CHECK(f.retention(p) == 1.0);
  const auto docs = docs_of(v);
  CHECK(subsample(docs, f, 1).size() == docs.size());
}

TEST_CASE("bad ratios are rejected") {
  const auto d = build_distribution(scores_of(one_to_hundred()));
  CHECK_THROWS_AS(fit_gaussian(d, 0.0), DataError);
  CHECK_THROWS_AS(fit_gaussian(d, 1.5), DataError);
}

TEST_CASE("half retention on 100k documents") {
  const auto v = lognormal(100000, 21);
  const auto d = build_distribution(scores_of(v));
  const auto f = fit_gaussian(d, 0.5);
  const auto kept = subsample(docs_of(v), f, 77);
  const double frac = double(kept.size()) / double(v.size());
  const double sd = std::sqrt(0.25 / double(v.size()));
  CHECK(std::abs(frac - f.expected_ratio) <= 4 * sd);
  CHECK(frac >= 0.49);
  CHECK(frac <= 0.51);
}

TEST_CASE("expected ratio tracks the target and is monotone") {
  const auto v = lognormal(20000, 2);
  const auto d = build_distribution(scores_of(v));
  double prev = 0.0;
  for (double r : {0.05, 0.154, 0.3, 0.43, 0.62, 0.81, 0.95}) {
    const auto f = fit_gaussian(d, r);
    CAPTURE(r);
    CHECK(std::abs(f.expected_ratio - r) <= 1e-3);
    CHECK(f.expected_ratio > prev);
    CHECK(f.iterations_used <= 100);
    prev = f.expected_ratio;
  }
}

TEST_CASE("iteration cap raises convergence error with the best fit") {
  const auto v = lognormal(2000, 6);
  const auto d = build_distribution(scores_of(v));
  FitOptions o;
  o.max_iterations = 1;
  o.tolerance = 1e-12;
  try {
    fit_gaussian(d, 0.9, o);
    FAIL("expected non-convergence");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > 0);
    CHECK(e.best().N > 0);
  }
}

TEST_CASE("adjusted mean stays inside the quartiles") {
  const auto v = lognormal(5000, 12);
  const auto d = build_distribution(scores_of(v));
  FitOptions o;
  o.adjust_mu = true;
  const auto f = fit_gaussian(d, 0.4, o);
  CHECK(f.adjust_mu);
  CHECK(f.mu >= d.q1);
  CHECK(f.mu <= d.q3);
  CHECK(std::abs(f.expected_ratio - 0.4) <= 1e-3);
}

TEST_CASE("subsample is reproducible and worker independent") {
  const auto v = lognormal(20000, 13);
  const auto d = build_distribution(scores_of(v));
  const auto f = fit_gaussian(d, 0.3);
  const auto docs = docs_of(v);
  const auto a = subsample(docs, f, 5, 1);
  const auto b = subsample(docs, f, 5, 8);
  const auto c = subsample(docs, f, 6, 1);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);
  bool differs = a.size() != c.size();
  for (std::size_t i = 0; !differs && i < a.size(); ++i) differs = a[i].id != c[i].id;
  CHECK(differs);
}

TEST_CASE("documents without a score cannot be sampled") {
  const auto d = build_distribution(scores_of(one_to_hundred()));
  const auto f = fit_gaussian(d, 0.5);
  std::vector<Document> docs(1);
  docs[0].id = "x";
  CHECK_THROWS_AS(subsample(docs, f, 1), DataError);
}

TEST_CASE("segments follow the quartile bands") {
  const auto values = one_to_hundred();
  const auto dist = build_distribution(scores_of(values));
  CHECK(classify(10, dist.q1, dist.q3) == QualitySegment::good);
  CHECK(classify(dist.q1, dist.q1, dist.q3) == QualitySegment::medium);
  CHECK(classify(dist.q3, dist.q1, dist.q3) == QualitySegment::medium);
  CHECK(classify(76, dist.q1, dist.q3) == QualitySegment::bad);

  const auto docs = docs_of(values);
  const auto s = segment(docs, dist, 3);
  CHECK(s.good.size() == 25);
  CHECK(s.medium.size() == 50);
  CHECK(s.bad.size() == 25);
  for (const auto& d : s.good) CHECK(*d.segment == QualitySegment::good);
  for (const auto& d : s.bad) CHECK(*d.perplexity > 75.25);

  auto reversed = docs;
  std::reverse(reversed.begin(), reversed.end());
  const auto r = segment(reversed, dist, 3);
  for (std::size_t i = 0; i < s.medium.size(); ++i) CHECK(s.medium[i].id == r.medium[i].id);
}
