#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "curate/config.hpp"
#include "curate/document.hpp"
#include "curate/hash.hpp"
#include "curate/predicate.hpp"

namespace curate::pipeline {

// ---------------------------------------------------------------- dedup

struct KeptDropped {
  std::uint64_t kept = 0;
  std::uint64_t dropped = 0;
};

struct DedupReport {
  std::uint64_t kept = 0;
  std::uint64_t dropped = 0;
  std::map<std::string, KeptDropped> by_source;
};

// Exact dedup on the fingerprint of normalize_text(text); the first
// occurrence in stream order wins. Batches must be fed in stream order.
class Deduplicator {
 public:
  explicit Deduplicator(int workers = 1) : workers_(workers) {}

  std::vector<Document> filter(std::vector<Document> batch);
  const DedupReport& report() const { return report_; }

 private:
  int workers_;
  std::unordered_set<Fingerprint, FingerprintHash> seen_;
  DedupReport report_;
};

std::vector<Document> dedup(std::span<const Document> documents, int workers = 1,
                            DedupReport* report = nullptr);

// ---------------------------------------------------------------- balance

enum class UnlistedPolicy { drop, keep };

struct LanguageBudget {
  std::map<std::string, double> ratios;
  UnlistedPolicy unlisted = UnlistedPolicy::drop;

  // Sampling ratios of the reference mixture: Norwegian kept whole, the
  // other Scandinavian languages, English and code sub-sampled.
  static LanguageBudget default_profile();
  // Reads a [budget] section on top of the default profile; `unlisted` selects
  // the policy, every other key is a language tag.
  static LanguageBudget from_config(const Config& config);

  // Throws UsageError unless every ratio lies in (0, 1].
  void validate() const;
};

struct LanguageCount {
  std::uint64_t input = 0;
  std::uint64_t kept = 0;
  std::optional<double> target;  // absent for unlisted languages
};

struct BalanceReport {
  std::map<std::string, LanguageCount> languages;
};

// Keeps a document of language L iff u(id, seed) < ratio(L).
class LanguageBalancer {
 public:
  LanguageBalancer(LanguageBudget budget, std::uint64_t seed, int workers = 1);

  std::vector<Document> filter(std::vector<Document> batch);
  const BalanceReport& report() const { return report_; }

 private:
  LanguageBudget budget_;
  std::uint64_t seed_;
  int workers_;
  BalanceReport report_;
};

std::vector<Document> balance_languages(std::span<const Document> documents,
                                        const LanguageBudget& budget, std::uint64_t seed,
                                        int workers = 1, BalanceReport* report = nullptr);

// ---------------------------------------------------------------- subsets

struct SubsetSpec {
  std::string name;
  Predicate predicate;
};

// Every [subset.NAME] section with a `predicate` key, in file order.
std::vector<SubsetSpec> subset_specs_from_config(const Config& config);

struct SubsetReport {
  std::string name;
  std::uint64_t documents = 0;
  std::uint64_t words = 0;
};

std::vector<Document> build_subset(std::span<const Document> documents, const SubsetSpec& spec,
                                   SubsetReport* report = nullptr);

// ---------------------------------------------------------------- instructions

enum class InstructionCategory { reading_comprehension, norwegian_culture, words_and_expressions };

std::optional<InstructionCategory> parse_instruction_category(std::string_view name);
const std::vector<std::string>& instruction_domains();

struct InstructionTriplet {
  std::string instruction;
  std::optional<std::string> input;
  std::string output;
  std::string category;
  std::string domain;
};

struct InstructionIssue {
  std::size_t line;
  std::string message;
};

struct ValidationReport {
  std::uint64_t records = 0;
  std::uint64_t passed = 0;
  std::uint64_t failed = 0;
  std::vector<InstructionIssue> issues;
  std::map<std::string, std::uint64_t> by_category;
  std::map<std::string, std::uint64_t> by_domain;
};

// Problems of one triplet, empty when it is valid.
std::vector<std::string> check_triplet(const InstructionTriplet& triplet);

// Per-record checks; a line that is not a JSON object is a ParseError.
ValidationReport validate_instructions(std::istream& in);
ValidationReport validate_instructions(const std::filesystem::path& path);

// ---------------------------------------------------------------- stats

using TokenCounter = std::function<std::size_t(std::string_view)>;

struct Totals {
  std::uint64_t documents = 0;
  std::uint64_t words = 0;
  std::uint64_t tokens = 0;

  // tokens / words; absent without a counter or without words.
  std::optional<double> fertility(bool counted) const;
};

struct StatsReport {
  bool counted_tokens = false;
  Totals corpus;
  std::map<std::string, Totals> by_source;
  std::map<std::string, Totals> by_language;
};

class StatsAccumulator {
 public:
  explicit StatsAccumulator(TokenCounter counter = {});

  void add(const Document& doc);
  const StatsReport& report() const { return report_; }

 private:
  TokenCounter counter_;
  StatsReport report_;
};

StatsReport corpus_stats(std::span<const Document> documents, TokenCounter counter = {});

}  // namespace curate::pipeline
