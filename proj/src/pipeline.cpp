#include "curate/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <utility>

#include "curate/errors.hpp"
#include "curate/parallel.hpp"
#include "curate/text.hpp"
#include "json.hpp"

namespace curate::pipeline {

// ---------------------------------------------------------------- dedup

std::vector<Document> Deduplicator::filter(std::vector<Document> batch) {
  // Hash in parallel, then decide sequentially so first-wins follows input order.
  std::vector<Fingerprint> prints(batch.size());
  parallel_for(batch.size(), workers_,
               [&](std::size_t i) { prints[i] = fingerprint128(normalize_text(batch[i].text)); });
  std::vector<Document> kept;
  kept.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto& per_source = report_.by_source[batch[i].source];
    if (seen_.insert(prints[i]).second) {
      ++report_.kept;
      ++per_source.kept;
      kept.push_back(std::move(batch[i]));
    } else {
      ++report_.dropped;
      ++per_source.dropped;
    }
  }
  return kept;
}

std::vector<Document> dedup(std::span<const Document> documents, int workers,
                            DedupReport* report) {
  Deduplicator d(workers);
  auto out = d.filter(std::vector<Document>(documents.begin(), documents.end()));
  if (report) *report = d.report();
  return out;
}

// ---------------------------------------------------------------- balance

LanguageBudget LanguageBudget::default_profile() {
  LanguageBudget b;
  b.ratios = {
      {"nb", 1.0}, {"nn", 1.0}, {"da", 0.43}, {"sv", 0.154},
      {"is", 1.0}, {"en", 0.81}, {"code", 0.62},
  };
  b.unlisted = UnlistedPolicy::drop;
  return b;
}

LanguageBudget LanguageBudget::from_config(const Config& config) {
  LanguageBudget b = default_profile();
  for (const auto& [key, value] : config.entries("budget")) {
    if (key == "unlisted") {
      if (value == "drop") b.unlisted = UnlistedPolicy::drop;
      else if (value == "keep") b.unlisted = UnlistedPolicy::keep;
      else throw UsageError("budget.unlisted must be drop or keep, got '" + value + "'");
      continue;
    }
    double ratio = 0.0;
    try {
      std::size_t used = 0;
      ratio = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw UsageError("budget." + key + " is not a number: '" + value + "'");
    }
    b.ratios[key] = ratio;
  }
  b.validate();
  return b;
}

void LanguageBudget::validate() const {
  for (const auto& [lang, r] : ratios)
    if (!(r > 0.0 && r <= 1.0))
      throw UsageError("sampling ratio for '" + lang + "' must be in (0, 1]");
}

LanguageBalancer::LanguageBalancer(LanguageBudget budget, std::uint64_t seed, int workers)
    : budget_(std::move(budget)), seed_(seed), workers_(workers) {
  budget_.validate();
}

std::vector<Document> LanguageBalancer::filter(std::vector<Document> batch) {
  std::vector<char> keep(batch.size(), 0);
  parallel_for(batch.size(), workers_, [&](std::size_t i) {
    const auto it = budget_.ratios.find(batch[i].language);
    if (it == budget_.ratios.end())
      keep[i] = budget_.unlisted == UnlistedPolicy::keep;
    else
      keep[i] = unit_threshold(batch[i].id, seed_) < it->second;
  });
  std::vector<Document> kept;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto& count = report_.languages[batch[i].language];
    if (const auto it = budget_.ratios.find(batch[i].language); it != budget_.ratios.end())
      count.target = it->second;
    ++count.input;
    if (keep[i]) {
      ++count.kept;
      kept.push_back(std::move(batch[i]));
    }
  }
  return kept;
}

std::vector<Document> balance_languages(std::span<const Document> documents,
                                        const LanguageBudget& budget, std::uint64_t seed,
                                        int workers, BalanceReport* report) {
  LanguageBalancer balancer(budget, seed, workers);
  auto out = balancer.filter(std::vector<Document>(documents.begin(), documents.end()));
  if (report) *report = balancer.report();
  return out;
}

// ---------------------------------------------------------------- subsets

std::vector<SubsetSpec> subset_specs_from_config(const Config& config) {
  std::vector<SubsetSpec> specs;
  for (const auto& section : config.sections()) {
    if (section.rfind("subset.", 0) != 0) continue;
    const auto predicate = config.get(section, "predicate");
    if (!predicate) throw UsageError("[" + section + "] has no predicate");
    specs.push_back({section.substr(7), Predicate::parse(*predicate)});
  }
  return specs;
}

std::vector<Document> build_subset(std::span<const Document> documents, const SubsetSpec& spec,
                                   SubsetReport* report) {
  SubsetReport r{spec.name, 0, 0};
  std::vector<Document> out;
  for (const auto& d : documents) {
    if (!spec.predicate.matches(d)) continue;
    ++r.documents;
    r.words += d.word_count;
    out.push_back(d);
  }
  if (report) *report = r;
  return out;
}

// ---------------------------------------------------------------- instructions

std::optional<InstructionCategory> parse_instruction_category(std::string_view name) {
  if (name == "Reading Comprehension") return InstructionCategory::reading_comprehension;
  if (name == "Norwegian Culture") return InstructionCategory::norwegian_culture;
  if (name == "Words and Expressions") return InstructionCategory::words_and_expressions;
  return std::nullopt;
}

const std::vector<std::string>& instruction_domains() {
  static const std::vector<std::string> domains{
      "Literature", "Commonsense", "Geography", "Language", "History", "Sports", "Entertainment",
      "Food",       "Politics",    "Science",   "Art",      "Music",   "Culture"};
  return domains;
}

namespace {

bool blank(std::string_view s) { return normalize_text(s).empty(); }

}  // namespace

std::vector<std::string> check_triplet(const InstructionTriplet& t) {
  std::vector<std::string> problems;
  if (blank(t.instruction)) problems.emplace_back("empty instruction");
  if (blank(t.output)) problems.emplace_back("empty output");
  if (!parse_instruction_category(t.category))
    problems.push_back("unknown category '" + t.category + "'");
  const auto& domains = instruction_domains();
  if (std::find(domains.begin(), domains.end(), t.domain) == domains.end())
    problems.push_back("unknown domain '" + t.domain + "'");
  return problems;
}

ValidationReport validate_instructions(std::istream& in) {
  using Json = nlohmann::json;
  ValidationReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json obj;
    try {
      obj = Json::parse(line);
    } catch (const Json::parse_error&) {
      throw ParseError("malformed JSON", line_no);
    }
    if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);

    std::vector<std::string> problems;
    auto text = [&](const char* key) -> std::string {
      auto it = obj.find(key);
      if (it == obj.end() || it->is_null()) return {};
      if (!it->is_string()) {
        problems.push_back(std::string("field '") + key + "' must be a string");
        return {};
      }
      return it->get<std::string>();
    };
    InstructionTriplet t;
    t.instruction = text("instruction");
    t.output = text("output");
    t.category = text("category");
    t.domain = text("domain");
    if (obj.contains("input") && !obj["input"].is_null()) t.input = text("input");
    for (auto& p : check_triplet(t)) problems.push_back(std::move(p));

    ++report.records;
    ++report.by_category[t.category];
    ++report.by_domain[t.domain];
    if (problems.empty()) {
      ++report.passed;
    } else {
      ++report.failed;
      for (auto& p : problems) report.issues.push_back({line_no, std::move(p)});
    }
  }
  if (in.bad()) throw DataError("unreadable instruction file");
  return report;
}

ValidationReport validate_instructions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return validate_instructions(in);
}

// ---------------------------------------------------------------- stats

std::optional<double> Totals::fertility(bool counted) const {
  if (!counted || words == 0) return std::nullopt;
  return static_cast<double>(tokens) / static_cast<double>(words);
}

StatsAccumulator::StatsAccumulator(TokenCounter counter) : counter_(std::move(counter)) {
  report_.counted_tokens = static_cast<bool>(counter_);
}

void StatsAccumulator::add(const Document& doc) {
  const std::uint64_t tokens = counter_ ? counter_(doc.text) : 0;
  for (Totals* t : {&report_.corpus, &report_.by_source[doc.source],
                    &report_.by_language[doc.language]}) {
    ++t->documents;
    t->words += doc.word_count;
    t->tokens += tokens;
  }
}

StatsReport corpus_stats(std::span<const Document> documents, TokenCounter counter) {
  StatsAccumulator acc(std::move(counter));
  for (const auto& d : documents) acc.add(d);
  return acc.report();
}

}  // namespace curate::pipeline
