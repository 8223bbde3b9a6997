#include "curate/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "CLI11.hpp"
#include "curate/config.hpp"
#include "curate/csv.hpp"
#include "curate/document.hpp"
#include "curate/errors.hpp"
#include "curate/eval_report.hpp"
#include "curate/genre_classifier.hpp"
#include "curate/ngram_lm.hpp"
#include "curate/parallel.hpp"
#include "curate/pipeline.hpp"
#include "curate/sampler.hpp"
#include "curate/text.hpp"
#include "json.hpp"

namespace curate::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr std::size_t kBatch = 4096;

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// key=value progress lines on the error stream.
class Log {
 public:
  Log(std::ostream& err, std::string verb) : err_(err), verb_(std::move(verb)) {}

  template <typename... KV>
  void info(const std::string& event, const KV&... kv) {
    line("info", event, kv...);
  }
  template <typename... KV>
  void warn(const std::string& event, const KV&... kv) {
    line("warn", event, kv...);
  }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(" \t\"=") == std::string::npos && !s.empty()) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') q += '\\';
      q += c;
    }
    return q + '"';
  }
  static std::string str(const std::string& v) { return quote(v); }
  static std::string str(const char* v) { return quote(v); }
  static std::string str(double v) { return format_number(v); }
  template <typename T>
  static std::string str(const T& v) {
    return std::to_string(v);
  }

  template <typename... KV>
  void line(const char* level, const std::string& event, const KV&... kv) {
    std::ostringstream s;
    s << "level=" << level << " verb=" << verb_ << " event=" << event;
    append(s, kv...);
    err_ << s.str() << '\n';
  }
  void append(std::ostringstream&) {}
  template <typename V, typename... Rest>
  void append(std::ostringstream& s, const char* key, const V& value, const Rest&... rest) {
    s << ' ' << key << '=' << str(value);
    append(s, rest...);
  }

  std::ostream& err_;
  std::string verb_;
};

// Input path, "-" for standard input.
class Input {
 public:
  explicit Input(const std::string& path) {
    if (path == "-") {
      stream_ = &std::cin;
      return;
    }
    file_ = std::make_unique<std::ifstream>(path);
    if (!*file_) throw DataError("cannot open input " + path);
    stream_ = file_.get();
  }
  std::istream& stream() { return *stream_; }

 private:
  std::unique_ptr<std::ifstream> file_;
  std::istream* stream_ = nullptr;
};

// Output path, empty or "-" for the command's standard output.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw DataError("cannot open output " + path);
    stream_ = file_.get();
  }
  std::ostream& stream() { return *stream_; }
  void close() {
    stream_->flush();
    if (!*stream_) throw DataError("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::optional<int> workers;

  std::optional<Config> config;

  void load() {
    if (!config_path.empty()) config = Config::load(config_path);
    if (config) {
      if (!seed) {
        if (auto s = config->get("run", "seed")) {
          std::uint64_t v = 0;
          auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
          if (ec != std::errc() || p != s->data() + s->size())
            throw UsageError("run.seed is not an unsigned integer");
          seed = v;
        }
      }
      if (!workers) {
        if (auto w = config->get("run", "workers")) workers = std::stoi(*w);
      }
      for (const auto& [key, path] : config->entries("paths"))
        if (!fs::exists(path)) throw UsageError("config path " + key + " does not exist: " + path);
    }
    if (workers && *workers < 1) throw UsageError("--workers must be >= 1");
  }
  std::uint64_t require_seed() const {
    if (!seed) throw UsageError("--seed is required for this command (no clock-based default)");
    return *seed;
  }
  int worker_count() const { return workers.value_or(1); }
  const Config& cfg() const {
    static const Config empty;
    return config ? *config : empty;
  }
};

void check_input(const std::string& path) {
  if (path != "-" && !fs::exists(path)) throw UsageError("input does not exist: " + path);
}

std::unordered_map<std::string, double> read_score_map(const std::string& path) {
  Input in(path);
  const CsvTable table = read_csv(in.stream());
  const std::size_t c_id = table.column("id");
  const std::size_t c_ppl = table.column("perplexity");
  std::unordered_map<std::string, double> scores;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& v = table.rows[i][c_ppl];
    double p = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), p);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw ParseError("perplexity is not a number", table.row_lines[i]);
    scores[table.rows[i][c_id]] = p;
  }
  return scores;
}

std::vector<lm::PerplexityScore> read_scores_csv(const std::string& path) {
  Input in(path);
  const CsvTable table = read_csv(in.stream());
  const std::size_t c_id = table.column("id");
  const std::size_t c_ppl = table.column("perplexity");
  std::optional<std::size_t> c_tokens;
  if (std::find(table.header.begin(), table.header.end(), "tokens") != table.header.end())
    c_tokens = table.column("tokens");
  std::vector<lm::PerplexityScore> scores;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    lm::PerplexityScore s;
    s.id = row[c_id];
    auto [ptr, ec] = std::from_chars(row[c_ppl].data(), row[c_ppl].data() + row[c_ppl].size(),
                                     s.perplexity);
    if (ec != std::errc() || ptr != row[c_ppl].data() + row[c_ppl].size())
      throw ParseError("perplexity is not a number", table.row_lines[i]);
    if (c_tokens) s.tokens = std::stoul(row[*c_tokens]);
    scores.push_back(std::move(s));
  }
  return scores;
}

void attach_scores(std::vector<Document>& docs,
                   const std::unordered_map<std::string, double>& scores) {
  for (auto& d : docs) {
    auto it = scores.find(d.id);
    if (it != scores.end()) d.perplexity = it->second;
  }
}

// ------------------------------------------------------------------ lm

struct LmTrainArgs {
  int order = 3;
  bool normalize = false;
  std::string out;
  std::string corpus;
};

int lm_train(const LmTrainArgs& a, const Globals& g, std::ostream& err) {
  Log log(err, "lm.train");
  check_input(a.corpus);
  if (a.order < 1 || a.order > lm::kMaxOrder) throw UsageError("--order must be in [1, 6]");
  Input in(a.corpus);
  DocumentReader reader(in.stream());
  const int workers = g.worker_count();
  lm::NGramCounter total(a.order, a.normalize);
  while (true) {
    auto batch = reader.next_batch(kBatch);
    if (batch.empty()) break;
    std::vector<lm::NGramCounter> shards(static_cast<std::size_t>(workers),
                                         lm::NGramCounter(a.order, a.normalize));
    parallel_chunks(batch.size(), workers, [&](std::size_t b, std::size_t e, std::size_t s) {
      for (std::size_t i = b; i < e; ++i) shards[s].add_document(batch[i].text);
    });
    for (const auto& s : shards) total.merge(s);
  }
  const lm::NGramModel model = lm::estimate(total);
  Output out(a.out, std::cout);
  lm::save_arpa(model, out.stream());
  out.close();
  log.info("done", "documents", total.documents(), "tokens", total.tokens(), "order", a.order,
           "unigrams", model.table(1).size());
  return kSuccess;
}

struct LmScoreArgs {
  std::string model;
  std::string out;
  std::string corpus;
  bool skip_unscorable = false;
};

int lm_score(const LmScoreArgs& a, const Globals& g, std::ostream& stdout_, std::ostream& err) {
  Log log(err, "lm.score");
  check_input(a.model);
  check_input(a.corpus);
  std::ifstream model_in(a.model);
  if (!model_in) throw DataError("cannot open model " + a.model);
  const lm::NGramModel model = lm::load_arpa(model_in);

  Input in(a.corpus);
  DocumentReader reader(in.stream());
  Output out(a.out, stdout_);
  out.stream() << "id,tokens,perplexity\n";
  std::size_t scored = 0;
  std::size_t skipped = 0;
  while (true) {
    auto batch = reader.next_batch(kBatch);
    if (batch.empty()) break;
    std::vector<std::optional<lm::PerplexityScore>> results(batch.size());
    std::vector<std::string> failures(batch.size());
    parallel_for(batch.size(), g.worker_count(), [&](std::size_t i) {
      try {
        results[i] = lm::perplexity(model, batch[i]);
      } catch (const DataError& e) {
        failures[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (!results[i]) {
        if (!a.skip_unscorable) throw DataError(failures[i]);
        log.warn("skip", "id", batch[i].id, "reason", failures[i]);
        ++skipped;
        continue;
      }
      out.stream() << csv_field(results[i]->id) << ',' << results[i]->tokens << ','
                   << format_number(results[i]->perplexity) << '\n';
      ++scored;
    }
  }
  out.close();
  log.info("done", "scored", scored, "skipped", skipped);
  return kSuccess;
}

// ------------------------------------------------------------------ sample

Json fit_to_json(const sampler::GaussianFit& f) {
  Json j;
  j["mu"] = f.mu;
  j["sigma"] = f.sigma;
  j["N"] = f.N;
  j["R"] = f.R;
  j["R0"] = f.R0;
  j["tolerance"] = f.tolerance;
  j["iterations_used"] = f.iterations_used;
  j["expected_ratio"] = f.expected_ratio;
  j["adjust_mu"] = f.adjust_mu;
  j["q1"] = f.q1;
  j["q3"] = f.q3;
  j["histogram"] = {{"bins", f.bins},
                    {"lo", f.histogram_lo},
                    {"hi", f.histogram_hi},
                    {"clip_quantile", sampler::kClipQuantile},
                    {"sample_size", f.sample_size},
                    {"value_min", f.value_min},
                    {"value_max", f.value_max}};
  return j;
}

sampler::GaussianFit fit_from_json(const nlohmann::json& j) {
  sampler::GaussianFit f;
  try {
    f.mu = j.at("mu").get<double>();
    f.sigma = j.at("sigma").get<double>();
    f.N = j.at("N").get<double>();
    f.R = j.at("R").get<double>();
    f.R0 = j.value("R0", 0.0);
    f.tolerance = j.value("tolerance", 0.0);
    f.iterations_used = j.value("iterations_used", 0);
    f.expected_ratio = j.value("expected_ratio", 0.0);
    f.q1 = j.value("q1", 0.0);
    f.q3 = j.value("q3", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed fit file: ") + e.what());
  }
  if (!(f.sigma > 0.0) || !(f.N > 0.0) || !std::isfinite(f.mu))
    throw DataError("malformed fit file: need finite mu, sigma > 0, N > 0");
  return f;
}

struct SampleFitArgs {
  std::string scores;
  double ratio = 0.0;
  std::string out;
  std::optional<std::size_t> bins;
  std::optional<double> tolerance;
  std::optional<int> max_iterations;
  bool adjust_mu = false;
};

int sample_fit(const SampleFitArgs& a, const Globals& g, std::ostream& stdout_, std::ostream& err) {
  Log log(err, "sample.fit");
  check_input(a.scores);
  const Config& cfg = g.cfg();
  sampler::FitOptions options;
  std::size_t bins = sampler::kDefaultBins;
  if (auto v = cfg.get("sampler", "bins")) bins = std::stoul(*v);
  if (auto v = cfg.get("sampler", "tolerance")) options.tolerance = std::stod(*v);
  if (auto v = cfg.get("sampler", "max_iterations")) options.max_iterations = std::stoi(*v);
  if (auto v = cfg.get("sampler", "adjust_mu")) options.adjust_mu = *v == "true" || *v == "1";
  if (a.bins) bins = *a.bins;
  if (a.tolerance) options.tolerance = *a.tolerance;
  if (a.max_iterations) options.max_iterations = *a.max_iterations;
  if (a.adjust_mu) options.adjust_mu = true;

  const auto scores = read_scores_csv(a.scores);
  const auto dist = sampler::build_distribution(scores, bins);
  sampler::GaussianFit fit;
  try {
    fit = sampler::fit_gaussian(dist, a.ratio, options);
  } catch (const sampler::ConvergenceError& e) {
    log.warn("nonconvergence", "residual", e.residual(), "best_N", e.best().N, "best_sigma",
             e.best().sigma);
    throw;
  }
  Output out(a.out, stdout_);
  out.stream() << fit_to_json(fit).dump(2) << '\n';
  out.close();
  log.info("done", "documents", scores.size(), "q1", dist.q1, "q3", dist.q3, "mu", fit.mu,
           "sigma", fit.sigma, "N", fit.N, "expected_ratio", fit.expected_ratio, "iterations",
           fit.iterations_used);
  return kSuccess;
}

struct SampleApplyArgs {
  std::string fit;
  std::string scores;
  std::string corpus;
  std::string out;
};

int sample_apply(const SampleApplyArgs& a, const Globals& g, std::ostream& stdout_,
                 std::ostream& err) {
  Log log(err, "sample.apply");
  check_input(a.fit);
  check_input(a.corpus);
  const std::uint64_t seed = g.require_seed();
  std::ifstream fit_in(a.fit);
  nlohmann::json j;
  try {
    fit_in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed fit file: ") + e.what());
  }
  const auto fit = fit_from_json(j);
  std::unordered_map<std::string, double> scores;
  if (!a.scores.empty()) {
    check_input(a.scores);
    scores = read_score_map(a.scores);
  }

  Input in(a.corpus);
  DocumentReader reader(in.stream());
  Output out(a.out, stdout_);
  std::size_t total = 0;
  std::size_t kept = 0;
  while (true) {
    auto batch = reader.next_batch(kBatch);
    if (batch.empty()) break;
    if (!scores.empty()) attach_scores(batch, scores);
    const auto mask = sampler::retention_mask(batch, fit, seed, g.worker_count());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (!mask[i]) continue;
      out.stream() << to_json_line(batch[i]) << '\n';
      ++kept;
    }
    total += batch.size();
  }
  out.close();
  log.info("done", "documents", total, "retained", kept, "ratio",
           total ? static_cast<double>(kept) / static_cast<double>(total) : 0.0, "target", fit.R);
  return kSuccess;
}

struct SampleSegmentArgs {
  std::string scores;
  std::string corpus;
  std::string out_prefix;
};

int sample_segment(const SampleSegmentArgs& a, const Globals& g, std::ostream& err) {
  Log log(err, "sample.segment");
  check_input(a.scores);
  check_input(a.corpus);
  const std::uint64_t seed = g.require_seed();
  const auto scores = read_scores_csv(a.scores);
  const auto dist = sampler::build_distribution(scores);
  std::unordered_map<std::string, double> by_id;
  for (const auto& s : scores) by_id[s.id] = s.perplexity;

  Input in(a.corpus);
  auto docs = read_documents(in.stream());
  attach_scores(docs, by_id);
  const auto segments = sampler::segment(docs, dist, seed);
  const std::pair<const char*, const std::vector<Document>*> parts[] = {
      {"good", &segments.good}, {"medium", &segments.medium}, {"bad", &segments.bad}};
  for (const auto& [name, docs_in] : parts) {
    Output out(a.out_prefix + name + ".jsonl", std::cout);
    write_documents(out.stream(), *docs_in);
    out.close();
  }
  log.info("done", "q1", dist.q1, "q3", dist.q3, "good", segments.good.size(), "medium",
           segments.medium.size(), "bad", segments.bad.size());
  return kSuccess;
}

// ------------------------------------------------------------------ corpus

struct StreamArgs {
  std::string input;
  std::string out;
  std::string report;
  bool skip_malformed = false;
};

// Reads batches, applies `step`, writes survivors in order.
template <typename Step>
std::size_t stream_documents(const StreamArgs& a, std::ostream& stdout_, Log& log, Step&& step) {
  check_input(a.input);
  Input in(a.input);
  DocumentReader reader(in.stream(), IngestOptions{a.skip_malformed});
  Output out(a.out, stdout_);
  std::size_t total = 0;
  while (true) {
    auto batch = reader.next_batch(kBatch);
    if (batch.empty()) break;
    total += batch.size();
    for (const auto& d : step(std::move(batch))) out.stream() << to_json_line(d) << '\n';
  }
  out.close();
  for (const auto& issue : reader.issues()) log.warn("malformed", "line", issue.line, "reason", issue.message);
  return total;
}

int corpus_ingest(const StreamArgs& a, std::ostream& stdout_, std::ostream& err) {
  Log log(err, "corpus.ingest");
  std::size_t words = 0;
  const std::size_t total = stream_documents(a, stdout_, log, [&](std::vector<Document> b) {
    for (const auto& d : b) words += d.word_count;
    return b;
  });
  log.info("done", "documents", total, "words", words);
  return kSuccess;
}

int corpus_dedup(const StreamArgs& a, const Globals& g, std::ostream& stdout_, std::ostream& err) {
  Log log(err, "corpus.dedup");
  pipeline::Deduplicator dedup(g.worker_count());
  stream_documents(a, stdout_, log, [&](std::vector<Document> b) { return dedup.filter(std::move(b)); });
  const auto& r = dedup.report();
  if (!a.report.empty()) {
    Output rep(a.report, stdout_);
    rep.stream() << "source,kept,dropped\n";
    for (const auto& [source, kd] : r.by_source)
      rep.stream() << csv_field(source) << ',' << kd.kept << ',' << kd.dropped << '\n';
    rep.stream() << "*," << r.kept << ',' << r.dropped << '\n';
    rep.close();
  }
  log.info("done", "kept", r.kept, "dropped", r.dropped);
  return kSuccess;
}

int corpus_balance(const StreamArgs& a, const Globals& g, std::ostream& stdout_, std::ostream& err) {
  Log log(err, "corpus.balance");
  const std::uint64_t seed = g.require_seed();
  const auto budget = pipeline::LanguageBudget::from_config(g.cfg());
  pipeline::LanguageBalancer balancer(budget, seed, g.worker_count());
  stream_documents(a, stdout_, log,
                   [&](std::vector<Document> b) { return balancer.filter(std::move(b)); });
  const auto& r = balancer.report();
  if (!a.report.empty()) {
    Output rep(a.report, stdout_);
    rep.stream() << "language,input,kept,target,achieved\n";
    for (const auto& [lang, c] : r.languages) {
      rep.stream() << csv_field(lang) << ',' << c.input << ',' << c.kept << ','
                   << (c.target ? format_number(*c.target) : std::string("unlisted")) << ','
                   << format_number(c.input ? static_cast<double>(c.kept) / static_cast<double>(c.input) : 0.0)
                   << '\n';
    }
    rep.close();
  }
  for (const auto& [lang, c] : r.languages)
    log.info("language", "language", lang, "input", c.input, "kept", c.kept);
  return kSuccess;
}

struct SubsetArgs {
  StreamArgs stream;
  std::string name;
  std::string predicate;
};

int corpus_subset(const SubsetArgs& a, const Globals& g, std::ostream& stdout_, std::ostream& err) {
  Log log(err, "corpus.subset");
  std::optional<pipeline::SubsetSpec> spec;
  if (!a.predicate.empty()) {
    spec = pipeline::SubsetSpec{a.name.empty() ? "subset" : a.name,
                                pipeline::Predicate::parse(a.predicate)};
  } else {
    if (a.name.empty()) throw UsageError("give --predicate or --name of a [subset.NAME] section");
    for (auto& s : pipeline::subset_specs_from_config(g.cfg()))
      if (s.name == a.name) spec = std::move(s);
    if (!spec) throw UsageError("no [subset." + a.name + "] section in the config");
  }
  pipeline::SubsetReport report{spec->name, 0, 0};
  stream_documents(a.stream, stdout_, log, [&](std::vector<Document> b) {
    pipeline::SubsetReport part;
    auto kept = pipeline::build_subset(b, *spec, &part);
    report.documents += part.documents;
    report.words += part.words;
    return kept;
  });
  if (!a.stream.report.empty()) {
    Output rep(a.stream.report, stdout_);
    rep.stream() << "name,documents,words\n"
                 << csv_field(report.name) << ',' << report.documents << ',' << report.words << '\n';
    rep.close();
  }
  log.info("done", "name", report.name, "documents", report.documents, "words", report.words);
  return kSuccess;
}

struct ImputeArgs {
  std::string labeled;
  std::string unlabeled;
  std::string out;
};

int corpus_impute(const ImputeArgs& a, const Globals& g, std::ostream& stdout_, std::ostream& err) {
  Log log(err, "corpus.impute-genre");
  check_input(a.labeled);
  check_input(a.unlabeled);
  const std::uint64_t seed = g.require_seed();
  Input lin(a.labeled);
  const auto labeled = read_documents(lin.stream());
  Input uin(a.unlabeled);
  const auto unlabeled = read_documents(uin.stream());
  pipeline::ImputeReport report;
  const auto docs = pipeline::impute_genre(labeled, unlabeled, seed, nullptr, &report);
  Output out(a.out, stdout_);
  write_documents(out.stream(), docs);
  out.close();
  log.info("done", "training", report.training, "heldout", report.heldout, "heldout_accuracy",
           report.heldout_accuracy, "imputed", report.imputed, "passed_through",
           report.passed_through);
  return kSuccess;
}

struct ValidateArgs {
  std::string input;
  std::string report;
};

int corpus_validate(const ValidateArgs& a, std::ostream& stdout_, std::ostream& err) {
  Log log(err, "corpus.validate-instructions");
  check_input(a.input);
  Input in(a.input);
  const auto r = pipeline::validate_instructions(in.stream());
  Output rep(a.report, stdout_);
  rep.stream() << "kind,key,count\n";
  rep.stream() << "summary,records," << r.records << "\nsummary,passed," << r.passed
               << "\nsummary,failed," << r.failed << '\n';
  for (const auto& [k, n] : r.by_category) rep.stream() << "category," << csv_field(k) << ',' << n << '\n';
  for (const auto& [k, n] : r.by_domain) rep.stream() << "domain," << csv_field(k) << ',' << n << '\n';
  rep.close();
  for (const auto& issue : r.issues) log.warn("invalid", "line", issue.line, "reason", issue.message);
  log.info("done", "records", r.records, "passed", r.passed, "failed", r.failed);
  return r.failed == 0 ? kSuccess : kDataError;
}

struct StatsArgs {
  std::string input;
  std::string out;
  std::string token_counter = "none";
};

int corpus_stats(const StatsArgs& a, std::ostream& stdout_, std::ostream& err) {
  Log log(err, "corpus.stats");
  check_input(a.input);
  pipeline::TokenCounter counter;
  if (a.token_counter == "whitespace") counter = [](std::string_view t) { return count_words(t); };
  else if (a.token_counter == "codepoints") counter = [](std::string_view t) { return count_codepoints(t); };
  else if (a.token_counter != "none") throw UsageError("unknown token counter " + a.token_counter);
  pipeline::StatsAccumulator acc(counter);
  Input in(a.input);
  DocumentReader reader(in.stream());
  while (auto d = reader.next()) acc.add(*d);
  const auto& r = acc.report();
  Output out(a.out, stdout_);
  out.stream() << "scope,key,documents,words,tokens,fertility\n";
  auto row = [&](const char* scope, const std::string& key, const pipeline::Totals& t) {
    const auto f = t.fertility(r.counted_tokens);
    out.stream() << scope << ',' << csv_field(key) << ',' << t.documents << ',' << t.words << ','
                 << (r.counted_tokens ? std::to_string(t.tokens) : std::string()) << ','
                 << (f ? format_number(*f) : std::string()) << '\n';
  };
  row("corpus", "*", r.corpus);
  for (const auto& [k, t] : r.by_source) row("source", k, t);
  for (const auto& [k, t] : r.by_language) row("language", k, t);
  out.close();
  log.info("done", "documents", r.corpus.documents, "words", r.corpus.words);
  return kSuccess;
}

// ------------------------------------------------------------------ report

struct ReportArgs {
  std::string scores;
  std::string skills;
  std::string baseline;
  std::string out_dir;
};

int report(const ReportArgs& a, std::ostream& stdout_, std::ostream& err) {
  Log log(err, "report");
  check_input(a.scores);
  check_input(a.skills);
  const Config cfg = Config::load(a.skills);
  const auto metrics = eval::MetricTable::from_config(cfg);
  const auto skills = eval::SkillMap::from_config(cfg);
  Input in(a.scores);
  const auto records = eval::read_scores(in.stream(), metrics);
  const auto reports = eval::skill_scores_all(records, skills, metrics);

  const fs::path dir = a.out_dir.empty() ? fs::path(".") : fs::path(a.out_dir);
  fs::create_directories(dir);
  {
    Output out((dir / "reports.csv").string(), stdout_);
    eval::write_reports_csv(out.stream(), reports);
    out.close();
  }
  stdout_ << "# Skill scores\n";
  eval::write_reports_table(stdout_, reports);
  if (!a.baseline.empty()) {
    const auto g = eval::gains(reports, a.baseline);
    Output out((dir / "gains.csv").string(), stdout_);
    eval::write_gains_csv(out.stream(), g);
    out.close();
    stdout_ << "\n# Gains over " << a.baseline << " (%)\n";
    eval::write_gains_table(stdout_, g);
  }
  if (reports.size() >= 2) {
    try {
      const auto ranks = eval::rank_models(records, skills, metrics);
      Output out((dir / "ranks.csv").string(), stdout_);
      eval::write_ranks_csv(out.stream(), ranks);
      out.close();
    } catch (const DataError& e) {
      log.warn("ranks_skipped", "reason", std::string(e.what()));
    }
  }
  log.info("done", "models", reports.size(), "records", records.size());
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Corpus curation and evaluation aggregation toolkit", "curate"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::uint64_t seed_value = 0;
  int workers_value = 1;
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed for every sampling decision");
  auto* workers_opt = app.add_option("--workers", workers_value, "Worker threads (no effect on results)");
  app.add_option("--config", g.config_path, "Config file (budgets, subsets, metrics, skills)");

  // lm
  auto* lm = app.add_subcommand("lm", "Train and score n-gram language models");
  lm->require_subcommand(1);
  LmTrainArgs lm_train_args;
  auto* lm_train_cmd = lm->add_subcommand("train", "Train an interpolated Kneser-Ney model");
  lm_train_cmd->add_option("--order", lm_train_args.order, "N-gram order (1-6)")->capture_default_str();
  lm_train_cmd->add_flag("--normalize", lm_train_args.normalize, "Score normalized text");
  lm_train_cmd->add_option("--out", lm_train_args.out, "Output ARPA file")->required();
  lm_train_cmd->add_option("corpus", lm_train_args.corpus, "JSONL corpus")->required();
  LmScoreArgs lm_score_args;
  auto* lm_score_cmd = lm->add_subcommand("score", "Per-document perplexity");
  lm_score_cmd->add_option("--model", lm_score_args.model, "ARPA model")->required();
  lm_score_cmd->add_option("--out", lm_score_args.out, "CSV output (id,tokens,perplexity)");
  lm_score_cmd->add_flag("--skip-unscorable", lm_score_args.skip_unscorable);
  lm_score_cmd->add_option("corpus", lm_score_args.corpus, "JSONL corpus")->required();

  // sample
  auto* sample = app.add_subcommand("sample", "Perplexity-based sub-sampling and segmentation");
  sample->require_subcommand(1);
  SampleFitArgs fit_args;
  std::size_t bins_value = 0;
  double tol_value = 0;
  int iter_value = 0;
  auto* fit_cmd = sample->add_subcommand("fit", "Fit the Gaussian retention curve");
  fit_cmd->add_option("--scores", fit_args.scores, "Scores CSV")->required();
  fit_cmd->add_option("--ratio", fit_args.ratio, "Target ratio in (0, 1]")->required();
  fit_cmd->add_option("--out", fit_args.out, "fit.json");
  auto* bins_opt = fit_cmd->add_option("--bins", bins_value, "Histogram bins");
  auto* tol_opt = fit_cmd->add_option("--tolerance", tol_value, "Ratio tolerance");
  auto* iter_opt = fit_cmd->add_option("--max-iterations", iter_value);
  fit_cmd->add_flag("--adjust-mu", fit_args.adjust_mu, "Re-center mu inside [q1, q3]");
  SampleApplyArgs apply_args;
  auto* apply_cmd = sample->add_subcommand("apply", "Sub-sample a corpus with a fit");
  apply_cmd->add_option("--fit", apply_args.fit, "fit.json")->required();
  apply_cmd->add_option("--scores", apply_args.scores, "Scores CSV to attach by id");
  apply_cmd->add_option("--out", apply_args.out, "Output JSONL (default stdout)");
  apply_cmd->add_option("corpus", apply_args.corpus, "JSONL corpus")->required();
  SampleSegmentArgs seg_args;
  auto* seg_cmd = sample->add_subcommand("segment", "Split into good/medium/bad by quartiles");
  seg_cmd->add_option("--scores", seg_args.scores, "Scores CSV")->required();
  seg_cmd->add_option("--out-prefix", seg_args.out_prefix, "Output prefix")->required();
  seg_cmd->add_option("corpus", seg_args.corpus, "JSONL corpus")->required();

  // corpus
  auto* corpus = app.add_subcommand("corpus", "Document pipeline verbs");
  corpus->require_subcommand(1);
  auto add_stream = [](CLI::App* cmd, StreamArgs& s) {
    cmd->add_option("input", s.input, "JSONL input ('-' for stdin)")->required();
    cmd->add_option("--out", s.out, "JSONL output (default stdout)");
    cmd->add_flag("--skip-malformed", s.skip_malformed, "Report and skip malformed lines");
  };
  StreamArgs ingest_args;
  auto* ingest_cmd = corpus->add_subcommand("ingest", "Validate and normalize a JSONL corpus");
  add_stream(ingest_cmd, ingest_args);
  StreamArgs dedup_args;
  auto* dedup_cmd = corpus->add_subcommand("dedup", "Drop exact duplicates of normalized text");
  add_stream(dedup_cmd, dedup_args);
  dedup_cmd->add_option("--report", dedup_args.report, "Per-source CSV report");
  StreamArgs balance_args;
  auto* balance_cmd = corpus->add_subcommand("balance", "Sample languages to budget ratios");
  add_stream(balance_cmd, balance_args);
  balance_cmd->add_option("--report", balance_args.report, "Per-language CSV report");
  SubsetArgs subset_args;
  auto* subset_cmd = corpus->add_subcommand("subset", "Select documents by metadata predicate");
  add_stream(subset_cmd, subset_args.stream);
  subset_cmd->add_option("--name", subset_args.name, "Subset name ([subset.NAME] in config)");
  subset_cmd->add_option("--predicate", subset_args.predicate, "Inline predicate");
  subset_cmd->add_option("--report", subset_args.stream.report, "CSV report");
  ImputeArgs impute_args;
  auto* impute_cmd = corpus->add_subcommand("impute-genre", "Label books missing a genre");
  impute_cmd->add_option("--labeled", impute_args.labeled, "Labeled JSONL")->required();
  impute_cmd->add_option("--unlabeled", impute_args.unlabeled, "Unlabeled JSONL")->required();
  impute_cmd->add_option("--out", impute_args.out, "Output JSONL (default stdout)");
  ValidateArgs validate_args;
  auto* validate_cmd = corpus->add_subcommand("validate-instructions", "Check instruction triplets");
  validate_cmd->add_option("input", validate_args.input, "JSONL triplets")->required();
  validate_cmd->add_option("--report", validate_args.report, "CSV summary (default stdout)");
  StatsArgs stats_args;
  auto* stats_cmd = corpus->add_subcommand("stats", "Document, word and token totals");
  stats_cmd->add_option("input", stats_args.input, "JSONL input")->required();
  stats_cmd->add_option("--out", stats_args.out, "CSV output (default stdout)");
  stats_cmd->add_option("--token-counter", stats_args.token_counter, "none|whitespace|codepoints")
      ->capture_default_str();

  // report
  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Aggregate benchmark scores into skill reports");
  report_cmd->add_option("--scores", report_args.scores, "Scores CSV")->required();
  report_cmd->add_option("--skills", report_args.skills, "Skill map and metric table")->required();
  report_cmd->add_option("--baseline", report_args.baseline, "Baseline model for gains");
  report_cmd->add_option("--out-dir", report_args.out_dir, "Directory for CSV outputs");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "level=error event=usage msg=\"" << e.what() << "\"\n" << app.help();
    return kUsage;
  }

  if (seed_opt->count()) g.seed = seed_value;
  if (workers_opt->count()) g.workers = workers_value;
  if (bins_opt->count()) fit_args.bins = bins_value;
  if (tol_opt->count()) fit_args.tolerance = tol_value;
  if (iter_opt->count()) fit_args.max_iterations = iter_value;

  try {
    g.load();
    if (lm_train_cmd->parsed()) return lm_train(lm_train_args, g, err);
    if (lm_score_cmd->parsed()) return lm_score(lm_score_args, g, out, err);
    if (fit_cmd->parsed()) return sample_fit(fit_args, g, out, err);
    if (apply_cmd->parsed()) return sample_apply(apply_args, g, out, err);
    if (seg_cmd->parsed()) return sample_segment(seg_args, g, err);
    if (ingest_cmd->parsed()) return corpus_ingest(ingest_args, out, err);
    if (dedup_cmd->parsed()) return corpus_dedup(dedup_args, g, out, err);
    if (balance_cmd->parsed()) return corpus_balance(balance_args, g, out, err);
    if (subset_cmd->parsed()) return corpus_subset(subset_args, g, out, err);
    if (impute_cmd->parsed()) return corpus_impute(impute_args, g, out, err);
    if (validate_cmd->parsed()) return corpus_validate(validate_args, out, err);
    if (stats_cmd->parsed()) return corpus_stats(stats_args, out, err);
    if (report_cmd->parsed()) return report(report_args, out, err);
  } catch (const UsageError& e) {
    err << "level=error event=usage msg=\"" << e.what() << "\"\n";
    return kUsage;
  } catch (const sampler::ConvergenceError& e) {
    err << "level=error event=nonconvergence msg=\"" << e.what() << "\"\n";
    return kNonConvergence;
  } catch (const DataError& e) {
    err << "level=error event=data msg=\"" << e.what() << "\"\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "level=error event=failure msg=\"" << e.what() << "\"\n";
    return kDataError;
  }
  err << app.help();
  return kUsage;
}

}  // namespace curate::cli
