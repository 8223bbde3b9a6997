#include "curate/document.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "curate/errors.hpp"
#include "curate/text.hpp"
#include "json.hpp"

namespace curate {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

constexpr std::array<std::pair<DocType, std::string_view>, 7> kDocTypes{{
    {DocType::book, "book"},
    {DocType::newspaper, "newspaper"},
    {DocType::web, "web"},
    {DocType::government, "government"},
    {DocType::wiki, "wiki"},
    {DocType::code, "code"},
    {DocType::other, "other"},
}};

constexpr std::array<std::pair<Genre, std::string_view>, 3> kGenres{{
    {Genre::fiction, "fiction"},
    {Genre::nonfiction, "nonfiction"},
    {Genre::unknown, "unknown"},
}};

constexpr std::array<std::pair<QualitySegment, std::string_view>, 3> kSegments{{
    {QualitySegment::good, "good"},
    {QualitySegment::medium, "medium"},
    {QualitySegment::bad, "bad"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
  for (const auto& [e, name] : table)
    if (e == v) return name;
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const std::array<std::pair<E, std::string_view>, N>& table,
                          std::string_view s) {
  for (const auto& [e, name] : table)
    if (name == s) return e;
  return std::nullopt;
}

std::string string_field(const Json& obj, const char* key, std::string fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw DataError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(DocType t) { return name_of(kDocTypes, t); }
std::string_view to_string(Genre g) { return name_of(kGenres, g); }
std::string_view to_string(QualitySegment s) { return name_of(kSegments, s); }
std::optional<DocType> parse_doc_type(std::string_view s) { return value_of(kDocTypes, s); }
std::optional<Genre> parse_genre(std::string_view s) { return value_of(kGenres, s); }
std::optional<QualitySegment> parse_segment(std::string_view s) {
  return value_of(kSegments, s);
}

Document make_document(std::string id, std::string text) {
  Document d;
  d.id = std::move(id);
  d.text = std::move(text);
  d.word_count = count_words(d.text);
  return d;
}

std::string to_json_line(const Document& doc) {
  OrderedJson j;
  j["id"] = doc.id;
  j["text"] = doc.text;
  j["source"] = doc.source;
  j["language"] = doc.language;
  j["doc_type"] = to_string(doc.doc_type);
  j["genre"] = to_string(doc.genre);
  j["original_language"] = doc.original_language;
  if (doc.published) j["published"] = *doc.published;
  j["word_count"] = doc.word_count;
  if (doc.perplexity) j["perplexity"] = *doc.perplexity;
  if (doc.segment) j["segment"] = to_string(*doc.segment);
  return j.dump(-1, ' ', false, OrderedJson::error_handler_t::replace);
}

Document parse_document(std::string_view line) {
  Json obj;
  try {
    obj = Json::parse(line);
  } catch (const Json::parse_error&) {
    throw DataError("malformed JSON");
  }
  if (!obj.is_object()) throw DataError("expected a JSON object");

  auto id = obj.find("id");
  if (id == obj.end() || !id->is_string() || id->get<std::string>().empty())
    throw DataError("missing or empty 'id'");
  auto text = obj.find("text");
  if (text == obj.end()) throw DataError("missing 'text'");
  if (!text->is_string()) throw DataError("field 'text' must be a string");

  Document d = make_document(id->get<std::string>(), text->get<std::string>());
  d.source = string_field(obj, "source", "other");
  d.language = string_field(obj, "language", "other");
  d.original_language = string_field(obj, "original_language", "unknown");

  const std::string doc_type = string_field(obj, "doc_type", "other");
  auto dt = parse_doc_type(doc_type);
  if (!dt) throw DataError("unknown doc_type '" + doc_type + "'");
  d.doc_type = *dt;

  const std::string genre = string_field(obj, "genre", "unknown");
  auto g = parse_genre(genre);
  if (!g) throw DataError("unknown genre '" + genre + "'");
  d.genre = *g;

  if (auto it = obj.find("published"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw DataError("field 'published' must be a string");
    d.published = it->get<std::string>();
  }
  if (auto it = obj.find("perplexity"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) throw DataError("field 'perplexity' must be a number");
    const double p = it->get<double>();
    if (!std::isfinite(p) || p <= 0) throw DataError("perplexity must be positive and finite");
    d.perplexity = p;
  }
  if (auto it = obj.find("segment"); it != obj.end() && !it->is_null()) {
    const std::string s = it->is_string() ? it->get<std::string>() : "";
    auto seg = parse_segment(s);
    if (!seg) throw DataError("unknown segment '" + s + "'");
    d.segment = *seg;
  }
  return d;
}

DocumentReader::DocumentReader(std::istream& in, IngestOptions options)
    : in_(in), options_(options) {}

std::optional<Document> DocumentReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Document doc;
    try {
      doc = parse_document(line);
    } catch (const DataError& e) {
      if (!options_.skip_malformed) throw ParseError(e.what(), line_no_);
      issues_.push_back({line_no_, e.what()});
      continue;
    }
    if (!seen_ids_.insert(doc.id).second)
      throw ParseError("duplicate id " + doc.id, line_no_);
    return doc;
  }
  if (in_.bad()) throw DataError("unreadable input");
  return std::nullopt;
}

std::vector<Document> DocumentReader::next_batch(std::size_t max_docs) {
  std::vector<Document> batch;
  while (batch.size() < max_docs) {
    auto d = next();
    if (!d) break;
    batch.push_back(std::move(*d));
  }
  return batch;
}

std::vector<Document> read_documents(std::istream& in, IngestOptions options) {
  DocumentReader reader(in, options);
  std::vector<Document> docs;
  while (auto d = reader.next()) docs.push_back(std::move(*d));
  return docs;
}

void write_documents(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) out << to_json_line(d) << '\n';
}

}  // namespace curate
