#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace curate {

enum class DocType { book, newspaper, web, government, wiki, code, other };
enum class Genre { fiction, nonfiction, unknown };
enum class QualitySegment { good, medium, bad };

std::string_view to_string(DocType t);
std::string_view to_string(Genre g);
std::string_view to_string(QualitySegment s);
std::optional<DocType> parse_doc_type(std::string_view s);
std::optional<Genre> parse_genre(std::string_view s);
std::optional<QualitySegment> parse_segment(std::string_view s);

struct Document {
  std::string id;
  std::string text;
  std::string source = "other";
  std::string language = "other";
  DocType doc_type = DocType::other;
  Genre genre = Genre::unknown;
  std::string original_language = "unknown";
  std::optional<std::string> published;
  std::size_t word_count = 0;
  std::optional<double> perplexity;
  std::optional<QualitySegment> segment;
};

// Builds a document and fills word_count from the text.
Document make_document(std::string id, std::string text);

// One JSON object, keys in a fixed order, no trailing newline.
std::string to_json_line(const Document& doc);

// Parses one JSONL line. Throws DataError (without line info) on schema
// violations; the reader attaches the line number.
Document parse_document(std::string_view line);

struct IngestIssue {
  std::size_t line;
  std::string message;
};

struct IngestOptions {
  // Skip malformed lines (recording them) instead of failing on the first.
  bool skip_malformed = false;
};

// Streaming JSONL reader. Duplicate ids are always fatal.
class DocumentReader {
 public:
  explicit DocumentReader(std::istream& in, IngestOptions options = {});

  std::optional<Document> next();
  // Reads up to max_docs documents; an empty batch means end of stream.
  std::vector<Document> next_batch(std::size_t max_docs);

  const std::vector<IngestIssue>& issues() const { return issues_; }
  std::size_t lines_read() const { return line_no_; }

 private:
  std::istream& in_;
  IngestOptions options_;
  std::size_t line_no_ = 0;
  std::unordered_set<std::string> seen_ids_;
  std::vector<IngestIssue> issues_;
};

std::vector<Document> read_documents(std::istream& in, IngestOptions options = {});
void write_documents(std::ostream& out, const std::vector<Document>& docs);

}  // namespace curate
