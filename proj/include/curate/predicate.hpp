#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "curate/document.hpp"

namespace curate::pipeline {

// Boolean filter over document metadata, e.g.
//   (doc_type==book && genre==nonfiction) || doc_type==newspaper
// Fields: doc_type, genre, original_language, language, source. Operators:
// == != && || ! and parentheses. Values may be bare words or double-quoted.
class Predicate {
 public:
  struct Node;

  // Throws UsageError on syntax errors, unknown fields, or values outside a
  // closed enum (doc_type, genre).
  static Predicate parse(std::string_view text);

  bool matches(const Document& doc) const;
  const std::string& text() const { return text_; }

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace curate::pipeline
