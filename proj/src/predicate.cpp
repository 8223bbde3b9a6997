#include "curate/predicate.hpp"

#include <cctype>
#include <utility>
#include <variant>

#include "curate/errors.hpp"

namespace curate::pipeline {

enum class Field { doc_type, genre, original_language, language, source };

struct Predicate::Node {
  struct Compare {
    Field field;
    bool equal;
    std::string value;
  };
  struct Not {
    std::shared_ptr<const Node> operand;
  };
  struct Binary {
    bool is_and;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };
  std::variant<Compare, Not, Binary> op;
};

namespace {

using NodePtr = std::shared_ptr<const Predicate::Node>;

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    NodePtr root = parse_or();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(text_.substr(pos_, 1)) + "'");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw UsageError("predicate error at column " + std::to_string(pos_ + 1) + ": " + message +
                     " in \"" + std::string(text_) + "\"");
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view token) {
    skip_space();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  NodePtr parse_or() {
    NodePtr lhs = parse_and();
    while (accept("||")) {
      NodePtr rhs = parse_and();
      lhs = std::make_shared<Predicate::Node>(Predicate::Node{Predicate::Node::Binary{false, lhs, rhs}});
    }
    return lhs;
  }

  NodePtr parse_and() {
    NodePtr lhs = parse_unary();
    while (accept("&&")) {
      NodePtr rhs = parse_unary();
      lhs = std::make_shared<Predicate::Node>(Predicate::Node{Predicate::Node::Binary{true, lhs, rhs}});
    }
    return lhs;
  }

  NodePtr parse_unary() {
    skip_space();
    if (text_.substr(pos_, 2) != "!=" && accept("!"))
      return std::make_shared<Predicate::Node>(Predicate::Node{Predicate::Node::Not{parse_unary()}});
    if (accept("(")) {
      NodePtr inner = parse_or();
      if (!accept(")")) fail("expected ')'");
      return inner;
    }
    return parse_compare();
  }

  static bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  }

  std::string read_word(const char* what) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '"') {
      const auto close = text_.find('"', pos_ + 1);
      if (close == std::string_view::npos) fail("unterminated string");
      std::string value(text_.substr(pos_ + 1, close - pos_ - 1));
      pos_ = close + 1;
      return value;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && word_char(text_[pos_])) ++pos_;
    if (start == pos_) fail(std::string("expected ") + what);
    return std::string(text_.substr(start, pos_ - start));
  }

  NodePtr parse_compare() {
    const std::size_t field_pos = pos_;
    const std::string name = read_word("a field name");
    Field field;
    if (name == "doc_type") field = Field::doc_type;
    else if (name == "genre") field = Field::genre;
    else if (name == "original_language") field = Field::original_language;
    else if (name == "language") field = Field::language;
    else if (name == "source") field = Field::source;
    else {
      pos_ = field_pos;
      fail("unknown field '" + name + "'");
    }
    bool equal;
    if (accept("==")) equal = true;
    else if (accept("!=")) equal = false;
    else fail("expected == or !=");
    std::string value = read_word("a value");
    if (field == Field::doc_type && !parse_doc_type(value)) fail("unknown doc_type '" + value + "'");
    if (field == Field::genre && !parse_genre(value)) fail("unknown genre '" + value + "'");
    return std::make_shared<Predicate::Node>(
        Predicate::Node{Predicate::Node::Compare{field, equal, std::move(value)}});
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string_view field_value(const Document& d, Field f) {
  switch (f) {
    case Field::doc_type: return to_string(d.doc_type);
    case Field::genre: return to_string(d.genre);
    case Field::original_language: return d.original_language;
    case Field::language: return d.language;
    case Field::source: return d.source;
  }
  return {};
}

bool eval(const Predicate::Node& node, const Document& d) {
  return std::visit(
      [&](const auto& op) -> bool {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, Predicate::Node::Compare>) {
          return (field_value(d, op.field) == op.value) == op.equal;
        } else if constexpr (std::is_same_v<T, Predicate::Node::Not>) {
          return !eval(*op.operand, d);
        } else {
          return op.is_and ? (eval(*op.lhs, d) && eval(*op.rhs, d))
                           : (eval(*op.lhs, d) || eval(*op.rhs, d));
        }
      },
      node.op);
}

}  // namespace

Predicate Predicate::parse(std::string_view text) {
  Predicate p;
  p.text_ = std::string(text);
  p.root_ = Parser(p.text_).parse();
  return p;
}

bool Predicate::matches(const Document& doc) const { return eval(*root_, doc); }

}  // namespace curate::pipeline
