#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "curate/errors.hpp"
#include "curate/ngram_lm.hpp"

namespace curate::lm {
namespace {

constexpr std::string_view kMetaTag = "# curate-lm";

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

struct Meta {
  ModelMeta model;
  std::vector<double> discounts;
};

Meta parse_meta(std::string_view line) {
  Meta meta;
  std::istringstream fields{std::string(line.substr(kMetaTag.size()))};
  std::string field;
  while (fields >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    const std::string_view key(field.data(), eq);
    const std::string_view value(field.data() + eq + 1, field.size() - eq - 1);
    if (key == "normalize") {
      meta.model.normalized = value == "1";
    } else if (key == "documents") {
      parse_int(value, meta.model.documents);
    } else if (key == "tokens") {
      parse_int(value, meta.model.tokens);
    } else if (key == "discounts") {
      std::size_t start = 0;
      while (start <= value.size()) {
        const auto comma = value.find(',', start);
        const auto piece = value.substr(start, comma == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : comma - start);
        double d;
        if (parse_double(piece, d)) meta.discounts.push_back(d);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
    }
  }
  return meta;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  std::size_t line() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace

void save_arpa(const NGramModel& model, std::ostream& out) {
  out << kMetaTag << " order=" << model.order()
      << " normalize=" << (model.normalized() ? 1 : 0)
      << " documents=" << model.meta().documents << " tokens=" << model.meta().tokens
      << " discounts=";
  for (std::size_t i = 0; i < model.discounts().size(); ++i)
    out << (i ? "," : "") << format_double(model.discounts()[i]);
  out << "\n\n\\data\\\n";
  for (int n = 1; n <= model.order(); ++n)
    out << "ngram " << n << '=' << model.table(n).size() << '\n';
  for (int n = 1; n <= model.order(); ++n) {
    out << "\n\\" << n << "-grams:\n";
    std::vector<const NGramModel::Table::value_type*> rows;
    for (const auto& kv : model.table(n)) rows.push_back(&kv);
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->first < b->first; });
    for (const auto* row : rows) {
      out << format_double(row->second.log10_prob) << '\t' << row->first;
      if (row->second.log10_backoff != 0.0) out << '\t' << format_double(row->second.log10_backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

NGramModel load_arpa(std::istream& in) {
  LineReader reader(in);
  std::string line;
  Meta meta;

  bool found_data = false;
  while (reader.next(line)) {
    const auto t = trim(line);
    if (t == "\\data\\") {
      found_data = true;
      break;
    }
    if (t.substr(0, kMetaTag.size()) == kMetaTag) meta = parse_meta(t);
  }
  if (!found_data) throw DataError("missing header");

  std::vector<std::size_t> declared;
  std::string pending;  // first non-header line after the counts
  bool have_pending = false;
  while (reader.next(line)) {
    const auto t = trim(line);
    if (t.empty()) {
      if (declared.empty()) continue;
      break;
    }
    if (t.front() == '\\') {
      pending = std::string(t);
      have_pending = true;
      break;
    }
    if (t.substr(0, 6) != "ngram ") throw ParseError("malformed header", reader.line());
    const auto rest = t.substr(6);
    const auto eq = rest.find('=');
    std::size_t n = 0;
    std::size_t count = 0;
    if (eq == std::string_view::npos || !parse_int(trim(rest.substr(0, eq)), n) ||
        !parse_int(trim(rest.substr(eq + 1)), count) || n != declared.size() + 1)
      throw ParseError("malformed header", reader.line());
    declared.push_back(count);
  }
  if (declared.empty()) throw ParseError("malformed header: no ngram counts", reader.line());
  if (declared.size() > static_cast<std::size_t>(kMaxOrder))
    throw ParseError("malformed header: order above " + std::to_string(kMaxOrder), reader.line());

  const int order = static_cast<int>(declared.size());
  std::vector<NGramModel::Table> tables(declared.size());

  auto next_nonblank = [&](std::string& out) {
    if (have_pending) {
      out = pending;
      have_pending = false;
      return true;
    }
    while (reader.next(line)) {
      if (!trim(line).empty()) {
        out = std::string(trim(line));
        return true;
      }
    }
    return false;
  };

  std::string header;
  for (int n = 1; n <= order; ++n) {
    const std::string expected = "\\" + std::to_string(n) + "-grams:";
    if (!next_nonblank(header)) throw ParseError("truncated section", reader.line());
    if (header != expected) throw ParseError("expected " + expected, reader.line());

    auto& table = tables[static_cast<std::size_t>(n - 1)];
    bool closed = false;
    while (reader.next(line)) {
      const auto t = trim(line);
      if (t.empty() || t.front() == '\\') {
        if (!t.empty()) {
          pending = std::string(t);
          have_pending = true;
        }
        closed = true;
        break;
      }
      std::vector<std::string_view> fields;
      std::size_t start = 0;
      while (true) {
        const auto tab = t.find('\t', start);
        fields.push_back(t.substr(start, tab == std::string_view::npos ? tab : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
      }
      if (fields.size() < 2 || fields.size() > 3) throw ParseError("malformed entry", reader.line());
      NGramEntry entry;
      if (!parse_double(fields[0], entry.log10_prob) || !std::isfinite(entry.log10_prob) ||
          entry.log10_prob > 0.0)
        throw ParseError("invalid probability", reader.line());
      if (fields.size() == 3 &&
          (!parse_double(fields[2], entry.log10_backoff) || !std::isfinite(entry.log10_backoff)))
        throw ParseError("invalid backoff", reader.line());
      const auto gram = fields[1];
      const auto words = static_cast<int>(std::count(gram.begin(), gram.end(), ' ')) + 1;
      if (gram.empty() || words != n || gram.front() == ' ' || gram.back() == ' ' ||
          gram.find("  ") != std::string_view::npos)
        throw ParseError("malformed entry", reader.line());
      if (!table.emplace(std::string(gram), entry).second)
        throw ParseError("duplicate n-gram", reader.line());
    }
    if (table.size() != declared[static_cast<std::size_t>(n - 1)]) {
      throw ParseError("count mismatch", closed ? reader.line() : reader.line() + 1);
    }
    if (!closed) throw ParseError("truncated section", reader.line() + 1);
  }

  std::string tail;
  if (!next_nonblank(tail)) throw ParseError("truncated section: missing \\end\\", reader.line() + 1);
  if (tail != "\\end\\") throw ParseError("expected \\end\\", reader.line());

  if (!tables[0].count(std::string(kUnknown)))
    throw DataError("model has no <unk> unigram");
  if (meta.discounts.size() != declared.size()) meta.discounts.assign(declared.size(), 0.0);
  return NGramModel(order, std::move(tables), std::move(meta.discounts), meta.model);
}

}  // namespace curate::lm
