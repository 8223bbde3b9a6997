#include "curate/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace curate {
namespace {

const icu::Normalizer2& nfkc() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFKCInstance(status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU NFKC data unavailable");
    return n;
  }();
  return *instance;
}

icu::UnicodeString nfkc_normalize(const icu::UnicodeString& s) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfkc().normalize(s, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFKC normalization failed");
  return out;
}

// Whitespace runs become one space, controls vanish, ends are trimmed.
icu::UnicodeString squeeze(const icu::UnicodeString& s) {
  icu::UnicodeString out;
  bool pending_space = false;
  for (int32_t i = 0; i < s.length();) {
    const UChar32 c = s.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = !out.isEmpty();
      continue;
    }
    if (u_charType(c) == U_CONTROL_CHAR) continue;
    if (pending_space) {
      out.append(static_cast<UChar>(u' '));
      pending_space = false;
    }
    out.append(c);
  }
  return out;
}

std::string one_pass(std::string_view text) {
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  s = squeeze(s);
  s = nfkc_normalize(s);
  s.toLower(icu::Locale::getRoot());
  s = nfkc_normalize(s);
  s = squeeze(s);
  std::string out;
  s.toUTF8String(out);
  return out;
}

}  // namespace

std::string normalize_text(std::string_view text) {
  std::string current = one_pass(text);
  // Removing a control can glue a combining mark onto a new base, which NFKC
  // then recomposes; a few passes always settle.
  for (int pass = 0; pass < 8; ++pass) {
    std::string next = one_pass(current);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

namespace {

template <typename OnWord>
void for_each_word(std::string_view text, OnWord&& on_word) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  int32_t start = -1;
  while (i < length) {
    const int32_t at = i;
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    const bool space = c >= 0 && u_isUWhiteSpace(c);
    if (space) {
      if (start >= 0) {
        on_word(text.substr(start, at - start));
        start = -1;
      }
    } else if (start < 0) {
      start = at;
    }
  }
  if (start >= 0) on_word(text.substr(start));
}

}  // namespace

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> words;
  for_each_word(text, [&](std::string_view w) { words.push_back(w); });
  return words;
}

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  for_each_word(text, [&](std::string_view) { ++n; });
  return n;
}

std::size_t count_codepoints(std::string_view text) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  std::size_t n = 0;
  for (int32_t i = 0; i < length; ++n) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
  }
  return n;
}

}  // namespace curate
