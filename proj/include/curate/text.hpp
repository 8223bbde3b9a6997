#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace curate {

// NFKC, lowercase, collapse Unicode whitespace runs to one ASCII space,
// strip both ends and drop control characters. Idempotent.
std::string normalize_text(std::string_view text);

// Splits on Unicode White_Space code points. Empty pieces are never returned.
std::vector<std::string_view> split_whitespace(std::string_view text);

// Same rule as split_whitespace without materializing the pieces.
std::size_t count_words(std::string_view text);

// Number of Unicode code points; invalid bytes count one each.
std::size_t count_codepoints(std::string_view text);

}  // namespace curate
