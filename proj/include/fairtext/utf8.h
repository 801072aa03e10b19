#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace fairtext::utf8 {

// One decoded code point. Ill-formed sequences decode to cp = -1 with
// length 1 so callers always make progress.
struct CodePoint {
  int cp;
  std::size_t length;
};

CodePoint decode(std::string_view text, std::size_t offset);

bool is_alpha(int cp);

// Simple (1:1) Unicode case mappings applied per code point. Ill-formed
// bytes are copied through untouched.
std::string to_lower(std::string_view text);
std::string to_upper(std::string_view text);

enum class CaseShape { kLower, kInitialUpper, kAllUpper };

// All-caps requires at least two letters, all uppercase. A single uppercase
// letter, or an uppercase first letter, counts as initial-cap.
CaseShape case_shape(std::string_view word);

// Re-case `word` (assumed lowercase) to match `shape`.
std::string apply_case(std::string_view word, CaseShape shape);

}  // namespace fairtext::utf8
