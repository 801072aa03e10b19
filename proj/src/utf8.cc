#include "fairtext/utf8.h"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace fairtext::utf8 {
namespace {

void append(std::string& out, UChar32 cp) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  U8_APPEND_UNSAFE(reinterpret_cast<uint8_t*>(buf), len, cp);
  out.append(buf, static_cast<std::size_t>(len));
}

template <typename Map>
std::string map_code_points(std::string_view text, Map map) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    CodePoint c = decode(text, i);
    if (c.cp < 0) {
      out.push_back(text[i]);
    } else {
      append(out, map(c.cp));
    }
    i += c.length;
  }
  return out;
}

}  // namespace

CodePoint decode(std::string_view text, std::size_t offset) {
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  int32_t i = static_cast<int32_t>(offset);
  int32_t length = static_cast<int32_t>(text.size());
  UChar32 c = 0;
  U8_NEXT(s, i, length, c);
  if (c < 0) return {-1, 1};
  return {c, static_cast<std::size_t>(i) - offset};
}

bool is_alpha(int cp) { return cp >= 0 && u_isalpha(cp); }

std::string to_lower(std::string_view text) {
  return map_code_points(text, [](UChar32 c) { return u_tolower(c); });
}

std::string to_upper(std::string_view text) {
  return map_code_points(text, [](UChar32 c) { return u_toupper(c); });
}

CaseShape case_shape(std::string_view word) {
  int letters = 0;
  int upper = 0;
  bool first_upper = false;
  std::size_t i = 0;
  while (i < word.size()) {
    CodePoint c = decode(word, i);
    if (is_alpha(c.cp)) {
      bool up = u_isupper(c.cp);
      if (letters == 0) first_upper = up;
      ++letters;
      if (up) ++upper;
    }
    i += c.length;
  }
  if (letters >= 2 && upper == letters) return CaseShape::kAllUpper;
  if (first_upper) return CaseShape::kInitialUpper;
  return CaseShape::kLower;
}

std::string apply_case(std::string_view word, CaseShape shape) {
  switch (shape) {
    case CaseShape::kAllUpper:
      return to_upper(word);
    case CaseShape::kInitialUpper: {
      std::string lower = to_lower(word);
      if (lower.empty()) return lower;
      CodePoint first = decode(lower, 0);
      if (first.cp < 0) return lower;
      std::string out;
      append(out, u_toupper(first.cp));
      out.append(lower, first.length);
      return out;
    }
    case CaseShape::kLower:
      break;
  }
  return to_lower(word);
}

}  // namespace fairtext::utf8
