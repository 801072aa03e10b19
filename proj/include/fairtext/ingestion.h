#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairtext/labels.h"

namespace fairtext {

struct Document {
  std::string id;
  std::string text;
  std::optional<LabelVector> labels;

  bool operator==(const Document&) const = default;
};

// Byte offsets into UTF-8 text; [start, end) always falls on code point
// boundaries.
struct Token {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

struct Corpus {
  std::vector<Document> documents;
  std::uint64_t split_seed = 0;

  std::size_t size() const { return documents.size(); }
  bool empty() const { return documents.empty(); }
  // Linear scan; nullptr when absent.
  const Document* find(std::string_view id) const;
};

// Parses a toxic-comment CSV. Columns are located by header name, so extra
// columns and any column order are accepted.
Corpus parse_corpus(std::string_view content, bool has_labels);
Corpus load_corpus(const std::string& path, bool has_labels);

// Writes `id,comment_text` and, when `with_labels` and every document has
// labels, the six label columns.
std::string format_corpus(const Corpus& corpus, bool with_labels);

// Words are maximal runs of alphabetic code points, where an apostrophe
// (' or U+2019) or hyphen directly between two letters joins the runs.
std::vector<Token> tokenize(std::string_view text);

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_fraction,
                                       std::uint64_t seed);

}  // namespace fairtext
