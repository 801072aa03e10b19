#include "fairtext/embeddings.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "fairtext/error.h"
#include "fairtext/io.h"

namespace fairtext {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

struct Header {
  std::size_t vocab = 0;
  std::size_t dimension = 0;
  std::size_t end = 0;  // offset just past the header newline
};

Header parse_header(std::string_view content) {
  const std::size_t nl = content.find('\n');
  if (nl == std::string_view::npos) throw ParseError("embeddings: missing header line (line 1)", 1);
  std::istringstream in{std::string(content.substr(0, nl))};
  long long v = -1, d = -1;
  std::string extra;
  if (!(in >> v >> d) || (in >> extra) || v < 0 || d <= 0) {
    throw ParseError("embeddings: header must be 'V D' (line 1)", 1);
  }
  return {static_cast<std::size_t>(v), static_cast<std::size_t>(d), nl + 1};
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t b = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

float read_float_le(const char* p) {
  std::uint32_t bits = 0;
  for (int k = 3; k >= 0; --k) bits = (bits << 8) | static_cast<unsigned char>(p[k]);
  return std::bit_cast<float>(bits);
}

void write_float_le(std::string& out, float f) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
}

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw ValidationError("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  // sqrt(na * nb) rather than sqrt(na) * sqrt(nb) so that cosine(v, v) == 1.
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace

EmbeddingFormat parse_embedding_format(std::string_view name) {
  if (name == "text") return EmbeddingFormat::kText;
  if (name == "binary") return EmbeddingFormat::kBinary;
  throw ConfigError("unknown embeddings format '" + std::string(name) + "' (expected text or binary)");
}

EmbeddingStore::EmbeddingStore(std::size_t dimension, std::vector<std::string> words, std::vector<float> data)
    : dimension_(dimension) {
  if (dimension == 0) throw ValidationError("embedding dimension must be positive");
  if (data.size() != words.size() * dimension) {
    throw ValidationError("embedding data does not hold " + std::to_string(words.size()) + " rows of " +
                          std::to_string(dimension));
  }
  words_.reserve(words.size());
  data_.reserve(data.size());
  for (std::size_t r = 0; r < words.size(); ++r) {
    const float* row = data.data() + r * dimension;
    for (std::size_t k = 0; k < dimension; ++k) {
      if (!std::isfinite(row[k])) throw ValidationError("non-finite value in vector for '" + words[r] + "'");
    }
    if (index_.count(words[r])) {
      warnings_.push_back("duplicate word '" + words[r] + "' at row " + std::to_string(r) +
                          "; keeping first occurrence");
      continue;
    }
    index_.emplace(words[r], words_.size());
    words_.push_back(std::move(words[r]));
    data_.insert(data_.end(), row, row + dimension);
  }
}

std::optional<std::size_t> EmbeddingStore::index_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const float> EmbeddingStore::vector(std::string_view word) const {
  auto idx = index_of(word);
  if (!idx) throw OutOfVocabulary(std::string(word));
  return vector(*idx);
}

EmbeddingStore parse_embeddings(std::string_view content, EmbeddingFormat format,
                                std::optional<std::size_t> limit) {
  const Header header = parse_header(content);
  const std::size_t rows = limit ? std::min(*limit, header.vocab) : header.vocab;
  const std::size_t d = header.dimension;
  std::vector<std::string> words;
  std::vector<float> data;
  words.reserve(rows);
  data.reserve(rows * d);

  std::size_t pos = header.end;
  if (format == EmbeddingFormat::kText) {
    std::size_t line_no = 1;
    while (words.size() < rows) {
      ++line_no;
      if (pos >= content.size()) {
        throw ParseError("embeddings: expected " + std::to_string(header.vocab) + " rows, file ends at line " +
                             std::to_string(line_no),
                         line_no);
      }
      std::size_t nl = content.find('\n', pos);
      if (nl == std::string_view::npos) nl = content.size();
      const auto fields = split_fields(content.substr(pos, nl - pos));
      pos = nl + 1;
      if (fields.size() != d + 1) {
        throw ParseError("embeddings: line " + std::to_string(line_no) + " has " +
                             std::to_string(fields.empty() ? 0 : fields.size() - 1) + " values, expected " +
                             std::to_string(d),
                         line_no);
      }
      for (std::size_t k = 1; k <= d; ++k) {
        double v = 0.0;
        try {
          v = parse_double(fields[k]);
        } catch (const DataError&) {
          throw ParseError("embeddings: bad number on line " + std::to_string(line_no), line_no);
        }
        const auto f = static_cast<float>(v);
        if (!std::isfinite(f)) {
          throw ParseError("embeddings: non-finite value on line " + std::to_string(line_no), line_no);
        }
        data.push_back(f);
      }
      words.emplace_back(fields[0]);
    }
  } else {
    while (words.size() < rows) {
      while (pos < content.size() && is_space(content[pos])) ++pos;
      const std::size_t word_start = pos;
      while (pos < content.size() && content[pos] != ' ') ++pos;
      if (pos >= content.size() || pos == word_start) {
        throw ParseError("embeddings: truncated row " + std::to_string(words.size()) + " at byte " +
                             std::to_string(word_start),
                         word_start);
      }
      std::string word(content.substr(word_start, pos - word_start));
      ++pos;  // the separating space
      if (content.size() - pos < 4 * d) {
        throw ParseError("embeddings: truncated vector for '" + word + "' at byte " + std::to_string(pos), pos);
      }
      for (std::size_t k = 0; k < d; ++k, pos += 4) {
        const float f = read_float_le(content.data() + pos);
        if (!std::isfinite(f)) {
          throw ParseError("embeddings: non-finite value for '" + word + "' at byte " + std::to_string(pos), pos);
        }
        data.push_back(f);
      }
      words.push_back(std::move(word));
    }
  }
  return EmbeddingStore(d, std::move(words), std::move(data));
}

EmbeddingStore load_embeddings(const std::string& path, EmbeddingFormat format, std::optional<std::size_t> limit) {
  return parse_embeddings(read_file(path), format, limit);
}

std::string encode_embeddings_text(const EmbeddingStore& store) {
  std::string out = std::to_string(store.size()) + " " + std::to_string(store.dimension()) + "\n";
  for (std::size_t r = 0; r < store.size(); ++r) {
    out += store.words()[r];
    for (float f : store.vector(r)) {
      out.push_back(' ');
      out += format_double(static_cast<double>(f));
    }
    out.push_back('\n');
  }
  return out;
}

std::string encode_embeddings_binary(const EmbeddingStore& store) {
  std::string out = std::to_string(store.size()) + " " + std::to_string(store.dimension()) + "\n";
  for (std::size_t r = 0; r < store.size(); ++r) {
    out += store.words()[r];
    out.push_back(' ');
    for (float f : store.vector(r)) write_float_le(out, f);
    out.push_back('\n');
  }
  return out;
}

double cosine(std::span<const float> a, std::span<const float> b) { return cosine_impl(a, b); }
double cosine(std::span<const double> a, std::span<const double> b) { return cosine_impl(a, b); }

std::vector<Neighbor> nearest_neighbors(const EmbeddingStore& store, std::string_view word, std::size_t k,
                                        const std::set<std::string, std::less<>>& exclude) {
  if (k == 0) throw ValidationError("nearest_neighbors: k must be at least 1");
  const auto query = store.index_of(word);
  if (!query) throw OutOfVocabulary(std::string(word));
  const auto q = store.vector(*query);

  std::vector<Neighbor> all;
  all.reserve(store.size());
  for (std::size_t r = 0; r < store.size(); ++r) {
    if (r == *query) continue;
    const std::string& w = store.words()[r];
    if (exclude.count(w)) continue;
    all.push_back({w, cosine(q, store.vector(r))});
  }
  auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.word < b.word;
  };
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), better);
  all.resize(take);
  return all;
}

}  // namespace fairtext
