#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fairtext {

enum class EmbeddingFormat { kText, kBinary };

EmbeddingFormat parse_embedding_format(std::string_view name);

struct Neighbor {
  std::string word;
  double similarity = 0.0;

  bool operator==(const Neighbor&) const = default;
};

// Word vectors in row-major order. Immutable once built.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  // Duplicate words keep their first row; later ones are reported through
  // warnings(). Throws ValidationError on a row of the wrong length or a
  // non-finite entry.
  EmbeddingStore(std::size_t dimension, std::vector<std::string> words, std::vector<float> data);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  bool contains(std::string_view word) const { return index_.count(std::string(word)) > 0; }
  std::optional<std::size_t> index_of(std::string_view word) const;

  std::span<const float> vector(std::size_t row) const {
    return {data_.data() + row * dimension_, dimension_};
  }
  // Throws OutOfVocabulary.
  std::span<const float> vector(std::string_view word) const;

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::size_t dimension_ = 0;
  std::vector<std::string> words_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> warnings_;
};

// word2vec formats. Both start with an ASCII "V D" header line. Text rows are
// "word v1 ... vD"; binary rows are the word, one space, then D little-endian
// float32 values (an optional newline after each row is skipped). `limit`
// keeps only the first rows. Throws ParseError with a line number (text) or
// byte offset (binary).
EmbeddingStore parse_embeddings(std::string_view content, EmbeddingFormat format,
                                std::optional<std::size_t> limit = std::nullopt);
EmbeddingStore load_embeddings(const std::string& path, EmbeddingFormat format,
                               std::optional<std::size_t> limit = std::nullopt);

// Encoders for the same two formats. Binary rows end with '\n' like the
// reference word2vec tool writes them.
std::string encode_embeddings_text(const EmbeddingStore& store);
std::string encode_embeddings_binary(const EmbeddingStore& store);

// dot(a, b) / (|a| |b|), or 0 when either vector is zero. Accumulates in
// double. Throws ValidationError on a dimension mismatch.
double cosine(std::span<const float> a, std::span<const float> b);
double cosine(std::span<const double> a, std::span<const double> b);

// Exact k nearest words by cosine, excluding `word` itself and `exclude`.
// Sorted by similarity descending, then word ascending. Throws
// OutOfVocabulary for an unknown query.
std::vector<Neighbor> nearest_neighbors(const EmbeddingStore& store, std::string_view word, std::size_t k,
                                        const std::set<std::string, std::less<>>& exclude = {});

}  // namespace fairtext
