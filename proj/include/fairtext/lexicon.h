#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairtext/ingestion.h"

namespace fairtext {

enum class Category { kGender, kRace, kReligion, kMentalHealth, kDisability, kGeneral };

std::string_view category_name(Category c);
// Throws ValidationError on an unknown name.
Category parse_category(std::string_view name);

struct LexiconEntry {
  std::string term;  // lowercase, trimmed; words separated by single spaces
  Category category = Category::kGeneral;
  std::optional<std::string> subgroup;
  std::vector<std::string> suggested_substitutes;
  std::string source;  // free-text provenance note, may be empty
};

// Immutable catalog of bias-bearing terms. Lookups are by lowercased term.
class BiasLexicon {
 public:
  BiasLexicon() = default;
  // Normalizes and validates every entry. Throws ValidationError on empty or
  // untokenizable terms and on duplicates.
  explicit BiasLexicon(std::vector<LexiconEntry> entries, std::string version = "");

  const std::vector<LexiconEntry>& entries() const { return entries_; }
  const std::string& version() const { return version_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // `term` is lowercased before lookup.
  const LexiconEntry* find(std::string_view term) const;
  bool contains(std::string_view term) const { return find(term) != nullptr; }

  // True when `word` (lowercased) is a single-word term or one of the words
  // of a multi-word term.
  bool contains_component(std::string_view word) const;

  std::size_t max_term_words() const { return max_term_words_; }

  // Word trie over term words; node 0 is the root. step() returns the child
  // reached by `word` (already lowercased), entry_at() the term ending there.
  std::optional<std::size_t> step(std::size_t node, std::string_view word) const;
  const LexiconEntry* entry_at(std::size_t node) const;

 private:
  struct TrieNode {
    std::map<std::string, std::size_t, std::less<>> next;
    std::optional<std::size_t> entry;
  };
  std::vector<LexiconEntry> entries_;
  std::string version_;
  std::map<std::string, std::size_t, std::less<>> by_term_;
  std::set<std::string, std::less<>> components_;
  std::vector<TrieNode> trie_;
  std::size_t max_term_words_ = 0;
};

struct SpanTag {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string matched_term;
  Category category = Category::kGeneral;
  std::optional<std::string> subgroup;

  bool operator==(const SpanTag&) const = default;
};

// JSON array of {"term", "category", "subgroup"?, "suggested_substitutes"?,
// "source"?}. Throws ParseError on malformed JSON and ValidationError on bad
// entries.
BiasLexicon parse_lexicon(std::string_view json_text, std::string version = "");
BiasLexicon load_lexicon(const std::string& path);

// Case-insensitive whole-word matching over tokenize(doc.text). Multi-word
// terms match consecutive tokens separated only by whitespace. Overlapping
// candidates are resolved by word count (longest first), then start offset.
// The result is non-overlapping and sorted by start.
std::vector<SpanTag> tag_spans(const Document& doc, const BiasLexicon& lexicon);

}  // namespace fairtext
