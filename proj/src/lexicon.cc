#include "fairtext/lexicon.h"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <unicode/uchar.h>

#include "json.hpp"

#include "fairtext/csv.h"
#include "fairtext/error.h"
#include "fairtext/io.h"
#include "fairtext/utf8.h"

namespace fairtext {
namespace {

constexpr std::array<std::pair<Category, std::string_view>, 6> kCategoryNames = {{
    {Category::kGender, "gender"},
    {Category::kRace, "race"},
    {Category::kReligion, "religion"},
    {Category::kMentalHealth, "mental_health"},
    {Category::kDisability, "disability"},
    {Category::kGeneral, "general"},
}};

std::string trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::string join_words(const std::vector<Token>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t.text;
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

bool whitespace_only(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    utf8::CodePoint c = utf8::decode(text, i);
    if (c.cp < 0 || !u_isUWhiteSpace(c.cp)) return false;
    i += c.length;
  }
  return true;
}

}  // namespace

std::string_view category_name(Category c) {
  for (const auto& [cat, name] : kCategoryNames) {
    if (cat == c) return name;
  }
  return "general";
}

Category parse_category(std::string_view name) {
  for (const auto& [cat, n] : kCategoryNames) {
    if (n == name) return cat;
  }
  throw ValidationError("unknown category '" + std::string(name) + "'");
}

BiasLexicon::BiasLexicon(std::vector<LexiconEntry> entries, std::string version)
    : version_(std::move(version)) {
  trie_.emplace_back();
  entries_.reserve(entries.size());
  for (auto& e : entries) {
    const std::string raw = e.term;
    std::string term = utf8::to_lower(trim(e.term));
    if (term.empty()) throw ValidationError("lexicon entry with empty term");
    std::vector<Token> words = tokenize(term);
    if (words.empty() || join_words(words) != collapse_whitespace(term)) {
      throw ValidationError("lexicon term '" + raw + "' is not a sequence of words");
    }
    term = join_words(words);
    if (by_term_.count(term)) throw ValidationError("duplicate lexicon term '" + term + "'");

    e.term = term;
    if (e.subgroup) {
      std::string sg = utf8::to_lower(trim(*e.subgroup));
      if (sg.empty()) {
        e.subgroup.reset();
      } else {
        e.subgroup = std::move(sg);
      }
    }
    std::vector<std::string> subs;
    for (const auto& s : e.suggested_substitutes) {
      std::string t = utf8::to_lower(trim(s));
      if (!t.empty()) subs.push_back(std::move(t));
    }
    e.suggested_substitutes = std::move(subs);

    const std::size_t index = entries_.size();
    by_term_.emplace(term, index);
    std::size_t node = 0;
    for (const auto& w : words) {
      components_.insert(w.text);
      auto it = trie_[node].next.find(w.text);
      if (it == trie_[node].next.end()) {
        trie_.emplace_back();
        it = trie_[node].next.emplace(w.text, trie_.size() - 1).first;
      }
      node = it->second;
    }
    trie_[node].entry = index;
    max_term_words_ = std::max(max_term_words_, words.size());
    entries_.push_back(std::move(e));
  }
}

const LexiconEntry* BiasLexicon::find(std::string_view term) const {
  auto it = by_term_.find(utf8::to_lower(term));
  return it == by_term_.end() ? nullptr : &entries_[it->second];
}

bool BiasLexicon::contains_component(std::string_view word) const {
  return components_.count(utf8::to_lower(word)) > 0;
}

std::optional<std::size_t> BiasLexicon::step(std::size_t node, std::string_view word) const {
  if (trie_.empty()) return std::nullopt;
  auto it = trie_[node].next.find(word);
  if (it == trie_[node].next.end()) return std::nullopt;
  return it->second;
}

const LexiconEntry* BiasLexicon::entry_at(std::size_t node) const {
  if (node >= trie_.size() || !trie_[node].entry) return nullptr;
  return &entries_[*trie_[node].entry];
}

BiasLexicon parse_lexicon(std::string_view json_text, std::string version) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("lexicon: ") + e.what(), e.byte);
  }
  if (!doc.is_array()) throw ValidationError("lexicon must be a JSON array");

  std::vector<LexiconEntry> entries;
  entries.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    const std::string where = "lexicon entry " + std::to_string(i);
    if (!item.is_object() || !item.contains("term") || !item["term"].is_string()) {
      throw ValidationError(where + ": missing string field 'term'");
    }
    LexiconEntry e;
    e.term = item["term"].get<std::string>();
    if (!item.contains("category") || !item["category"].is_string()) {
      throw ValidationError(where + " ('" + e.term + "'): missing string field 'category'");
    }
    try {
      e.category = parse_category(item["category"].get<std::string>());
    } catch (const ValidationError& err) {
      throw ValidationError(where + " ('" + e.term + "'): " + err.what());
    }
    if (item.contains("subgroup") && !item["subgroup"].is_null()) {
      if (!item["subgroup"].is_string()) throw ValidationError(where + ": 'subgroup' must be a string");
      e.subgroup = item["subgroup"].get<std::string>();
    }
    if (item.contains("suggested_substitutes")) {
      const auto& subs = item["suggested_substitutes"];
      if (!subs.is_array()) throw ValidationError(where + ": 'suggested_substitutes' must be an array");
      for (const auto& s : subs) {
        if (!s.is_string()) throw ValidationError(where + ": substitutes must be strings");
        e.suggested_substitutes.push_back(s.get<std::string>());
      }
    }
    if (item.contains("source") && item["source"].is_string()) e.source = item["source"].get<std::string>();
    entries.push_back(std::move(e));
  }
  return BiasLexicon(std::move(entries), std::move(version));
}

BiasLexicon load_lexicon(const std::string& path) {
  const std::string content = read_file(path);
  // Content hash, so the version is stable across machines and paths.
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : content) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return parse_lexicon(content, std::string("fnv1a-") + buf);
}

std::vector<SpanTag> tag_spans(const Document& doc, const BiasLexicon& lexicon) {
  if (lexicon.empty()) return {};
  const std::vector<Token> tokens = tokenize(doc.text);
  std::vector<std::string> lower;
  lower.reserve(tokens.size());
  for (const auto& t : tokens) lower.push_back(utf8::to_lower(t.text));

  struct Candidate {
    std::size_t first, last;  // token indices, inclusive
    const LexiconEntry* entry;
  };
  std::vector<Candidate> candidates;
  const std::string_view text = doc.text;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::size_t node = 0;
    for (std::size_t j = i; j < tokens.size(); ++j) {
      if (j > i && !whitespace_only(text.substr(tokens[j - 1].end, tokens[j].start - tokens[j - 1].end))) {
        break;
      }
      auto next = lexicon.step(node, lower[j]);
      if (!next) break;
      node = *next;
      if (const LexiconEntry* e = lexicon.entry_at(node)) candidates.push_back({i, j, e});
    }
  }

  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    const std::size_t la = a.last - a.first, lb = b.last - b.first;
    if (la != lb) return la > lb;
    return a.first < b.first;
  });

  std::vector<char> taken(tokens.size(), 0);
  std::vector<SpanTag> spans;
  for (const auto& c : candidates) {
    bool free = true;
    for (std::size_t k = c.first; k <= c.last && free; ++k) free = !taken[k];
    if (!free) continue;
    for (std::size_t k = c.first; k <= c.last; ++k) taken[k] = 1;
    spans.push_back({tokens[c.first].start, tokens[c.last].end, c.entry->term, c.entry->category,
                     c.entry->subgroup});
  }
  std::sort(spans.begin(), spans.end(),
            [](const SpanTag& a, const SpanTag& b) { return a.start < b.start; });
  return spans;
}

}  // namespace fairtext
