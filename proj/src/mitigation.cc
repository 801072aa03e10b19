#include "fairtext/mitigation.h"

#include <algorithm>
#include <set>

#include "json.hpp"

#include "fairtext/error.h"
#include "fairtext/utf8.h"

namespace fairtext {
namespace {

// Plain lowercase word sequence, or empty if `word` is not one.
std::string normalize_candidate(std::string_view word) {
  std::string w(word);
  std::replace(w.begin(), w.end(), '_', ' ');
  w = utf8::to_lower(w);
  std::string joined;
  for (const auto& t : tokenize(w)) {
    if (!joined.empty()) joined.push_back(' ');
    joined += t.text;
  }
  return joined == w ? joined : std::string();
}

bool touches_lexicon(const std::string& candidate, const BiasLexicon& lexicon) {
  if (lexicon.contains(candidate)) return true;
  for (const auto& t : tokenize(candidate)) {
    if (lexicon.contains_component(t.text)) return true;
  }
  return false;
}

class CandidateFilter {
 public:
  CandidateFilter(const SpanTag& span, std::string_view original, const BiasLexicon& lexicon)
      : lexicon_(lexicon) {
    originals_.insert(span.matched_term);
    originals_.insert(utf8::to_lower(original));
  }

  // Normalized candidate, or empty when it must be dropped.
  std::string accept(std::string_view word) {
    std::string c = normalize_candidate(word);
    if (c.empty() || originals_.count(c) || touches_lexicon(c, lexicon_)) return {};
    if (!seen_.insert(c).second) return {};
    return c;
  }

 private:
  const BiasLexicon& lexicon_;
  std::set<std::string> originals_;
  std::set<std::string> seen_;
};

std::optional<std::string> embedding_key(const EmbeddingStore& store, const std::string& term) {
  if (store.contains(term)) return term;
  std::string underscored = term;
  std::replace(underscored.begin(), underscored.end(), ' ', '_');
  if (store.contains(underscored)) return underscored;
  return std::nullopt;
}

}  // namespace

std::string_view fallback_name(Fallback f) {
  switch (f) {
    case Fallback::kNone:
      return "none";
    case Fallback::kLexiconSubstitute:
      return "lexicon_substitute";
    case Fallback::kUnchanged:
      return "unchanged";
  }
  return "unchanged";
}

void MitigationPolicy::validate() const {
  if (k_min < 1 || k_min > k_max) throw ValidationError("mitigation policy needs 1 <= k_min <= k_max");
  if (!(min_similarity >= -1.0 && min_similarity <= 1.0)) {
    throw ValidationError("min_similarity must lie in [-1, 1]");
  }
}

SubstitutionSuggestion suggest(const SpanTag& span, std::string_view original, const EmbeddingStore& store,
                               const BiasLexicon& lexicon, const MitigationPolicy& policy) {
  policy.validate();
  SubstitutionSuggestion out;
  out.span = span;
  out.original = std::string(original);

  std::vector<Neighbor> survivors;
  if (auto key = embedding_key(store, span.matched_term); key && store.size() > 1) {
    // Widen the query until k_max survivors are found, the ranking drops
    // below min_similarity, or the vocabulary is exhausted. The result is
    // the same as filtering a full ranking.
    std::size_t want = policy.k_max + lexicon.size() + 1;
    while (true) {
      const auto ranked = nearest_neighbors(store, *key, want);
      CandidateFilter filter(span, original, lexicon);
      survivors.clear();
      bool below = false;
      for (const auto& n : ranked) {
        if (n.similarity < policy.min_similarity) {
          below = true;
          break;
        }
        std::string c = filter.accept(n.word);
        if (c.empty()) continue;
        survivors.push_back({std::move(c), n.similarity});
        if (survivors.size() == policy.k_max) break;
      }
      if (survivors.size() == policy.k_max || below || ranked.size() < want) break;
      want *= 2;
    }
  }

  if (survivors.size() < policy.k_min) {
    if (const LexiconEntry* entry = lexicon.find(span.matched_term)) {
      CandidateFilter filter(span, original, lexicon);
      std::vector<Neighbor> subs;
      for (const auto& s : entry->suggested_substitutes) {
        std::string c = filter.accept(s);
        if (c.empty()) continue;
        subs.push_back({std::move(c), kLexiconSubstituteSimilarity});
        if (subs.size() == policy.k_max) break;
      }
      if (!subs.empty()) {
        out.candidates = std::move(subs);
        out.fallback_used = Fallback::kLexiconSubstitute;
        return out;
      }
    }
  }
  out.candidates = std::move(survivors);
  out.fallback_used = out.candidates.empty() ? Fallback::kUnchanged : Fallback::kNone;
  return out;
}

Document rewrite(const Document& doc, const std::vector<SubstitutionSuggestion>& suggestions,
                 std::vector<std::pair<std::size_t, std::size_t>>* new_spans) {
  std::size_t prev_end = 0;
  for (const auto& s : suggestions) {
    if (s.span.start < prev_end || s.span.end < s.span.start || s.span.end > doc.text.size()) {
      throw ValidationError("rewrite: spans must be sorted, non-overlapping and inside the text");
    }
    prev_end = s.span.end;
  }

  Document out{doc.id, {}, std::nullopt};
  out.text.reserve(doc.text.size());
  if (new_spans) new_spans->clear();
  std::size_t cursor = 0;
  for (const auto& s : suggestions) {
    out.text.append(doc.text, cursor, s.span.start - cursor);
    const std::size_t start = out.text.size();
    const std::string_view surface = std::string_view(doc.text).substr(s.span.start, s.span.end - s.span.start);
    if (s.fallback_used == Fallback::kUnchanged || s.candidates.empty()) {
      out.text.append(surface);
    } else {
      out.text += utf8::apply_case(s.candidates.front().word, utf8::case_shape(surface));
    }
    if (new_spans) new_spans->emplace_back(start, out.text.size());
    cursor = s.span.end;
  }
  out.text.append(doc.text, cursor, std::string::npos);
  return out;
}

MitigationResult mitigate_corpus(const Corpus& corpus, const std::vector<LabelScores>& scores,
                                 const BiasLexicon& lexicon, const EmbeddingStore& store,
                                 const MitigationPolicy& policy, double threshold) {
  if (scores.size() != corpus.size()) throw ValidationError("one score vector per document required");
  policy.validate();
  MitigationResult result;
  result.corpus.split_seed = corpus.split_seed;
  result.corpus.documents.reserve(corpus.size());
  result.flagged.assign(corpus.size(), 0);
  result.suggestions.resize(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Document& doc = corpus.documents[i];
    if (!is_biased(scores[i], threshold)) {
      result.corpus.documents.push_back(doc);
      continue;
    }
    result.flagged[i] = 1;
    const auto spans = tag_spans(doc, lexicon);
    if (spans.empty()) {
      result.corpus.documents.push_back(doc);
      continue;
    }
    auto& sugg = result.suggestions[i];
    for (const auto& span : spans) {
      sugg.push_back(suggest(span, std::string_view(doc.text).substr(span.start, span.end - span.start), store,
                             lexicon, policy));
    }
    result.corpus.documents.push_back(rewrite(doc, sugg));
  }
  return result;
}

MitigationResult mitigate_corpus(const Corpus& corpus, const LinearModel& model, const Vectorizer& vectorizer,
                                 const BiasLexicon& lexicon, const EmbeddingStore& store,
                                 const MitigationPolicy& policy, double threshold) {
  return mitigate_corpus(corpus, predict_corpus(model, vectorizer, corpus), lexicon, store, policy, threshold);
}

std::string format_suggestions(const Corpus& original, const MitigationResult& result) {
  nlohmann::json docs = nlohmann::json::array();
  for (std::size_t i = 0; i < original.size(); ++i) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& s : result.suggestions[i]) {
      nlohmann::json cands = nlohmann::json::array();
      for (const auto& c : s.candidates) cands.push_back({{"word", c.word}, {"similarity", c.similarity}});
      items.push_back({{"span",
                        {{"start", s.span.start},
                         {"end", s.span.end},
                         {"matched_term", s.span.matched_term},
                         {"category", category_name(s.span.category)},
                         {"subgroup", s.span.subgroup ? nlohmann::json(*s.span.subgroup) : nlohmann::json()}}},
                       {"original", s.original},
                       {"candidates", std::move(cands)},
                       {"fallback_used", fallback_name(s.fallback_used)}});
    }
    docs.push_back({{"id", original.documents[i].id},
                    {"flagged", result.flagged[i] != 0},
                    {"suggestions", std::move(items)}});
  }
  return docs.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

}  // namespace fairtext
