#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairtext/detector.h"
#include "fairtext/embeddings.h"
#include "fairtext/ingestion.h"
#include "fairtext/lexicon.h"

namespace fairtext {

enum class Fallback { kNone, kLexiconSubstitute, kUnchanged };

std::string_view fallback_name(Fallback f);

// Similarity recorded for lexicon-supplied substitutes, which have no
// embedding score.
inline constexpr double kLexiconSubstituteSimilarity = 1.0;

struct MitigationPolicy {
  std::size_t k_min = 5;
  std::size_t k_max = 10;
  double min_similarity = 0.25;

  // Throws ValidationError unless 1 <= k_min <= k_max and min_similarity is
  // in [-1, 1].
  void validate() const;
};

struct SubstitutionSuggestion {
  SpanTag span;
  std::string original;  // surface text of the span
  std::vector<Neighbor> candidates;
  Fallback fallback_used = Fallback::kUnchanged;
};

// Ranks substitutes for one tagged span. Embedding neighbours of the matched
// term (or its underscore-joined form) are filtered: lexicon terms and words
// of multi-word lexicon terms, case-insensitive repeats of the original,
// anything that is not a plain word sequence, and scores below
// min_similarity. Up to k_max survive. With fewer than k_min survivors the
// lexicon entry's suggested substitutes are used instead, if any survive the
// same filters; with nothing at all the span stays unchanged. Never throws
// for out-of-vocabulary terms.
SubstitutionSuggestion suggest(const SpanTag& span, std::string_view original, const EmbeddingStore& store,
                               const BiasLexicon& lexicon, const MitigationPolicy& policy);

// Replaces every span that has candidates with its top candidate, re-cased to
// the original's shape. Bytes outside replaced spans are preserved. The
// returned document keeps the id and drops labels. When `new_spans` is given
// it receives each span's offsets in the rewritten text. Throws
// ValidationError on unsorted or overlapping spans.
Document rewrite(const Document& doc, const std::vector<SubstitutionSuggestion>& suggestions,
                 std::vector<std::pair<std::size_t, std::size_t>>* new_spans = nullptr);

struct MitigationResult {
  Corpus corpus;
  std::vector<char> flagged;  // is_biased per input document
  std::vector<std::vector<SubstitutionSuggestion>> suggestions;
};

// Documents whose scores pass `threshold` are tagged and rewritten; all other
// documents pass through untouched. Output order matches input order.
MitigationResult mitigate_corpus(const Corpus& corpus, const std::vector<LabelScores>& scores,
                                 const BiasLexicon& lexicon, const EmbeddingStore& store,
                                 const MitigationPolicy& policy, double threshold);
MitigationResult mitigate_corpus(const Corpus& corpus, const LinearModel& model, const Vectorizer& vectorizer,
                                 const BiasLexicon& lexicon, const EmbeddingStore& store,
                                 const MitigationPolicy& policy, double threshold);

// suggestions.json: one object per document,
//   {"id", "flagged", "suggestions": [{"span": {"start", "end", "matched_term",
//    "category", "subgroup"}, "original", "candidates": [{"word",
//    "similarity"}], "fallback_used"}]}
std::string format_suggestions(const Corpus& original, const MitigationResult& result);

}  // namespace fairtext
