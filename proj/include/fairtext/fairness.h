#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairtext/detector.h"
#include "fairtext/ingestion.h"
#include "fairtext/labels.h"
#include "fairtext/lexicon.h"

namespace fairtext {

// Normalized Mann-Whitney U: P(pos > neg) + 0.5 P(pos == neg), computed from
// integer pair counts. NaN when either class is absent.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
  std::array<double, kNumLabels> per_label{};
};

// Predicted positive iff score >= threshold. A label with no true and no
// predicted positives scores 1.0.
F1Scores f1(const std::vector<LabelScores>& scores, const std::vector<LabelVector>& labels, double threshold);

// Generalized mean (1/N sum x^p)^(1/p); geometric mean at p = 0. For p < 0 a
// zero component makes the mean zero. NaN for an empty input.
double power_mean(std::span<const double> values, double p);

// Identity subgroups mentioned by each document, keyed by document id.
struct SubgroupAssignment {
  std::map<std::string, std::set<std::string>> groups;

  const std::set<std::string>& of(const std::string& id) const;
  std::set<std::string> universe() const;
};

// Subgroups of the lexicon spans found in each document.
SubgroupAssignment assign_from_lexicon(const Corpus& corpus, const BiasLexicon& lexicon);
// CSV `id,subgroups` with subgroups separated by ';'. When `universe` is
// non-empty every subgroup must belong to it.
SubgroupAssignment parse_assignment(std::string_view content, const std::set<std::string>& universe = {});
SubgroupAssignment load_assignment(const std::string& path, const std::set<std::string>& universe = {});

struct SubgroupAUC {
  std::string subgroup;
  std::size_t size = 0;
  std::optional<double> subgroup_auc;
  std::optional<double> bpsn_auc;
  std::optional<double> bnsp_auc;
};

struct BiasAUCReport {
  double p = -5.0;
  double w = 0.25;
  std::optional<double> overall_auc;
  std::vector<SubgroupAUC> subgroups;
  std::optional<double> mean_subgroup_auc;
  std::optional<double> mean_bpsn_auc;
  std::optional<double> mean_bnsp_auc;
  std::optional<double> combined;
  std::vector<std::string> warnings;
};

inline constexpr double kDefaultPowerMeanP = -5.0;
inline constexpr double kDefaultOverallWeight = 0.25;

// Document-level inputs: a scalar score and binary truth per document plus
// its subgroup memberships. For each subgroup s:
//   subgroup AUC over documents in s,
//   BPSN over background positives and subgroup negatives,
//   BNSP over background negatives and subgroup positives.
// combined = w * overall + (1 - w) / 3 * sum of power means of the three
// families. A subgroup whose AUC in a family is undefined is left out of
// that family's mean with a warning.
BiasAUCReport bias_auc(std::span<const double> scores, std::span<const int> truth,
                       const std::vector<std::set<std::string>>& membership,
                       const std::vector<std::string>& subgroups, double p = kDefaultPowerMeanP,
                       double w = kDefaultOverallWeight);

// Reduces the six labels per document: truth is OR over labels, score is the
// maximum label score. Subgroups default to the assignment's universe.
BiasAUCReport bias_auc(const Corpus& corpus, const std::vector<LabelScores>& scores,
                       const SubgroupAssignment& assignment, std::vector<std::string> subgroups = {},
                       double p = kDefaultPowerMeanP, double w = kDefaultOverallWeight);

using GroupPair = std::pair<std::string, std::string>;  // (unprivileged, privileged)

// Parses "female:male,asian:white". Throws ConfigError on malformed input.
std::vector<GroupPair> parse_pairs(std::string_view text);

inline constexpr double kFairBandLow = 0.8;
inline constexpr double kFairBandHigh = 1.25;

enum class RatioStatus { kDefined, kInfinite, kUndefined };

struct DisparateImpactEntry {
  GroupPair pair;
  std::size_t unprivileged_count = 0;
  std::size_t privileged_count = 0;
  std::optional<double> unprivileged_rate;
  std::optional<double> privileged_rate;
  RatioStatus status = RatioStatus::kUndefined;
  double di = 0.0;  // meaningful when status == kDefined
  bool fair = false;
};

struct DisparateImpactReport {
  std::vector<DisparateImpactEntry> entries;
  std::vector<std::string> warnings;
};

// The favourable outcome for a document is is_biased() == false; a group's
// rate is taken over documents mentioning it. di = rate(unprivileged) /
// rate(privileged); fair iff 0.8 <= di <= 1.25. A group with no mentions
// leaves the pair undefined; a zero privileged rate against a nonzero
// unprivileged one is reported as infinite.
DisparateImpactReport disparate_impact(const Corpus& corpus, const std::vector<LabelScores>& scores,
                                       const SubgroupAssignment& assignment, double threshold,
                                       const std::vector<GroupPair>& pairs);

// Word-level variant: a group's rate is the fraction of tokens, across
// documents mentioning the group, not covered by a lexicon span.
DisparateImpactReport word_level_disparate_impact(const Corpus& corpus, const BiasLexicon& lexicon,
                                                  const SubgroupAssignment& assignment,
                                                  const std::vector<GroupPair>& pairs);

struct DisparateImpactDelta {
  GroupPair pair;
  std::optional<double> before;
  std::optional<double> after;
  std::optional<double> delta;
  bool entered_fair_band = false;
  bool left_fair_band = false;
};

// Throws ValidationError if the reports cover different pairs.
std::vector<DisparateImpactDelta> compare_reports(const DisparateImpactReport& before,
                                                  const DisparateImpactReport& after);

struct EvaluationReport {
  double threshold = kDefaultThreshold;
  std::size_t documents = 0;
  std::size_t flagged = 0;
  std::optional<F1Scores> f1;
  std::optional<BiasAUCReport> bias_auc;
  DisparateImpactReport disparate_impact;
  DisparateImpactReport word_level_disparate_impact;
};

struct EvaluationOptions {
  double threshold = kDefaultThreshold;
  double p = kDefaultPowerMeanP;
  double w = kDefaultOverallWeight;
  std::vector<GroupPair> pairs;
};

// F1 and bias-AUC are computed only when `truth` (labels aligned with
// `corpus`) is given.
EvaluationReport evaluate(const Corpus& corpus, const std::vector<LabelScores>& scores,
                          const std::optional<std::vector<LabelVector>>& truth, const BiasLexicon& lexicon,
                          const SubgroupAssignment& assignment, const EvaluationOptions& options);

std::string format_report(const EvaluationReport& report);
std::string format_comparison(const std::vector<DisparateImpactDelta>& deltas);

}  // namespace fairtext
