#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairtext/detector.h"
#include "fairtext/embeddings.h"
#include "fairtext/fairness.h"
#include "fairtext/ingestion.h"
#include "fairtext/lexicon.h"
#include "fairtext/mitigation.h"

namespace fairtext {

inline constexpr std::string_view kVersion = "0.1.0";

// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitInternal = 3;

int exit_code_for(const std::exception& e);

struct DetectorSettings {
  Hyperparams hyperparams;
  int min_df = 1;
  std::optional<std::size_t> max_features;
};

struct PipelineConfig {
  std::string corpus;
  std::string lexicon;
  std::string embeddings;
  EmbeddingFormat embeddings_format = EmbeddingFormat::kText;
  std::optional<std::size_t> embeddings_limit;
  std::optional<std::string> model;       // pre-trained model; trained when absent
  std::optional<std::string> assignment;  // explicit subgroup assignment CSV
  std::string out_dir = "out";

  DetectorSettings detector;
  MitigationPolicy policy;
  double threshold = kDefaultThreshold;
  std::vector<GroupPair> pairs = {{"female", "male"}, {"asian", "white"}, {"african_american", "white"}};
  double p = kDefaultPowerMeanP;
  double w = kDefaultOverallWeight;
  std::uint64_t seed = 42;
  // When set and no model is given, the detector is trained on this
  // fraction of the corpus and the rest of the pipeline runs on the
  // held-out part.
  std::optional<double> train_fraction;
};

// JSON config. Relative paths are resolved against `base_dir`. Unknown keys
// are rejected with ConfigError.
PipelineConfig parse_config(std::string_view json_text, const std::string& base_dir = "");
PipelineConfig load_config(const std::string& path);
std::string format_config(const PipelineConfig& config);

// Loads a corpus, reading label columns when the header has all six.
Corpus load_corpus_auto(const std::string& path);

struct Detector {
  Vectorizer vectorizer;
  LinearModel model;
};

Detector fit_detector(const Corpus& train_corpus, const DetectorSettings& settings);

// (train, evaluation) corpora for a config: a seeded split when
// train_fraction is set, otherwise the whole corpus for both.
std::pair<Corpus, Corpus> training_and_evaluation(const Corpus& corpus, const PipelineConfig& config);

// Labels of `reference` documents, in `target` order, joined by id.
std::vector<LabelVector> labels_by_id(const Corpus& target, const Corpus& reference);

// CSV `id,subgroups` with ';'-separated subgroups; documents without
// subgroups are omitted.
std::string format_assignment(const Corpus& corpus, const SubgroupAssignment& assignment);

// tags.json: [{"id", "spans": [{"start", "end", "matched_term", "category", "subgroup"}]}]
std::string format_tags(const Corpus& corpus, const BiasLexicon& lexicon);

// JSON object of {"document_level": [...], "word_level": [...]} deltas.
std::string format_comparison_report(const EvaluationReport& before, const EvaluationReport& after);

struct StageRecord {
  std::string name;
  std::size_t documents_in = 0;
  std::size_t documents_out = 0;
  double wall_clock_ms = 0.0;
};

struct RunManifest {
  std::string config_json;
  std::string status = "running";
  std::optional<std::string> failed_stage;
  std::optional<std::string> error;
  std::vector<StageRecord> stages;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  std::string lexicon_version;
  std::string started_at;
  std::string finished_at;
};

std::string format_manifest(const RunManifest& manifest);

// detect -> tag -> mitigate -> re-detect -> evaluate before/after -> compare.
// Writes model.json (when trained), scores_before.csv, scores_after.csv,
// assignment.csv, rewritten.csv, suggestions.json, report_before.json,
// report_after.json, comparison.json and manifest.json into out_dir. The
// manifest is written even when a stage fails; the exception is rethrown.
RunManifest run_pipeline(const PipelineConfig& config);

}  // namespace fairtext
