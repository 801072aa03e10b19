// fairtext command-line front end.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <unordered_set>

#include "CLI11.hpp"

#include "fairtext/csv.h"
#include "fairtext/error.h"
#include "fairtext/io.h"
#include "fairtext/pipeline.h"

namespace {

using namespace fairtext;
namespace fs = std::filesystem;

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string corpus;
  double train_fraction = 0.0;
  std::string lexicon;
  std::string embeddings;
  std::string embeddings_format;
  std::size_t embeddings_limit = 0;
  std::string model;
  std::string assignment;
  std::string pairs;
  double threshold = 0.0;
  bool whole_corpus = false;

  std::string out;
  std::string suggestions;
  std::string scores;
  std::string tags;
  std::string reference_corpus;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file");
  app->add_option("--seed", f.seed, "random seed (training order and corpus split)");
  app->add_option("--out-dir", f.out_dir, "output directory");
  app->add_option("--corpus", f.corpus, "corpus CSV");
  app->add_option("--train-fraction", f.train_fraction, "train on this fraction, evaluate on the rest");
  app->add_option("--lexicon", f.lexicon, "bias lexicon JSON");
  app->add_option("--embeddings", f.embeddings, "word2vec embeddings");
  app->add_option("--embeddings-format", f.embeddings_format, "text or binary");
  app->add_option("--embeddings-limit", f.embeddings_limit, "read at most this many vectors");
  app->add_option("--model", f.model, "trained model JSON");
  app->add_option("--assignment", f.assignment, "subgroup assignment CSV");
  app->add_option("--pairs", f.pairs, "disparate impact pairs, e.g. female:male,asian:white");
  app->add_option("--threshold", f.threshold, "decision threshold");
}

// flag > config > default
PipelineConfig resolve_config(const CLI::App& app, const Flags& f) {
  PipelineConfig c = f.config.empty() ? PipelineConfig{} : load_config(f.config);
  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--seed")) {
    c.seed = f.seed;
    c.detector.hyperparams.seed = f.seed;
  }
  if (given("--out-dir")) c.out_dir = f.out_dir;
  if (given("--corpus")) c.corpus = f.corpus;
  if (given("--train-fraction")) c.train_fraction = f.train_fraction;
  if (given("--lexicon")) c.lexicon = f.lexicon;
  if (given("--embeddings")) c.embeddings = f.embeddings;
  if (given("--embeddings-format")) c.embeddings_format = parse_embedding_format(f.embeddings_format);
  if (given("--embeddings-limit")) c.embeddings_limit = f.embeddings_limit;
  if (given("--model")) c.model = f.model;
  if (given("--assignment")) c.assignment = f.assignment;
  if (given("--pairs")) c.pairs = parse_pairs(f.pairs);
  if (given("--threshold")) c.threshold = f.threshold;
  if (!(c.threshold > 0.0 && c.threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
  return c;
}

std::string require(const std::string& value, const char* what) {
  if (value.empty()) throw ConfigError(std::string("missing ") + what);
  if (!fs::exists(value)) throw ConfigError(std::string(what) + " path '" + value + "' does not exist");
  return value;
}

std::string output_path(const std::string& explicit_path, const PipelineConfig& c, const char* name) {
  if (!explicit_path.empty()) return explicit_path;
  fs::create_directories(c.out_dir);
  return (fs::path(c.out_dir) / name).string();
}

// The corpus the detector-facing stages operate on: the held-out part when
// train_fraction is set, unless --whole-corpus is given.
Corpus working_corpus(const PipelineConfig& c, bool whole) {
  Corpus corpus = load_corpus_auto(require(c.corpus, "corpus"));
  if (whole || !c.train_fraction) return corpus;
  return training_and_evaluation(corpus, c).second;
}

Detector load_detector(const PipelineConfig& c) {
  if (!c.model) throw ConfigError("missing model");
  auto [vec, model] = load_model(require(*c.model, "model"));
  return {std::move(vec), std::move(model)};
}

EmbeddingStore load_store(const PipelineConfig& c) {
  EmbeddingStore store = load_embeddings(require(c.embeddings, "embeddings"), c.embeddings_format, c.embeddings_limit);
  for (const auto& w : store.warnings()) std::cerr << "warning: embeddings: " << w << "\n";
  return store;
}

int cmd_train(const CLI::App& app, const Flags& f) {
  const PipelineConfig c = resolve_config(app, f);
  const Corpus corpus = load_corpus_auto(require(c.corpus, "corpus"));
  const Corpus train_corpus = training_and_evaluation(corpus, c).first;
  const Detector d = fit_detector(train_corpus, c.detector);
  const std::string out = output_path(f.out, c, "model.json");
  save_model(out, d.vectorizer, d.model);
  std::cerr << "trained on " << train_corpus.size() << " documents, " << d.vectorizer.size() << " features -> "
            << out << "\n";
  return kExitOk;
}

int cmd_detect(const CLI::App& app, const Flags& f) {
  const PipelineConfig c = resolve_config(app, f);
  const Detector d = load_detector(c);
  const Corpus corpus = working_corpus(c, f.whole_corpus);
  const auto scores = predict_corpus(d.model, d.vectorizer, corpus);
  export_scores(output_path(f.out, c, "scores.csv"), corpus, scores);
  return kExitOk;
}

int cmd_tag(const CLI::App& app, const Flags& f) {
  const PipelineConfig c = resolve_config(app, f);
  const BiasLexicon lexicon = load_lexicon(require(c.lexicon, "lexicon"));
  const Corpus corpus = working_corpus(c, f.whole_corpus);
  write_file_atomic(output_path(f.out, c, "assignment.csv"),
                    format_assignment(corpus, assign_from_lexicon(corpus, lexicon)));
  if (!f.tags.empty()) write_file_atomic(f.tags, format_tags(corpus, lexicon));
  return kExitOk;
}

int cmd_mitigate(const CLI::App& app, const Flags& f) {
  const PipelineConfig c = resolve_config(app, f);
  const BiasLexicon lexicon = load_lexicon(require(c.lexicon, "lexicon"));
  const EmbeddingStore store = load_store(c);
  const Corpus corpus = working_corpus(c, f.whole_corpus);
  std::vector<LabelScores> scores;
  if (!f.scores.empty()) {
    scores = import_scores(require(f.scores, "scores"), corpus);
  } else {
    const Detector d = load_detector(c);
    scores = predict_corpus(d.model, d.vectorizer, corpus);
  }
  const MitigationResult result = mitigate_corpus(corpus, scores, lexicon, store, c.policy, c.threshold);
  write_file_atomic(output_path(f.out, c, "rewritten.csv"), format_corpus(result.corpus, false));
  write_file_atomic(output_path(f.suggestions, c, "suggestions.json"), format_suggestions(corpus, result));
  return kExitOk;
}

// Documents of `corpus` listed in the scores file, in corpus order.
Corpus restrict_to_scored(const Corpus& corpus, const std::string& scores_path) {
  const auto rows = csv::parse(read_file(scores_path));
  std::unordered_set<std::string> ids;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!rows[i].empty()) ids.insert(rows[i].front());
  }
  Corpus out;
  out.split_seed = corpus.split_seed;
  for (const auto& d : corpus.documents) {
    if (ids.count(d.id)) out.documents.push_back(d);
  }
  return out;
}

int cmd_evaluate(const CLI::App& app, const Flags& f) {
  const PipelineConfig c = resolve_config(app, f);
  const BiasLexicon lexicon = load_lexicon(require(c.lexicon, "lexicon"));
  const std::string scores_path = require(f.scores, "scores");
  const Corpus corpus = restrict_to_scored(load_corpus_auto(require(c.corpus, "corpus")), scores_path);
  const auto scores = import_scores(scores_path, corpus);

  std::optional<std::vector<LabelVector>> truth;
  const bool labelled = !corpus.empty() && std::all_of(corpus.documents.begin(), corpus.documents.end(),
                                                       [](const Document& d) { return d.labels.has_value(); });
  if (labelled) {
    truth = labels_by_id(corpus, corpus);
  } else if (!f.reference_corpus.empty()) {
    truth = labels_by_id(corpus, load_corpus_auto(require(f.reference_corpus, "reference corpus")));
  }

  const SubgroupAssignment assignment =
      c.assignment ? load_assignment(require(*c.assignment, "assignment")) : assign_from_lexicon(corpus, lexicon);
  const EvaluationReport report =
      evaluate(corpus, scores, truth, lexicon, assignment, {c.threshold, c.p, c.w, c.pairs});
  if (report.bias_auc) {
    for (const auto& w : report.bias_auc->warnings) std::cerr << "warning: " << w << "\n";
  }
  for (const auto& w : report.disparate_impact.warnings) std::cerr << "warning: " << w << "\n";
  write_file_atomic(output_path(f.out, c, "report.json"), format_report(report));
  return kExitOk;
}

int cmd_run(const CLI::App& app, const Flags& f) {
  const RunManifest m = run_pipeline(resolve_config(app, f));
  for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& s : m.stages) {
    std::cerr << s.name << ": " << s.documents_in << " -> " << s.documents_out << " (" << s.wall_clock_ms << " ms)\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect, mitigate and measure identity bias in text corpora"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Flags f;
  auto* train = app.add_subcommand("train", "train the TF-IDF logistic regression detector");
  auto* detect = app.add_subcommand("detect", "score a corpus with a trained model");
  auto* tag = app.add_subcommand("tag", "tag lexicon spans and write the subgroup assignment");
  auto* mitigate = app.add_subcommand("mitigate", "rewrite flagged documents");
  auto* evaluate = app.add_subcommand("evaluate", "F1, bias AUC and disparate impact for a scored corpus");
  auto* run = app.add_subcommand("run", "full pipeline");
  for (auto* sub : {train, detect, tag, mitigate, evaluate, run}) add_common(sub, f);

  train->add_option("--out", f.out, "model JSON (default <out-dir>/model.json)");
  detect->add_option("--out", f.out, "scores CSV (default <out-dir>/scores.csv)");
  tag->add_option("--out", f.out, "assignment CSV (default <out-dir>/assignment.csv)");
  tag->add_option("--tags", f.tags, "also write the spans as JSON");
  mitigate->add_option("--out", f.out, "rewritten corpus CSV (default <out-dir>/rewritten.csv)");
  mitigate->add_option("--suggestions", f.suggestions, "suggestions JSON (default <out-dir>/suggestions.json)");
  mitigate->add_option("--scores", f.scores, "use these scores instead of running the model");
  evaluate->add_option("--scores", f.scores, "scores CSV")->required();
  evaluate->add_option("--out", f.out, "report JSON (default <out-dir>/report.json)");
  evaluate->add_option("--reference-corpus", f.reference_corpus, "labelled corpus supplying truth by id");
  for (auto* sub : {detect, tag, mitigate}) {
    sub->add_flag("--whole-corpus", f.whole_corpus, "ignore train_fraction and use every document");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) return cmd_train(*train, f);
    if (*detect) return cmd_detect(*detect, f);
    if (*tag) return cmd_tag(*tag, f);
    if (*mitigate) return cmd_mitigate(*mitigate, f);
    if (*evaluate) return cmd_evaluate(*evaluate, f);
    if (*run) return cmd_run(*run, f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitInternal;
}
