#include "fairtext/pipeline.h"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "fairtext/csv.h"
#include "fairtext/error.h"
#include "fairtext/io.h"

namespace fairtext {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

std::string pairs_to_string(const std::vector<GroupPair>& pairs) {
  std::string out;
  for (const auto& [u, p] : pairs) {
    if (!out.empty()) out += ",";
    out += u + ":" + p;
  }
  return out;
}

bool has_label_header(const std::string& path) {
  const std::string content = read_file(path);
  const std::size_t nl = content.find('\n');
  const auto rows = csv::parse(std::string_view(content).substr(0, nl == std::string::npos ? content.size() : nl));
  if (rows.empty()) return false;
  for (auto name : kLabelNames) {
    if (std::find(rows.front().begin(), rows.front().end(), name) == rows.front().end()) return false;
  }
  return true;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ValidationError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const OutOfVocabulary*>(&e)) return kExitData;
  return kExitInternal;
}

PipelineConfig parse_config(std::string_view json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(j,
             {"corpus", "lexicon", "embeddings", "embeddings_format", "embeddings_limit", "model", "assignment",
              "out_dir", "detector", "mitigation", "threshold", "pairs", "metrics", "seed", "train_fraction"},
             "");
  PipelineConfig c;
  try {
    auto path = [&](const char* key) { return resolve(base_dir, j.at(key).get<std::string>()); };
    if (j.contains("corpus")) c.corpus = path("corpus");
    if (j.contains("lexicon")) c.lexicon = path("lexicon");
    if (j.contains("embeddings")) c.embeddings = path("embeddings");
    if (j.contains("embeddings_format")) {
      c.embeddings_format = parse_embedding_format(j["embeddings_format"].get<std::string>());
    }
    if (j.contains("embeddings_limit") && !j["embeddings_limit"].is_null()) {
      c.embeddings_limit = j["embeddings_limit"].get<std::size_t>();
    }
    if (j.contains("model") && !j["model"].is_null()) c.model = path("model");
    if (j.contains("assignment") && !j["assignment"].is_null()) c.assignment = path("assignment");
    if (j.contains("out_dir")) c.out_dir = path("out_dir");
    if (j.contains("threshold")) c.threshold = j["threshold"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("train_fraction") && !j["train_fraction"].is_null()) {
      c.train_fraction = j["train_fraction"].get<double>();
    }
    if (j.contains("pairs")) {
      const auto& p = j["pairs"];
      if (p.is_string()) {
        c.pairs = parse_pairs(p.get<std::string>());
      } else {
        c.pairs.clear();
        for (const auto& item : p) {
          if (item.is_string()) {
            const auto one = parse_pairs(item.get<std::string>());
            c.pairs.insert(c.pairs.end(), one.begin(), one.end());
          } else if (item.is_array() && item.size() == 2) {
            c.pairs.push_back(item.get<GroupPair>());
          } else {
            throw ConfigError("config: each pair must be \"u:p\" or [u, p]");
          }
        }
      }
    }
    if (j.contains("detector")) {
      const auto& d = j["detector"];
      check_keys(d, {"learning_rate", "l2_penalty", "epochs", "batch_size", "min_df", "max_features"}, "detector.");
      auto& hp = c.detector.hyperparams;
      hp.learning_rate = d.value("learning_rate", hp.learning_rate);
      hp.l2_penalty = d.value("l2_penalty", hp.l2_penalty);
      hp.epochs = d.value("epochs", hp.epochs);
      hp.batch_size = d.value("batch_size", hp.batch_size);
      c.detector.min_df = d.value("min_df", c.detector.min_df);
      if (d.contains("max_features") && !d["max_features"].is_null()) {
        c.detector.max_features = d["max_features"].get<std::size_t>();
      }
    }
    if (j.contains("mitigation")) {
      const auto& m = j["mitigation"];
      check_keys(m, {"k_min", "k_max", "min_similarity"}, "mitigation.");
      c.policy.k_min = m.value("k_min", c.policy.k_min);
      c.policy.k_max = m.value("k_max", c.policy.k_max);
      c.policy.min_similarity = m.value("min_similarity", c.policy.min_similarity);
    }
    if (j.contains("metrics")) {
      const auto& m = j["metrics"];
      check_keys(m, {"p", "w"}, "metrics.");
      c.p = m.value("p", c.p);
      c.w = m.value("w", c.w);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.detector.hyperparams.seed = c.seed;
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, fs::path(path).parent_path().string());
}

std::string format_config(const PipelineConfig& c) {
  const auto& hp = c.detector.hyperparams;
  json j = {
      {"corpus", c.corpus},
      {"lexicon", c.lexicon},
      {"embeddings", c.embeddings},
      {"embeddings_format", c.embeddings_format == EmbeddingFormat::kText ? "text" : "binary"},
      {"embeddings_limit", c.embeddings_limit ? json(*c.embeddings_limit) : json()},
      {"model", c.model ? json(*c.model) : json()},
      {"assignment", c.assignment ? json(*c.assignment) : json()},
      {"out_dir", c.out_dir},
      {"detector",
       {{"learning_rate", hp.learning_rate},
        {"l2_penalty", hp.l2_penalty},
        {"epochs", hp.epochs},
        {"batch_size", hp.batch_size},
        {"min_df", c.detector.min_df},
        {"max_features", c.detector.max_features ? json(*c.detector.max_features) : json()}}},
      {"mitigation",
       {{"k_min", c.policy.k_min}, {"k_max", c.policy.k_max}, {"min_similarity", c.policy.min_similarity}}},
      {"threshold", c.threshold},
      {"pairs", pairs_to_string(c.pairs)},
      {"metrics", {{"p", c.p}, {"w", c.w}}},
      {"seed", c.seed},
      {"train_fraction", c.train_fraction ? json(*c.train_fraction) : json()},
  };
  return j.dump(2) + "\n";
}

Corpus load_corpus_auto(const std::string& path) { return load_corpus(path, has_label_header(path)); }

Detector fit_detector(const Corpus& train_corpus, const DetectorSettings& settings) {
  Vectorizer vec = fit_vectorizer(train_corpus, settings.min_df, settings.max_features);
  LinearModel model = train(vec, train_corpus, settings.hyperparams);
  return {std::move(vec), std::move(model)};
}

std::pair<Corpus, Corpus> training_and_evaluation(const Corpus& corpus, const PipelineConfig& config) {
  if (config.train_fraction) return split_corpus(corpus, *config.train_fraction, config.seed);
  return {corpus, corpus};
}

std::vector<LabelVector> labels_by_id(const Corpus& target, const Corpus& reference) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : reference.documents) by_id.emplace(d.id, &d);
  std::vector<LabelVector> out;
  out.reserve(target.size());
  for (const auto& d : target.documents) {
    auto it = by_id.find(d.id);
    if (it == by_id.end()) throw DataError("no reference document for id '" + d.id + "'");
    if (!it->second->labels) throw DataError("reference document '" + d.id + "' has no labels");
    out.push_back(*it->second->labels);
  }
  return out;
}

std::string format_assignment(const Corpus& corpus, const SubgroupAssignment& assignment) {
  std::ostringstream out;
  csv::write_row(out, {"id", "subgroups"});
  for (const auto& d : corpus.documents) {
    const auto& gs = assignment.of(d.id);
    if (gs.empty()) continue;
    std::string joined;
    for (const auto& g : gs) {
      if (!joined.empty()) joined += ";";
      joined += g;
    }
    csv::write_row(out, {d.id, joined});
  }
  return out.str();
}

std::string format_tags(const Corpus& corpus, const BiasLexicon& lexicon) {
  json docs = json::array();
  for (const auto& d : corpus.documents) {
    json spans = json::array();
    for (const auto& s : tag_spans(d, lexicon)) {
      spans.push_back({{"start", s.start},
                       {"end", s.end},
                       {"matched_term", s.matched_term},
                       {"category", category_name(s.category)},
                       {"subgroup", s.subgroup ? json(*s.subgroup) : json()}});
    }
    docs.push_back({{"id", d.id}, {"spans", spans}});
  }
  return docs.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

std::string format_comparison_report(const EvaluationReport& before, const EvaluationReport& after) {
  json j = {
      {"document_level",
       json::parse(format_comparison(compare_reports(before.disparate_impact, after.disparate_impact)))},
      {"word_level", json::parse(format_comparison(compare_reports(before.word_level_disparate_impact,
                                                                   after.word_level_disparate_impact)))},
  };
  return j.dump(2) + "\n";
}

std::string format_manifest(const RunManifest& m) {
  json stages = json::array();
  for (const auto& s : m.stages) {
    stages.push_back({{"name", s.name},
                      {"documents_in", s.documents_in},
                      {"documents_out", s.documents_out},
                      {"wall_clock_ms", s.wall_clock_ms}});
  }
  json j = {
      {"tool", "fairtext"},
      {"version", kVersion},
      {"config", m.config_json.empty() ? json() : json::parse(m.config_json)},
      {"lexicon_version", m.lexicon_version},
      {"status", m.status},
      {"failed_stage", m.failed_stage ? json(*m.failed_stage) : json()},
      {"error", m.error ? json(*m.error) : json()},
      {"stages", stages},
      {"warnings", m.warnings},
      {"notes", m.notes},
      {"started_at", m.started_at},
      {"finished_at", m.finished_at},
  };
  return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

RunManifest run_pipeline(const PipelineConfig& config) {
  RunManifest manifest;
  manifest.started_at = utc_now();
  manifest.config_json = format_config(config);
  manifest.notes.push_back(
      "after-mitigation scores come from the same detector re-run on the rewritten text; "
      "F1 and bias AUC after mitigation are measured against the original labels");
  manifest.notes.push_back("F1 is reported both micro- and macro-averaged over the six labels");

  const fs::path out_dir(config.out_dir);
  auto artifact = [&](const char* name) { return (out_dir / name).string(); };
  auto write_manifest = [&] {
    manifest.finished_at = utc_now();
    write_file_atomic(artifact("manifest.json"), format_manifest(manifest));
  };

  std::string current = "config";
  auto stage = [&](const std::string& name, std::size_t in, const std::function<std::size_t()>& body) {
    current = name;
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t out = body();
    const auto t1 = std::chrono::steady_clock::now();
    manifest.stages.push_back({name, in, out, std::chrono::duration<double, std::milli>(t1 - t0).count()});
  };

  try {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + config.out_dir + "'");

    std::vector<std::pair<const char*, std::string>> required = {
        {"corpus", config.corpus}, {"lexicon", config.lexicon}, {"embeddings", config.embeddings}};
    if (config.model) required.emplace_back("model", *config.model);
    if (config.assignment) required.emplace_back("assignment", *config.assignment);
    for (const auto& [what, path] : required) {
      if (path.empty() || !fs::exists(path)) throw ConfigError(std::string(what) + " path '" + path + "' does not exist");
    }
    if (!(config.threshold > 0.0 && config.threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
    config.policy.validate();

    Corpus corpus, train_corpus, eval_corpus;
    BiasLexicon lexicon;
    EmbeddingStore store;
    stage("load", 0, [&] {
      corpus = load_corpus_auto(config.corpus);
      lexicon = load_lexicon(config.lexicon);
      store = load_embeddings(config.embeddings, config.embeddings_format, config.embeddings_limit);
      for (const auto& w : store.warnings()) manifest.warnings.push_back("embeddings: " + w);
      manifest.lexicon_version = lexicon.version();
      std::tie(train_corpus, eval_corpus) = training_and_evaluation(corpus, config);
      return corpus.size();
    });

    Detector detector;
    stage("train", train_corpus.size(), [&] {
      if (config.model) {
        auto [vec, model] = load_model(*config.model);
        detector = {std::move(vec), std::move(model)};
        return std::size_t{0};
      }
      detector = fit_detector(train_corpus, config.detector);
      save_model(artifact("model.json"), detector.vectorizer, detector.model);
      return train_corpus.size();
    });

    std::vector<LabelScores> before_scores;
    stage("detect", eval_corpus.size(), [&] {
      before_scores = predict_corpus(detector.model, detector.vectorizer, eval_corpus);
      export_scores(artifact("scores_before.csv"), eval_corpus, before_scores);
      std::size_t flagged = 0;
      for (const auto& s : before_scores) flagged += is_biased(s, config.threshold);
      return flagged;
    });

    SubgroupAssignment assignment;
    stage("tag", eval_corpus.size(), [&] {
      if (config.assignment) {
        assignment = load_assignment(*config.assignment);
      } else {
        assignment = assign_from_lexicon(eval_corpus, lexicon);
      }
      write_file_atomic(artifact("assignment.csv"), format_assignment(eval_corpus, assignment));
      return assignment.groups.size();
    });

    MitigationResult mitigated;
    stage("mitigate", eval_corpus.size(), [&] {
      mitigated = mitigate_corpus(eval_corpus, before_scores, lexicon, store, config.policy, config.threshold);
      write_file_atomic(artifact("rewritten.csv"), format_corpus(mitigated.corpus, false));
      write_file_atomic(artifact("suggestions.json"), format_suggestions(eval_corpus, mitigated));
      std::size_t rewritten = 0;
      for (std::size_t i = 0; i < eval_corpus.size(); ++i) {
        rewritten += mitigated.corpus.documents[i].text != eval_corpus.documents[i].text;
      }
      return rewritten;
    });

    std::vector<LabelScores> after_scores;
    stage("redetect", mitigated.corpus.size(), [&] {
      after_scores = predict_corpus(detector.model, detector.vectorizer, mitigated.corpus);
      export_scores(artifact("scores_after.csv"), mitigated.corpus, after_scores);
      std::size_t flagged = 0;
      for (const auto& s : after_scores) flagged += is_biased(s, config.threshold);
      return flagged;
    });

    stage("evaluate", eval_corpus.size(), [&] {
      EvaluationOptions opts{config.threshold, config.p, config.w, config.pairs};
      std::optional<std::vector<LabelVector>> truth;
      const bool labelled = !eval_corpus.empty() && std::all_of(eval_corpus.documents.begin(), eval_corpus.documents.end(),
                                                                [](const Document& d) { return d.labels.has_value(); });
      if (labelled) truth = labels_by_id(eval_corpus, eval_corpus);
      const auto before = evaluate(eval_corpus, before_scores, truth, lexicon, assignment, opts);
      const auto after = evaluate(mitigated.corpus, after_scores, truth, lexicon, assignment, opts);
      for (const auto* r : {&before, &after}) {
        const char* tag = r == &before ? "before: " : "after: ";
        if (r->bias_auc) {
          for (const auto& w : r->bias_auc->warnings) manifest.warnings.push_back(std::string(tag) + w);
        }
        for (const auto& w : r->disparate_impact.warnings) manifest.warnings.push_back(std::string(tag) + w);
      }
      write_file_atomic(artifact("report_before.json"), format_report(before));
      write_file_atomic(artifact("report_after.json"), format_report(after));
      write_file_atomic(artifact("comparison.json"), format_comparison_report(before, after));
      return eval_corpus.size();
    });

    manifest.status = "ok";
    write_manifest();
  } catch (const std::exception& e) {
    manifest.status = "failed";
    manifest.failed_stage = current;
    manifest.error = e.what();
    try {
      write_manifest();
    } catch (...) {
    }
    throw;
  }
  return manifest;
}

}  // namespace fairtext
