#include "fairtext/detector.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "fairtext/csv.h"
#include "fairtext/error.h"
#include "fairtext/io.h"
#include "fairtext/rng.h"
#include "fairtext/utf8.h"

namespace fairtext {
namespace {

constexpr int kModelFormatVersion = 1;

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

std::vector<std::string> lowered_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(text)) out.push_back(utf8::to_lower(t.text));
  return out;
}

void require_labels(const Corpus& corpus) {
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!corpus.documents[i].labels) {
      throw ValidationError("training document '" + corpus.documents[i].id + "' has no labels");
    }
  }
}

}  // namespace

double SparseVector::dot(const std::vector<double>& dense) const {
  double s = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) s += values[k] * dense[indices[k]];
  return s;
}

double SparseVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

Vectorizer::Vectorizer(std::vector<std::string> terms, std::vector<double> idf, int min_df,
                       std::optional<std::size_t> max_features)
    : terms_(std::move(terms)), idf_(std::move(idf)), min_df_(min_df), max_features_(max_features) {
  if (terms_.size() != idf_.size()) throw ValidationError("vocabulary and idf sizes differ");
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!std::isfinite(idf_[i]) || idf_[i] <= 0.0) {
      throw ValidationError("idf for '" + terms_[i] + "' is not finite and positive");
    }
    if (!index_.emplace(terms_[i], static_cast<std::uint32_t>(i)).second) {
      throw ValidationError("duplicate vocabulary term '" + terms_[i] + "'");
    }
  }
}

std::optional<std::uint32_t> Vectorizer::index_of(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SparseVector Vectorizer::transform(std::string_view text) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& tok : lowered_tokens(text)) {
    if (auto idx = index_of(tok)) counts[*idx] += 1.0;
  }
  SparseVector v;
  v.indices.reserve(counts.size());
  v.values.reserve(counts.size());
  for (const auto& [idx, tf] : counts) {
    v.indices.push_back(idx);
    v.values.push_back(tf * idf_[idx]);
  }
  const double n = v.norm();
  if (n > 0.0) {
    for (double& x : v.values) x /= n;
  }
  return v;
}

Vectorizer fit_vectorizer(const Corpus& corpus, int min_df, std::optional<std::size_t> max_features) {
  if (corpus.empty()) throw ValidationError("cannot fit a vectorizer on an empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus.documents) {
    std::vector<std::string> toks = lowered_tokens(doc.text);
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    for (auto& t : toks) ++df[std::move(t)];
  }

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [term, count] : df) {
    if (count >= static_cast<std::size_t>(std::max(min_df, 1))) kept.emplace_back(term, count);
  }
  if (max_features && kept.size() > *max_features) {
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    kept.resize(*max_features);
    std::sort(kept.begin(), kept.end());
  }
  if (kept.empty()) throw ValidationError("min_df filtered out every term");

  const double n = static_cast<double>(corpus.size());
  std::vector<std::string> terms;
  std::vector<double> idf;
  terms.reserve(kept.size());
  idf.reserve(kept.size());
  for (auto& [term, count] : kept) {
    idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    terms.push_back(std::move(term));
  }
  return Vectorizer(std::move(terms), std::move(idf), min_df, max_features);
}

SparseVector transform(const Vectorizer& vectorizer, const Document& doc) {
  return vectorizer.transform(doc.text);
}

LinearModel LinearModel::zeros(std::size_t dimension, const Hyperparams& hp) {
  LinearModel m;
  for (auto& w : m.weights) w.assign(dimension, 0.0);
  m.hyperparams = hp;
  return m;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double objective(const LinearModel& model, const std::vector<SparseVector>& features,
                 const std::vector<LabelVector>& labels, double l2_penalty) {
  return objective_gradient(model, features, labels, l2_penalty).loss;
}

LossGradient objective_gradient(const LinearModel& model, const std::vector<SparseVector>& features,
                                const std::vector<LabelVector>& labels, double l2_penalty) {
  if (features.size() != labels.size() || features.empty()) {
    throw ValidationError("objective needs one label vector per feature vector");
  }
  const double inv_n = 1.0 / static_cast<double>(features.size());
  LossGradient out;
  out.gradient = LinearModel::zeros(model.dimension(), model.hyperparams);
  for (std::size_t j = 0; j < kNumLabels; ++j) {
    const auto& w = model.weights[j];
    auto& gw = out.gradient.weights[j];
    double data_loss = 0.0;
    double gb = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      const double z = features[i].dot(w) + model.biases[j];
      const double y = labels[i][j];
      // -y log p - (1-y) log(1-p) == softplus(z) - y z
      data_loss += softplus(z) - y * z;
      const double r = sigmoid(z) - y;
      gb += r;
      const auto& x = features[i];
      for (std::size_t k = 0; k < x.nnz(); ++k) gw[x.indices[k]] += r * x.values[k] * inv_n;
    }
    double sq = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      sq += w[k] * w[k];
      gw[k] += l2_penalty * w[k];
    }
    out.gradient.biases[j] = gb * inv_n;
    out.loss += data_loss * inv_n + 0.5 * l2_penalty * sq;
  }
  return out;
}

LinearModel train(const Vectorizer& vectorizer, const Corpus& corpus, const Hyperparams& hp,
                  TrainingTrace* trace) {
  require_labels(corpus);
  if (corpus.empty()) throw ValidationError("cannot train on an empty corpus");
  if (hp.epochs < 0 || hp.batch_size < 1 || !(hp.learning_rate > 0.0) || !(hp.l2_penalty >= 0.0)) {
    throw ValidationError("invalid hyperparameters");
  }

  std::vector<SparseVector> features;
  std::vector<LabelVector> labels;
  features.reserve(corpus.size());
  for (const auto& doc : corpus.documents) {
    features.push_back(vectorizer.transform(doc.text));
    labels.push_back(*doc.labels);
  }

  const std::size_t dim = vectorizer.size();
  LinearModel model = LinearModel::zeros(dim, hp);
  if (trace) {
    trace->initial_loss = objective(model, features, labels, hp.l2_penalty);
    trace->epoch_losses.clear();
  }

  // Weights are stored as scale * raw so the L2 shrink of every step is O(1).
  std::array<std::vector<double>, kNumLabels> raw;
  std::array<double, kNumLabels> scale;
  for (std::size_t j = 0; j < kNumLabels; ++j) {
    raw[j].assign(dim, 0.0);
    scale[j] = 1.0;
  }
  auto materialize = [&] {
    for (std::size_t j = 0; j < kNumLabels; ++j) {
      for (std::size_t k = 0; k < dim; ++k) model.weights[j][k] = scale[j] * raw[j][k];
    }
  };

  std::vector<std::size_t> order(features.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(hp.seed);
  const std::size_t batch = static_cast<std::size_t>(hp.batch_size);
  const double shrink = 1.0 - hp.learning_rate * hp.l2_penalty;
  if (!(shrink > 0.0)) throw ValidationError("learning_rate * l2_penalty must be below 1");

  std::vector<double> residual(batch);
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    fisher_yates(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double step = hp.learning_rate / static_cast<double>(end - start);
      for (std::size_t j = 0; j < kNumLabels; ++j) {
        // Residuals use the parameters from before this step.
        double gb = 0.0;
        for (std::size_t b = start; b < end; ++b) {
          const std::size_t i = order[b];
          const double z = scale[j] * features[i].dot(raw[j]) + model.biases[j];
          residual[b - start] = sigmoid(z) - labels[i][j];
          gb += residual[b - start];
        }
        scale[j] *= shrink;
        for (std::size_t b = start; b < end; ++b) {
          const auto& x = features[order[b]];
          const double coef = step * residual[b - start] / scale[j];
          for (std::size_t k = 0; k < x.nnz(); ++k) raw[j][x.indices[k]] -= coef * x.values[k];
        }
        model.biases[j] -= step * gb;
        if (scale[j] < 1e-9) {
          for (double& v : raw[j]) v *= scale[j];
          scale[j] = 1.0;
        }
      }
    }
    materialize();
    const double loss = objective(model, features, labels, hp.l2_penalty);
    if (!std::isfinite(loss)) {
      throw Error("non-finite training loss at epoch " + std::to_string(epoch));
    }
    if (trace) trace->epoch_losses.push_back(loss);
  }
  materialize();
  return model;
}

LabelScores predict(const LinearModel& model, const Vectorizer& vectorizer, const Document& doc) {
  if (model.dimension() != vectorizer.size()) {
    throw ValidationError("model dimension " + std::to_string(model.dimension()) +
                          " does not match vocabulary size " + std::to_string(vectorizer.size()));
  }
  static const double kLow = std::numeric_limits<double>::min();
  static const double kHigh = std::nextafter(1.0, 0.0);
  const SparseVector x = vectorizer.transform(doc.text);
  LabelScores s{};
  for (std::size_t j = 0; j < kNumLabels; ++j) {
    s[j] = std::clamp(sigmoid(x.dot(model.weights[j]) + model.biases[j]), kLow, kHigh);
  }
  return s;
}

std::vector<LabelScores> predict_corpus(const LinearModel& model, const Vectorizer& vectorizer,
                                        const Corpus& corpus) {
  std::vector<LabelScores> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus.documents) out.push_back(predict(model, vectorizer, doc));
  return out;
}

bool is_biased(const LabelScores& scores, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must lie in (0, 1)");
  return std::any_of(scores.begin(), scores.end(), [threshold](double s) { return s >= threshold; });
}

std::string serialize_model(const Vectorizer& vectorizer, const LinearModel& model) {
  if (model.dimension() != vectorizer.size()) throw ValidationError("model/vectorizer size mismatch");
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["vocabulary"] = vectorizer.terms();
  j["idf"] = vectorizer.idf();
  j["min_df"] = vectorizer.min_df();
  j["max_features"] = vectorizer.max_features() ? nlohmann::json(*vectorizer.max_features()) : nlohmann::json();
  nlohmann::json weights = nlohmann::json::object();
  for (std::size_t k = 0; k < kNumLabels; ++k) weights[std::string(kLabelNames[k])] = model.weights[k];
  j["weights"] = std::move(weights);
  nlohmann::json biases = nlohmann::json::object();
  for (std::size_t k = 0; k < kNumLabels; ++k) biases[std::string(kLabelNames[k])] = model.biases[k];
  j["biases"] = std::move(biases);
  const auto& hp = model.hyperparams;
  j["hyperparams"] = {{"learning_rate", hp.learning_rate},
                      {"l2_penalty", hp.l2_penalty},
                      {"epochs", hp.epochs},
                      {"batch_size", hp.batch_size},
                      {"seed", hp.seed}};
  return j.dump() + "\n";
}

std::pair<Vectorizer, LinearModel> deserialize_model(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model: ") + e.what(), e.byte);
  }
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion) {
      throw DataError("unsupported model format version");
    }
    std::optional<std::size_t> max_features;
    if (!j.at("max_features").is_null()) max_features = j["max_features"].get<std::size_t>();
    Vectorizer vec(j.at("vocabulary").get<std::vector<std::string>>(), j.at("idf").get<std::vector<double>>(),
                   j.at("min_df").get<int>(), max_features);
    LinearModel model;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      const std::string name(kLabelNames[k]);
      model.weights[k] = j.at("weights").at(name).get<std::vector<double>>();
      model.biases[k] = j.at("biases").at(name).get<double>();
      if (model.weights[k].size() != vec.size()) throw DataError("weight vector '" + name + "' has wrong length");
      for (double w : model.weights[k]) {
        if (!std::isfinite(w)) throw DataError("non-finite weight in '" + name + "'");
      }
      if (!std::isfinite(model.biases[k])) throw DataError("non-finite bias in '" + name + "'");
    }
    const auto& hp = j.at("hyperparams");
    model.hyperparams.learning_rate = hp.at("learning_rate").get<double>();
    model.hyperparams.l2_penalty = hp.at("l2_penalty").get<double>();
    model.hyperparams.epochs = hp.at("epochs").get<int>();
    model.hyperparams.batch_size = hp.at("batch_size").get<int>();
    model.hyperparams.seed = hp.at("seed").get<std::uint64_t>();
    return {std::move(vec), std::move(model)};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  } catch (const ValidationError& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

void save_model(const std::string& path, const Vectorizer& vectorizer, const LinearModel& model) {
  write_file_atomic(path, serialize_model(vectorizer, model));
}

std::pair<Vectorizer, LinearModel> load_model(const std::string& path) {
  return deserialize_model(read_file(path));
}

std::string format_scores(const Corpus& corpus, const std::vector<LabelScores>& scores) {
  if (scores.size() != corpus.size()) throw ValidationError("one score vector per document required");
  std::ostringstream out;
  csv::Row header = {"id"};
  for (auto name : kLabelNames) header.emplace_back(name);
  csv::write_row(out, header);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    csv::Row row = {corpus.documents[i].id};
    for (double s : scores[i]) row.push_back(format_double(s));
    csv::write_row(out, row);
  }
  return out.str();
}

std::vector<LabelScores> parse_scores(std::string_view content, const Corpus& corpus) {
  std::vector<csv::Row> rows = csv::parse(content);
  if (rows.empty()) throw SchemaError("id");
  const csv::Row& header = rows.front();
  auto col = [&](std::string_view name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError(std::string(name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = col("id");
  std::array<std::size_t, kNumLabels> cols{};
  for (std::size_t j = 0; j < kNumLabels; ++j) cols[j] = col(kLabelNames[j]);

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < corpus.size(); ++i) position.emplace(corpus.documents[i].id, i);

  std::vector<LabelScores> out(corpus.size());
  std::vector<char> filled(corpus.size(), 0);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const csv::Row& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) throw RowError("wrong number of fields", r - 1);
    auto it = position.find(row[id_col]);
    if (it == position.end()) throw RowError("unknown id '" + row[id_col] + "'", r - 1);
    if (filled[it->second]) throw RowError("duplicate id '" + row[id_col] + "'", r - 1);
    LabelScores s{};
    for (std::size_t j = 0; j < kNumLabels; ++j) {
      double v = 0.0;
      try {
        v = parse_double(row[cols[j]]);
      } catch (const DataError&) {
        throw RowError("score '" + std::string(kLabelNames[j]) + "' is not a number", r - 1);
      }
      if (!(v >= 0.0 && v <= 1.0)) {
        throw RowError("score '" + std::string(kLabelNames[j]) + "' outside [0, 1]", r - 1);
      }
      s[j] = v;
    }
    out[it->second] = s;
    filled[it->second] = 1;
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!filled[i]) throw DataError("missing scores for id '" + corpus.documents[i].id + "'");
  }
  return out;
}

void export_scores(const std::string& path, const Corpus& corpus, const std::vector<LabelScores>& scores) {
  write_file_atomic(path, format_scores(corpus, scores));
}

std::vector<LabelScores> import_scores(const std::string& path, const Corpus& corpus) {
  return parse_scores(read_file(path), corpus);
}

}  // namespace fairtext
