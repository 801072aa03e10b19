#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fairtext/ingestion.h"
#include "fairtext/labels.h"

namespace fairtext {

struct SparseVector {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  double dot(const std::vector<double>& dense) const;
  double norm() const;
};

class Vectorizer {
 public:
  Vectorizer() = default;
  // `terms` in column order. Throws ValidationError if sizes differ, a term
  // repeats, or an idf is not finite and positive.
  Vectorizer(std::vector<std::string> terms, std::vector<double> idf, int min_df,
             std::optional<std::size_t> max_features);

  std::size_t size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  int min_df() const { return min_df_; }
  std::optional<std::size_t> max_features() const { return max_features_; }
  std::optional<std::uint32_t> index_of(std::string_view term) const;

  // tf * idf over lowercased tokens, L2-normalized. Out-of-vocabulary tokens
  // are dropped; a document with none left maps to the zero vector.
  SparseVector transform(std::string_view text) const;

 private:
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::uint32_t> index_;
  int min_df_ = 1;
  std::optional<std::size_t> max_features_;
};

// Vocabulary: lowercased tokens with document frequency >= min_df, keeping
// the max_features most frequent (ties broken lexicographically). Columns
// are assigned in lexicographic term order.
// idf(t) = ln((1 + N) / (1 + df(t))) + 1.
Vectorizer fit_vectorizer(const Corpus& corpus, int min_df,
                          std::optional<std::size_t> max_features = std::nullopt);

SparseVector transform(const Vectorizer& vectorizer, const Document& doc);

// The default step is 1/L for the mean log-loss over L2-normalized features
// plus a bias (L = 0.5).
struct Hyperparams {
  double learning_rate = 2.0;
  double l2_penalty = 0.0001;
  int epochs = 10;
  int batch_size = 16;
  std::uint64_t seed = 42;

  bool operator==(const Hyperparams&) const = default;
};

using LabelScores = std::array<double, kNumLabels>;

// One binary logistic regression per label.
struct LinearModel {
  std::array<std::vector<double>, kNumLabels> weights;
  std::array<double, kNumLabels> biases{};
  Hyperparams hyperparams;

  static LinearModel zeros(std::size_t dimension, const Hyperparams& hp = {});
  std::size_t dimension() const { return weights[0].size(); }
};

// Objective summed over labels:
//   sum_j [ mean_i logloss(y_ij, sigmoid(w_j . x_i + b_j)) + l2/2 * |w_j|^2 ]
// Biases are not penalized. The gradient has the same shape as the model.
struct LossGradient {
  double loss = 0.0;
  LinearModel gradient;
};

double objective(const LinearModel& model, const std::vector<SparseVector>& features,
                 const std::vector<LabelVector>& labels, double l2_penalty);
LossGradient objective_gradient(const LinearModel& model, const std::vector<SparseVector>& features,
                                const std::vector<LabelVector>& labels, double l2_penalty);

struct TrainingTrace {
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;
};

// Deterministic mini-batch gradient descent; the only randomness is the
// per-epoch document shuffle seeded from hyperparams.seed. Throws
// ValidationError for unlabeled documents and Error for a non-finite loss.
LinearModel train(const Vectorizer& vectorizer, const Corpus& corpus, const Hyperparams& hyperparams,
                  TrainingTrace* trace = nullptr);

double sigmoid(double z);

// Scores are clamped into the open interval (0, 1).
LabelScores predict(const LinearModel& model, const Vectorizer& vectorizer, const Document& doc);
std::vector<LabelScores> predict_corpus(const LinearModel& model, const Vectorizer& vectorizer,
                                        const Corpus& corpus);

inline constexpr double kDefaultThreshold = 0.5;

// True iff any score >= threshold. Throws ValidationError unless threshold
// lies in (0, 1).
bool is_biased(const LabelScores& scores, double threshold = kDefaultThreshold);

// Model persistence: one JSON document with the vocabulary, idf, weights,
// biases, hyperparameters and a format version.
std::string serialize_model(const Vectorizer& vectorizer, const LinearModel& model);
std::pair<Vectorizer, LinearModel> deserialize_model(std::string_view json_text);
void save_model(const std::string& path, const Vectorizer& vectorizer, const LinearModel& model);
std::pair<Vectorizer, LinearModel> load_model(const std::string& path);

// Score files: `id,toxic,...,identity_hate`, one row per corpus document in
// corpus order. Values are written in shortest round-trip form.
std::string format_scores(const Corpus& corpus, const std::vector<LabelScores>& scores);
// Returns scores aligned with corpus order. Throws on unknown, missing or
// duplicate ids and on values outside [0, 1].
std::vector<LabelScores> parse_scores(std::string_view content, const Corpus& corpus);
void export_scores(const std::string& path, const Corpus& corpus, const std::vector<LabelScores>& scores);
std::vector<LabelScores> import_scores(const std::string& path, const Corpus& corpus);

}  // namespace fairtext
