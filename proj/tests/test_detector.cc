#include <doctest.h>

#include <cmath>
#include <cstring>

#include "json.hpp"

#include "fairtext/detector.h"
#include "fairtext/error.h"
#include "fairtext/io.h"
#include "support.h"

using namespace fairtext;
using testing::corpus_of;
using testing::doc;

namespace {

Corpus labelled(const std::vector<std::pair<std::string, LabelVector>>& rows) {
  Corpus c;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    c.documents.push_back({"d" + std::to_string(i), rows[i].first, rows[i].second});
  }
  return c;
}

double weight_norm(const LinearModel& m) {
  double s = 0;
  for (const auto& w : m.weights) {
    for (double x : w) s += x * x;
  }
  return std::sqrt(s);
}

bool same_bits(const LabelScores& a, const LabelScores& b) { return std::memcmp(a.data(), b.data(), sizeof a) == 0; }

}  // namespace

TEST_CASE("fit_vectorizer: idf examples") {
  const auto v = fit_vectorizer(corpus_of({"the cat", "The dog"}), 1);
  CHECK(v.idf()[*v.index_of("the")] == 1.0);

  const auto v4 = fit_vectorizer(corpus_of({"rare common", "common", "common", "common"}), 1);
  CHECK(v4.idf()[*v4.index_of("rare")] == doctest::Approx(std::log(5.0 / 2.0) + 1.0).epsilon(1e-15));
  CHECK(v4.idf()[*v4.index_of("rare")] == doctest::Approx(1.9163).epsilon(1e-4));
}

TEST_CASE("fit_vectorizer: 100-doc fixture equals the counting table") {
  const Corpus c = load_corpus(testing::fixture("small_labelled.csv"), true);
  const auto v = fit_vectorizer(c, 1);
  const auto table = nlohmann::json::parse(testing::slurp(testing::fixture("small_labelled.idf.json")));
  REQUIRE(v.size() == table.size());
  std::size_t col = 0;
  for (const auto& [term, idf] : table.items()) {
    CHECK(v.terms()[col] == term);
    CHECK(v.idf()[col] == doctest::Approx(idf.get<double>()).epsilon(1e-14));
    ++col;
  }
}

TEST_CASE("fit_vectorizer: min_df, max_features, errors") {
  const Corpus c = corpus_of({"a b c", "a b", "a d", "e"});
  const auto v = fit_vectorizer(c, 2);
  CHECK(v.terms() == std::vector<std::string>{"a", "b"});
  // df: a=3, b=2, c=d=e=1; ties at df 1 keep the lexicographically smallest
  const auto top = fit_vectorizer(c, 1, 3);
  CHECK(top.terms() == std::vector<std::string>{"a", "b", "c"});
  CHECK(*top.max_features() == 3);
  CHECK_THROWS_AS(fit_vectorizer(Corpus{}, 1), ValidationError);
  CHECK_THROWS_AS(fit_vectorizer(c, 5), ValidationError);
  CHECK_THROWS_AS(Vectorizer({"a", "a"}, {1.0, 1.0}, 1, std::nullopt), ValidationError);
  CHECK_THROWS_AS(Vectorizer({"a"}, {0.0}, 1, std::nullopt), ValidationError);
  CHECK_THROWS_AS(Vectorizer({"a"}, {1.0, 2.0}, 1, std::nullopt), ValidationError);
}

TEST_CASE("transform") {
  const Vectorizer v({"apple", "banana", "cherry", "date", "elder"}, {1.0, 2.0, 1.5, 1.2, 3.0}, 1, std::nullopt);
  CHECK(v.transform("nothing here").nnz() == 0);
  CHECK(v.transform("").norm() == 0.0);

  const auto unit = v.transform("date DATE date");
  REQUIRE(unit.nnz() == 1);
  CHECK(unit.indices[0] == 3);
  CHECK(unit.values[0] == doctest::Approx(1.0).epsilon(1e-15));

  // tf: apple 2, cherry 1, elder 1 -> (2.0, 1.5, 3.0) / sqrt(4 + 2.25 + 9)
  const auto x = transform(v, doc("Apple, cherry and apple; elder!"));
  const double n = std::sqrt(15.25);
  CHECK(x.indices == std::vector<std::uint32_t>{0, 2, 4});
  CHECK(x.values[0] == doctest::Approx(2.0 / n).epsilon(1e-15));
  CHECK(x.values[1] == doctest::Approx(1.5 / n).epsilon(1e-15));
  CHECK(x.values[2] == doctest::Approx(3.0 / n).epsilon(1e-15));
  CHECK(x.norm() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("train: zero epochs leaves every score at 0.5") {
  const Corpus c = load_corpus(testing::fixture("small_labelled.csv"), true);
  const auto v = fit_vectorizer(c, 1);
  Hyperparams hp;
  hp.epochs = 0;
  const auto m = train(v, c, hp);
  for (const auto& s : predict_corpus(m, v, c)) {
    for (double x : s) CHECK(x == 0.5);
  }
}

TEST_CASE("train: separable two-document set") {
  const Corpus c = labelled({{"awful garbage", {1, 1, 1, 1, 1, 1}}, {"lovely day", {0, 0, 0, 0, 0, 0}}});
  const auto v = fit_vectorizer(c, 1);
  Hyperparams hp;
  hp.epochs = 200;
  hp.batch_size = 1;
  const auto m = train(v, c, hp);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto s = predict(m, v, c.documents[i]);
    for (std::size_t j = 0; j < kNumLabels; ++j) CHECK((s[j] >= 0.5) == ((*c.documents[i].labels)[j] == 1));
  }
}

TEST_CASE("train: loss decreases, deterministic, errors") {
  const Corpus c = load_corpus(testing::fixture("small_labelled.csv"), true);
  const auto v = fit_vectorizer(c, 1);
  TrainingTrace trace;
  const auto a = train(v, c, {}, &trace);
  REQUIRE(trace.epoch_losses.size() == 10);
  CHECK(std::isfinite(trace.epoch_losses.back()));
  CHECK(trace.epoch_losses.back() <= trace.initial_loss);

  const auto b = train(v, c, {});
  for (std::size_t j = 0; j < kNumLabels; ++j) {
    CHECK(std::memcmp(a.weights[j].data(), b.weights[j].data(), a.weights[j].size() * sizeof(double)) == 0);
    CHECK(std::memcmp(&a.biases[j], &b.biases[j], sizeof(double)) == 0);
  }
  Hyperparams other;
  other.seed = 7;
  CHECK(train(v, c, other).weights[0] != a.weights[0]);

  Corpus unlabeled = c;
  unlabeled.documents[5].labels.reset();
  CHECK_THROWS_AS(train(v, unlabeled, {}), ValidationError);
  Hyperparams bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(v, c, bad), ValidationError);
  bad = {};
  bad.learning_rate = 1e300;
  CHECK_THROWS_AS(train(v, c, bad), Error);
}

TEST_CASE("train: larger l2 penalty never grows the weights") {
  const Corpus c = load_corpus(testing::fixture("small_labelled.csv"), true);
  const auto v = fit_vectorizer(c, 1);
  double prev = INFINITY;
  for (double l2 : {0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0}) {
    Hyperparams hp;
    hp.l2_penalty = l2;
    hp.epochs = 400;
    hp.batch_size = static_cast<int>(c.size());
    hp.learning_rate = 0.5;
    const double n = weight_norm(train(v, c, hp));
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("objective_gradient matches central differences") {
  const Corpus c = load_corpus(testing::fixture("small_labelled.csv"), true);
  const auto v = fit_vectorizer(c, 1);
  std::vector<SparseVector> x;
  std::vector<LabelVector> y;
  for (std::size_t i = 0; i < 20; ++i) {
    x.push_back(transform(v, c.documents[i]));
    y.push_back(*c.documents[i].labels);
  }
  std::mt19937_64 rng(2);
  std::normal_distribution<double> gauss(0, 0.5);
  auto m = LinearModel::zeros(v.size());
  for (auto& w : m.weights) {
    for (auto& p : w) p = gauss(rng);
  }
  for (auto& b : m.biases) b = gauss(rng);
  const double l2 = 0.01;
  const auto g = objective_gradient(m, x, y, l2);
  CHECK(g.loss == doctest::Approx(objective(m, x, y, l2)).epsilon(1e-12));
  const double h = 1e-5;
  for (std::size_t j = 0; j < kNumLabels; ++j) {
    for (std::size_t k = 0; k < 15; ++k) {
      auto plus = m, minus = m;
      plus.weights[j][k] += h;
      minus.weights[j][k] -= h;
      const double fd = (objective(plus, x, y, l2) - objective(minus, x, y, l2)) / (2 * h);
      CHECK(g.gradient.weights[j][k] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
    auto plus = m, minus = m;
    plus.biases[j] += h;
    minus.biases[j] -= h;
    CHECK(g.gradient.biases[j] ==
          doctest::Approx((objective(plus, x, y, l2) - objective(minus, x, y, l2)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("predict: hand-computed toy model") {
  const Vectorizer v({"bad", "good", "ok"}, {1.0, 1.0, 1.0}, 1, std::nullopt);
  auto m = LinearModel::zeros(3);
  m.weights[0] = {2.0, -1.0, 0.5};
  m.biases[0] = -0.25;
  m.weights[5] = {-3.0, 0.0, 0.0};
  // x = (1, 1, 0) / sqrt(2)
  const auto s = predict(m, v, doc("bad good"));
  const double z = (2.0 - 1.0) / std::sqrt(2.0) - 0.25;
  CHECK(s[0] == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-12));
  CHECK(s[5] == doctest::Approx(1.0 / (1.0 + std::exp(3.0 / std::sqrt(2.0)))).epsilon(1e-12));
  CHECK(s[1] == 0.5);

  m.biases[1] = 1e6;
  m.biases[2] = -1e6;
  const auto extreme = predict(m, v, doc("bad"));
  CHECK(extreme[1] < 1.0);
  CHECK(extreme[2] > 0.0);

  CHECK_THROWS_AS(predict(LinearModel::zeros(2), v, doc("bad")), ValidationError);
}

TEST_CASE("is_biased") {
  LabelScores half;
  half.fill(0.5);
  CHECK(is_biased(half, 0.5));
  CHECK_FALSE(is_biased(LabelScores{}, 0.5));
  CHECK_THROWS_AS(is_biased(half, 0.0), ValidationError);
  CHECK_THROWS_AS(is_biased(half, 1.0), ValidationError);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 2000; ++trial) {
    LabelScores s;
    for (auto& x : s) x = u(rng);
    const double t = 0.05 + 0.9 * u(rng);
    bool any = false;
    for (double x : s) any = any || x >= t;
    CHECK(is_biased(s, t) == any);
  }
}

TEST_CASE("model JSON round-trips to identical predictions") {
  const Corpus c = load_corpus(testing::fixture("small_labelled.csv"), true);
  const auto v = fit_vectorizer(c, 1, 150);
  const auto m = train(v, c, {});
  const std::string json = serialize_model(v, m);
  const auto [v2, m2] = deserialize_model(json);
  CHECK(serialize_model(v2, m2) == json);
  CHECK(m2.hyperparams == m.hyperparams);
  CHECK(*v2.max_features() == 150);
  for (const auto& d : c.documents) CHECK(same_bits(predict(m, v, d), predict(m2, v2, d)));

  testing::TempDir dir;
  save_model(dir / "m.json", v, m);
  const auto [v3, m3] = load_model(dir / "m.json");
  CHECK(same_bits(predict(m3, v3, c.documents[0]), predict(m, v, c.documents[0])));

  CHECK_THROWS_AS(deserialize_model("{"), DataError);
  CHECK_THROWS_AS(deserialize_model("{}"), DataError);
  auto broken = nlohmann::json::parse(json);
  broken["weights"]["toxic"].erase(0);
  CHECK_THROWS_AS(deserialize_model(broken.dump()), DataError);
}

TEST_CASE("score files") {
  const Corpus c = corpus_of({"a", "b", "c"});
  std::vector<LabelScores> s(3);
  std::mt19937_64 rng(1);
  for (auto& row : s) {
    for (auto& x : row) x = std::uniform_real_distribution<double>(0, 1)(rng);
  }
  const std::string text = format_scores(c, s);
  const auto back = parse_scores(text, c);
  for (std::size_t i = 0; i < 3; ++i) CHECK(same_bits(back[i], s[i]));

  const std::string header = "id,toxic,severe_toxic,obscene,threat,insult,identity_hate\n";
  const std::string row0 = "d0,0,0,0,0,0,0\n", row1 = "d1,0,0,0,0,0,0\n", row2 = "d2,0,0,0,0,0,0\n";
  // rows may come in any order
  CHECK_NOTHROW(parse_scores(header + row2 + row0 + row1, c));
  CHECK_THROWS_AS(parse_scores(header + row0 + row1, c), DataError);
  CHECK_THROWS_AS(parse_scores(header + row0 + row1 + row2 + "zz,0,0,0,0,0,0\n", c), DataError);
  CHECK_THROWS_AS(parse_scores(header + row0 + row0 + row1 + row2, c), DataError);
  CHECK_THROWS_AS(parse_scores(header + row0 + row1 + "d2,0,0,1.5,0,0,0\n", c), DataError);
  CHECK_THROWS_AS(parse_scores(header + row0 + row1 + "d2,0,0,x,0,0,0\n", c), DataError);
  CHECK_THROWS_AS(parse_scores("id,toxic\n", c), DataError);
}
