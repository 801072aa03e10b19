#include <doctest.h>

#include <cmath>
#include <cstring>

#include "json.hpp"

#include "fairtext/embeddings.h"
#include "fairtext/error.h"
#include "oracles.h"
#include "support.h"

using namespace fairtext;

namespace {

EmbeddingStore random_store(std::mt19937_64& rng, std::size_t n, std::size_t dim, bool coarse) {
  std::vector<std::string> words;
  std::vector<float> data;
  std::uniform_int_distribution<int> small(-2, 2);
  std::normal_distribution<float> gauss(0, 1);
  for (std::size_t i = 0; i < n; ++i) {
    words.push_back("w" + std::to_string(i));
    for (std::size_t d = 0; d < dim; ++d) data.push_back(coarse ? static_cast<float>(small(rng)) : gauss(rng));
  }
  return EmbeddingStore(dim, std::move(words), std::move(data));
}

std::vector<std::string> ranking(const std::vector<Neighbor>& ns) {
  std::vector<std::string> out;
  for (const auto& n : ns) out.push_back(n.word);
  return out;
}

}  // namespace

TEST_CASE("text format: example and limit") {
  const auto s = parse_embeddings("2 3\na 1 0 0\nb 0 1 0", EmbeddingFormat::kText);
  CHECK(s.size() == 2);
  CHECK(s.dimension() == 3);
  CHECK(s.vector("b")[1] == 1.0f);
  const auto one = parse_embeddings("2 3\na 1 0 0\nb 0 1 0", EmbeddingFormat::kText, 1);
  CHECK(one.size() == 1);
  CHECK(one.contains("a"));
  CHECK_FALSE(one.contains("b"));
}

TEST_CASE("text format: errors carry line numbers") {
  try {
    parse_embeddings("2 3\na 1 0 0\nb 0 1\n", EmbeddingFormat::kText);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 3);
  }
  CHECK_THROWS_AS(parse_embeddings("2 3\na 1 0 0\n", EmbeddingFormat::kText), ParseError);
  CHECK_THROWS_AS(parse_embeddings("1 2\na nan 0\n", EmbeddingFormat::kText), DataError);
  CHECK_THROWS_AS(parse_embeddings("1 2\na inf 0\n", EmbeddingFormat::kText), DataError);
  CHECK_THROWS_AS(parse_embeddings("1 2\na x 0\n", EmbeddingFormat::kText), ParseError);
  CHECK_THROWS_AS(parse_embeddings("two 2\n", EmbeddingFormat::kText), ParseError);
  CHECK_THROWS_AS(parse_embeddings("", EmbeddingFormat::kText), ParseError);
  CHECK_THROWS_AS(parse_embedding_format("glove"), ConfigError);
}

TEST_CASE("duplicate words: first occurrence wins with a warning") {
  const auto s = parse_embeddings("3 2\na 1 0\nb 0 1\na 5 5\n", EmbeddingFormat::kText);
  CHECK(s.size() == 2);
  CHECK(s.vector("a")[0] == 1.0f);
  REQUIRE(s.warnings().size() == 1);
  CHECK(s.warnings()[0].find("'a'") != std::string::npos);
  CHECK_THROWS_AS(EmbeddingStore(2, {"a"}, {1.0f}), ValidationError);
  CHECK_THROWS_AS(EmbeddingStore(1, {"a"}, {NAN}), ValidationError);
  CHECK_THROWS_AS(s.vector("zzz"), OutOfVocabulary);
}

TEST_CASE("binary fixture equals the generator's source array") {
  const std::string bytes = testing::slurp(testing::fixture("w2v_small.bin"));
  const auto s = parse_embeddings(bytes, EmbeddingFormat::kBinary);
  const auto src = nlohmann::json::parse(testing::slurp(testing::fixture("w2v_small.source.json")));
  REQUIRE(s.dimension() == src["dimension"].get<std::size_t>());
  REQUIRE(s.size() == src["rows"].size());
  for (std::size_t r = 0; r < s.size(); ++r) {
    const auto& row = src["rows"][r];
    CHECK(s.words()[r] == row["word"].get<std::string>());
    for (std::size_t d = 0; d < s.dimension(); ++d) {
      const float expected = static_cast<float>(row["vector"][d].get<double>());
      const float got = s.vector(r)[d];
      CHECK(std::memcmp(&got, &expected, sizeof(float)) == 0);
    }
  }
  CHECK(encode_embeddings_binary(s) == bytes);
  CHECK(parse_embeddings(bytes, EmbeddingFormat::kBinary, 3).size() == 3);
  CHECK_THROWS_AS(parse_embeddings(bytes.substr(0, bytes.size() - 10), EmbeddingFormat::kBinary), ParseError);
}

TEST_CASE("text and binary loads agree on cosines") {
  const auto bin = load_embeddings(testing::fixture("w2v_small.bin"), EmbeddingFormat::kBinary);
  const auto txt = load_embeddings(testing::fixture("w2v_small.txt"), EmbeddingFormat::kText);
  REQUIRE(bin.words() == txt.words());
  for (std::size_t i = 0; i < bin.size(); ++i) {
    for (std::size_t j = 0; j < bin.size(); ++j) {
      CHECK(std::abs(cosine(bin.vector(i), bin.vector(j)) - cosine(txt.vector(i), txt.vector(j))) <= 1e-6);
    }
  }
  const auto re = parse_embeddings(encode_embeddings_text(bin), EmbeddingFormat::kText);
  for (std::size_t i = 0; i < bin.size(); ++i) {
    CHECK(std::memcmp(re.vector(i).data(), bin.vector(i).data(), bin.dimension() * sizeof(float)) == 0);
  }
}

TEST_CASE("cosine") {
  const std::vector<double> a{1, 0}, b{0, 1}, zero{0, 0}, v{3, -4};
  CHECK(cosine(a, b) == 0.0);
  CHECK(cosine(v, v) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine(v, zero) == 0.0);
  CHECK_THROWS_AS(cosine(std::vector<double>{1, 2, 3}, a), ValidationError);

  std::mt19937_64 rng(17);
  std::normal_distribution<float> g(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> x(300), y(300);
    for (auto& e : x) e = g(rng);
    for (auto& e : y) e = g(rng);
    long double dot = 0, nx = 0, ny = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      dot += static_cast<long double>(x[i]) * y[i];
      nx += static_cast<long double>(x[i]) * x[i];
      ny += static_cast<long double>(y[i]) * y[i];
    }
    CHECK(std::abs(cosine(x, y) - static_cast<double>(dot / std::sqrt(nx * ny))) <= 1e-6);
  }
}

TEST_CASE("nearest_neighbors: examples and errors") {
  const auto s = parse_embeddings("3 2\na 1 2\nb 1 2\nc -1 0\n", EmbeddingFormat::kText);
  const auto nn = nearest_neighbors(s, "a", 1);
  REQUIRE(nn.size() == 1);
  CHECK(nn[0].word == "b");
  CHECK(nn[0].similarity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ranking(nearest_neighbors(s, "a", 10)) == std::vector<std::string>{"b", "c"});
  CHECK(ranking(nearest_neighbors(s, "a", 10, {"b"})) == std::vector<std::string>{"c"});
  CHECK_THROWS_AS(nearest_neighbors(s, "zzz", 1), OutOfVocabulary);
  CHECK_THROWS_AS(nearest_neighbors(s, "a", 0), ValidationError);
}

TEST_CASE("nearest_neighbors: full-scan oracle, ordering, scale invariance") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_store(rng, 60, 4, trial % 2 == 0);
    const std::string q = s.words()[rng() % s.size()];
    for (std::size_t k : {1u, 3u, 10u, 100u}) {
      const auto got = nearest_neighbors(s, q, k);
      CHECK(got == oracle::full_scan_knn(s, q, k));
      CHECK(got.size() <= k);
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].word != q);
        if (i) CHECK(got[i - 1].similarity >= got[i].similarity);
      }
    }
    std::vector<float> scaled;
    for (std::size_t r = 0; r < s.size(); ++r) {
      for (float x : s.vector(r)) scaled.push_back(x * 4.0f);
    }
    const EmbeddingStore big(s.dimension(), s.words(), std::move(scaled));
    CHECK(ranking(nearest_neighbors(big, q, 10)) == ranking(nearest_neighbors(s, q, 10)));
  }
}
