#include <doctest.h>

#include <fstream>
#include <set>

#include "json.hpp"

#include "fairtext/error.h"
#include "fairtext/lexicon.h"
#include "fairtext/utf8.h"
#include "oracles.h"
#include "support.h"

using namespace fairtext;
using testing::doc;

namespace {

BiasLexicon lexicon_of(std::initializer_list<std::string> terms) {
  std::vector<LexiconEntry> entries;
  for (const auto& t : terms) entries.push_back({t, Category::kGeneral, std::nullopt, {}, ""});
  return BiasLexicon(std::move(entries));
}

}  // namespace

TEST_CASE("parse_lexicon: single entry and empty array") {
  const auto lex = parse_lexicon(R"([{"term":"hysterical","category":"gender","subgroup":"female"}])");
  REQUIRE(lex.size() == 1);
  const auto* e = lex.find("HYSTERICAL");
  REQUIRE(e != nullptr);
  CHECK(e->category == Category::kGender);
  CHECK(*e->subgroup == "female");
  CHECK(e->suggested_substitutes.empty());

  const auto empty = parse_lexicon("[]");
  CHECK(empty.empty());
  CHECK(tag_spans(doc("anything hysterical"), empty).empty());
}

TEST_CASE("parse_lexicon: normalization and errors") {
  const auto lex = parse_lexicon(
      R"([{"term":"  Chairman   of The Board ","category":"general","suggested_substitutes":["Chair"],"source":"s"}])");
  REQUIRE(lex.find("chairman of the board") != nullptr);
  CHECK(lex.entries()[0].term == "chairman of the board");
  CHECK(lex.entries()[0].suggested_substitutes == std::vector<std::string>{"chair"});
  CHECK(lex.entries()[0].source == "s");
  CHECK(lex.max_term_words() == 4);
  CHECK(lex.contains_component("board"));
  CHECK_FALSE(lex.contains_component("chair"));

  CHECK_THROWS_AS(parse_lexicon("[{\"term\":"), ParseError);
  CHECK_THROWS_AS(parse_lexicon(R"({"term":"x"})"), ValidationError);
  try {
    parse_lexicon(R"([{"term":"ok","category":"general"},{"term":"weird","category":"astrology"}])");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("weird") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_lexicon(R"([{"term":"a","category":"general"},{"term":"A","category":"race"}])"),
                  ValidationError);
  CHECK_THROWS_AS(parse_lexicon(R"([{"term":"","category":"general"}])"), ValidationError);
  CHECK_THROWS_AS(parse_lexicon(R"([{"term":"a.b","category":"general"}])"), ValidationError);
  CHECK_THROWS_AS(parse_lexicon(R"([{"category":"general"}])"), ValidationError);
  CHECK_THROWS_AS(parse_category("Gender"), ValidationError);
}

TEST_CASE("seed lexicon: entry count matches the manifest count") {
  const auto lex = load_lexicon(testing::data_file("seed_lexicon.json"));
  std::ifstream count_file(testing::data_file("seed_lexicon.count"));
  std::size_t expected = 0;
  count_file >> expected;
  CHECK(lex.size() == expected);
  CHECK(lex.size() >= 100);

  std::set<Category> categories;
  for (const auto& e : lex.entries()) {
    categories.insert(e.category);
    CHECK_MESSAGE(!e.source.empty(), e.term);
    for (const auto& s : e.suggested_substitutes) CHECK_MESSAGE(!lex.contains(s), s);
  }
  CHECK(categories.size() == 6);
  CHECK(lex.version().rfind("fnv1a-", 0) == 0);
}

TEST_CASE("tag_spans: examples") {
  const auto lex = parse_lexicon(R"([{"term":"hysterical","category":"gender"}])");
  const auto spans = tag_spans(doc("He was hysterical"), lex);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == SpanTag{7, 17, "hysterical", Category::kGender, std::nullopt});

  const auto board = lexicon_of({"chairman", "chairman of the board"});
  const auto s2 = tag_spans(doc("chairman of the board"), board);
  REQUIRE(s2.size() == 1);
  CHECK(s2[0].start == 0);
  CHECK(s2[0].end == 21);
  CHECK(s2[0].matched_term == "chairman of the board");

  // punctuation between words breaks a phrase
  const auto s3 = tag_spans(doc("chairman, of the board"), board);
  REQUIRE(s3.size() == 1);
  CHECK(s3[0].matched_term == "chairman");
  // line breaks do not
  CHECK(tag_spans(doc("chairman of\nthe  board"), board)[0].end == 22);
}

TEST_CASE("tag_spans: longest match first, then leftmost") {
  const auto lex = lexicon_of({"a b", "b c", "c", "a"});
  auto terms = [&](const std::string& text) {
    std::vector<std::string> out;
    for (const auto& s : tag_spans(doc(text), lex)) out.push_back(s.matched_term);
    return out;
  };
  CHECK(terms("a b c") == std::vector<std::string>{"a b", "c"});
  CHECK(terms("x b c a") == std::vector<std::string>{"b c", "a"});
  CHECK(terms("b") == std::vector<std::string>{});
}

TEST_CASE("tag_spans: case-insensitive with identical offsets") {
  const auto lex = load_lexicon(testing::data_file("seed_lexicon.json"));
  std::mt19937_64 rng(3);
  std::vector<std::string> words = {"the", "bossy", "Chairman", "of", "board", "man", "up", "crazy", "ok", "white",
                                    "trash", "wheelchair-bound", "deaf", "and", "dumb"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    for (int i = 0; i < 12; ++i) text += words[rng() % words.size()] + (rng() % 4 ? " " : ". ");
    const auto lower = tag_spans(doc(text), lex);
    const auto upper = tag_spans(doc(utf8::to_upper(text)), lex);
    CHECK(lower == upper);
    for (const auto& s : lower) CHECK(utf8::to_lower(text.substr(s.start, s.end - s.start)) == s.matched_term);
  }
}

TEST_CASE("tag_spans: whole words only") {
  const auto lex = lexicon_of({"god"});
  std::mt19937_64 rng(9);
  const std::vector<std::string> words = {"goddess", "godly", "demigod", "god", "God's", "ungodly", "good", "god-like"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    int expected = 0;
    for (int i = 0; i < 8; ++i) {
      const auto& w = words[rng() % words.size()];
      expected += w == "god";
      text += w + " ";
    }
    const auto spans = tag_spans(doc(text), lex);
    CHECK(static_cast<int>(spans.size()) == expected);
    for (const auto& s : spans) CHECK(text.substr(s.start, s.end - s.start) == "god");
  }
  CHECK(tag_spans(doc("goddess"), lexicon_of({"god", "goddess"})).size() == 1);
}

TEST_CASE("tag_spans: agrees with the window oracle and is well-formed") {
  const auto lex = lexicon_of({"a", "a b", "b c d", "c", "d e", "e", "a b c d e f", "f g"});
  std::mt19937_64 rng(21);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f", "g", "A", "x"};
  const std::vector<std::string> seps = {" ", " ", "  ", ", ", "\n", "-"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    const int n = static_cast<int>(rng() % 15);
    for (int i = 0; i < n; ++i) text += vocab[rng() % vocab.size()] + seps[rng() % seps.size()];
    const Document d = doc(text);
    const auto got = tag_spans(d, lex);
    CHECK(got == oracle::window_tagger(d, lex));
    for (std::size_t i = 1; i < got.size(); ++i) CHECK(got[i - 1].end <= got[i].start);
    CHECK(got == tag_spans(d, lex));
  }
}
