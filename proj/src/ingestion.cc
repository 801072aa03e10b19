#include "fairtext/ingestion.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fairtext/csv.h"
#include "fairtext/error.h"
#include "fairtext/io.h"
#include "fairtext/rng.h"
#include "fairtext/utf8.h"

namespace fairtext {
namespace {

bool is_joiner(int cp) { return cp == '\'' || cp == '-' || cp == 0x2019; }

std::size_t column_index(const csv::Row& header, std::string_view name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw SchemaError(std::string(name));
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

const Document* Corpus::find(std::string_view id) const {
  for (const auto& d : documents) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

Corpus parse_corpus(std::string_view content, bool has_labels) {
  // Tolerate a UTF-8 byte order mark in front of the header.
  if (content.substr(0, 3) == "\xEF\xBB\xBF") content.remove_prefix(3);
  std::vector<csv::Row> rows = csv::parse(content);
  if (rows.empty()) throw SchemaError("id");

  const csv::Row& header = rows.front();
  const std::size_t id_col = column_index(header, "id");
  const std::size_t text_col = column_index(header, "comment_text");
  std::array<std::size_t, kNumLabels> label_cols{};
  if (has_labels) {
    for (std::size_t j = 0; j < kNumLabels; ++j) label_cols[j] = column_index(header, kLabelNames[j]);
  }

  Corpus corpus;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const csv::Row& row = rows[r];
    const std::size_t data_row = r - 1;
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    if (row.size() != header.size()) {
      throw RowError("expected " + std::to_string(header.size()) + " fields, found " +
                         std::to_string(row.size()),
                     data_row);
    }
    Document doc;
    doc.id = row[id_col];
    doc.text = row[text_col];
    if (doc.id.empty()) throw RowError("empty id", data_row);
    if (!seen.insert(doc.id).second) throw RowError("duplicate id '" + doc.id + "'", data_row);
    if (has_labels) {
      LabelVector labels{};
      for (std::size_t j = 0; j < kNumLabels; ++j) {
        const std::string& v = row[label_cols[j]];
        if (v == "0") {
          labels[j] = 0;
        } else if (v == "1") {
          labels[j] = 1;
        } else {
          throw RowError("label '" + std::string(kLabelNames[j]) + "' has non-binary value '" + v + "'",
                         data_row);
        }
      }
      doc.labels = labels;
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_corpus(const std::string& path, bool has_labels) {
  return parse_corpus(read_file(path), has_labels);
}

std::string format_corpus(const Corpus& corpus, bool with_labels) {
  with_labels = with_labels && std::all_of(corpus.documents.begin(), corpus.documents.end(),
                                           [](const Document& d) { return d.labels.has_value(); });
  std::ostringstream out;
  csv::Row header = {"id", "comment_text"};
  if (with_labels) {
    for (auto name : kLabelNames) header.emplace_back(name);
  }
  csv::write_row(out, header);
  for (const auto& d : corpus.documents) {
    csv::Row row = {d.id, d.text};
    if (with_labels) {
      for (int v : *d.labels) row.push_back(std::to_string(v));
    }
    csv::write_row(out, row);
  }
  return out.str();
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    utf8::CodePoint c = utf8::decode(text, i);
    if (!utf8::is_alpha(c.cp)) {
      i += c.length;
      continue;
    }
    const std::size_t start = i;
    i += c.length;
    while (i < n) {
      utf8::CodePoint next = utf8::decode(text, i);
      if (utf8::is_alpha(next.cp)) {
        i += next.length;
        continue;
      }
      if (is_joiner(next.cp) && i + next.length < n) {
        utf8::CodePoint after = utf8::decode(text, i + next.length);
        if (utf8::is_alpha(after.cp)) {
          i += next.length + after.length;
          continue;
        }
      }
      break;
    }
    tokens.push_back({std::string(text.substr(start, i - start)), start, i});
  }
  return tokens;
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_fraction,
                                       std::uint64_t seed) {
  if (corpus.empty()) throw ValidationError("cannot split an empty corpus");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train fraction must lie in (0, 1)");
  }
  const std::size_t n = corpus.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  fisher_yates(order, rng);

  std::vector<char> in_train(n, 0);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = 1;

  // Each side keeps the original corpus order.
  Corpus train, test;
  train.split_seed = test.split_seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? train : test).documents.push_back(corpus.documents[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace fairtext
