#include "fairtext/fairness.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <tuple>

#include "json.hpp"

#include "fairtext/csv.h"
#include "fairtext/error.h"
#include "fairtext/io.h"
#include "fairtext/utf8.h"

namespace fairtext {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::optional<double> defined(double v) {
  if (std::isnan(v)) return std::nullopt;
  return v;
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

bool in_band(double di) { return di >= kFairBandLow && di <= kFairBandHigh; }

std::string trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::string_view status_name(RatioStatus s) {
  switch (s) {
    case RatioStatus::kDefined:
      return "defined";
    case RatioStatus::kInfinite:
      return "infinite";
    case RatioStatus::kUndefined:
      return "undefined";
  }
  return "undefined";
}

DisparateImpactEntry make_entry(const GroupPair& pair, std::size_t nu, std::size_t fu, std::size_t np,
                                std::size_t fp) {
  DisparateImpactEntry e;
  e.pair = pair;
  e.unprivileged_count = nu;
  e.privileged_count = np;
  if (nu > 0) e.unprivileged_rate = static_cast<double>(fu) / static_cast<double>(nu);
  if (np > 0) e.privileged_rate = static_cast<double>(fp) / static_cast<double>(np);
  if (!e.unprivileged_rate || !e.privileged_rate) return e;
  if (*e.privileged_rate == 0.0) {
    e.status = *e.unprivileged_rate > 0.0 ? RatioStatus::kInfinite : RatioStatus::kUndefined;
    return e;
  }
  e.status = RatioStatus::kDefined;
  e.di = *e.unprivileged_rate / *e.privileged_rate;
  e.fair = in_band(e.di);
  return e;
}

void warn_missing(DisparateImpactReport& report) {
  for (const auto& e : report.entries) {
    if (e.unprivileged_count == 0) report.warnings.push_back("no documents mention '" + e.pair.first + "'");
    if (e.privileged_count == 0) report.warnings.push_back("no documents mention '" + e.pair.second + "'");
  }
}

nlohmann::json di_json(const DisparateImpactReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : report.entries) {
    nlohmann::json di;
    if (e.status == RatioStatus::kDefined) di = e.di;
    if (e.status == RatioStatus::kInfinite) di = "inf";
    rows.push_back({{"unprivileged", e.pair.first},
                    {"privileged", e.pair.second},
                    {"unprivileged_count", e.unprivileged_count},
                    {"privileged_count", e.privileged_count},
                    {"unprivileged_rate", opt(e.unprivileged_rate)},
                    {"privileged_rate", opt(e.privileged_rate)},
                    {"status", status_name(e.status)},
                    {"di", di},
                    {"fair", e.fair}});
  }
  return {{"pairs", rows}, {"warnings", report.warnings}};
}

std::optional<double> di_value(const DisparateImpactEntry& e) {
  if (e.status == RatioStatus::kDefined) return e.di;
  if (e.status == RatioStatus::kInfinite) return std::numeric_limits<double>::infinity();
  return std::nullopt;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("roc_auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the U statistic, so that ties stay integral.
  std::uint64_t u2 = 0;
  std::uint64_t negatives_below = 0;
  std::uint64_t n_pos = 0, n_neg = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t pos = 0, neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? pos : neg) += 1;
      ++j;
    }
    u2 += pos * (2 * negatives_below + neg);
    negatives_below += neg;
    n_pos += pos;
    n_neg += neg;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) return kNaN;
  return static_cast<double>(u2) / static_cast<double>(2 * n_pos * n_neg);
}

F1Scores f1(const std::vector<LabelScores>& scores, const std::vector<LabelVector>& labels, double threshold) {
  if (scores.size() != labels.size()) throw ValidationError("f1: scores and labels differ in length");
  F1Scores out;
  std::uint64_t tp_all = 0, fp_all = 0, fn_all = 0;
  for (std::size_t j = 0; j < kNumLabels; ++j) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool pred = scores[i][j] >= threshold;
      const bool truth = labels[i][j] != 0;
      tp += pred && truth;
      fp += pred && !truth;
      fn += !pred && truth;
    }
    const std::uint64_t denom = 2 * tp + fp + fn;
    out.per_label[j] = denom == 0 ? 1.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
  }
  const std::uint64_t denom = 2 * tp_all + fp_all + fn_all;
  out.micro = denom == 0 ? 1.0 : static_cast<double>(2 * tp_all) / static_cast<double>(denom);
  double sum = 0.0;
  for (double v : out.per_label) sum += v;
  out.macro = sum / static_cast<double>(kNumLabels);
  return out;
}

double power_mean(std::span<const double> values, double p) {
  if (values.empty()) return kNaN;
  const double n = static_cast<double>(values.size());
  if (p == 0.0) {
    double log_sum = 0.0;
    for (double v : values) {
      if (v == 0.0) return 0.0;
      log_sum += std::log(v);
    }
    return std::exp(log_sum / n);
  }
  double sum = 0.0;
  for (double v : values) {
    if (v == 0.0 && p < 0.0) return 0.0;
    sum += std::pow(v, p);
  }
  return std::pow(sum / n, 1.0 / p);
}

const std::set<std::string>& SubgroupAssignment::of(const std::string& id) const {
  static const std::set<std::string> kNone;
  auto it = groups.find(id);
  return it == groups.end() ? kNone : it->second;
}

std::set<std::string> SubgroupAssignment::universe() const {
  std::set<std::string> out;
  for (const auto& [id, gs] : groups) out.insert(gs.begin(), gs.end());
  return out;
}

SubgroupAssignment assign_from_lexicon(const Corpus& corpus, const BiasLexicon& lexicon) {
  SubgroupAssignment a;
  for (const auto& doc : corpus.documents) {
    std::set<std::string> gs;
    for (const auto& span : tag_spans(doc, lexicon)) {
      if (span.subgroup) gs.insert(*span.subgroup);
    }
    if (!gs.empty()) a.groups.emplace(doc.id, std::move(gs));
  }
  return a;
}

SubgroupAssignment parse_assignment(std::string_view content, const std::set<std::string>& universe) {
  const auto rows = csv::parse(content);
  if (rows.empty()) throw SchemaError("id");
  const auto& header = rows.front();
  auto col = [&](std::string_view name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError(std::string(name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = col("id");
  const std::size_t sg_col = col("subgroups");
  SubgroupAssignment a;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) throw RowError("wrong number of fields", r - 1);
    if (row[id_col].empty()) throw RowError("empty id", r - 1);
    std::set<std::string> gs;
    std::string_view rest = row[sg_col];
    while (!rest.empty()) {
      const auto semi = rest.find(';');
      std::string g = utf8::to_lower(trim(rest.substr(0, semi)));
      rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
      if (g.empty()) continue;
      if (!universe.empty() && !universe.count(g)) {
        throw RowError("subgroup '" + g + "' is not in the configured universe", r - 1);
      }
      gs.insert(std::move(g));
    }
    if (!a.groups.emplace(row[id_col], std::move(gs)).second) {
      throw RowError("duplicate id '" + row[id_col] + "'", r - 1);
    }
  }
  return a;
}

SubgroupAssignment load_assignment(const std::string& path, const std::set<std::string>& universe) {
  return parse_assignment(read_file(path), universe);
}

BiasAUCReport bias_auc(std::span<const double> scores, std::span<const int> truth,
                       const std::vector<std::set<std::string>>& membership,
                       const std::vector<std::string>& subgroups, double p, double w) {
  if (scores.size() != truth.size() || scores.size() != membership.size()) {
    throw ValidationError("bias_auc: inputs differ in length");
  }
  if (!(w >= 0.0 && w <= 1.0)) throw ValidationError("bias_auc: weight must lie in [0, 1]");
  BiasAUCReport report;
  report.p = p;
  report.w = w;
  report.overall_auc = defined(roc_auc(scores, truth));
  if (!report.overall_auc) report.warnings.push_back("overall AUC undefined: only one class present");

  std::vector<double> sub_vals, bpsn_vals, bnsp_vals;
  std::vector<double> s;
  std::vector<int> t;
  for (const auto& g : subgroups) {
    SubgroupAUC row;
    row.subgroup = g;
    // Each family is a filter over (in subgroup, positive).
    auto family = [&](auto keep) {
      s.clear();
      t.clear();
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (keep(membership[i].count(g) > 0, truth[i] != 0)) {
          s.push_back(scores[i]);
          t.push_back(truth[i]);
        }
      }
      return defined(roc_auc(s, t));
    };
    for (const auto& m : membership) row.size += m.count(g);
    row.subgroup_auc = family([](bool in, bool) { return in; });
    row.bpsn_auc = family([](bool in, bool pos) { return in ? !pos : pos; });
    row.bnsp_auc = family([](bool in, bool pos) { return in ? pos : !pos; });

    auto collect = [&](const std::optional<double>& v, std::vector<double>& into, const char* name) {
      if (v) {
        into.push_back(*v);
      } else {
        report.warnings.push_back(std::string(name) + " undefined for subgroup '" + g + "'; excluded from mean");
      }
    };
    collect(row.subgroup_auc, sub_vals, "subgroup AUC");
    collect(row.bpsn_auc, bpsn_vals, "BPSN AUC");
    collect(row.bnsp_auc, bnsp_vals, "BNSP AUC");
    report.subgroups.push_back(std::move(row));
  }
  report.mean_subgroup_auc = defined(power_mean(sub_vals, p));
  report.mean_bpsn_auc = defined(power_mean(bpsn_vals, p));
  report.mean_bnsp_auc = defined(power_mean(bnsp_vals, p));
  if (report.overall_auc && report.mean_subgroup_auc && report.mean_bpsn_auc && report.mean_bnsp_auc) {
    report.combined = w * *report.overall_auc +
                      (1.0 - w) / 3.0 * (*report.mean_subgroup_auc + *report.mean_bpsn_auc + *report.mean_bnsp_auc);
  } else {
    report.warnings.push_back("combined bias AUC undefined");
  }
  return report;
}

BiasAUCReport bias_auc(const Corpus& corpus, const std::vector<LabelScores>& scores,
                       const SubgroupAssignment& assignment, std::vector<std::string> subgroups, double p,
                       double w) {
  if (scores.size() != corpus.size()) throw ValidationError("bias_auc: one score vector per document required");
  if (subgroups.empty()) {
    auto u = assignment.universe();
    subgroups.assign(u.begin(), u.end());
  }
  std::vector<double> s(corpus.size());
  std::vector<int> t(corpus.size());
  std::vector<std::set<std::string>> membership(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& doc = corpus.documents[i];
    if (!doc.labels) throw ValidationError("bias_auc: document '" + doc.id + "' has no labels");
    s[i] = *std::max_element(scores[i].begin(), scores[i].end());
    t[i] = std::any_of(doc.labels->begin(), doc.labels->end(), [](int v) { return v != 0; }) ? 1 : 0;
    membership[i] = assignment.of(doc.id);
  }
  return bias_auc(s, t, membership, subgroups, p, w);
}

std::vector<GroupPair> parse_pairs(std::string_view text) {
  if (trim(text).empty()) throw ConfigError("no group pairs given");
  std::vector<GroupPair> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    const std::string item = trim(text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos));
    if (item.empty()) throw ConfigError("empty group pair in '" + std::string(text) + "'");
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("group pair '" + item + "' must be unprivileged:privileged");
    GroupPair pair{trim(item.substr(0, colon)), trim(item.substr(colon + 1))};
    if (pair.first.empty() || pair.second.empty()) throw ConfigError("empty group name in pair '" + item + "'");
    out.push_back(std::move(pair));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

DisparateImpactReport disparate_impact(const Corpus& corpus, const std::vector<LabelScores>& scores,
                                       const SubgroupAssignment& assignment, double threshold,
                                       const std::vector<GroupPair>& pairs) {
  if (scores.size() != corpus.size()) {
    throw ValidationError("disparate_impact: one score vector per document required");
  }
  auto tally = [&](const std::string& g) {
    std::size_t mentions = 0, favorable = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (!assignment.of(corpus.documents[i].id).count(g)) continue;
      ++mentions;
      favorable += !is_biased(scores[i], threshold);
    }
    return std::pair{mentions, favorable};
  };
  DisparateImpactReport report;
  for (const auto& pair : pairs) {
    auto [nu, fu] = tally(pair.first);
    auto [np, fp] = tally(pair.second);
    report.entries.push_back(make_entry(pair, nu, fu, np, fp));
  }
  warn_missing(report);
  return report;
}

DisparateImpactReport word_level_disparate_impact(const Corpus& corpus, const BiasLexicon& lexicon,
                                                  const SubgroupAssignment& assignment,
                                                  const std::vector<GroupPair>& pairs) {
  // Per document: (token count, untagged token count).
  std::vector<std::pair<std::size_t, std::size_t>> counts(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& doc = corpus.documents[i];
    const auto tokens = tokenize(doc.text);
    const auto spans = tag_spans(doc, lexicon);
    std::size_t untagged = 0;
    std::size_t s = 0;
    for (const auto& tok : tokens) {
      while (s < spans.size() && spans[s].end <= tok.start) ++s;
      const bool covered = s < spans.size() && spans[s].start <= tok.start && tok.end <= spans[s].end;
      untagged += !covered;
    }
    counts[i] = {tokens.size(), untagged};
  }
  auto tally = [&](const std::string& g) {
    std::size_t docs = 0, total = 0, favorable = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (!assignment.of(corpus.documents[i].id).count(g)) continue;
      ++docs;
      total += counts[i].first;
      favorable += counts[i].second;
    }
    return std::tuple{docs, total, favorable};
  };
  DisparateImpactReport report;
  for (const auto& pair : pairs) {
    auto [du, nu, fu] = tally(pair.first);
    auto [dp, np, fp] = tally(pair.second);
    auto e = make_entry(pair, nu, fu, np, fp);
    // Counts report documents, rates are over tokens.
    e.unprivileged_count = du;
    e.privileged_count = dp;
    report.entries.push_back(std::move(e));
  }
  warn_missing(report);
  return report;
}

std::vector<DisparateImpactDelta> compare_reports(const DisparateImpactReport& before,
                                                  const DisparateImpactReport& after) {
  if (before.entries.size() != after.entries.size()) throw ValidationError("compare_reports: pair sets differ");
  std::vector<DisparateImpactDelta> out;
  for (std::size_t k = 0; k < before.entries.size(); ++k) {
    const auto& b = before.entries[k];
    const auto& a = after.entries[k];
    if (b.pair != a.pair) throw ValidationError("compare_reports: pair sets differ");
    DisparateImpactDelta d;
    d.pair = b.pair;
    d.before = di_value(b);
    d.after = di_value(a);
    if (b.status == RatioStatus::kDefined && a.status == RatioStatus::kDefined) d.delta = a.di - b.di;
    d.entered_fair_band = !b.fair && a.fair;
    d.left_fair_band = b.fair && !a.fair;
    out.push_back(std::move(d));
  }
  return out;
}

EvaluationReport evaluate(const Corpus& corpus, const std::vector<LabelScores>& scores,
                          const std::optional<std::vector<LabelVector>>& truth, const BiasLexicon& lexicon,
                          const SubgroupAssignment& assignment, const EvaluationOptions& options) {
  if (scores.size() != corpus.size()) throw ValidationError("evaluate: one score vector per document required");
  EvaluationReport r;
  r.threshold = options.threshold;
  r.documents = corpus.size();
  for (const auto& s : scores) r.flagged += is_biased(s, options.threshold);
  if (truth) {
    if (truth->size() != corpus.size()) throw ValidationError("evaluate: one label vector per document required");
    r.f1 = f1(scores, *truth, options.threshold);
    Corpus labelled = corpus;
    for (std::size_t i = 0; i < labelled.size(); ++i) labelled.documents[i].labels = (*truth)[i];
    r.bias_auc = bias_auc(labelled, scores, assignment, {}, options.p, options.w);
  }
  r.disparate_impact = disparate_impact(corpus, scores, assignment, options.threshold, options.pairs);
  r.word_level_disparate_impact = word_level_disparate_impact(corpus, lexicon, assignment, options.pairs);
  return r;
}

std::string format_report(const EvaluationReport& report) {
  nlohmann::json j;
  j["threshold"] = report.threshold;
  j["documents"] = report.documents;
  j["flagged"] = report.flagged;
  if (report.f1) {
    nlohmann::json per = nlohmann::json::object();
    for (std::size_t k = 0; k < kNumLabels; ++k) per[std::string(kLabelNames[k])] = report.f1->per_label[k];
    j["f1"] = {{"micro", report.f1->micro}, {"macro", report.f1->macro}, {"per_label", per}};
  } else {
    j["f1"] = nullptr;
  }
  if (report.bias_auc) {
    const auto& b = *report.bias_auc;
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& s : b.subgroups) {
      subs.push_back({{"subgroup", s.subgroup},
                      {"size", s.size},
                      {"subgroup_auc", opt(s.subgroup_auc)},
                      {"bpsn_auc", opt(s.bpsn_auc)},
                      {"bnsp_auc", opt(s.bnsp_auc)}});
    }
    j["bias_auc"] = {{"p", b.p},
                     {"w", b.w},
                     {"overall_auc", opt(b.overall_auc)},
                     {"subgroups", subs},
                     {"mean_subgroup_auc", opt(b.mean_subgroup_auc)},
                     {"mean_bpsn_auc", opt(b.mean_bpsn_auc)},
                     {"mean_bnsp_auc", opt(b.mean_bnsp_auc)},
                     {"combined", opt(b.combined)},
                     {"warnings", b.warnings}};
  } else {
    j["bias_auc"] = nullptr;
  }
  j["disparate_impact"] = di_json(report.disparate_impact);
  j["word_level_disparate_impact"] = di_json(report.word_level_disparate_impact);
  j["fair_band"] = {kFairBandLow, kFairBandHigh};
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

std::string format_comparison(const std::vector<DisparateImpactDelta>& deltas) {
  nlohmann::json rows = nlohmann::json::array();
  auto num = [](const std::optional<double>& v) -> nlohmann::json {
    if (!v) return nullptr;
    if (std::isinf(*v)) return "inf";
    return *v;
  };
  for (const auto& d : deltas) {
    rows.push_back({{"unprivileged", d.pair.first},
                    {"privileged", d.pair.second},
                    {"before", num(d.before)},
                    {"after", num(d.after)},
                    {"delta", num(d.delta)},
                    {"entered_fair_band", d.entered_fair_band},
                    {"left_fair_band", d.left_fair_band}});
  }
  return rows.dump(2) + "\n";
}

}  // namespace fairtext
