#pragma once

// Token- and span-level scoring, label histograms, paragraph-level bootstrap
// comparison of two systems and the correct/incorrect diff rendering.
//
// Metrics are computed from integer counts pooled over paragraphs, so any
// permutation of the evaluation set scores identically.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sciner/dataset.hpp"
#include "sciner/labels.hpp"

namespace sciner {

struct Prf {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  friend bool operator==(const Prf&, const Prf&) = default;
};

// With no predictions and no gold items precision and recall are 1; an empty
// side against a non-empty one scores 0.
inline Prf make_prf(std::size_t tp, std::size_t fp, std::size_t fn) {
  Prf r{tp, fp, fn};
  r.precision = tp + fp ? static_cast<double>(tp) / (tp + fp) : (fn == 0 ? 1.0 : 0.0);
  r.recall = tp + fn ? static_cast<double>(tp) / (tp + fn) : (fp == 0 ? 1.0 : 0.0);
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

struct EvalCounts {
  std::size_t tokens = 0;
  std::size_t correct = 0;
  std::array<std::size_t, kNumClasses> tp{}, fp{}, fn{};
  std::array<std::size_t, kNumEntityTypes> span_tp{}, span_fp{}, span_fn{};

  EvalCounts& operator+=(const EvalCounts& o) {
    tokens += o.tokens;
    correct += o.correct;
    for (int c = 0; c < kNumClasses; ++c) {
      tp[c] += o.tp[c];
      fp[c] += o.fp[c];
      fn[c] += o.fn[c];
    }
    for (int t = 0; t < kNumEntityTypes; ++t) {
      span_tp[t] += o.span_tp[t];
      span_fp[t] += o.span_fp[t];
      span_fn[t] += o.span_fn[t];
    }
    return *this;
  }
};

struct MetricSet {
  double token_accuracy = 0.0;
  Prf micro;                                 // token level, pooled over the 14 entity classes
  std::array<Prf, kNumClasses> per_class{};  // index 0 (O) unused
  Prf span;                                  // exact (type, start, end) matches
  std::array<Prf, kNumEntityTypes> per_type_span{};
  friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

// amb in a prediction never matches a gold label and never opens or extends a
// predicted span.
inline EvalCounts count_paragraph(const std::vector<Label>& gold, const std::vector<Label>& pred) {
  EvalCounts k;
  k.tokens = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    Label g = gold[i], p = pred[i];
    if (g == p) ++k.correct;
    if (g.is_entity() && g == p) {
      ++k.tp[g.index()];
      continue;
    }
    if (g.is_entity()) ++k.fn[g.index()];
    if (p.is_entity()) ++k.fp[p.index()];
  }
  auto gs = spans_from_labels(gold), ps = spans_from_labels(pred);
  for (const Span& s : ps) {
    auto t = static_cast<int>(s.type);
    if (std::find(gs.begin(), gs.end(), s) != gs.end()) ++k.span_tp[t];
    else ++k.span_fp[t];
  }
  for (const Span& s : gs)
    if (std::find(ps.begin(), ps.end(), s) == ps.end()) ++k.span_fn[static_cast<int>(s.type)];
  return k;
}

inline MetricSet metrics_from_counts(const EvalCounts& k) {
  MetricSet m;
  m.token_accuracy = k.tokens ? static_cast<double>(k.correct) / k.tokens : 1.0;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    m.per_class[c] = make_prf(k.tp[c], k.fp[c], k.fn[c]);
    tp += k.tp[c];
    fp += k.fp[c];
    fn += k.fn[c];
  }
  m.micro = make_prf(tp, fp, fn);
  std::size_t stp = 0, sfp = 0, sfn = 0;
  for (int t = 0; t < kNumEntityTypes; ++t) {
    m.per_type_span[t] = make_prf(k.span_tp[t], k.span_fp[t], k.span_fn[t]);
    stp += k.span_tp[t];
    sfp += k.span_fp[t];
    sfn += k.span_fn[t];
  }
  m.span = make_prf(stp, sfp, sfn);
  return m;
}

inline void check_aligned(const std::vector<AnnotatedParagraph>& gold, const std::vector<AnnotatedParagraph>& pred) {
  if (gold.size() != pred.size())
    throw ArgumentError("gold has " + std::to_string(gold.size()) + " paragraphs, prediction has " +
                        std::to_string(pred.size()));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].labels.size() != pred[i].labels.size() || gold[i].words.size() != gold[i].labels.size())
      throw ArgumentError("paragraph " + std::to_string(i) + " (paper " + gold[i].paper_id + " paragraph " +
                          std::to_string(gold[i].paragraph_index) + "): length mismatch");
    for (Label l : gold[i].labels)
      if (l.is_amb()) throw ArgumentError("gold paragraph " + std::to_string(i) + " contains amb");
  }
}

inline std::vector<EvalCounts> per_paragraph_counts(const std::vector<AnnotatedParagraph>& gold,
                                                    const std::vector<AnnotatedParagraph>& pred) {
  check_aligned(gold, pred);
  std::vector<EvalCounts> out;
  out.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) out.push_back(count_paragraph(gold[i].labels, pred[i].labels));
  return out;
}

inline MetricSet score(const std::vector<AnnotatedParagraph>& gold, const std::vector<AnnotatedParagraph>& pred) {
  EvalCounts total;
  for (const auto& k : per_paragraph_counts(gold, pred)) total += k;
  return metrics_from_counts(total);
}

// Headline scalars carried through bootstrap summaries.
inline constexpr std::array<const char*, 7> kSummaryMetrics = {
    "token_accuracy", "micro_precision", "micro_recall", "micro_f1", "span_precision", "span_recall", "span_f1"};

inline std::array<double, 7> summary_values(const MetricSet& m) {
  return {m.token_accuracy, m.micro.precision, m.micro.recall, m.micro.f1, m.span.precision, m.span.recall, m.span.f1};
}

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single draw
  friend bool operator==(const MeanStd&, const MeanStd&) = default;
};

struct BootstrapConfig {
  std::size_t draws = 12;
  std::size_t draw_size = 50;
  std::uint64_t seed = 0;
};

struct BootstrapResult {
  std::size_t draws = 0;
  std::size_t draw_size = 0;
  std::uint64_t seed = 0;
  std::vector<MetricSet> per_draw_a, per_draw_b;
  std::array<MeanStd, 7> summary_a{}, summary_b{};
  friend bool operator==(const BootstrapResult&, const BootstrapResult&) = default;
};

inline std::array<MeanStd, 7> summarize(const std::vector<MetricSet>& draws) {
  std::array<MeanStd, 7> out{};
  if (draws.empty()) return out;
  for (std::size_t k = 0; k < out.size(); ++k) {
    double sum = 0.0, lo = summary_values(draws.front())[k], hi = lo;
    for (const auto& m : draws) {
      double v = summary_values(m)[k];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    // Rounding in the sum can push the mean an ulp past the extremes.
    double mean = std::clamp(sum / draws.size(), lo, hi);
    double ss = 0.0;
    for (const auto& m : draws) {
      double d = summary_values(m)[k] - mean;
      ss += d * d;
    }
    out[k] = {mean, draws.size() > 1 ? std::sqrt(ss / (draws.size() - 1)) : 0.0};
  }
  return out;
}

// Each draw samples `draw_size` paragraphs without replacement, independently
// of other draws, and scores both systems on that same subset.
inline BootstrapResult bootstrap_compare(const std::vector<AnnotatedParagraph>& gold,
                                         const std::vector<AnnotatedParagraph>& pred_a,
                                         const std::vector<AnnotatedParagraph>& pred_b,
                                         const BootstrapConfig& config = {}) {
  if (config.draws < 1) throw ArgumentError("bootstrap needs at least one draw");
  if (config.draw_size < 1 || config.draw_size > gold.size())
    throw ArgumentError("draw size " + std::to_string(config.draw_size) + " not in [1, " +
                        std::to_string(gold.size()) + "]");
  auto counts_a = per_paragraph_counts(gold, pred_a);
  auto counts_b = per_paragraph_counts(gold, pred_b);
  BootstrapResult r{config.draws, config.draw_size, config.seed, {}, {}, {}, {}};
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> idx(gold.size());
  for (std::size_t d = 0; d < config.draws; ++d) {
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < config.draw_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    EvalCounts a, b;
    for (std::size_t i = 0; i < config.draw_size; ++i) {
      a += counts_a[idx[i]];
      b += counts_b[idx[i]];
    }
    r.per_draw_a.push_back(metrics_from_counts(a));
    r.per_draw_b.push_back(metrics_from_counts(b));
  }
  r.summary_a = summarize(r.per_draw_a);
  r.summary_b = summarize(r.per_draw_b);
  return r;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::ordered_json to_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}, {"tp", p.tp}, {"fp", p.fp}, {"fn", p.fn}};
}

inline nlohmann::ordered_json to_json(const MetricSet& m) {
  nlohmann::ordered_json j;
  j["token_accuracy"] = m.token_accuracy;
  j["micro"] = to_json(m.micro);
  j["span"] = to_json(m.span);
  nlohmann::ordered_json pc = nlohmann::ordered_json::object();
  for (int c = 1; c < kNumClasses; ++c) pc[Label::from_index(c).str()] = to_json(m.per_class[c]);
  j["per_class"] = pc;
  nlohmann::ordered_json ps = nlohmann::ordered_json::object();
  for (int t = 0; t < kNumEntityTypes; ++t) ps[std::string(kEntityTypeNames[t])] = to_json(m.per_type_span[t]);
  j["per_type_span"] = ps;
  return j;
}

inline Prf prf_from_json(const nlohmann::json& j) {
  Prf p;
  p.tp = j.at("tp").get<std::size_t>();
  p.fp = j.at("fp").get<std::size_t>();
  p.fn = j.at("fn").get<std::size_t>();
  p.precision = j.at("precision").get<double>();
  p.recall = j.at("recall").get<double>();
  p.f1 = j.at("f1").get<double>();
  return p;
}

inline MetricSet metric_set_from_json(const nlohmann::json& j) {
  MetricSet m;
  m.token_accuracy = j.at("token_accuracy").get<double>();
  m.micro = prf_from_json(j.at("micro"));
  m.span = prf_from_json(j.at("span"));
  for (int c = 1; c < kNumClasses; ++c) m.per_class[c] = prf_from_json(j.at("per_class").at(Label::from_index(c).str()));
  for (int t = 0; t < kNumEntityTypes; ++t)
    m.per_type_span[t] = prf_from_json(j.at("per_type_span").at(std::string(kEntityTypeNames[t])));
  return m;
}

inline std::string render_table(const MetricSet& m) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "token accuracy  %.4f\n", m.token_accuracy);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-24s %9s %9s %9s %7s\n", "", "precision", "recall", "f1", "support");
  out += buf;
  auto row = [&](const std::string& name, const Prf& p) {
    std::snprintf(buf, sizeof buf, "%-24s %9.4f %9.4f %9.4f %7zu\n", name.c_str(), p.precision, p.recall, p.f1,
                  p.tp + p.fn);
    out += buf;
  };
  for (int c = 1; c < kNumClasses; ++c) row(Label::from_index(c).str(), m.per_class[c]);
  row("micro (token)", m.micro);
  for (int t = 0; t < kNumEntityTypes; ++t) row("span " + std::string(kEntityTypeNames[t]), m.per_type_span[t]);
  row("span (exact)", m.span);
  return out;
}

inline nlohmann::ordered_json to_json(const BootstrapResult& r) {
  nlohmann::ordered_json j;
  j["draws"] = r.draws;
  j["draw_size"] = r.draw_size;
  j["seed"] = r.seed;
  auto summary = [](const std::array<MeanStd, 7>& s) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < s.size(); ++k) o[kSummaryMetrics[k]] = {{"mean", s[k].mean}, {"std", s[k].stddev}};
    return o;
  };
  j["a"] = summary(r.summary_a);
  j["b"] = summary(r.summary_b);
  auto draws = [](const std::vector<MetricSet>& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& m : v) {
      nlohmann::ordered_json o;
      auto vals = summary_values(m);
      for (std::size_t k = 0; k < vals.size(); ++k) o[kSummaryMetrics[k]] = vals[k];
      a.push_back(o);
    }
    return a;
  };
  j["per_draw_a"] = draws(r.per_draw_a);
  j["per_draw_b"] = draws(r.per_draw_b);
  return j;
}

inline std::string render_comparison(const BootstrapResult& r, const std::string& name_a, const std::string& name_b) {
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof buf, "bootstrap: %zu draws of %zu paragraphs (seed %llu)\n", r.draws, r.draw_size,
                static_cast<unsigned long long>(r.seed));
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %22s %22s %10s\n", "metric", name_a.c_str(), name_b.c_str(), "delta");
  out += buf;
  for (std::size_t k = 0; k < kSummaryMetrics.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%-16s %13.4f ± %.4f %13.4f ± %.4f %+10.4f\n", kSummaryMetrics[k],
                  r.summary_a[k].mean, r.summary_a[k].stddev, r.summary_b[k].mean, r.summary_b[k].stddev,
                  r.summary_b[k].mean - r.summary_a[k].mean);
    out += buf;
  }
  return out;
}

// Counts per B-/I- label plus amb; O is not tracked.
struct LabelHistogram {
  std::array<std::size_t, kNumClasses> counts{};  // index 0 stays zero
  std::size_t amb = 0;

  std::size_t total() const {
    std::size_t t = amb;
    for (auto c : counts) t += c;
    return t;
  }
};

inline LabelHistogram label_counts(const std::vector<AnnotatedParagraph>& paragraphs) {
  LabelHistogram h;
  for (const auto& p : paragraphs)
    for (Label l : p.labels) {
      if (l.is_amb()) ++h.amb;
      else if (!l.is_outside()) ++h.counts[l.index()];
    }
  return h;
}

// Rows sorted by descending count, then label index; amb only when present.
inline std::string render_histogram(const LabelHistogram& h) {
  std::vector<std::pair<std::string, std::size_t>> rows;
  for (int c = 1; c < kNumClasses; ++c) rows.emplace_back(Label::from_index(c).str(), h.counts[c]);
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (h.amb) rows.emplace_back("amb", h.amb);
  std::string out;
  char buf[96];
  for (const auto& [name, n] : rows) {
    std::snprintf(buf, sizeof buf, "%-24s %8zu\n", name.c_str(), n);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-24s %8zu\n", "total", h.total());
  out += buf;
  return out;
}

inline nlohmann::ordered_json to_json(const LabelHistogram& h) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (int c = 1; c < kNumClasses; ++c) j[Label::from_index(c).str()] = h.counts[c];
  if (h.amb) j["amb"] = h.amb;
  return j;
}

// One line per paragraph. Words where gold or prediction is not O are marked:
//   plain:  [+word|LABEL] when correct, [-word|PREDICTED|GOLD] when not
//   color:  blue (correct) or red (incorrect) ANSI escapes around word/label
inline std::string diff_report(const std::vector<AnnotatedParagraph>& gold, const std::vector<AnnotatedParagraph>& pred,
                               std::ostream& sink, bool color = false) {
  check_aligned(gold, pred);
  std::string out;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold[i];
    for (std::size_t w = 0; w < g.words.size(); ++w) {
      if (w) out.push_back(' ');
      Label gl = g.labels[w], pl = pred[i].labels[w];
      if (gl.is_outside() && pl.is_outside()) {
        out += g.words[w];
        continue;
      }
      bool ok = gl == pl;
      if (color) {
        out += ok ? "\x1b[34m" : "\x1b[31m";
        out += g.words[w] + "/" + pl.str();
        if (!ok) out += "(" + gl.str() + ")";
        out += "\x1b[0m";
      } else if (ok) {
        out += "[+" + g.words[w] + "|" + gl.str() + "]";
      } else {
        out += "[-" + g.words[w] + "|" + pl.str() + "|" + gl.str() + "]";
      }
    }
    out.push_back('\n');
  }
  sink << out;
  return out;
}

// Recovers per-word marks from plain diff markup: nullopt for unmarked words,
// true for correct, false for incorrect.
inline std::vector<std::vector<std::optional<bool>>> parse_diff_markup(const std::string& text) {
  std::vector<std::vector<std::optional<bool>>> out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::optional<bool>> marks;
    std::size_t b = 0;
    while (b <= line.size()) {
      std::size_t e = line.find(' ', b);
      if (e == std::string::npos) e = line.size();
      std::string_view tok(line.data() + b, e - b);
      if (!tok.empty()) {
        bool marked = tok.size() >= 4 && tok[0] == '[' && (tok[1] == '+' || tok[1] == '-') && tok.back() == ']' &&
                      tok.find('|') != std::string_view::npos;
        if (marked) marks.emplace_back(tok[1] == '+');
        else marks.emplace_back(std::nullopt);
      }
      b = e + 1;
    }
    out.push_back(std::move(marks));
  }
  return out;
}

}  // namespace sciner
