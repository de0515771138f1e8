#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "sciner/eval.hpp"
#include "sciner/synthetic.hpp"

using namespace sciner;

namespace {

const auto M = EntityType::MethodName;
const auto D = EntityType::DatasetName;

AnnotatedParagraph with_labels(std::vector<Label> labels) {
  AnnotatedParagraph p;
  p.paper_id = "p";
  for (std::size_t i = 0; i < labels.size(); ++i) p.words.push_back("w" + std::to_string(i));
  p.labels = std::move(labels);
  return p;
}

// Corrupts a random share of labels, keeping sequences legal.
std::vector<AnnotatedParagraph> noisy(const std::vector<AnnotatedParagraph>& gold, std::uint64_t seed, double rate) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(rate);
  auto out = gold;
  for (auto& p : out) {
    PrevLabel prev = kSequenceStart;
    for (auto& l : p.labels) {
      if (flip(rng)) {
        int c = static_cast<int>(rng() % 16);
        l = c == 15 ? Label::amb() : Label::from_index(c);
      }
      if (!is_legal_transition(prev, l)) l = Label::outside();
      prev = l;
    }
  }
  return out;
}

}  // namespace

TEST(Prf, Conventions) {
  auto both_empty = make_prf(0, 0, 0);
  EXPECT_EQ(both_empty.precision, 1.0);
  EXPECT_EQ(both_empty.recall, 1.0);
  EXPECT_EQ(both_empty.f1, 1.0);
  auto no_pred = make_prf(0, 0, 3);
  EXPECT_EQ(no_pred.precision, 0.0);
  EXPECT_EQ(no_pred.recall, 0.0);
  auto no_gold = make_prf(0, 2, 0);
  EXPECT_EQ(no_gold.precision, 0.0);
  EXPECT_EQ(no_gold.recall, 0.0);
  auto r = make_prf(3, 1, 2);
  EXPECT_DOUBLE_EQ(r.precision, 0.75);
  EXPECT_DOUBLE_EQ(r.recall, 0.6);
  EXPECT_DOUBLE_EQ(r.f1, 2 * 0.75 * 0.6 / 1.35);
}

TEST(Score, HandCountedExample) {
  auto gold = with_labels({Label::begin(M), Label::inside(M), Label::outside(), Label::begin(D)});
  auto pred = with_labels({Label::begin(M), Label::outside(), Label::outside(), Label::begin(M)});
  auto m = score({gold}, {pred});
  EXPECT_DOUBLE_EQ(m.token_accuracy, 0.5);
  // token: B-M tp; I-M fn; B-D fn, B-M fp
  EXPECT_EQ(m.micro.tp, 1u);
  EXPECT_EQ(m.micro.fp, 1u);
  EXPECT_EQ(m.micro.fn, 2u);
  EXPECT_EQ(m.per_class[Label::begin(M).index()].fp, 1u);
  // spans: gold {M[0,2), D[3,4)}, pred {M[0,1), M[3,4)}
  EXPECT_EQ(m.span.tp, 0u);
  EXPECT_EQ(m.span.fp, 2u);
  EXPECT_EQ(m.span.fn, 2u);
  EXPECT_EQ(m.span.f1, 0.0);
}

TEST(Score, AmbNeverMatches) {
  auto gold = with_labels({Label::begin(M), Label::outside()});
  auto pred = with_labels({Label::amb(), Label::amb()});
  auto m = score({gold}, {pred});
  EXPECT_EQ(m.token_accuracy, 0.0);
  EXPECT_EQ(m.micro.fn, 1u);
  EXPECT_EQ(m.micro.fp, 0u);
  EXPECT_EQ(m.span.fn, 1u);
}

TEST(Score, PerfectPrediction) {
  auto gold = synthetic_paragraphs(30, 1);
  auto m = score(gold, gold);
  EXPECT_EQ(m.token_accuracy, 1.0);
  EXPECT_EQ(m.micro.f1, 1.0);
  EXPECT_EQ(m.span.f1, 1.0);
}

TEST(Score, RejectsMisaligned) {
  auto gold = with_labels({Label::outside()});
  auto pred = with_labels({Label::outside(), Label::outside()});
  EXPECT_THROW(score({gold}, {pred}), ArgumentError);
  EXPECT_THROW(score({gold}, {}), ArgumentError);
  auto amb_gold = with_labels({Label::amb()});
  EXPECT_THROW(score({amb_gold}, {amb_gold}), ArgumentError);
}

TEST(Score, PermutationInvariant) {
  auto gold = synthetic_paragraphs(60, 2);
  auto pred = noisy(gold, 3, 0.2);
  auto base = score(gold, pred);
  std::mt19937_64 rng(4);
  std::vector<std::size_t> order(gold.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int t = 0; t < 5; ++t) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<AnnotatedParagraph> g, p;
    for (auto i : order) {
      g.push_back(gold[i]);
      p.push_back(pred[i]);
    }
    EXPECT_EQ(score(g, p), base);
  }
}

TEST(Bootstrap, DeterministicPerSeed) {
  auto gold = synthetic_paragraphs(120, 5);
  auto a = noisy(gold, 6, 0.1), b = noisy(gold, 7, 0.3);
  BootstrapConfig cfg{12, 50, 99};
  auto r1 = bootstrap_compare(gold, a, b, cfg);
  auto r2 = bootstrap_compare(gold, a, b, cfg);
  EXPECT_EQ(r1, r2);
  EXPECT_EQ(r1.per_draw_a.size(), 12u);
  cfg.seed = 100;
  EXPECT_FALSE(bootstrap_compare(gold, a, b, cfg) == r1);
}

TEST(Bootstrap, FullDrawEqualsScore) {
  auto gold = synthetic_paragraphs(80, 8);
  auto a = noisy(gold, 9, 0.15), b = noisy(gold, 10, 0.25);
  auto r = bootstrap_compare(gold, a, b, {5, gold.size(), 1});
  auto sa = score(gold, a), sb = score(gold, b);
  for (std::size_t d = 0; d < 5; ++d) {
    EXPECT_EQ(r.per_draw_a[d], sa);
    EXPECT_EQ(r.per_draw_b[d], sb);
  }
  EXPECT_EQ(r.summary_a[6].mean, sa.span.f1);
  EXPECT_EQ(r.summary_a[6].stddev, 0.0);
}

TEST(Bootstrap, MeanWithinRangeAndSampleStd) {
  auto gold = synthetic_paragraphs(100, 11);
  auto a = noisy(gold, 12, 0.2);
  auto r = bootstrap_compare(gold, a, a, {12, 30, 5});
  EXPECT_EQ(r.summary_a, r.summary_b);
  for (std::size_t k = 0; k < kSummaryMetrics.size(); ++k) {
    std::vector<double> v;
    for (const auto& m : r.per_draw_a) v.push_back(summary_values(m)[k]);
    double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
    EXPECT_GE(r.summary_a[k].mean, lo);
    EXPECT_LE(r.summary_a[k].mean, hi);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    EXPECT_NEAR(r.summary_a[k].stddev, std::sqrt(ss / (v.size() - 1)), 1e-12);
  }
}

TEST(Bootstrap, DrawsAreWithoutReplacement) {
  // Each gold paragraph holds exactly one span; a draw of n distinct
  // paragraphs therefore has exactly n gold spans.
  std::vector<AnnotatedParagraph> gold;
  for (int i = 0; i < 40; ++i) gold.push_back(with_labels({Label::begin(M), Label::outside()}));
  auto r = bootstrap_compare(gold, gold, gold, {20, 25, 3});
  for (const auto& m : r.per_draw_a) EXPECT_EQ(m.span.tp, 25u);
}

TEST(Bootstrap, RejectsBadParameters) {
  auto gold = synthetic_paragraphs(10, 1);
  EXPECT_THROW(bootstrap_compare(gold, gold, gold, {0, 5, 0}), ArgumentError);
  EXPECT_THROW(bootstrap_compare(gold, gold, gold, {1, 11, 0}), ArgumentError);
  EXPECT_THROW(bootstrap_compare(gold, gold, gold, {1, 0, 0}), ArgumentError);
}

TEST(Bootstrap, JsonCarriesParameters) {
  auto gold = synthetic_paragraphs(60, 1);
  auto j = to_json(bootstrap_compare(gold, gold, gold, {12, 50, 0}));
  EXPECT_EQ(j["draws"], 12);
  EXPECT_EQ(j["draw_size"], 50);
}

TEST(MetricJson, RoundTrip) {
  auto gold = synthetic_paragraphs(40, 3);
  auto m = score(gold, noisy(gold, 1, 0.3));
  auto back = metric_set_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(back, m);
}

TEST(Histogram, ExcludesOutside) {
  auto p = with_labels({Label::begin(M), Label::inside(M), Label::outside(), Label::amb(), Label::begin(D)});
  auto h = label_counts({p});
  EXPECT_EQ(h.counts[0], 0u);
  EXPECT_EQ(h.counts[Label::begin(M).index()], 1u);
  EXPECT_EQ(h.amb, 1u);
  EXPECT_EQ(h.total(), 4u);
  auto text = render_histogram(h);
  EXPECT_EQ(text.find("O "), std::string::npos);
  EXPECT_NE(text.find("amb"), std::string::npos);
  EXPECT_EQ(label_counts({}).total(), 0u);
}

TEST(Diff, MarkupMatchesCorrectness) {
  auto gold = synthetic_paragraphs(50, 4);
  auto pred = noisy(gold, 5, 0.25);
  std::ostringstream sink;
  auto text = diff_report(gold, pred, sink);
  EXPECT_EQ(sink.str(), text);
  auto marks = parse_diff_markup(text);
  ASSERT_EQ(marks.size(), gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ASSERT_EQ(marks[i].size(), gold[i].words.size());
    for (std::size_t w = 0; w < gold[i].words.size(); ++w) {
      Label g = gold[i].labels[w], p = pred[i].labels[w];
      if (g.is_outside() && p.is_outside()) EXPECT_FALSE(marks[i][w].has_value());
      else EXPECT_EQ(marks[i][w], std::optional<bool>(g == p));
    }
  }
}

TEST(Diff, ColorUsesAnsi) {
  auto gold = with_labels({Label::begin(M), Label::begin(D)});
  auto pred = with_labels({Label::begin(M), Label::outside()});
  std::ostringstream sink;
  auto text = diff_report({gold}, {pred}, sink, true);
  EXPECT_NE(text.find("\x1b[34mw0/B-MethodName\x1b[0m"), std::string::npos);
  EXPECT_NE(text.find("\x1b[31mw1/O(B-DatasetName)\x1b[0m"), std::string::npos);
}
