#pragma once

// Template-generated paragraphs with known gold labels, for benchmarks and
// scale tests. Entities come from small per-type dictionaries (several are
// multi-word); values are drawn numerically so they never repeat verbatim.

#include <array>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sciner/autoannotate.hpp"
#include "sciner/dataset.hpp"
#include "sciner/labels.hpp"
#include "sciner/paper_record.hpp"

namespace sciner {

namespace synth {

inline const std::vector<std::string_view>& dictionary(EntityType t) {
  static const std::array<std::vector<std::string_view>, kNumEntityTypes> kDict = {{
      {"BERT", "RoBERTa", "SciBERT", "BiLSTM-CRF", "conditional random field", "graph attention network", "T5",
       "XLNet", "ELMo", "GPT-2", "span-based tagger", "pointer network", "ALBERT", "DeBERTa", "Transformer"},
      {"named entity recognition", "relation extraction", "machine translation", "question answering",
       "text classification", "summarization", "dependency parsing", "coreference resolution", "sentiment analysis",
       "entity linking", "natural language inference", "semantic role labeling"},
      {"SciERC", "CoNLL-2003", "SQuAD", "OntoNotes", "WMT14", "GLUE", "MultiNLI", "SNLI", "ACE05", "Penn Treebank",
       "CNN/DailyMail", "TACRED", "WikiText-103", "SemEval-2017"},
      {"F1", "accuracy", "BLEU", "ROUGE-L", "precision", "recall", "exact match", "perplexity", "macro F1", "METEOR",
       "AUC", "word error rate"},
      {},  // MetricValue: numeric, generated
      {"learning rate", "batch size", "dropout", "weight decay", "warmup steps", "hidden size", "number of epochs",
       "beam size", "max sequence length", "label smoothing", "gradient clipping", "number of layers"},
      {},  // HyperparameterValue: numeric, generated
  }};
  return kDict[static_cast<int>(t)];
}

inline const std::vector<std::string_view>& filler() {
  static const std::vector<std::string_view> kFiller = {
      "Prior work has studied this problem extensively .",
      "We describe the experimental setup below .",
      "Results are averaged over three runs .",
      "This section outlines the main findings .",
      "All code and data will be released publicly .",
      "Our analysis reveals several interesting trends .",
      "We leave a deeper study to future work .",
      "The remaining details follow standard practice .",
  };
  return kFiller;
}

// Templates mix fixed words with {Type} slots; the slot name is the entity
// type name.
inline const std::vector<std::string_view>& templates() {
  static const std::vector<std::string_view> kTemplates = {
      "We apply {MethodName} to {TaskName} and evaluate on {DatasetName} .",
      "On {DatasetName} , {MethodName} reaches a {MetricName} of {MetricValue} .",
      "We set the {HyperparameterName} to {HyperparameterValue} for all runs .",
      "Our model uses a {HyperparameterName} of {HyperparameterValue} and a {HyperparameterName} of {HyperparameterValue} .",
      "For {TaskName} we report {MetricName} on the {DatasetName} test set .",
      "{MethodName} outperforms {MethodName} by {MetricValue} {MetricName} points .",
      "The best {MetricName} score on {DatasetName} is {MetricValue} .",
      "We fine-tune {MethodName} with {HyperparameterName} {HyperparameterValue} .",
      "Experiments on {DatasetName} show that {MethodName} improves {TaskName} .",
      "Compared to {MethodName} , our approach yields {MetricValue} higher {MetricName} .",
  };
  return kTemplates;
}

template <class Rng>
std::string metric_value(Rng& rng) {
  std::uniform_int_distribution<int> kind(0, 2), whole(10, 98), frac(0, 99);
  char buf[32];
  switch (kind(rng)) {
    case 0: std::snprintf(buf, sizeof buf, "%d.%d", whole(rng), frac(rng) % 10); break;
    case 1: std::snprintf(buf, sizeof buf, "%d.%02d", whole(rng), frac(rng)); break;
    default: std::snprintf(buf, sizeof buf, "0.%02d%d", whole(rng), frac(rng) % 10); break;
  }
  return buf;
}

template <class Rng>
std::string hyperparameter_value(Rng& rng) {
  std::uniform_int_distribution<int> kind(0, 3), small(1, 9), big(2, 10);
  char buf[32];
  switch (kind(rng)) {
    case 0: std::snprintf(buf, sizeof buf, "%de-%d", small(rng), small(rng) % 6 + 1); break;
    case 1: std::snprintf(buf, sizeof buf, "%d", 1 << big(rng)); break;
    case 2: std::snprintf(buf, sizeof buf, "0.%d", small(rng)); break;
    default: std::snprintf(buf, sizeof buf, "%d", small(rng) * 100); break;
  }
  return buf;
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace synth

struct SyntheticConfig {
  std::size_t min_sentences = 2;
  std::size_t max_sentences = 5;
  double filler_rate = 0.3;          // probability a sentence is entity-free
  std::size_t paragraphs_per_paper = 10;
};

// Paragraph i is a function of (seed, i) only, so prefixes of a larger draw
// equal smaller draws.
inline AnnotatedParagraph synthetic_paragraph(std::uint64_t seed, std::size_t i, const SyntheticConfig& config = {}) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + i);
  AnnotatedParagraph p;
  std::size_t paper = i / config.paragraphs_per_paper;
  p.paper_id = hash_url("synthetic://" + std::to_string(seed) + "/" + std::to_string(paper));
  p.paragraph_index = i % config.paragraphs_per_paper;
  p.provenance = Provenance::manual;
  p.annotator = "synthetic";
  std::uniform_int_distribution<std::size_t> n_sent(config.min_sentences, config.max_sentences);
  std::bernoulli_distribution is_filler(config.filler_rate);
  auto pick = [&](const auto& v) -> std::string_view {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  auto emit = [&](const std::vector<std::string>& words, std::optional<EntityType> type) {
    for (std::size_t k = 0; k < words.size(); ++k) {
      p.words.push_back(words[k]);
      p.labels.push_back(!type ? Label::outside() : k == 0 ? Label::begin(*type) : Label::inside(*type));
    }
  };
  std::size_t sentences = n_sent(rng);
  for (std::size_t s = 0; s < sentences; ++s) {
    if (is_filler(rng)) {
      emit(synth::split_words(pick(synth::filler())), std::nullopt);
      continue;
    }
    for (const auto& piece : synth::split_words(pick(synth::templates()))) {
      if (piece.size() < 3 || piece.front() != '{' || piece.back() != '}') {
        emit({piece}, std::nullopt);
        continue;
      }
      auto type = parse_entity_type(std::string_view(piece).substr(1, piece.size() - 2));
      if (!type) throw std::logic_error("bad template slot " + piece);
      std::string text;
      if (*type == EntityType::MetricValue) text = synth::metric_value(rng);
      else if (*type == EntityType::HyperparameterValue) text = synth::hyperparameter_value(rng);
      else text = std::string(pick(synth::dictionary(*type)));
      emit(synth::split_words(text), type);
    }
  }
  return p;
}

inline std::vector<AnnotatedParagraph> synthetic_paragraphs(std::size_t n, std::uint64_t seed,
                                                            const SyntheticConfig& config = {}) {
  std::vector<AnnotatedParagraph> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(synthetic_paragraph(seed, i, config));
  return out;
}

inline std::vector<CorpusParagraph> strip_labels(const std::vector<AnnotatedParagraph>& paragraphs) {
  std::vector<CorpusParagraph> out;
  out.reserve(paragraphs.size());
  for (const auto& p : paragraphs) out.push_back({p.paper_id, p.paragraph_index, p.words});
  return out;
}

struct SyntheticBenchmark {
  std::vector<AnnotatedParagraph> manual;
  std::vector<AnnotatedParagraph> auto_gold;  // gold labels of the auto corpus, for scoring only
  std::vector<CorpusParagraph> auto_corpus;
  std::vector<AnnotatedParagraph> test;
};

inline SyntheticBenchmark make_benchmark(std::uint64_t seed, std::size_t manual = 100, std::size_t automatic = 1700,
                                         std::size_t test = 200) {
  auto all = synthetic_paragraphs(manual + automatic + test, seed);
  SyntheticBenchmark b;
  b.manual.assign(all.begin(), all.begin() + manual);
  b.auto_gold.assign(all.begin() + manual, all.begin() + manual + automatic);
  b.test.assign(all.begin() + manual + automatic, all.end());
  b.auto_corpus = strip_labels(b.auto_gold);
  return b;
}

// Precision of the non-amb labels in `annotated` against `gold`, per word.
struct GatedPrecision {
  std::size_t accepted = 0;
  std::size_t correct = 0;
  double precision() const { return accepted ? static_cast<double>(correct) / accepted : 1.0; }
};

inline GatedPrecision gated_precision(const std::vector<AnnotatedParagraph>& gold,
                                      const std::vector<AnnotatedParagraph>& annotated) {
  if (gold.size() != annotated.size()) throw ArgumentError("gated_precision: paragraph count mismatch");
  GatedPrecision r;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].labels.size() != annotated[i].labels.size())
      throw ArgumentError("gated_precision: length mismatch in paragraph " + std::to_string(i));
    for (std::size_t w = 0; w < gold[i].labels.size(); ++w) {
      if (annotated[i].labels[w].is_amb()) continue;
      ++r.accepted;
      if (annotated[i].labels[w] == gold[i].labels[w]) ++r.correct;
    }
  }
  return r;
}

}  // namespace sciner
