#pragma once

// Word-level pseudo-labelling: subword probabilities are multiplied into word
// scores, each word is restricted to the classes that may legally follow the
// previous emitted label, and the best legal class is kept only when its
// score reaches the confidence threshold. Otherwise the word is `amb`.

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sciner/dataset.hpp"
#include "sciner/labels.hpp"
#include "sciner/tagger.hpp"

namespace sciner {

// Per-class product of subword probabilities; does not sum to 1 in general.
using WordProbs = std::array<double, kNumClasses>;

struct GateConfig {
  double gamma = 0.98;

  void check() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ArgumentError("gamma must lie in (0, 1]");
  }
};

inline WordProbs aggregate_word_probs(const std::vector<TokenProbs>& subwords) {
  if (subwords.empty()) throw ArgumentError("aggregate_word_probs: word has no subwords");
  WordProbs out = subwords.front();
  for (std::size_t i = 1; i < subwords.size(); ++i)
    for (int c = 0; c < kNumClasses; ++c) out[c] *= subwords[i][c];
  return out;
}

// Argmax over classes allowed after `prev`; ties go to the lowest index.
inline int legal_argmax(const WordProbs& scores, PrevLabel prev) {
  int best = -1;
  for (int c = 0; c < kNumClasses; ++c) {
    if (!is_legal_transition(prev, Label::from_index(c))) continue;
    if (best < 0 || scores[c] > scores[best]) best = c;
  }
  return best;  // O is always legal, so best >= 0
}

inline Label gate_label(const WordProbs& scores, const GateConfig& config = {}) {
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c)
    if (scores[c] > scores[best]) best = c;
  return scores[best] >= config.gamma ? Label::from_index(best) : Label::amb();
}

struct DecodedParagraph {
  std::vector<Label> labels;
  std::vector<double> confidence;  // score of the best legal class per word
};

inline DecodedParagraph constrained_decode_scored(const std::vector<WordProbs>& words, const GateConfig& config = {}) {
  DecodedParagraph out;
  out.labels.reserve(words.size());
  out.confidence.reserve(words.size());
  PrevLabel prev = kSequenceStart;
  for (const auto& scores : words) {
    int best = legal_argmax(scores, prev);
    Label l = scores[best] >= config.gamma ? Label::from_index(best) : Label::amb();
    out.labels.push_back(l);
    out.confidence.push_back(scores[best]);
    prev = l;
  }
  return out;
}

inline std::vector<Label> constrained_decode(const std::vector<WordProbs>& words, const GateConfig& config = {}) {
  return constrained_decode_scored(words, config).labels;
}

// Unlabelled paragraph awaiting annotation.
struct CorpusParagraph {
  std::string paper_id;
  std::size_t paragraph_index = 0;
  Tokens words;
};

inline std::vector<CorpusParagraph> corpus_paragraphs(const TokenizedDocument& doc) {
  std::vector<CorpusParagraph> out;
  for (std::size_t i = 0; i < doc.paragraphs.size(); ++i) out.push_back({doc.paper_id, i, doc.paragraphs[i]});
  return out;
}

class ProbabilitySource {
 public:
  virtual ~ProbabilitySource() = default;
  // Must be safe to call concurrently.
  virtual ParagraphProbs probs(const CorpusParagraph& p) const = 0;
};

class ModelProbabilitySource final : public ProbabilitySource {
 public:
  explicit ModelProbabilitySource(const TaggerModel& model) : model_(model) {}
  ParagraphProbs probs(const CorpusParagraph& p) const override { return predict_probs(model_, p.words); }

 private:
  const TaggerModel& model_;
};

class ExternalProbabilitySource final : public ProbabilitySource {
 public:
  explicit ExternalProbabilitySource(std::map<ParagraphKey, ParagraphProbs> grouped) : grouped_(std::move(grouped)) {}

  ParagraphProbs probs(const CorpusParagraph& p) const override {
    auto it = grouped_.find({p.paper_id, p.paragraph_index});
    if (it == grouped_.end())
      throw AlignmentError("no probabilities for " + p.paper_id + "/" + std::to_string(p.paragraph_index));
    return it->second;
  }

 private:
  std::map<ParagraphKey, ParagraphProbs> grouped_;
};

struct GateStats {
  std::size_t total_words = 0;
  std::size_t amb_words = 0;
  std::array<std::size_t, kNumClasses> accepted{};

  double amb_fraction() const { return total_words ? static_cast<double>(amb_words) / total_words : 0.0; }

  friend bool operator==(const GateStats&, const GateStats&) = default;
};

inline nlohmann::ordered_json to_json(const GateStats& s) {
  nlohmann::ordered_json j;
  j["total_words"] = s.total_words;
  j["amb_words"] = s.amb_words;
  j["amb_fraction"] = s.amb_fraction();
  nlohmann::ordered_json acc = nlohmann::ordered_json::object();
  for (int c = 0; c < kNumClasses; ++c) acc[Label::from_index(c).str()] = s.accepted[c];
  j["accepted"] = acc;
  return j;
}

inline GateStats gate_stats_from_json(const nlohmann::json& j) {
  GateStats s;
  s.total_words = j.at("total_words").get<std::size_t>();
  s.amb_words = j.at("amb_words").get<std::size_t>();
  for (int c = 0; c < kNumClasses; ++c) s.accepted[c] = j.at("accepted").at(Label::from_index(c).str()).get<std::size_t>();
  return s;
}

inline std::string render_text(const GateStats& s) {
  char buf[128];
  std::string out;
  std::snprintf(buf, sizeof buf, "words      %zu\namb        %zu (%.2f%%)\n", s.total_words, s.amb_words,
                100.0 * s.amb_fraction());
  out += buf;
  for (int c = 0; c < kNumClasses; ++c) {
    std::snprintf(buf, sizeof buf, "%-22s %zu\n", Label::from_index(c).str().c_str(), s.accepted[c]);
    out += buf;
  }
  return out;
}

struct AnnotationResult {
  std::vector<AnnotatedParagraph> paragraphs;
  GateStats stats;
};

inline AnnotatedParagraph annotate_paragraph(const ProbabilitySource& source, const CorpusParagraph& p,
                                             const GateConfig& config) {
  ParagraphProbs probs = source.probs(p);
  if (probs.size() != p.words.size())
    throw AlignmentError("paper " + p.paper_id + " paragraph " + std::to_string(p.paragraph_index) + ": " +
                         std::to_string(probs.size()) + " probability words for " + std::to_string(p.words.size()) +
                         " words");
  std::vector<WordProbs> word_scores;
  word_scores.reserve(probs.size());
  for (std::size_t w = 0; w < probs.size(); ++w) {
    if (probs[w].empty())
      throw AlignmentError("paper " + p.paper_id + " paragraph " + std::to_string(p.paragraph_index) + ": word " +
                           std::to_string(w) + " has no subword probabilities");
    word_scores.push_back(aggregate_word_probs(probs[w]));
  }
  DecodedParagraph d = constrained_decode_scored(word_scores, config);
  AnnotatedParagraph out;
  out.paper_id = p.paper_id;
  out.paragraph_index = p.paragraph_index;
  out.words = p.words;
  out.labels = std::move(d.labels);
  out.provenance = Provenance::automatic;
  out.confidence = std::move(d.confidence);
  return out;
}

// Output order matches input order for any `parallelism`.
inline AnnotationResult annotate_corpus(const ProbabilitySource& source, const std::vector<CorpusParagraph>& paragraphs,
                                        const GateConfig& config = {}, unsigned parallelism = 1) {
  config.check();
  AnnotationResult result;
  result.paragraphs.resize(paragraphs.size());
  unsigned workers = std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(paragraphs.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < paragraphs.size(); ++i) result.paragraphs[i] = annotate_paragraph(source, paragraphs[i], config);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < paragraphs.size(); i += workers)
            result.paragraphs[i] = annotate_paragraph(source, paragraphs[i], config);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (const auto& p : result.paragraphs) {
    for (Label l : p.labels) {
      ++result.stats.total_words;
      if (l.is_amb()) ++result.stats.amb_words;
      else ++result.stats.accepted[l.index()];
    }
  }
  return result;
}

}  // namespace sciner
