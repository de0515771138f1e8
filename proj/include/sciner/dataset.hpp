#pragma once

// Annotated paragraphs, corpus partitioning, the manual train/test split and
// the manual+auto merge used for retraining.
//
// Annotation file format (UTF-8, LF):
//
//   # paper_id=<id> paragraph=<n> annotator=<name> provenance=<manual|auto>
//   <word>\t<label>[\t<confidence>]
//   ...
//   <blank line>
//
// The header line and each of its keys are optional. The confidence column is
// written for auto paragraphs only and is required there.

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sciner/labels.hpp"
#include "sciner/paper_record.hpp"
#include "sciner/tokenize.hpp"

namespace sciner {

enum class Provenance { manual, automatic, unannotated };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::manual: return "manual";
    case Provenance::automatic: return "auto";
    case Provenance::unannotated: return "unannotated";
  }
  return "manual";
}

struct AnnotatedParagraph {
  std::string paper_id;
  std::size_t paragraph_index = 0;
  Tokens words;
  std::vector<Label> labels;
  Provenance provenance = Provenance::manual;
  std::optional<std::string> annotator;
  std::vector<double> confidence;  // one per word iff provenance == automatic

  friend bool operator==(const AnnotatedParagraph&, const AnnotatedParagraph&) = default;
};

// Throws ArgumentError when a paragraph breaks the stored-paragraph invariants.
inline void check_paragraph(const AnnotatedParagraph& p) {
  auto where = [&] { return " (paper " + p.paper_id + " paragraph " + std::to_string(p.paragraph_index) + ")"; };
  if (p.provenance == Provenance::unannotated) {
    if (!p.labels.empty()) throw ArgumentError("unannotated paragraph carries labels" + where());
    return;
  }
  if (p.words.size() != p.labels.size()) throw ArgumentError("word/label count mismatch" + where());
  if (p.provenance == Provenance::manual) {
    for (Label l : p.labels)
      if (l.is_amb()) throw ArgumentError("manual paragraph contains amb" + where());
    if (!p.confidence.empty()) throw ArgumentError("manual paragraph carries confidences" + where());
  } else if (p.confidence.size() != p.words.size()) {
    throw ArgumentError("auto paragraph needs one confidence per word" + where());
  }
  for (double c : p.confidence)
    if (!(c >= 0.0 && c <= 1.0)) throw ArgumentError("confidence outside [0,1]" + where());
  auto v = validate_sequence(p.labels);
  if (!v.empty()) throw ArgumentError("illegal transition at " + describe(v.front()) + where());
}

struct CorpusPartition {
  std::set<std::string> manual;
  std::set<std::string> automatic;
  std::set<std::string> unannotated;
};

inline bool is_auto_candidate(const PaperRecord& r) {
  Venue v = r.venue();
  auto year = r.parsed_year();
  return v != Venue::OTHER && year && (*year == 2022 || *year == 2023);
}

inline CorpusPartition partition_corpus(const std::vector<PaperRecord>& catalog,
                                        const std::set<std::string>& manual_ids) {
  std::set<std::string> ids;
  for (const auto& r : catalog) ids.insert(r.paper_id());
  for (const auto& m : manual_ids)
    if (!ids.count(m)) throw ArgumentError("manual id not in catalog: " + m);
  CorpusPartition part;
  part.manual = manual_ids;
  for (const auto& r : catalog) {
    std::string id = r.paper_id();
    if (manual_ids.count(id)) continue;
    (is_auto_candidate(r) ? part.automatic : part.unannotated).insert(id);
  }
  // A paper id listed twice in the catalog with different metadata lands in
  // the first category it qualified for.
  for (const auto& id : part.automatic) part.unannotated.erase(id);
  return part;
}

struct TrainTestSplit {
  std::vector<AnnotatedParagraph> train;
  std::vector<AnnotatedParagraph> test;
  std::set<std::string> test_papers;
};

// Holds out `held_out_per_annotator` whole papers per annotator, drawn with a
// seeded shuffle of each annotator's sorted paper ids.
inline TrainTestSplit split_train_test(
    const std::map<std::string, std::vector<AnnotatedParagraph>>& by_annotator,
    std::size_t held_out_per_annotator = 2, std::uint64_t seed = 0) {
  TrainTestSplit split;
  std::mt19937_64 rng(seed);
  for (const auto& [annotator, paragraphs] : by_annotator) {
    std::vector<std::string> papers;
    for (const auto& p : paragraphs) papers.push_back(p.paper_id);
    std::sort(papers.begin(), papers.end());
    papers.erase(std::unique(papers.begin(), papers.end()), papers.end());
    if (papers.size() <= held_out_per_annotator)
      throw ArgumentError("annotator '" + annotator + "' has " + std::to_string(papers.size()) +
                          " papers; need more than " + std::to_string(held_out_per_annotator));
    std::shuffle(papers.begin(), papers.end(), rng);
    split.test_papers.insert(papers.begin(), papers.begin() + held_out_per_annotator);
  }
  for (const auto& [annotator, paragraphs] : by_annotator)
    for (const auto& p : paragraphs)
      (split.test_papers.count(p.paper_id) ? split.test : split.train).push_back(p);
  return split;
}

inline std::map<std::string, std::vector<AnnotatedParagraph>> group_by_annotator(
    const std::vector<AnnotatedParagraph>& paragraphs) {
  std::map<std::string, std::vector<AnnotatedParagraph>> out;
  for (const auto& p : paragraphs) out[p.annotator.value_or("")].push_back(p);
  return out;
}

enum class AmbPolicy { ignore_positions, drop_paragraph };

inline std::optional<AmbPolicy> parse_amb_policy(std::string_view s) {
  if (s == "ignore_positions") return AmbPolicy::ignore_positions;
  if (s == "drop_paragraph") return AmbPolicy::drop_paragraph;
  return std::nullopt;
}

inline std::string_view to_string(AmbPolicy p) {
  return p == AmbPolicy::ignore_positions ? "ignore_positions" : "drop_paragraph";
}

// A training sequence: all words give context, only positions with
// mask[i] == true contribute to the loss.
struct TrainingParagraph {
  Tokens words;
  std::vector<Label> labels;
  std::vector<bool> mask;

  std::size_t masked_count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), false));
  }
};

using TrainingSet = std::vector<TrainingParagraph>;

inline TrainingParagraph to_training(const AnnotatedParagraph& p) {
  TrainingParagraph t{p.words, p.labels, std::vector<bool>(p.labels.size(), true)};
  for (std::size_t i = 0; i < t.labels.size(); ++i)
    if (t.labels[i].is_amb()) t.mask[i] = false;
  return t;
}

inline TrainingSet merge_for_retraining(const std::vector<AnnotatedParagraph>& manual,
                                        const std::vector<AnnotatedParagraph>& automatic,
                                        AmbPolicy policy = AmbPolicy::ignore_positions) {
  TrainingSet out;
  out.reserve(manual.size() + automatic.size());
  for (const auto& p : manual) out.push_back(to_training(p));
  for (const auto& p : automatic) {
    if (p.provenance != Provenance::automatic)
      throw ArgumentError("merge_for_retraining: auto input has provenance " + std::string(to_string(p.provenance)));
    bool has_amb = std::any_of(p.labels.begin(), p.labels.end(), [](Label l) { return l.is_amb(); });
    if (has_amb && policy == AmbPolicy::drop_paragraph) continue;
    out.push_back(to_training(p));
  }
  return out;
}

namespace detail {

inline std::string format_confidence(double c) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", c);
  return buf;
}

}  // namespace detail

inline void write_annotations(const std::vector<AnnotatedParagraph>& paragraphs, std::ostream& os) {
  for (const auto& p : paragraphs) {
    check_paragraph(p);
    if (p.provenance == Provenance::unannotated)
      throw ArgumentError("cannot write an unannotated paragraph as annotations");
    if (p.words.empty()) throw ArgumentError("cannot write an empty paragraph");
    for (const auto& w : p.words)
      if (w.empty() || w.find_first_of("\t\n\r") != std::string::npos)
        throw ArgumentError("word '" + w + "' cannot be stored in an annotation file");
    if (p.paper_id.find_first_of(" \t\n") != std::string::npos ||
        (p.annotator && (p.annotator->empty() || p.annotator->find_first_of(" \t\n") != std::string::npos)))
      throw ArgumentError("paper id and annotator must be non-empty and whitespace-free");
    os << "# ";
    if (!p.paper_id.empty()) os << "paper_id=" << p.paper_id << ' ';
    os << "paragraph=" << p.paragraph_index;
    if (p.annotator) os << " annotator=" << *p.annotator;
    os << " provenance=" << to_string(p.provenance) << '\n';
    for (std::size_t i = 0; i < p.words.size(); ++i) {
      os << p.words[i] << '\t' << p.labels[i].str();
      if (p.provenance == Provenance::automatic) os << '\t' << detail::format_confidence(p.confidence[i]);
      os << '\n';
    }
    os << '\n';
  }
  if (!os) throw IoError("annotation write failed");
}

inline std::vector<AnnotatedParagraph> read_annotations(std::istream& is,
                                                        const std::string& source_name = "<input>") {
  std::vector<AnnotatedParagraph> out;
  std::optional<AnnotatedParagraph> cur;
  std::size_t cur_line = 0, lineno = 0;
  std::vector<std::size_t> word_lines;
  auto err = [&](std::size_t line, const std::string& msg) {
    return FormatError(source_name + ":" + std::to_string(line) + ": " + msg);
  };
  auto finish = [&] {
    if (!cur) return;
    if (cur->words.empty()) throw err(cur_line, "paragraph header without words");
    if (cur->provenance == Provenance::automatic && cur->confidence.size() != cur->words.size())
      throw err(cur_line, "auto paragraph needs a confidence on every line");
    auto v = validate_sequence(cur->labels);
    if (!v.empty()) throw err(word_lines[v.front().position], "illegal transition at " + describe(v.front()));
    out.push_back(std::move(*cur));
    cur.reset();
  };
  auto start = [&](std::size_t line) {
    cur.emplace();
    cur->paragraph_index = out.size();
    cur_line = line;
    word_lines.clear();
  };

  std::string line;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      finish();
      continue;
    }
    if (line.find('\t') == std::string::npos) {
      if (line[0] != '#') throw err(lineno, "expected word<TAB>label");
      finish();
      start(lineno);
      std::istringstream kv(line.substr(1));
      std::string item;
      while (kv >> item) {
        auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        std::string key = item.substr(0, eq), value = item.substr(eq + 1);
        if (key == "paper_id") {
          cur->paper_id = value;
        } else if (key == "paragraph") {
          try {
            cur->paragraph_index = std::stoul(value);
          } catch (...) {
            throw err(lineno, "bad paragraph index '" + value + "'");
          }
        } else if (key == "annotator") {
          cur->annotator = value;
        } else if (key == "provenance") {
          if (value == "manual") cur->provenance = Provenance::manual;
          else if (value == "auto") cur->provenance = Provenance::automatic;
          else throw err(lineno, "unknown provenance '" + value + "'");
        }
      }
      continue;
    }
    if (!cur) start(lineno);
    std::vector<std::string> cols;
    std::size_t b = 0;
    while (true) {
      std::size_t t = line.find('\t', b);
      cols.push_back(line.substr(b, t == std::string::npos ? std::string::npos : t - b));
      if (t == std::string::npos) break;
      b = t + 1;
    }
    if (cols.size() < 2 || cols.size() > 3 || cols[0].empty())
      throw err(lineno, "expected word<TAB>label[<TAB>confidence]");
    auto label = parse_label(cols[1]);
    if (!label) throw err(lineno, "unknown label '" + cols[1] + "'");
    if (label->is_amb() && cur->provenance == Provenance::manual)
      throw err(lineno, "amb label in a manual paragraph");
    if (cols.size() == 3) {
      if (cur->provenance != Provenance::automatic) throw err(lineno, "confidence column on a manual paragraph");
      try {
        std::size_t used = 0;
        double c = std::stod(cols[2], &used);
        if (used != cols[2].size() || !(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("range");
        cur->confidence.push_back(c);
      } catch (const std::exception&) {
        throw err(lineno, "bad confidence '" + cols[2] + "'");
      }
    }
    cur->words.push_back(cols[0]);
    cur->labels.push_back(*label);
    word_lines.push_back(lineno);
  }
  finish();
  return out;
}

// Partition file: one `category<TAB>paper_id` line per paper, categories
// manual, auto, unannotated.
inline void write_partition(const CorpusPartition& part, std::ostream& os) {
  for (const auto& id : part.manual) os << "manual\t" << id << '\n';
  for (const auto& id : part.automatic) os << "auto\t" << id << '\n';
  for (const auto& id : part.unannotated) os << "unannotated\t" << id << '\n';
}

inline CorpusPartition read_partition(std::istream& is, const std::string& source_name = "<partition>") {
  CorpusPartition part;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(source_name + ":" + std::to_string(lineno) + ": expected category<TAB>paper_id");
    std::string cat = line.substr(0, tab), id = line.substr(tab + 1);
    if (cat == "manual") part.manual.insert(id);
    else if (cat == "auto") part.automatic.insert(id);
    else if (cat == "unannotated") part.unannotated.insert(id);
    else throw FormatError(source_name + ":" + std::to_string(lineno) + ": unknown category '" + cat + "'");
  }
  return part;
}

// One id per line; blank lines and `#` comments ignored.
inline std::set<std::string> read_id_list(std::istream& is) {
  std::set<std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    auto e = line.find_last_not_of(" \t\r");
    out.insert(line.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace sciner
