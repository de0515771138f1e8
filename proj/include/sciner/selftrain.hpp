#pragma once

// Iterative auto-annotation:
//   1. train on manual paragraphs
//   2. pseudo-label the auto corpus through the confidence gate
//   3. continue training the step-1 model on manual + gated auto paragraphs
//   4. repeat
//
// Every random choice derives from LoopConfig::seed, so a run is a pure
// function of (data, config). With a run directory each finished iteration
// persists its models and record, and a rerun resumes after the last one.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sciner/autoannotate.hpp"
#include "sciner/dataset.hpp"
#include "sciner/eval.hpp"
#include "sciner/fileio.hpp"
#include "sciner/hash.hpp"
#include "sciner/tagger.hpp"

namespace sciner {

struct LoopConfig {
  int iterations = 2;
  TrainConfig step1{20, 1e-4, 8, 0};
  TrainConfig step3{5, 1e-4, 8, 0};
  GateConfig gate{0.98};
  AmbPolicy amb_policy = AmbPolicy::ignore_positions;
  std::uint64_t seed = 0;
  // When set, step 1 of iteration k > 1 starts from iteration k-1's final
  // model instead of a zero model.
  bool carry_forward = false;
  std::size_t hash_dim = kDefaultHashDim;
  unsigned parallelism = 1;  // does not affect results

  void check() const {
    if (iterations < 1) throw ArgumentError("iterations must be >= 1");
    step1.check();
    step3.check();
    gate.check();
    if (hash_dim == 0) throw ArgumentError("hash_dim must be > 0");
  }

  // Every result-affecting field, in a fixed order. Train-config seeds are
  // omitted: they are derived from `seed`.
  std::string canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "iterations=" << iterations << "\nstep1=" << step1.epochs << ',' << step1.learning_rate << ','
       << step1.batch_size << "\nstep3=" << step3.epochs << ',' << step3.learning_rate << ',' << step3.batch_size
       << "\ngamma=" << gate.gamma << "\namb_policy=" << to_string(amb_policy) << "\nseed=" << seed
       << "\ncarry_forward=" << carry_forward << "\nhash_dim=" << hash_dim << '\n';
    return os.str();
  }
};

// SplitMix64 finalizer over (seed, iteration, step).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t iteration, std::uint64_t step) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (1 + iteration * 16 + step);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct IterationRecord {
  int iteration = 0;  // 1-based
  GateStats gate;
  std::optional<MetricSet> step1_metrics;  // on the held-out test set, when given
  std::optional<MetricSet> step3_metrics;
  std::string model_path;  // empty without a run directory
  double duration_seconds = 0.0;
  std::vector<std::string> warnings;

  // Equality on everything except wall-clock time.
  bool same_results(const IterationRecord& o) const {
    return iteration == o.iteration && gate == o.gate && step1_metrics == o.step1_metrics &&
           step3_metrics == o.step3_metrics && warnings == o.warnings;
  }
};

inline nlohmann::ordered_json to_json(const IterationRecord& r) {
  nlohmann::ordered_json j;
  j["iteration"] = r.iteration;
  j["gate"] = to_json(r.gate);
  j["step1_metrics"] = r.step1_metrics ? to_json(*r.step1_metrics) : nlohmann::ordered_json();
  j["step3_metrics"] = r.step3_metrics ? to_json(*r.step3_metrics) : nlohmann::ordered_json();
  j["model_path"] = r.model_path;
  j["duration_seconds"] = r.duration_seconds;
  j["warnings"] = r.warnings;
  return j;
}

inline IterationRecord iteration_record_from_json(const nlohmann::json& j) {
  IterationRecord r;
  r.iteration = j.at("iteration").get<int>();
  r.gate = gate_stats_from_json(j.at("gate"));
  if (!j.at("step1_metrics").is_null()) r.step1_metrics = metric_set_from_json(j.at("step1_metrics"));
  if (!j.at("step3_metrics").is_null()) r.step3_metrics = metric_set_from_json(j.at("step3_metrics"));
  r.model_path = j.at("model_path").get<std::string>();
  r.duration_seconds = j.at("duration_seconds").get<double>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

// Labels every word with the best legal class, without the confidence gate.
inline std::vector<AnnotatedParagraph> tag_paragraphs(const TaggerModel& model,
                                                      const std::vector<AnnotatedParagraph>& paragraphs,
                                                      unsigned parallelism = 1) {
  std::vector<CorpusParagraph> corpus;
  corpus.reserve(paragraphs.size());
  for (const auto& p : paragraphs) corpus.push_back({p.paper_id, p.paragraph_index, p.words});
  ModelProbabilitySource source(model);
  std::vector<AnnotatedParagraph> out(corpus.size());
  auto run = [&](std::size_t i) {
    const auto probs = source.probs(corpus[i]);
    std::vector<WordProbs> scores;
    for (const auto& w : probs) scores.push_back(aggregate_word_probs(w));
    auto& o = out[i];
    o = paragraphs[i];
    o.labels = constrained_decode(scores, GateConfig{0.0});
    o.provenance = Provenance::manual;
    o.confidence.clear();
  };
  unsigned workers = std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(corpus.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < corpus.size(); ++i) run(i);
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < corpus.size(); i += workers) run(i);
    });
  for (auto& t : pool) t.join();
  return out;
}

inline TrainingSet training_set(const std::vector<AnnotatedParagraph>& paragraphs) {
  TrainingSet out;
  out.reserve(paragraphs.size());
  for (const auto& p : paragraphs) out.push_back(to_training(p));
  return out;
}

struct IterationOutput {
  TaggerModel step1_model;
  TaggerModel model;  // step-3 result
  std::vector<AnnotatedParagraph> auto_annotations;
  IterationRecord record;
};

// One pass of steps 1-3. `init` seeds step 1 (zero model when absent).
inline IterationOutput run_iteration(const std::vector<AnnotatedParagraph>& manual,
                                     const std::vector<CorpusParagraph>& auto_corpus, const LoopConfig& config,
                                     int iteration = 1, std::optional<TaggerModel> init = std::nullopt,
                                     const std::vector<AnnotatedParagraph>* test = nullptr) {
  config.check();
  if (manual.empty()) throw ArgumentError("run_iteration: manual training set is empty");
  auto t0 = std::chrono::steady_clock::now();
  IterationRecord rec;
  rec.iteration = iteration;

  TrainConfig step1 = config.step1;
  step1.seed = derive_seed(config.seed, iteration, 1);
  TaggerModel step1_model = train(training_set(manual), step1, std::move(init), config.hash_dim);

  AnnotationResult annotated =
      annotate_corpus(ModelProbabilitySource(step1_model), auto_corpus, config.gate, config.parallelism);
  rec.gate = annotated.stats;

  TrainingSet merged;
  if (rec.gate.total_words > 0 && rec.gate.amb_words == rec.gate.total_words) {
    rec.warnings.push_back("gate rejected every auto-annotated word; step 3 trains on manual data only");
    merged = training_set(manual);
  } else {
    merged = merge_for_retraining(manual, annotated.paragraphs, config.amb_policy);
  }
  TrainConfig step3 = config.step3;
  step3.seed = derive_seed(config.seed, iteration, 3);
  TaggerModel final_model = train(merged, step3, step1_model, config.hash_dim);

  if (test) {
    rec.step1_metrics = score(*test, tag_paragraphs(step1_model, *test, config.parallelism));
    rec.step3_metrics = score(*test, tag_paragraphs(final_model, *test, config.parallelism));
  }
  rec.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(step1_model), std::move(final_model), std::move(annotated.paragraphs), std::move(rec)};
}

struct LoopResult {
  std::vector<IterationRecord> records;
  TaggerModel baseline;     // iteration-1 step-1 model (manual data only)
  TaggerModel final_model;  // last iteration's step-3 model
  std::optional<fs::path> run_dir;
  int resumed_iterations = 0;
};

struct LoopRunOptions {
  std::optional<fs::path> run_root;  // run directory is <run_root>/run-<hash>
  int stop_after = 0;                // stop after this many new iterations (0 = no limit)
  // Called after each newly computed iteration (not for resumed ones).
  std::function<void(const IterationOutput&)> on_iteration;
};

inline std::string data_fingerprint(const std::vector<AnnotatedParagraph>& manual,
                                    const std::vector<CorpusParagraph>& auto_corpus,
                                    const std::vector<AnnotatedParagraph>* test) {
  Sha256 h;
  auto add_words = [&](const Tokens& words) {
    for (const auto& w : words) h.update(w).update(std::string_view("\x1f", 1));
    h.update("\n");
  };
  for (const auto& p : manual) {
    add_words(p.words);
    for (Label l : p.labels) h.update(l.str()).update(" ");
    h.update("\n");
  }
  h.update("--auto--\n");
  for (const auto& p : auto_corpus) add_words(p.words);
  h.update("--test--\n");
  if (test)
    for (const auto& p : *test) {
      add_words(p.words);
      for (Label l : p.labels) h.update(l.str()).update(" ");
    }
  return h.hex();
}

inline std::string run_id(const LoopConfig& config, const std::string& fingerprint) {
  return "run-" + Sha256::of(config.canonical() + "data=" + fingerprint + "\n").substr(0, 16);
}

namespace detail {

inline void save_model_file(const TaggerModel& m, const fs::path& path) {
  atomic_write(path, [&](std::ostream& os) { save_model(m, os); }, true);
}

inline TaggerModel load_model_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model: " + path.string());
  return load_model(in);
}

inline fs::path record_path(const fs::path& dir, int k) { return dir / ("iteration-" + std::to_string(k) + ".json"); }
inline fs::path step1_path(const fs::path& dir, int k) { return dir / ("iteration-" + std::to_string(k) + "-step1.model"); }
inline fs::path step3_path(const fs::path& dir, int k) { return dir / ("iteration-" + std::to_string(k) + "-step3.model"); }

}  // namespace detail

inline LoopResult run_loop(const std::vector<AnnotatedParagraph>& manual,
                           const std::vector<CorpusParagraph>& auto_corpus, const LoopConfig& config,
                           const std::vector<AnnotatedParagraph>* test = nullptr, const LoopRunOptions& options = {}) {
  config.check();
  if (manual.empty()) throw ArgumentError("run_loop: manual training set is empty");
  std::optional<fs::path> dir;
  if (options.run_root) {
    dir = *options.run_root / run_id(config, data_fingerprint(manual, auto_corpus, test));
    fs::create_directories(*dir);
    atomic_write_text(*dir / "config.txt", config.canonical());
  }

  std::vector<IterationRecord> records;
  std::optional<TaggerModel> baseline, previous;
  int resumed = 0;
  if (dir) {
    for (int k = 1; k <= config.iterations; ++k) {
      if (!fs::exists(detail::record_path(*dir, k)) || !fs::exists(detail::step3_path(*dir, k))) break;
      records.push_back(iteration_record_from_json(nlohmann::json::parse(read_file(detail::record_path(*dir, k)))));
      previous = detail::load_model_file(detail::step3_path(*dir, k));
      if (k == 1) baseline = detail::load_model_file(detail::step1_path(*dir, 1));
      ++resumed;
    }
  }

  int fresh = 0;
  for (int k = resumed + 1; k <= config.iterations; ++k) {
    if (options.stop_after > 0 && fresh >= options.stop_after) break;
    std::optional<TaggerModel> init;
    if (config.carry_forward && previous) init = std::move(previous);
    IterationOutput out;
    try {
      out = run_iteration(manual, auto_corpus, config, k, std::move(init), test);
    } catch (const std::exception& e) {
      throw std::runtime_error("iteration " + std::to_string(k) + ": " + e.what());
    }
    if (dir) {
      detail::save_model_file(out.step1_model, detail::step1_path(*dir, k));
      detail::save_model_file(out.model, detail::step3_path(*dir, k));
      out.record.model_path = detail::step3_path(*dir, k).string();
      atomic_write_text(detail::record_path(*dir, k), to_json(out.record).dump(2) + "\n");
    }
    if (options.on_iteration) options.on_iteration(out);
    if (k == 1) baseline = std::move(out.step1_model);
    previous = std::move(out.model);
    records.push_back(out.record);
    ++fresh;
  }

  LoopResult result{std::move(records), baseline ? std::move(*baseline) : TaggerModel(1),
                    previous ? std::move(*previous) : TaggerModel(1), dir, resumed};
  return result;
}

}  // namespace sciner
