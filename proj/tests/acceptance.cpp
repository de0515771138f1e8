// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fixtures.hpp"
#include "oracles/grad_check.hpp"
#include "oracles/sha256_ref.hpp"
#include "sciner/autoannotate.hpp"
#include "sciner/bibtex.hpp"
#include "sciner/catalog.hpp"
#include "sciner/eval.hpp"
#include "sciner/fetch.hpp"
#include "sciner/selftrain.hpp"
#include "sciner/synthetic.hpp"
#include "sciner/tokenize.hpp"

using namespace sciner;

namespace {

using SteadyClock = std::chrono::steady_clock;

double seconds_since(SteadyClock::time_point t0) { return std::chrono::duration<double>(SteadyClock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

TokenProbs random_dist(std::mt19937_64& rng, double peak) {
  TokenProbs p;
  std::gamma_distribution<double> g(0.3, 1.0);
  double s = 0.0;
  for (double& v : p) s += (v = g(rng) + 1e-12);
  for (double& v : p) v /= s;
  if (peak > 0.0) {
    int c = static_cast<int>(rng() % kNumClasses);
    for (double& v : p) v *= 1.0 - peak;
    p[c] += peak;
  }
  return p;
}

// 1 ------------------------------------------------------------------------
Outcome word_probability_product() {
  auto t0 = SteadyClock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<TokenProbs> subs(1 + rng() % 5);
    for (auto& s : subs) s = random_dist(rng, (rng() % 2) * 0.99);
    WordProbs got = aggregate_word_probs(subs);
    for (int c = 0; c < kNumClasses; ++c) {
      long double expect = 1.0L;
      for (std::size_t k = subs.size(); k-- > 0;) expect *= subs[k][c];
      worst = std::max(worst, static_cast<double>(std::fabs(static_cast<long double>(got[c]) - expect)));
    }
  }
  double t = seconds_since(t0);
  return {worst < 1e-12 && t < 5.0, fmt("max abs error %.3g (< 1e-12), %.2f s (< 5 s)", worst, t)};
}

// 2 ------------------------------------------------------------------------
Outcome gate_contract() {
  auto with_max = [](int cls, double v) {
    WordProbs w;
    w.fill((1.0 - v) / (kNumClasses - 1));
    w[cls] = v;
    return w;
  };
  bool at = gate_label(with_max(4, 0.98)) == Label::from_index(4);
  bool below = gate_label(with_max(4, 0.98 - 1e-9)).is_amb();
  std::mt19937_64 rng(202);
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    WordProbs w = random_dist(rng, i % 2 ? 0.985 : 0.0);
    double mx = *std::max_element(w.begin(), w.end());
    Label l = gate_label(w);
    if (l.is_amb() != (mx < 0.98)) ++bad;
    if (!l.is_amb() && w[l.index()] != mx) ++bad;
  }
  return {at && below && bad == 0, fmt("max=0.98 -> %s, max=0.98-1e-9 -> %s, %d bad of 10000 random",
                                       at ? "class" : "WRONG", below ? "amb" : "WRONG", bad)};
}

// 3 ------------------------------------------------------------------------
Outcome transition_rules() {
  std::mt19937_64 rng(303);
  std::size_t violations = 0, o_to_i = 0, i_to_other_i = 0, words = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<WordProbs> stream(1 + rng() % 40);
    for (auto& w : stream) {
      w = random_dist(rng, 0.99);
      // Push mass toward I- labels so the rules are exercised.
      auto top = std::max_element(w.begin(), w.end()) - w.begin();
      if (rng() % 2) std::swap(w[top], w[8 + rng() % 7]);
    }
    double gamma = i % 4 == 0 ? 1e-12 : 0.98;
    auto labels = constrained_decode(stream, {gamma});
    violations += validate_sequence(labels).size();
    words += labels.size();
    for (std::size_t k = 1; k < labels.size(); ++k) {
      Label a = labels[k - 1], b = labels[k];
      if (a.is_outside() && b.is_inside()) ++o_to_i;
      if (a.is_inside() && b.is_inside() && a.entity_type() != b.entity_type()) ++i_to_other_i;
    }
    if (!labels.empty() && labels[0].is_inside()) ++violations;
  }
  std::size_t total = violations + o_to_i + i_to_other_i;
  return {total == 0, fmt("%zu violations (O->I %zu, I-X->I-Y %zu) over %zu decoded words", violations, o_to_i,
                          i_to_other_i, words)};
}

// 4 ------------------------------------------------------------------------
Outcome gradient_check() {
  TaggerModel m(1 << 12);
  oracle::randomize(m, 404);
  TrainingSet data;
  for (const auto& p : synthetic_paragraphs(6, 404)) data.push_back(to_training(p));
  auto r = oracle::check_gradient(m, data, 20, 404);
  return {r.coordinates == 20 && r.worst_relative < 1e-5,
          fmt("worst relative error %.3g over %zu coordinates (< 1e-5)", r.worst_relative, r.coordinates)};
}

// 5 ------------------------------------------------------------------------
Outcome self_training_benchmark() {
  auto t0 = SteadyClock::now();
  SyntheticBenchmark b = make_benchmark(7, 100, 1700, 200);
  LoopConfig c;  // gamma 0.98, 20/5 epochs, batch 8, 2 iterations, seed 0
  c.step1.learning_rate = 1.0;
  c.step3.learning_rate = 1.0;
  GatedPrecision gated;
  std::vector<double> per_iteration;
  LoopRunOptions opt;
  opt.on_iteration = [&](const IterationOutput& out) {
    auto g = gated_precision(b.auto_gold, out.auto_annotations);
    per_iteration.push_back(g.precision());
    gated.accepted += g.accepted;
    gated.correct += g.correct;
  };
  LoopResult r = run_loop(b.manual, b.auto_corpus, c, &b.test, opt);
  double t = seconds_since(t0);
  double baseline = r.records.front().step1_metrics->span.f1;
  double final_f1 = r.records.back().step3_metrics->span.f1;
  double min_precision = *std::min_element(per_iteration.begin(), per_iteration.end());
  bool a = min_precision >= 0.90;
  bool bb = final_f1 >= baseline - 0.02;
  bool cc = t < 600.0;
  std::string amb;
  for (const auto& rec : r.records) amb += fmt(" %.3f", rec.gate.amb_fraction());
  return {a && bb && cc,
          fmt("(a) gated precision min %.4f over %zu iterations (>= 0.90); (b) span-F1 %.4f -> %.4f (>= %.4f), %s; "
              "(c) %.1f s (< 600 s); amb fraction%s",
              min_precision, per_iteration.size(), baseline, final_f1, baseline - 0.02,
              final_f1 > baseline ? "improved" : "not improved", t, amb.c_str())};
}

// 6 ------------------------------------------------------------------------
Outcome bootstrap_protocol() {
  auto all = synthetic_paragraphs(400, 606);
  std::vector<AnnotatedParagraph> train_part(all.begin(), all.begin() + 100), test(all.begin() + 100, all.end());
  auto weak = train(training_set(train_part), {1, 0.5, 8, 1}, std::nullopt, 1 << 14);
  auto strong = train(training_set(train_part), {10, 1.0, 8, 1}, std::nullopt, 1 << 14);
  auto pa = tag_paragraphs(weak, test), pb = tag_paragraphs(strong, test);
  BootstrapConfig cfg{12, 50, 606};
  auto r1 = bootstrap_compare(test, pa, pb, cfg);
  auto r2 = bootstrap_compare(test, pa, pb, cfg);
  bool identical = r1 == r2 && to_json(r1).dump() == to_json(r2).dump();
  auto full = bootstrap_compare(test, pa, pb, {12, test.size(), 606});
  auto sa = score(test, pa), sb = score(test, pb);
  int exact = 0;
  for (std::size_t d = 0; d < full.draws; ++d) exact += full.per_draw_a[d] == sa && full.per_draw_b[d] == sb;
  return {identical && exact == 12, fmt("same-seed runs %s; full-size draws matching the full score: %d of 12",
                                        identical ? "bit-identical" : "DIFFER", exact)};
}

// 7 ------------------------------------------------------------------------
class MockFetcher : public ByteFetcher {
 public:
  std::set<std::string> failing;
  FetchResult fetch(const std::string& url) override {
    return failing.count(url) ? FetchResult::failure("404") : FetchResult::success("%PDF-1.4");
  }
};

class NoSleep : public sciner::Clock {
 public:
  void sleep_for(std::chrono::milliseconds) override {}
};

Outcome ingestion_fidelity() {
  std::vector<std::string> failed;
  auto parsed = parse_bibtex(fixtures::kProceedingsBib);
  std::ostringstream csv;
  write_catalog_csv(parsed.records, csv);
  if (csv.str() != fixtures::kProceedingsCsv) failed.push_back("csv row");

  auto joined = [](const Tokens& t) {
    std::string s;
    for (const auto& w : t) s += (s.empty() ? "" : " ") + w;
    return s;
  };
  if (joined(tokenize("Twenty-Fourth")) != "Twenty - Fourth") failed.push_back("hyphen split");
  if (joined(tokenize("(ROCLING 2022)")) != "( ROCLING 2022 )") failed.push_back("parentheses");
  if (joined(tokenize("188-3,2")) != "188 - 3,2") failed.push_back("digit comma");

  const std::pair<std::string, std::string> vectors[] = {
      {"", "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"},
      {"abc", "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"},
      {"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq",
       "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1"},
      {std::string(1000000, 'a'), "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0"},
  };
  for (const auto& [msg, digest] : vectors)
    if (Sha256::of(msg) != digest || oracle::sha256_hex(msg) != digest) failed.push_back("sha256");

  fixtures::TempDir dir("acceptance_fetch");
  std::vector<PaperRecord> recs(1000);
  MockFetcher f;
  for (int i = 0; i < 1000; ++i) {
    recs[i].title = "Paper " + std::to_string(i);
    recs[i].url = "https://aclanthology.org/2023.acl-long." + std::to_string(i) + ".pdf";
    if (i % 84 == 0) f.failing.insert(recs[i].url);
  }
  NoSleep clock;
  FetchOptions opt;
  opt.clock = &clock;
  std::string summary = success_summary(fetch_pdfs(recs, f, dir.path, opt));
  if (summary.find("(98.8%)") == std::string::npos) failed.push_back("fetch summary");

  std::string detail = "csv row, 3 tokenizer transformations, 4 sha256 vectors, fetch summary \"" + summary + "\"";
  if (!failed.empty()) {
    detail += "; failed:";
    for (const auto& s : failed) detail += " " + s;
  }
  return {failed.empty(), detail};
}

// 8 ------------------------------------------------------------------------
Outcome scale_smoke() {
  auto t0 = SteadyClock::now();
  auto manual = synthetic_paragraphs(100, 808);
  auto model = train(training_set(manual), {20, 1.0, 8, 808}, std::nullopt, 1 << 18);
  auto corpus = strip_labels(synthetic_paragraphs(86000, 809));
  std::size_t words = 0;
  for (const auto& p : corpus) words += p.words.size();
  unsigned workers = std::max(2u, std::thread::hardware_concurrency());
  AnnotationResult r = annotate_corpus(ModelProbabilitySource(model), corpus, {}, workers);
  std::size_t accepted = 0, labelled = 0, amb = 0;
  for (auto n : r.stats.accepted) accepted += n;
  for (const auto& p : r.paragraphs) {
    labelled += p.labels.size();
    for (Label l : p.labels) amb += l.is_amb();
  }
  double t = seconds_since(t0);
  bool conserved = r.paragraphs.size() == corpus.size() && r.stats.total_words == words &&
                   accepted + r.stats.amb_words == words && labelled == words && amb == r.stats.amb_words;
  return {conserved && t < 900.0, fmt("%zu paragraphs, %zu words, accepted %zu + amb %zu = %zu (%s), %u workers, "
                                      "%.1f s (< 900 s)",
                                      r.paragraphs.size(), words, accepted, r.stats.amb_words, accepted + r.stats.amb_words,
                                      conserved ? "conserved" : "NOT conserved", workers, t)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"word probability product", word_probability_product},
      {"confidence gate", gate_contract},
      {"BIO transition rules", transition_rules},
      {"gradient check", gradient_check},
      {"self-training benchmark", self_training_benchmark},
      {"bootstrap protocol", bootstrap_protocol},
      {"ingestion fidelity", ingestion_fidelity},
      {"scale smoke test", scale_smoke},
  };
  int failures = 0, n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s  %d. %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", n - failures, n);
  return failures ? 1 : 0;
}
