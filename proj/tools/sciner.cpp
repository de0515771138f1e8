// sciner: command-line front end for ingestion, partitioning, the
// self-training loop and evaluation.
//
// Exit codes: 0 success, 1 partial or degraded result, 2 fatal error.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sciner/autoannotate.hpp"
#include "sciner/bibtex.hpp"
#include "sciner/catalog.hpp"
#include "sciner/config.hpp"
#include "sciner/dataset.hpp"
#include "sciner/eval.hpp"
#include "sciner/fetch.hpp"
#include "sciner/selftrain.hpp"
#include "sciner/synthetic.hpp"
#include "sciner/tagger.hpp"
#include "sciner/tokenize.hpp"

using namespace sciner;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kFatal = 2;

class HttpFetcher final : public ByteFetcher {
 public:
  FetchResult fetch(const std::string& url) override {
    if (url.rfind("file://", 0) == 0) {
      try {
        return FetchResult::success(read_file(url.substr(7)));
      } catch (const std::exception& e) {
        return FetchResult::failure(e.what());
      }
    }
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) return FetchResult::failure("unsupported url");
    auto path_start = url.find('/', scheme_end + 3);
    std::string origin = url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    auto res = client.Get(path);
    if (!res) return FetchResult::failure("http error: " + httplib::to_string(res.error()));
    if (res->status != 200) return FetchResult::failure("http status " + std::to_string(res->status));
    return FetchResult::success(std::move(res->body));
  }
};

template <class T, class F>
void apply(const std::optional<T>& v, F&& f) {
  if (v) f(*v);
}

fs::path require(const std::optional<fs::path>& p, const char* what) {
  if (!p) throw ArgumentError(std::string("missing ") + what + " (flag or config key)");
  return *p;
}

std::ifstream open_in(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("file not found: " + p.string());
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open: " + p.string());
  return in;
}

std::vector<AnnotatedParagraph> load_annotations(const fs::path& p) {
  auto in = open_in(p);
  return read_annotations(in, p.string());
}

void save_annotations(const fs::path& p, const std::vector<AnnotatedParagraph>& paragraphs) {
  atomic_write(p, [&](std::ostream& os) { write_annotations(paragraphs, os); });
}

TaggerModel load_model_path(const fs::path& p) {
  auto in = open_in(p);
  return load_model(in);
}

std::optional<std::set<std::string>> auto_ids(const std::optional<fs::path>& partition) {
  if (!partition) return std::nullopt;
  auto in = open_in(*partition);
  return read_partition(in, partition->string()).automatic;
}

std::vector<CorpusParagraph> load_corpus(const fs::path& token_dir, const std::optional<fs::path>& partition) {
  std::vector<CorpusParagraph> out;
  for (const auto& doc : read_token_dir(token_dir, auto_ids(partition)))
    for (auto& p : corpus_paragraphs(doc)) out.push_back(std::move(p));
  return out;
}

// Common config/flag plumbing: --config plus optional overrides.
struct Overrides {
  std::optional<std::string> config;
  std::optional<double> gamma;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> draws;
  std::optional<std::size_t> draw_size;
  std::optional<unsigned> parallelism;

  RunConfig resolve() const {
    RunConfig c = load_run_config(config ? std::optional<fs::path>(*config) : std::nullopt);
    apply(gamma, [&](double g) { c.loop.gate.gamma = g; });
    apply(lr, [&](double v) {
      c.loop.step1.learning_rate = v;
      c.loop.step3.learning_rate = v;
    });
    apply(seed, [&](std::uint64_t s) {
      c.loop.seed = s;
      c.bootstrap.seed = s;
    });
    apply(draws, [&](std::size_t d) { c.bootstrap.draws = d; });
    apply(draw_size, [&](std::size_t d) { c.bootstrap.draw_size = d; });
    apply(parallelism, [&](unsigned p) { c.loop.parallelism = p; });
    return c;
  }
};

void add_config(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key = value config file");
}
void add_gamma(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--gamma", o.gamma, "confidence threshold in (0, 1] (default 0.98)");
}
void add_seed(CLI::App* cmd, Overrides& o) { cmd->add_option("--seed", o.seed, "master random seed (default 0)"); }
void add_bootstrap(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--draws", o.draws, "bootstrap draws (default 12)");
  cmd->add_option("--draw-size", o.draw_size, "paragraphs per draw (default 50)");
}
void add_parallelism(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--parallelism", o.parallelism, "worker threads (default 1)");
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  Overrides o;
  std::optional<fs::path> bib, out, fetch_dir, manifest;
  std::optional<int> attempts;
};

int run_ingest(const IngestArgs& a) {
  RunConfig c = a.o.resolve();
  apply(a.bib, [&](const fs::path& p) { c.bib = p; });
  apply(a.out, [&](const fs::path& p) { c.catalog = p; });
  apply(a.fetch_dir, [&](const fs::path& p) { c.pdf_dir = p; });
  apply(a.manifest, [&](const fs::path& p) { c.manifest = p; });
  apply(a.attempts, [&](int n) { c.fetch_attempts = n; });
  fs::path bib = require(c.bib, "--bib");
  fs::path catalog = require(c.catalog, "--out");
  auto in = open_in(bib);
  BibParseResult parsed = parse_bibtex(in);
  std::size_t rows = 0;
  atomic_write(catalog, [&](std::ostream& os) { rows = write_catalog_csv(parsed.records, os); });
  std::cout << "wrote " << rows << " records to " << catalog.string() << "\n";
  if (parsed.skipped) {
    std::cerr << "skipped " << parsed.skipped << " malformed entries\n";
    for (const auto& issue : parsed.issues) std::cerr << "  " << bib.string() << ":" << issue.line << ": " << issue.message << "\n";
  }
  if (!c.pdf_dir) return kOk;

  fs::path manifest_path = c.manifest.value_or(*c.pdf_dir / "manifest.tsv");
  std::optional<DownloadManifest> previous;
  if (fs::exists(manifest_path)) {
    auto min = open_in(manifest_path);
    previous = read_manifest(min);
  }
  HttpFetcher fetcher;
  FetchOptions opts;
  opts.max_attempts = c.fetch_attempts;
  opts.retry_spacing = std::chrono::milliseconds(c.retry_spacing_ms);
  opts.parallelism = c.loop.parallelism;
  opts.previous = previous ? &*previous : nullptr;
  DownloadManifest m = fetch_pdfs(parsed.records, fetcher, *c.pdf_dir, opts);
  atomic_write(manifest_path, [&](std::ostream& os) { write_manifest(m, os); });
  std::cout << "downloaded " << success_summary(m) << " of " << m.entries.size() << " papers\n";
  return m.count(FetchStatus::failed) ? kPartial : kOk;
}

struct PartitionArgs {
  Overrides o;
  std::optional<fs::path> catalog, manual_ids, out;
};

int run_partition(const PartitionArgs& a) {
  RunConfig c = a.o.resolve();
  apply(a.catalog, [&](const fs::path& p) { c.catalog = p; });
  apply(a.manual_ids, [&](const fs::path& p) { c.manual_ids = p; });
  apply(a.out, [&](const fs::path& p) { c.partition = p; });
  auto cin = open_in(require(c.catalog, "--catalog"));
  auto records = read_catalog_csv(cin);
  std::set<std::string> manual;
  if (c.manual_ids) {
    auto in = open_in(*c.manual_ids);
    manual = read_id_list(in);
  }
  CorpusPartition part = partition_corpus(records, manual);
  if (c.partition) atomic_write(*c.partition, [&](std::ostream& os) { write_partition(part, os); });
  std::cout << "manual=" << part.manual.size() << " auto=" << part.automatic.size()
            << " unannotated=" << part.unannotated.size() << "\n";
  return kOk;
}

struct TokenizeArgs {
  std::vector<fs::path> inputs;
  fs::path out;
};

int run_tokenize(const TokenizeArgs& a) {
  std::vector<fs::path> files;
  for (const auto& in : a.inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::directory_iterator(in))
        if (e.path().extension() == ".json") files.push_back(e.path());
    } else {
      if (!fs::exists(in)) throw IoError("file not found: " + in.string());
      files.push_back(in);
    }
  }
  std::sort(files.begin(), files.end());
  std::size_t paragraphs = 0;
  for (const auto& f : files) {
    TokenizedDocument doc = tokenize_extraction(parse_extraction(read_file(f)));
    if (doc.paper_id.empty() || doc.paper_id.find_first_of("/\\ \t") != std::string::npos)
      throw FormatError(f.string() + ": unusable paper_id '" + doc.paper_id + "'");
    atomic_write(a.out / (doc.paper_id + ".txt"), [&](std::ostream& os) { write_token_file(doc, os); });
    paragraphs += doc.paragraphs.size();
  }
  std::cout << "tokenized " << files.size() << " documents, " << paragraphs << " paragraphs\n";
  return kOk;
}

struct SynthArgs {
  fs::path out;
  std::uint64_t seed = 0;
  std::size_t manual = 100, automatic = 1700, test = 200;
};

int run_synth(const SynthArgs& a) {
  SyntheticBenchmark b = make_benchmark(a.seed, a.manual, a.automatic, a.test);
  fs::create_directories(a.out / "tokens");
  save_annotations(a.out / "manual.tsv", b.manual);
  save_annotations(a.out / "test.tsv", b.test);
  // Token files renumber paragraphs from zero within each paper; keep the
  // gold copy aligned with that numbering.
  std::map<std::string, TokenizedDocument> docs;
  for (auto& p : b.auto_gold) {
    auto& doc = docs[p.paper_id];
    doc.paper_id = p.paper_id;
    p.paragraph_index = doc.paragraphs.size();
    doc.paragraphs.push_back(p.words);
  }
  for (const auto& [id, doc] : docs)
    atomic_write(a.out / "tokens" / (id + ".txt"), [&](std::ostream& os) { write_token_file(doc, os); });
  std::sort(b.auto_gold.begin(), b.auto_gold.end(), [](const auto& x, const auto& y) {
    return std::tie(x.paper_id, x.paragraph_index) < std::tie(y.paper_id, y.paragraph_index);
  });
  save_annotations(a.out / "auto_gold.tsv", b.auto_gold);
  atomic_write_text(a.out / "loop.conf",
                    "manual = manual.tsv\n"
                    "test = test.tsv\n"
                    "token_dir = tokens\n"
                    "seed = " + std::to_string(a.seed) + "\n"
                    "# the hashed-feature tagger needs far larger steps than 1e-4\n"
                    "step1_lr = 1.0\n"
                    "step3_lr = 1.0\n");
  std::cout << "manual=" << b.manual.size() << " auto=" << b.auto_gold.size() << " test=" << b.test.size()
            << " papers(auto)=" << docs.size() << "\n";
  return kOk;
}

struct TrainArgs {
  Overrides o;
  std::optional<fs::path> manual;
  fs::path out;
  std::optional<int> epochs;
  std::optional<std::size_t> batch_size;
};

int run_train(const TrainArgs& a) {
  RunConfig c = a.o.resolve();
  apply(a.manual, [&](const fs::path& p) { c.manual = p; });
  TrainConfig tc = c.loop.step1;
  apply(a.epochs, [&](int e) { tc.epochs = e; });
  apply(a.batch_size, [&](std::size_t b) { tc.batch_size = b; });
  tc.seed = c.loop.seed;
  tc.check();
  auto data = load_annotations(require(c.manual, "--manual"));
  EpochLog log;
  TaggerModel m = train(training_set(data), tc, std::nullopt, c.loop.hash_dim, &log);
  atomic_write(a.out, [&](std::ostream& os) { save_model(m, os); }, true);
  char buf[96];
  std::snprintf(buf, sizeof buf, "final epoch loss %.6f\n", log.mean_batch_loss.back());
  std::cout << buf;
  std::cout << "model written to " << a.out.string() << "\n";
  return kOk;
}

struct LoopArgs {
  Overrides o;
  std::optional<fs::path> manual, test, token_dir, partition, run_dir;
  std::optional<int> iterations;
  bool carry_forward = false;
  int stop_after = 0;
};

std::string iteration_line(const IterationRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "iteration %d: amb %zu/%zu (%.4f)", r.iteration, r.gate.amb_words, r.gate.total_words,
                r.gate.amb_fraction());
  std::string s = buf;
  if (r.step1_metrics && r.step3_metrics) {
    std::snprintf(buf, sizeof buf, "  span-F1 step1 %.4f step3 %.4f", r.step1_metrics->span.f1, r.step3_metrics->span.f1);
    s += buf;
  }
  for (const auto& w : r.warnings) s += "\n  warning: " + w;
  return s + "\n";
}

int run_loop_cmd(const LoopArgs& a) {
  RunConfig c = a.o.resolve();
  apply(a.manual, [&](const fs::path& p) { c.manual = p; });
  apply(a.test, [&](const fs::path& p) { c.test = p; });
  apply(a.token_dir, [&](const fs::path& p) { c.token_dir = p; });
  apply(a.partition, [&](const fs::path& p) { c.partition = p; });
  apply(a.run_dir, [&](const fs::path& p) { c.run_dir = p; });
  apply(a.iterations, [&](int n) { c.loop.iterations = n; });
  if (a.carry_forward) c.loop.carry_forward = true;
  c.loop.check();

  auto manual = load_annotations(require(c.manual, "--manual"));
  std::vector<AnnotatedParagraph> train_set, test_set;
  if (c.test) {
    train_set = std::move(manual);
    test_set = load_annotations(*c.test);
  } else {
    auto split = split_train_test(group_by_annotator(manual), c.held_out, c.loop.seed);
    train_set = std::move(split.train);
    test_set = std::move(split.test);
  }
  auto corpus = load_corpus(require(c.token_dir, "--token-dir"), c.partition);
  if (c.bootstrap.draw_size > test_set.size())
    throw ArgumentError("draw size " + std::to_string(c.bootstrap.draw_size) + " exceeds the " +
                        std::to_string(test_set.size()) + "-paragraph test set");

  LoopRunOptions opts;
  opts.run_root = c.run_dir.value_or(fs::path("runs"));
  opts.stop_after = a.stop_after;
  opts.on_iteration = [](const IterationOutput& out) {
    std::cerr << "iteration " << out.record.iteration << " done in " << out.record.duration_seconds << " s\n";
  };
  std::cerr << "manual " << train_set.size() << " paragraphs, auto " << corpus.size() << ", test " << test_set.size()
            << "\n";
  LoopResult r = run_loop(train_set, corpus, c.loop, &test_set, opts);
  fs::path dir = *r.run_dir;
  if (r.resumed_iterations) std::cerr << "resumed " << r.resumed_iterations << " iteration(s) from " << dir.string() << "\n";
  if (static_cast<int>(r.records.size()) < c.loop.iterations) {
    std::cerr << "stopped after " << r.records.size() << " of " << c.loop.iterations << " iterations; rerun to resume\n";
    return kPartial;
  }

  std::string report;
  for (const auto& rec : r.records) report += iteration_line(rec);
  auto baseline = tag_paragraphs(r.baseline, test_set, c.loop.parallelism);
  auto final_pred = tag_paragraphs(r.final_model, test_set, c.loop.parallelism);
  BootstrapResult cmp = bootstrap_compare(test_set, baseline, final_pred, c.bootstrap);
  report += render_comparison(cmp, "iteration-1", "final");
  atomic_write(dir / "final.model", [&](std::ostream& os) { save_model(r.final_model, os); }, true);
  atomic_write_text(dir / "comparison.json", to_json(cmp).dump(2) + "\n");
  atomic_write_text(dir / "report.txt", report);
  std::cout << report;
  std::cerr << "run directory: " << dir.string() << "\n";
  for (const auto& rec : r.records)
    if (!rec.warnings.empty()) return kPartial;
  return kOk;
}

struct AnnotateArgs {
  Overrides o;
  std::optional<fs::path> model, probs, token_dir, partition, out, stats;
};

int run_annotate(const AnnotateArgs& a) {
  RunConfig c = a.o.resolve();
  c.loop.gate.check();
  apply(a.token_dir, [&](const fs::path& p) { c.token_dir = p; });
  apply(a.partition, [&](const fs::path& p) { c.partition = p; });
  if (!a.model == !a.probs) throw ArgumentError("give exactly one of --model or --probs");
  auto corpus = load_corpus(require(c.token_dir, "--token-dir"), c.partition);
  AnnotationResult result;
  if (a.model) {
    TaggerModel m = load_model_path(*a.model);
    result = annotate_corpus(ModelProbabilitySource(m), corpus, c.loop.gate, c.loop.parallelism);
  } else {
    auto in = open_in(*a.probs);
    ExternalProbabilitySource src(group_external_probs(load_external_probs(in)));
    result = annotate_corpus(src, corpus, c.loop.gate, c.loop.parallelism);
  }
  if (a.out) save_annotations(*a.out, result.paragraphs);
  if (a.stats) atomic_write_text(*a.stats, to_json(result.stats).dump(2) + "\n");
  std::cout << render_text(result.stats);
  return kOk;
}

struct EvalArgs {
  Overrides o;
  fs::path gold;
  std::optional<fs::path> pred, pred_b, model, model_b, json;
};

int run_eval(const EvalArgs& a) {
  RunConfig c = a.o.resolve();
  auto gold = load_annotations(a.gold);
  auto system = [&](const std::optional<fs::path>& pred, const std::optional<fs::path>& model, const char* name)
      -> std::optional<std::vector<AnnotatedParagraph>> {
    if (pred && model) throw ArgumentError(std::string("give either a prediction file or a model for ") + name);
    if (pred) return load_annotations(*pred);
    if (model) return tag_paragraphs(load_model_path(*model), gold, c.loop.parallelism);
    return std::nullopt;
  };
  auto first = system(a.pred, a.model, "system A");
  auto second = system(a.pred_b, a.model_b, "system B");
  if (!first) throw ArgumentError("missing --pred or --model");
  if (!second) {
    MetricSet m = score(gold, *first);
    std::cout << render_table(m);
    if (a.json) atomic_write_text(*a.json, to_json(m).dump(2) + "\n");
    return kOk;
  }
  BootstrapResult r = bootstrap_compare(gold, *first, *second, c.bootstrap);
  std::cout << render_comparison(r, "A", "B");
  if (a.json) atomic_write_text(*a.json, to_json(r).dump(2) + "\n");
  return kOk;
}

struct CountsArgs {
  std::vector<fs::path> inputs;
  std::optional<fs::path> json;
};

int run_counts(const CountsArgs& a) {
  std::vector<AnnotatedParagraph> all;
  for (const auto& f : a.inputs)
    for (auto& p : load_annotations(f)) all.push_back(std::move(p));
  LabelHistogram h = label_counts(all);
  std::cout << render_histogram(h);
  if (a.json) atomic_write_text(*a.json, to_json(h).dump(2) + "\n");
  return kOk;
}

struct DiffArgs {
  fs::path gold, pred;
  bool color = false;
};

int run_diff(const DiffArgs& a) {
  diff_report(load_annotations(a.gold), load_annotations(a.pred), std::cout, a.color);
  return kOk;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kFatal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scientific NER pipeline: ingestion, auto-annotation and self-training"};
  app.require_subcommand(1);
  std::function<int()> action;

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "parse a BibTeX file into the catalog CSV, optionally fetching PDFs");
  add_config(c_ingest, ingest.o);
  add_parallelism(c_ingest, ingest.o);
  c_ingest->add_option("--bib", ingest.bib, "BibTeX input");
  c_ingest->add_option("--out", ingest.out, "catalog CSV output");
  c_ingest->add_option("--fetch-dir", ingest.fetch_dir, "download PDFs into this directory");
  c_ingest->add_option("--manifest", ingest.manifest, "download manifest (default <fetch-dir>/manifest.tsv)");
  c_ingest->add_option("--attempts", ingest.attempts, "attempts per URL (default 3)");
  c_ingest->callback([&] { action = [&] { return run_ingest(ingest); }; });

  PartitionArgs partition;
  auto* c_part = app.add_subcommand("partition", "split catalog papers into manual, auto and unannotated");
  add_config(c_part, partition.o);
  c_part->add_option("--catalog", partition.catalog, "catalog CSV");
  c_part->add_option("--manual-ids", partition.manual_ids, "file with one manual paper id per line");
  c_part->add_option("--out", partition.out, "partition file output");
  c_part->callback([&] { action = [&] { return run_partition(partition); }; });

  TokenizeArgs tok;
  auto* c_tok = app.add_subcommand("tokenize", "tokenize extracted-text JSON files into token files");
  c_tok->add_option("inputs", tok.inputs, "extraction JSON files or directories")->required();
  c_tok->add_option("--out", tok.out, "output directory")->required();
  c_tok->callback([&] { action = [&] { return run_tokenize(tok); }; });

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "write a synthetic benchmark with known gold labels");
  c_synth->add_option("--out", synth.out, "output directory")->required();
  c_synth->add_option("--seed", synth.seed, "generator seed");
  c_synth->add_option("--manual", synth.manual, "manual paragraphs (default 100)");
  c_synth->add_option("--auto", synth.automatic, "auto paragraphs (default 1700)");
  c_synth->add_option("--test", synth.test, "test paragraphs (default 200)");
  c_synth->callback([&] { action = [&] { return run_synth(synth); }; });

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train a tagger on annotated paragraphs");
  add_config(c_train, tr.o);
  add_seed(c_train, tr.o);
  c_train->add_option("--manual", tr.manual, "annotation file");
  c_train->add_option("--out", tr.out, "model output")->required();
  c_train->add_option("--epochs", tr.epochs, "epochs (default 20)");
  c_train->add_option("--lr", tr.o.lr, "learning rate (default 1e-4)");
  c_train->add_option("--batch-size", tr.batch_size, "paragraphs per batch (default 8)");
  c_train->callback([&] { action = [&] { return run_train(tr); }; });

  LoopArgs loop;
  auto* c_loop = app.add_subcommand("loop", "run the self-training loop and compare iteration 1 against the final model");
  add_config(c_loop, loop.o);
  add_gamma(c_loop, loop.o);
  add_seed(c_loop, loop.o);
  add_bootstrap(c_loop, loop.o);
  add_parallelism(c_loop, loop.o);
  c_loop->add_option("--lr", loop.o.lr, "learning rate for both training steps");
  c_loop->add_option("--manual", loop.manual, "manual annotation file");
  c_loop->add_option("--test", loop.test, "held-out annotation file (default: split from --manual)");
  c_loop->add_option("--token-dir", loop.token_dir, "token files of the auto corpus");
  c_loop->add_option("--partition", loop.partition, "restrict the auto corpus to this partition's auto papers");
  c_loop->add_option("--run-dir", loop.run_dir, "run root (default $SELFTRAIN_RUN_DIR or ./runs)");
  c_loop->add_option("--iterations", loop.iterations, "loop iterations (default 2)");
  c_loop->add_flag("--carry-forward", loop.carry_forward, "start each step 1 from the previous final model");
  c_loop->add_option("--stop-after", loop.stop_after, "stop after this many new iterations")->group("");
  c_loop->callback([&] { action = [&] { return run_loop_cmd(loop); }; });

  AnnotateArgs ann;
  auto* c_ann = app.add_subcommand("annotate", "gate and decode auto-annotations for a token corpus");
  add_config(c_ann, ann.o);
  add_gamma(c_ann, ann.o);
  add_parallelism(c_ann, ann.o);
  c_ann->add_option("--model", ann.model, "tagger model");
  c_ann->add_option("--probs", ann.probs, "external subword probabilities (JSON lines)");
  c_ann->add_option("--token-dir", ann.token_dir, "token files");
  c_ann->add_option("--partition", ann.partition, "only annotate this partition's auto papers");
  c_ann->add_option("--out", ann.out, "annotation file output");
  c_ann->add_option("--stats", ann.stats, "gate statistics JSON output");
  c_ann->callback([&] { action = [&] { return run_annotate(ann); }; });

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "score predictions, or bootstrap-compare two systems");
  add_config(c_eval, ev.o);
  add_seed(c_eval, ev.o);
  add_bootstrap(c_eval, ev.o);
  add_parallelism(c_eval, ev.o);
  c_eval->add_option("--gold", ev.gold, "gold annotation file")->required();
  c_eval->add_option("--pred", ev.pred, "predicted annotation file");
  c_eval->add_option("--model", ev.model, "model to tag the gold words with");
  c_eval->add_option("--pred-b", ev.pred_b, "second system's predictions");
  c_eval->add_option("--model-b", ev.model_b, "second system's model");
  c_eval->add_option("--json", ev.json, "JSON output");
  c_eval->callback([&] { action = [&] { return run_eval(ev); }; });

  CountsArgs counts;
  auto* c_counts = app.add_subcommand("counts", "histogram of entity labels (O excluded)");
  c_counts->add_option("inputs", counts.inputs, "annotation files")->required();
  c_counts->add_option("--json", counts.json, "JSON output");
  c_counts->callback([&] { action = [&] { return run_counts(counts); }; });

  DiffArgs diff;
  auto* c_diff = app.add_subcommand("diff", "mark correct and incorrect entity predictions");
  c_diff->add_option("--gold", diff.gold, "gold annotation file")->required();
  c_diff->add_option("--pred", diff.pred, "predicted annotation file")->required();
  c_diff->add_flag("--color", diff.color, "ANSI colors instead of bracket markup");
  c_diff->callback([&] { action = [&] { return run_diff(diff); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kFatal;
  }
  return guarded(action);
}
