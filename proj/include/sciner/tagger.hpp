#pragma once

// Native token classifier: hashed sparse features feeding a single softmax
// layer over the 15 classes (multinomial logistic regression), trained with
// plain mini-batch gradient descent. Words are split into fixed-width subword
// chunks and every subword is classified, so the per-word product of
// subword probabilities always has real factors to multiply.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sciner/dataset.hpp"
#include "sciner/labels.hpp"

namespace sciner {

using TokenProbs = std::array<double, kNumClasses>;

// Per word, the distributions of its subwords in order.
using ParagraphProbs = std::vector<std::vector<TokenProbs>>;

inline constexpr std::string_view kContinuationMarker = "##";
inline constexpr std::size_t kSubwordChars = 4;
inline constexpr std::size_t kDefaultHashDim = std::size_t{1} << 20;

struct SubwordToken {
  std::string text;  // continuation chunks carry the "##" prefix
  std::size_t word_index = 0;
  bool continuation = false;
};

namespace detail {

inline std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

// Chunks of at most four code points, left to right.
inline std::vector<SubwordToken> segment_word(std::string_view word, std::size_t word_index = 0) {
  std::vector<SubwordToken> out;
  std::size_t i = 0;
  while (i < word.size()) {
    std::size_t b = i;
    for (std::size_t n = 0; n < kSubwordChars && i < word.size(); ++n)
      i = std::min(word.size(), i + detail::utf8_length(static_cast<unsigned char>(word[i])));
    bool cont = !out.empty();
    std::string text = cont ? std::string(kContinuationMarker) : std::string();
    text.append(word.substr(b, i - b));
    out.push_back({std::move(text), word_index, cont});
  }
  return out;
}

inline std::vector<SubwordToken> segment_paragraph(const Tokens& words) {
  std::vector<SubwordToken> out;
  for (std::size_t w = 0; w < words.size(); ++w) {
    auto sub = segment_word(words[w], w);
    out.insert(out.end(), std::make_move_iterator(sub.begin()), std::make_move_iterator(sub.end()));
  }
  return out;
}

// Case/digit pattern: X upper, x lower, d digit, other bytes kept.
inline std::string word_shape(std::string_view word) {
  std::string s;
  for (unsigned char c : word) {
    if (std::isupper(c)) s.push_back('X');
    else if (std::islower(c)) s.push_back('x');
    else if (std::isdigit(c)) s.push_back('d');
    else s.push_back(static_cast<char>(c));
  }
  return s;
}

inline std::string short_shape(std::string_view shape) {
  std::string s;
  for (char c : shape)
    if (s.empty() || s.back() != c) s.push_back(c);
  return s;
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Feature names before hashing.
inline std::vector<std::string> feature_strings(const SubwordToken& sub, const Tokens& words) {
  if (sub.word_index >= words.size()) throw ArgumentError("featurize: word index out of range");
  const std::string& word = words[sub.word_index];
  std::vector<std::string> f;
  f.reserve(20);
  f.emplace_back("bias");
  f.push_back("sw=" + sub.text);
  f.push_back("w=" + word);
  f.push_back("lw=" + lowercase(word));
  std::string shape = word_shape(word);
  f.push_back("shape=" + shape);
  f.push_back("sshape=" + short_shape(shape));
  for (std::size_t k = 1; k <= 3 && k <= word.size(); ++k) {
    f.push_back("p" + std::to_string(k) + "=" + word.substr(0, k));
    f.push_back("s" + std::to_string(k) + "=" + word.substr(word.size() - k));
  }
  for (int off : {-2, -1, 1, 2}) {
    long idx = static_cast<long>(sub.word_index) + off;
    std::string n = idx < 0 ? "<s>" : idx >= static_cast<long>(words.size()) ? "</s>" : lowercase(words[idx]);
    f.push_back("w" + std::string(off < 0 ? "" : "+") + std::to_string(off) + "=" + n);
  }
  f.emplace_back(sub.continuation ? "pos=cont" : "pos=first");
  return f;
}

using FeatureSet = std::vector<std::uint32_t>;

inline std::uint32_t hash_feature(std::string_view name, std::size_t hash_dim) {
  return static_cast<std::uint32_t>(detail::fnv1a(name) % hash_dim);
}

inline FeatureSet featurize(const SubwordToken& sub, const Tokens& words, std::size_t hash_dim = kDefaultHashDim) {
  FeatureSet out;
  for (const auto& s : feature_strings(sub, words)) out.push_back(hash_feature(s, hash_dim));
  return out;
}

struct TrainConfig {
  int epochs = 20;
  double learning_rate = 1e-4;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;

  void check() const {
    if (epochs < 1) throw ArgumentError("epochs must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning_rate must be > 0");
    if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  }
};

struct TrainingRun {
  int epochs = 0;
  double learning_rate = 0.0;
  std::uint64_t batch_size = 0;
  std::uint64_t seed = 0;
  friend bool operator==(const TrainingRun&, const TrainingRun&) = default;
};

class TaggerModel {
 public:
  explicit TaggerModel(std::size_t hash_dim = kDefaultHashDim)
      : hash_dim_(hash_dim), weights_(hash_dim * kNumClasses, 0.0) {
    if (hash_dim == 0 || hash_dim > (std::size_t{1} << 32)) throw ArgumentError("hash_dim out of range");
  }

  std::size_t hash_dim() const { return hash_dim_; }

  double& weight(std::uint32_t feature, int cls) { return weights_[std::size_t{feature} * kNumClasses + cls]; }
  double weight(std::uint32_t feature, int cls) const { return weights_[std::size_t{feature} * kNumClasses + cls]; }

  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  // Runs applied to this model, oldest first.
  std::vector<TrainingRun> history;

  int epochs_run() const {
    int n = 0;
    for (const auto& r : history) n += r.epochs;
    return n;
  }

  TokenProbs scores(const FeatureSet& features) const {
    TokenProbs s{};
    for (std::uint32_t f : features) {
      const double* w = &weights_[std::size_t{f} * kNumClasses];
      for (int c = 0; c < kNumClasses; ++c) s[c] += w[c];
    }
    return s;
  }

  friend bool operator==(const TaggerModel&, const TaggerModel&) = default;

 private:
  std::size_t hash_dim_;
  std::vector<double> weights_;
};

inline TokenProbs softmax(const TokenProbs& scores) {
  double m = scores[0];
  for (double s : scores) m = std::max(m, s);
  TokenProbs p;
  double z = 0.0;
  for (int c = 0; c < kNumClasses; ++c) z += (p[c] = std::exp(scores[c] - m));
  for (double& v : p) v /= z;
  return p;
}

// Subword distributions grouped by word. Empty paragraph gives empty output.
inline ParagraphProbs predict_probs(const TaggerModel& model, const Tokens& words) {
  ParagraphProbs out(words.size());
  for (std::size_t w = 0; w < words.size(); ++w)
    for (const auto& sub : segment_word(words[w], w))
      out[w].push_back(softmax(model.scores(featurize(sub, words, model.hash_dim()))));
  return out;
}

// ---------------------------------------------------------------------------
// Training

struct EncodedToken {
  FeatureSet features;
  int label = 0;
  bool active = true;  // contributes to the loss
};

using EncodedParagraph = std::vector<EncodedToken>;

inline std::vector<EncodedParagraph> encode(const TrainingSet& data, std::size_t hash_dim) {
  std::vector<EncodedParagraph> out;
  out.reserve(data.size());
  for (const auto& p : data) {
    if (p.words.size() != p.labels.size() || p.mask.size() != p.labels.size())
      throw ArgumentError("training paragraph with mismatched words/labels/mask");
    EncodedParagraph enc;
    for (const auto& sub : segment_paragraph(p.words)) {
      bool active = p.mask[sub.word_index];
      Label l = p.labels[sub.word_index];
      if (active && l.is_amb()) throw ArgumentError("unmasked amb label in training data");
      enc.push_back({featurize(sub, p.words, hash_dim), active ? l.index() : 0, active});
    }
    out.push_back(std::move(enc));
  }
  return out;
}

// Gradient rows keyed by feature id.
using SparseGradient = std::unordered_map<std::uint32_t, TokenProbs>;

struct BatchResult {
  double loss = 0.0;  // mean cross-entropy over active tokens
  std::size_t tokens = 0;
};

// Mean cross-entropy over active tokens of `batch` and its gradient.
template <class ParagraphRange>
BatchResult batch_loss_and_gradient(const TaggerModel& model, const ParagraphRange& batch, SparseGradient* grad) {
  BatchResult r;
  for (const EncodedParagraph* p : batch)
    for (const auto& t : *p) r.tokens += t.active;
  if (r.tokens == 0) return r;
  const double inv_n = 1.0 / static_cast<double>(r.tokens);
  for (const EncodedParagraph* p : batch) {
    for (const auto& t : *p) {
      if (!t.active) continue;
      TokenProbs prob = softmax(model.scores(t.features));
      r.loss -= std::log(std::max(prob[t.label], 1e-300)) * inv_n;
      if (!grad) continue;
      prob[t.label] -= 1.0;
      for (std::uint32_t f : t.features) {
        auto [it, fresh] = grad->try_emplace(f);
        if (fresh) it->second.fill(0.0);
        for (int c = 0; c < kNumClasses; ++c) it->second[c] += prob[c] * inv_n;
      }
    }
  }
  return r;
}

// Whole-set loss and gradient, for checking against finite differences.
inline BatchResult training_loss(const TaggerModel& model, const TrainingSet& data, SparseGradient* grad = nullptr) {
  auto enc = encode(data, model.hash_dim());
  std::vector<const EncodedParagraph*> all;
  for (const auto& p : enc) all.push_back(&p);
  return batch_loss_and_gradient(model, all, grad);
}

struct EpochLog {
  std::vector<double> mean_batch_loss;  // one per epoch
};

// Continues training `init` (or a zero model of `hash_dim`). Batches are
// groups of `batch_size` paragraphs in an order reshuffled every epoch from
// `config.seed`.
inline TaggerModel train(const TrainingSet& data, const TrainConfig& config,
                         std::optional<TaggerModel> init = std::nullopt,
                         std::size_t hash_dim = kDefaultHashDim, EpochLog* log = nullptr) {
  config.check();
  TaggerModel model = init ? std::move(*init) : TaggerModel(hash_dim);
  auto enc = encode(data, model.hash_dim());
  std::size_t active = 0;
  for (const auto& p : enc)
    for (const auto& t : p) active += t.active;
  if (active == 0) throw ArgumentError("train: no unmasked tokens in training data");

  std::vector<std::size_t> order(enc.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(config.seed);
  SparseGradient grad;
  std::vector<const EncodedParagraph*> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      batch.clear();
      for (std::size_t k = b; k < std::min(order.size(), b + config.batch_size); ++k) batch.push_back(&enc[order[k]]);
      grad.clear();
      BatchResult r = batch_loss_and_gradient(model, batch, &grad);
      if (r.tokens == 0) continue;
      for (const auto& [f, row] : grad)
        for (int c = 0; c < kNumClasses; ++c) model.weight(f, c) -= config.learning_rate * row[c];
      loss_sum += r.loss;
      ++batches;
    }
    if (log) log->mean_batch_loss.push_back(batches ? loss_sum / batches : 0.0);
  }
  model.history.push_back({config.epochs, config.learning_rate, config.batch_size, config.seed});
  return model;
}

// ---------------------------------------------------------------------------
// Model file, little-endian:
//   "SCINERTG" | u32 version=1 | u64 hash_dim | u32 classes=15
//   | u32 runs | runs x (u32 epochs, f64 lr, u64 batch, u64 seed)
//   | u64 nnz | nnz x (u64 index, f64 weight)
// Only non-zero weights are stored.

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
  std::uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    static_assert(sizeof(T) == 8);
    std::memcpy(&bits, &v, 8);
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(buf, sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError("model file truncated");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= std::uint64_t{buf[i]} << (8 * i);
  if constexpr (std::is_floating_point_v<T>) {
    T v;
    std::memcpy(&v, &bits, 8);
    return v;
  } else {
    return static_cast<T>(bits);
  }
}

inline constexpr char kModelMagic[8] = {'S', 'C', 'I', 'N', 'E', 'R', 'T', 'G'};
inline constexpr std::uint32_t kModelVersion = 1;

}  // namespace detail

inline void save_model(const TaggerModel& model, std::ostream& os) {
  using detail::put_le;
  os.write(detail::kModelMagic, 8);
  put_le<std::uint32_t>(os, detail::kModelVersion);
  put_le<std::uint64_t>(os, model.hash_dim());
  put_le<std::uint32_t>(os, kNumClasses);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.history.size()));
  for (const auto& r : model.history) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(r.epochs));
    put_le<double>(os, r.learning_rate);
    put_le<std::uint64_t>(os, r.batch_size);
    put_le<std::uint64_t>(os, r.seed);
  }
  const auto& w = model.weights();
  std::uint64_t nnz = 0;
  for (double v : w) nnz += v != 0.0;
  put_le<std::uint64_t>(os, nnz);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    put_le<std::uint64_t>(os, i);
    put_le<double>(os, w[i]);
  }
  if (!os) throw IoError("model write failed");
}

inline TaggerModel load_model(std::istream& is) {
  using detail::get_le;
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, detail::kModelMagic, 8) != 0) throw FormatError("not a tagger model file");
  auto version = get_le<std::uint32_t>(is);
  if (version != detail::kModelVersion) throw FormatError("unsupported model version " + std::to_string(version));
  auto dim = get_le<std::uint64_t>(is);
  auto classes = get_le<std::uint32_t>(is);
  if (classes != kNumClasses) throw FormatError("model has " + std::to_string(classes) + " classes");
  if (dim == 0 || dim > (std::uint64_t{1} << 32)) throw FormatError("model hash dimension out of range");
  TaggerModel model(dim);
  auto runs = get_le<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < runs; ++i) {
    TrainingRun r;
    r.epochs = static_cast<int>(get_le<std::uint32_t>(is));
    r.learning_rate = get_le<double>(is);
    r.batch_size = get_le<std::uint64_t>(is);
    r.seed = get_le<std::uint64_t>(is);
    model.history.push_back(r);
  }
  auto nnz = get_le<std::uint64_t>(is);
  auto& w = model.weights();
  for (std::uint64_t k = 0; k < nnz; ++k) {
    auto idx = get_le<std::uint64_t>(is);
    double v = get_le<double>(is);
    if (idx >= w.size()) throw FormatError("model weight index out of range");
    if (!std::isfinite(v)) throw FormatError("non-finite model weight");
    w[idx] = v;
  }
  return model;
}

// ---------------------------------------------------------------------------
// External probabilities: one JSON object per line,
//   {"paper_id": .., "paragraph": n, "word_index": i, "subword_index": j, "probs": [15 reals]}
// ordered by (paragraph, word_index, subword_index).

struct ExternalProbRecord {
  std::string paper_id;
  std::size_t paragraph = 0;
  std::size_t word_index = 0;
  std::size_t subword_index = 0;
  TokenProbs probs{};
};

inline constexpr double kExternalSumTolerance = 1e-6;

inline std::vector<ExternalProbRecord> load_external_probs(std::istream& is) {
  std::vector<ExternalProbRecord> out;
  std::string line;
  std::size_t record = 0;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++record;
    auto fail = [&](const std::string& msg) {
      return FormatError("probability record " + std::to_string(record) + ": " + msg);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw fail(e.what());
    }
    ExternalProbRecord r;
    try {
      r.paper_id = j.at("paper_id").get<std::string>();
      r.paragraph = j.at("paragraph").get<std::size_t>();
      r.word_index = j.at("word_index").get<std::size_t>();
      r.subword_index = j.at("subword_index").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw fail(e.what());
    }
    const auto& probs = j.contains("probs") ? j["probs"] : nlohmann::json();
    if (!probs.is_array() || probs.size() != kNumClasses)
      throw fail("expected " + std::to_string(kNumClasses) + " probabilities");
    double sum = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
      if (!probs[c].is_number()) throw fail("non-numeric probability");
      double v = probs[c].get<double>();
      if (!std::isfinite(v) || v < 0.0) throw fail("negative or non-finite probability");
      r.probs[c] = v;
      sum += v;
    }
    if (std::abs(sum - 1.0) > kExternalSumTolerance) throw fail("probabilities sum to " + std::to_string(sum));
    for (double& v : r.probs) v /= sum;
    out.push_back(std::move(r));
  }
  return out;
}

using ParagraphKey = std::pair<std::string, std::size_t>;

// Groups records into per-paragraph word/subword nests, checking that word
// and subword indices are contiguous from zero.
inline std::map<ParagraphKey, ParagraphProbs> group_external_probs(const std::vector<ExternalProbRecord>& records) {
  std::map<ParagraphKey, ParagraphProbs> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    auto& para = out[{r.paper_id, r.paragraph}];
    auto where = [&] { return "probability record " + std::to_string(i + 1) + " (" + r.paper_id + "/" + std::to_string(r.paragraph) + ")"; };
    if (r.word_index == para.size()) {
      if (r.subword_index != 0) throw AlignmentError(where() + ": word must start at subword 0");
      para.emplace_back();
    } else if (r.word_index + 1 != para.size()) {
      throw AlignmentError(where() + ": word_index out of order");
    }
    if (r.subword_index != para.back().size()) throw AlignmentError(where() + ": subword_index out of order");
    para.back().push_back(r.probs);
  }
  return out;
}

}  // namespace sciner
