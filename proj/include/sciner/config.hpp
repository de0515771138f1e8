#pragma once

// Flat `key = value` run configuration. Lines starting with `#` and blank
// lines are ignored; unknown keys and repeated keys are errors.

#include <charconv>
#include <cstdlib>
#include <type_traits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "sciner/dataset.hpp"
#include "sciner/error.hpp"
#include "sciner/eval.hpp"
#include "sciner/fileio.hpp"
#include "sciner/selftrain.hpp"

namespace sciner {

inline constexpr const char* kRunDirEnv = "SELFTRAIN_RUN_DIR";

struct RunConfig {
  // paths; relative paths resolve against the config file's directory
  std::optional<fs::path> bib;
  std::optional<fs::path> catalog;
  std::optional<fs::path> manual_ids;
  std::optional<fs::path> partition;
  std::optional<fs::path> pdf_dir;
  std::optional<fs::path> manifest;
  std::optional<fs::path> token_dir;
  std::optional<fs::path> manual;
  std::optional<fs::path> test;
  std::optional<fs::path> run_dir;

  LoopConfig loop;
  std::size_t held_out = 2;  // papers per annotator, when no test file is given
  BootstrapConfig bootstrap;
  int fetch_attempts = 3;
  int retry_spacing_ms = 1000;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* b = value.data();
  const char* e = b + value.size();
  auto r = std::from_chars(b, e, out);
  if (r.ec != std::errc{} || r.ptr != e) throw ArgumentError("config key '" + key + "': bad number '" + value + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ArgumentError("config key '" + key + "': expected true/false, got '" + value + "'");
}

}  // namespace detail

inline std::map<std::string, std::string> parse_key_values(std::string_view text, const std::string& source = "<config>") {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError(source + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(std::string_view(t).substr(0, eq));
    std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw FormatError(source + ":" + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second)
      throw FormatError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return out;
}

inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value, const fs::path& base = {}) {
  auto path = [&] { return fs::path(value).is_absolute() || base.empty() ? fs::path(value) : base / value; };
  using detail::parse_number;
  if (key == "bib") c.bib = path();
  else if (key == "catalog") c.catalog = path();
  else if (key == "manual_ids") c.manual_ids = path();
  else if (key == "partition") c.partition = path();
  else if (key == "pdf_dir") c.pdf_dir = path();
  else if (key == "manifest") c.manifest = path();
  else if (key == "token_dir") c.token_dir = path();
  else if (key == "manual") c.manual = path();
  else if (key == "test") c.test = path();
  else if (key == "run_dir") c.run_dir = path();
  else if (key == "iterations") c.loop.iterations = parse_number<int>(key, value);
  else if (key == "step1_epochs") c.loop.step1.epochs = parse_number<int>(key, value);
  else if (key == "step1_lr") c.loop.step1.learning_rate = parse_number<double>(key, value);
  else if (key == "step1_batch_size") c.loop.step1.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "step3_epochs") c.loop.step3.epochs = parse_number<int>(key, value);
  else if (key == "step3_lr") c.loop.step3.learning_rate = parse_number<double>(key, value);
  else if (key == "step3_batch_size") c.loop.step3.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "gamma") c.loop.gate.gamma = parse_number<double>(key, value);
  else if (key == "amb_policy") {
    auto p = parse_amb_policy(value);
    if (!p) throw ArgumentError("config key 'amb_policy': unknown policy '" + value + "'");
    c.loop.amb_policy = *p;
  } else if (key == "seed") {
    c.loop.seed = parse_number<std::uint64_t>(key, value);
    c.bootstrap.seed = c.loop.seed;
  } else if (key == "carry_forward") c.loop.carry_forward = detail::parse_bool(key, value);
  else if (key == "hash_dim") c.loop.hash_dim = parse_number<std::size_t>(key, value);
  else if (key == "parallelism") c.loop.parallelism = parse_number<unsigned>(key, value);
  else if (key == "held_out") c.held_out = parse_number<std::size_t>(key, value);
  else if (key == "draws") c.bootstrap.draws = parse_number<std::size_t>(key, value);
  else if (key == "draw_size") c.bootstrap.draw_size = parse_number<std::size_t>(key, value);
  else if (key == "fetch_attempts") c.fetch_attempts = parse_number<int>(key, value);
  else if (key == "retry_spacing_ms") c.retry_spacing_ms = parse_number<int>(key, value);
  else throw ArgumentError("unknown config key '" + key + "'");
}

// Defaults, then SELFTRAIN_RUN_DIR, then the file. Flags are applied by the
// caller afterwards.
inline RunConfig load_run_config(const std::optional<fs::path>& file) {
  RunConfig c;
  if (const char* env = std::getenv(kRunDirEnv); env && *env) c.run_dir = fs::path(env);
  if (!file) return c;
  if (!fs::exists(*file)) throw IoError("config file not found: " + file->string());
  for (const auto& [k, v] : parse_key_values(read_file(*file), file->string()))
    apply_setting(c, k, v, file->parent_path());
  return c;
}

}  // namespace sciner
