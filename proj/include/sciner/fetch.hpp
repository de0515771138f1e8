#pragma once

// PDF acquisition keyed by paper id. Files land as <paper_id>.pdf; a rerun
// skips ids whose file already exists, so an interrupted or partially failed
// run resumes by calling fetch_pdfs again.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sciner/fileio.hpp"
#include "sciner/paper_record.hpp"

namespace sciner {

enum class FetchStatus { pending, ok, failed };

inline std::string_view to_string(FetchStatus s) {
  switch (s) {
    case FetchStatus::pending: return "pending";
    case FetchStatus::ok: return "ok";
    case FetchStatus::failed: return "failed";
  }
  return "pending";
}

struct ManifestEntry {
  std::string paper_id;
  std::string url;  // not persisted
  FetchStatus status = FetchStatus::pending;
  int attempts = 0;
  std::string error_note;
};

struct DownloadManifest {
  std::vector<ManifestEntry> entries;

  const ManifestEntry* find(std::string_view paper_id) const {
    for (const auto& e : entries)
      if (e.paper_id == paper_id) return &e;
    return nullptr;
  }

  std::size_t count(FetchStatus s) const {
    return static_cast<std::size_t>(std::count_if(
        entries.begin(), entries.end(), [s](const ManifestEntry& e) { return e.status == s; }));
  }
};

// Formats like "87,587 (98.8%)": ok count with thousands separators and the
// ok share of all entries to one decimal place.
inline std::string success_summary(const DownloadManifest& m) {
  std::size_t ok = m.count(FetchStatus::ok);
  std::string digits = std::to_string(ok), grouped;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) grouped.push_back(',');
    grouped.push_back(digits[i]);
  }
  // Truncated, not rounded: 98.87% reads "98.8%".
  std::size_t permille = m.entries.empty() ? 0 : ok * 1000 / m.entries.size();
  char buf[32];
  std::snprintf(buf, sizeof buf, " (%zu.%zu%%)", permille / 10, permille % 10);
  return grouped + buf;
}

struct FetchResult {
  bool ok = false;
  std::string bytes;
  std::string error;

  static FetchResult success(std::string bytes) { return {true, std::move(bytes), {}}; }
  static FetchResult failure(std::string error) { return {false, {}, std::move(error)}; }
};

// Maps a URL to its bytes. Must be safe to call concurrently when
// FetchOptions::parallelism > 1.
class ByteFetcher {
 public:
  virtual ~ByteFetcher() = default;
  virtual FetchResult fetch(const std::string& url) = 0;
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class SystemClock final : public Clock {
 public:
  void sleep_for(std::chrono::milliseconds d) override { std::this_thread::sleep_for(d); }
};

struct FetchOptions {
  int max_attempts = 3;
  std::chrono::milliseconds retry_spacing{1000};
  unsigned parallelism = 1;
  Clock* clock = nullptr;  // SystemClock when null
  const DownloadManifest* previous = nullptr;  // attempt counts carried over on resume
};

inline void ensure_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError("output directory unavailable: " + dir.string());
  fs::path probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << 'x') || !out.flush())
      throw IoError("output directory not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

inline DownloadManifest fetch_pdfs(const std::vector<PaperRecord>& records, ByteFetcher& fetcher,
                                   const fs::path& out_dir, const FetchOptions& options = {}) {
  if (options.max_attempts < 1) throw ArgumentError("max_attempts must be >= 1");
  ensure_writable_dir(out_dir);
  SystemClock system_clock;
  Clock& clock = options.clock ? *options.clock : system_clock;

  DownloadManifest manifest;
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    std::string id = r.paper_id();
    if (!seen.insert(id).second) continue;
    manifest.entries.push_back({id, r.url, FetchStatus::pending, 0, {}});
  }

  std::unordered_map<std::string, int> prev_attempts;
  if (options.previous)
    for (const auto& p : options.previous->entries) prev_attempts[p.paper_id] = p.attempts;

  auto process = [&](ManifestEntry& e) {
    fs::path target = out_dir / (e.paper_id + ".pdf");
    if (fs::exists(target)) {
      auto it = prev_attempts.find(e.paper_id);
      e.status = FetchStatus::ok;
      e.attempts = it != prev_attempts.end() && it->second > 0 ? it->second : 1;
      return;
    }
    for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
      if (attempt > 1) clock.sleep_for(options.retry_spacing);
      e.attempts = attempt;
      FetchResult res = fetcher.fetch(e.url);
      if (res.ok) {
        try {
          atomic_write(target, [&](std::ostream& os) { os << res.bytes; }, true);
          e.status = FetchStatus::ok;
          e.error_note.clear();
          return;
        } catch (const IoError& err) {
          e.error_note = err.what();
        }
      } else {
        e.error_note = res.error.empty() ? "fetch failed" : res.error;
      }
    }
    e.status = FetchStatus::failed;
  };

  unsigned workers = std::max(1u, options.parallelism);
  if (workers == 1 || manifest.entries.size() < 2) {
    for (auto& e : manifest.entries) process(e);
    return manifest;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < std::min<std::size_t>(workers, manifest.entries.size()); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < manifest.entries.size(); i = next++)
        process(manifest.entries[i]);
    });
  }
  for (auto& t : pool) t.join();
  return manifest;
}

// Line format: paper_id<TAB>status<TAB>attempts<TAB>error_note
inline void write_manifest(const DownloadManifest& m, std::ostream& os) {
  for (const auto& e : m.entries) {
    std::string note = e.error_note;
    std::replace_if(note.begin(), note.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
    os << e.paper_id << '\t' << to_string(e.status) << '\t' << e.attempts << '\t' << note << '\n';
  }
}

inline DownloadManifest read_manifest(std::istream& is) {
  DownloadManifest m;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t b = 0;
    for (int i = 0; i < 3; ++i) {
      std::size_t t = line.find('\t', b);
      if (t == std::string::npos) throw FormatError("manifest line " + std::to_string(lineno) + ": expected 4 columns");
      cols.push_back(line.substr(b, t - b));
      b = t + 1;
    }
    cols.push_back(line.substr(b));
    ManifestEntry e;
    e.paper_id = cols[0];
    if (cols[1] == "ok") e.status = FetchStatus::ok;
    else if (cols[1] == "failed") e.status = FetchStatus::failed;
    else if (cols[1] == "pending") e.status = FetchStatus::pending;
    else throw FormatError("manifest line " + std::to_string(lineno) + ": unknown status '" + cols[1] + "'");
    try {
      e.attempts = std::stoi(cols[2]);
    } catch (...) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": bad attempts");
    }
    if (e.attempts < 0 || (e.status == FetchStatus::ok && e.attempts < 1))
      throw FormatError("manifest line " + std::to_string(lineno) + ": inconsistent attempts");
    e.error_note = cols[3];
    if (!ids.insert(e.paper_id).second) throw FormatError("manifest line " + std::to_string(lineno) + ": duplicate paper id");
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace sciner
