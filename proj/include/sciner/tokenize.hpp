#pragma once

// Rule tokenizer and the one-paragraph-per-line token file format.

#include <cctype>
#include <algorithm>
#include <istream>
#include <optional>
#include <set>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sciner/error.hpp"
#include "sciner/fileio.hpp"

namespace sciner {

using Tokens = std::vector<std::string>;

struct TokenizedDocument {
  std::string paper_id;
  std::vector<Tokens> paragraphs;
  friend bool operator==(const TokenizedDocument&, const TokenizedDocument&) = default;
};

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Length in bytes of a stand-alone punctuation mark at s[i], or 0.
inline std::size_t detached_mark(std::string_view s, std::size_t i) {
  switch (s[i]) {
    case '(': case ')': case '[': case ']': case '{': case '}':
    case '"': case ':': case ';': case '!': case '?':
      return 1;
    default:
      break;
  }
  // U+201C and U+201D curly quotes.
  if (s.compare(i, 3, "\xE2\x80\x9C") == 0 || s.compare(i, 3, "\xE2\x80\x9D") == 0) return 3;
  return 0;
}

inline void split_hyphens(std::string_view core, Tokens& out) {
  std::size_t first = core.find_first_not_of('-');
  std::size_t last = core.find_last_not_of('-');
  if (first == std::string_view::npos) {
    if (!core.empty()) out.emplace_back(core);
    return;
  }
  std::string cur(core.substr(0, first));
  for (std::size_t i = first; i <= last; ++i) {
    if (core[i] == '-') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
      out.emplace_back("-");
    } else {
      cur.push_back(core[i]);
    }
  }
  cur.append(core.substr(last + 1));
  if (!cur.empty()) out.push_back(std::move(cur));
}

inline void split_piece(std::string_view piece, Tokens& out) {
  std::size_t start = 0;
  auto emit_segment = [&](std::string_view seg) {
    Tokens parts;
    split_hyphens(seg, parts);
    for (auto& part : parts) {
      std::size_t end = part.size();
      while (end > 0 && part[end - 1] == '.') --end;
      if (end) out.push_back(part.substr(0, end));
      for (std::size_t k = end; k < part.size(); ++k) out.emplace_back(".");
    }
  };
  for (std::size_t i = 0; i < piece.size(); ++i) {
    if (piece[i] != ',') continue;
    bool numeric = i > 0 && i + 1 < piece.size() && is_digit(piece[i - 1]) && is_digit(piece[i + 1]);
    if (numeric) continue;
    emit_segment(piece.substr(start, i - start));
    out.emplace_back(",");
    start = i + 1;
  }
  emit_segment(piece.substr(start));
}

}  // namespace detail

// Splits on whitespace, then detaches ( ) [ ] { } " “ ” : ; ! ? as single
// tokens, splits commas off unless they sit between two digits, detaches
// trailing periods and breaks internal hyphens out as "-" tokens.
inline Tokens tokenize(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(text[i])) ++i;
    std::size_t piece_start = i;
    while (i < text.size() && !detail::is_space(text[i])) {
      if (std::size_t n = detail::detached_mark(text, i)) {
        detail::split_piece(text.substr(piece_start, i - piece_start), out);
        out.emplace_back(text.substr(i, n));
        i += n;
        piece_start = i;
      } else {
        ++i;
      }
    }
    detail::split_piece(text.substr(piece_start, i - piece_start), out);
  }
  return out;
}

inline void write_token_file(const TokenizedDocument& doc, std::ostream& os) {
  for (std::size_t p = 0; p < doc.paragraphs.size(); ++p) {
    const Tokens& para = doc.paragraphs[p];
    if (para.empty()) throw ArgumentError("paragraph " + std::to_string(p) + " is empty");
    for (std::size_t t = 0; t < para.size(); ++t) {
      const std::string& tok = para[t];
      if (tok.empty()) throw ArgumentError("empty token in paragraph " + std::to_string(p));
      for (char c : tok)
        if (detail::is_space(c))
          throw ArgumentError("token '" + tok + "' contains whitespace (paragraph " +
                              std::to_string(p) + ")");
      if (t) os << ' ';
      os << tok;
    }
    os << '\n';
  }
  if (!os) throw IoError("token file write failed");
}

inline TokenizedDocument read_token_file(std::istream& is, std::string paper_id = {}) {
  TokenizedDocument doc{std::move(paper_id), {}};
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    Tokens para;
    std::size_t b = 0;
    while (b <= line.size()) {
      std::size_t e = line.find(' ', b);
      if (e == std::string::npos) e = line.size();
      if (e > b) para.push_back(line.substr(b, e - b));
      b = e + 1;
    }
    if (!para.empty()) doc.paragraphs.push_back(std::move(para));
  }
  return doc;
}

// Pre-extracted text for one paper: {"paper_id", "title", "paragraphs": [..]}.
struct Extraction {
  std::string paper_id;
  std::string title;
  std::vector<std::string> paragraphs;
};

inline Extraction parse_extraction(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("extraction: ") + e.what());
  }
  if (!j.is_object() || !j.contains("paper_id") || !j["paper_id"].is_string())
    throw FormatError("extraction: missing string field 'paper_id'");
  Extraction x;
  x.paper_id = j["paper_id"].get<std::string>();
  if (j.contains("title") && j["title"].is_string()) x.title = j["title"].get<std::string>();
  if (j.contains("paragraphs")) {
    if (!j["paragraphs"].is_array()) throw FormatError("extraction: 'paragraphs' must be an array");
    for (const auto& p : j["paragraphs"]) {
      if (!p.is_string()) throw FormatError("extraction: paragraph entries must be strings");
      x.paragraphs.push_back(p.get<std::string>());
    }
  }
  return x;
}

// The title becomes the first paragraph; paragraphs with no tokens are dropped.
inline TokenizedDocument tokenize_extraction(const Extraction& x) {
  TokenizedDocument doc{x.paper_id, {}};
  auto add = [&](std::string_view text) {
    Tokens t = tokenize(text);
    if (!t.empty()) doc.paragraphs.push_back(std::move(t));
  };
  if (!x.title.empty()) add(x.title);
  for (const auto& p : x.paragraphs) add(p);
  return doc;
}

// Reads every `<paper_id>.txt` in `dir`, ordered by paper id. With `only`,
// other ids are skipped.
inline std::vector<TokenizedDocument> read_token_dir(const fs::path& dir,
                                                     const std::optional<std::set<std::string>>& only = std::nullopt) {
  if (!fs::is_directory(dir)) throw IoError("token directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<TokenizedDocument> out;
  for (const auto& f : files) {
    std::string id = f.stem().string();
    if (only && !only->count(id)) continue;
    std::ifstream in(f);
    if (!in) throw IoError("cannot open: " + f.string());
    out.push_back(read_token_file(in, id));
  }
  return out;
}

}  // namespace sciner
