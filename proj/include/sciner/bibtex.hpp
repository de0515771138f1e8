#pragma once

// Tolerant BibTeX reader for anthology dumps. Entries are delimited by lines
// whose first non-blank character is '@', so one broken entry cannot swallow
// its successors.

#include <algorithm>
#include <cctype>
#include <istream>
#include <iterator>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sciner/paper_record.hpp"

namespace sciner {

struct BibIssue {
  std::size_t line;  // 1-based line of the offending entry
  std::string message;
};

struct BibParseResult {
  std::vector<PaperRecord> records;
  std::size_t skipped = 0;
  std::vector<BibIssue> issues;
};

namespace detail {

class BibEntryParser {
 public:
  BibEntryParser(std::string_view text, std::map<std::string, std::string>& macros)
      : s_(text), macros_(macros) {}

  struct Entry {
    std::string type;
    std::string key;
    std::vector<std::pair<std::string, std::string>> fields;
  };

  // Throws FormatError with an offset-relative message on malformed input.
  Entry parse() {
    Entry e;
    expect('@');
    e.type = lower(read_while([](char c) { return std::isalnum(uc(c)) || c == '_'; }));
    if (e.type.empty()) fail("missing entry type");
    skip_ws();
    char open = get();
    if (open != '{' && open != '(') fail("expected '{' after @" + e.type);
    close_ = open == '{' ? '}' : ')';
    if (e.type == "comment" || e.type == "preamble") {
      skip_balanced(open);
      return e;
    }
    if (e.type == "string") {
      skip_ws();
      std::string name = lower(read_name());
      skip_ws();
      expect('=');
      macros_[name] = read_value();
      skip_ws();
      expect(close_);
      return e;
    }
    skip_ws();
    std::size_t key_start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != close_ && s_[pos_] != '\n') ++pos_;
    e.key = trim(s_.substr(key_start, pos_ - key_start));
    if (e.key.empty() || e.key.find_first_of("= \t\"{}") != std::string::npos)
      fail("missing citation key");
    while (true) {
      skip_ws();
      if (pos_ >= s_.size()) fail("unbalanced braces: entry not closed");
      char c = s_[pos_];
      if (c == close_) {
        ++pos_;
        break;
      }
      if (c == ',') {
        ++pos_;
        continue;
      }
      std::string name = lower(read_name());
      if (name.empty()) fail(std::string("unexpected character '") + c + "'");
      skip_ws();
      expect('=');
      e.fields.emplace_back(std::move(name), read_value());
    }
    return e;
  }

 private:
  static unsigned char uc(char c) { return static_cast<unsigned char>(c); }

  [[noreturn]] void fail(const std::string& msg) const { throw FormatError(msg); }

  char get() {
    if (pos_ >= s_.size()) fail("unexpected end of entry");
    return s_[pos_++];
  }

  void expect(char c) {
    if (get() != c) fail(std::string("expected '") + c + "'");
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(uc(s_[pos_]))) ++pos_;
  }

  template <class Pred>
  std::string read_while(Pred pred) {
    std::size_t b = pos_;
    while (pos_ < s_.size() && pred(s_[pos_])) ++pos_;
    return std::string(s_.substr(b, pos_ - b));
  }

  std::string read_name() {
    return read_while([](char c) {
      return std::isalnum(uc(c)) || c == '_' || c == '-' || c == ':' || c == '.';
    });
  }

  void skip_balanced(char open) {
    char close = open == '{' ? '}' : ')';
    int depth = 1;
    while (depth > 0) {
      char c = get();
      if (c == open) ++depth;
      if (c == close) --depth;
    }
  }

  std::string read_braced() {
    // Opening brace already consumed; inner braces are kept verbatim.
    std::string out;
    int depth = 1;
    while (true) {
      if (pos_ >= s_.size()) fail("unbalanced braces in field value");
      char c = s_[pos_++];
      if (c == '{') ++depth;
      if (c == '}' && --depth == 0) return out;
      out.push_back(c);
    }
  }

  std::string read_quoted() {
    std::string out;
    int depth = 0;
    while (true) {
      if (pos_ >= s_.size()) fail("unterminated quoted value");
      char c = s_[pos_++];
      if (c == '"' && depth == 0) return out;
      if (c == '{') ++depth;
      if (c == '}') {
        if (depth == 0) fail("unbalanced braces in quoted value");
        --depth;
      }
      out.push_back(c);
    }
  }

  std::string read_value() {
    std::string out;
    while (true) {
      skip_ws();
      if (pos_ >= s_.size()) fail("missing field value");
      char c = s_[pos_];
      if (c == '{') {
        ++pos_;
        out += read_braced();
      } else if (c == '"') {
        ++pos_;
        out += read_quoted();
      } else {
        std::string word = read_name();
        if (word.empty()) fail(std::string("unexpected character '") + c + "' in value");
        if (std::all_of(word.begin(), word.end(), [](char ch) { return std::isdigit(uc(ch)); })) {
          out += word;
        } else {
          auto it = macros_.find(lower(word));
          out += it != macros_.end() ? it->second : word;
        }
      }
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == '#') {
        ++pos_;
        continue;
      }
      return out;
    }
  }

  static std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(uc(c)));
    return s;
  }

  static std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(uc(s[b]))) ++b;
    while (e > b && std::isspace(uc(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
  }

  std::string_view s_;
  std::map<std::string, std::string>& macros_;
  std::size_t pos_ = 0;
  char close_ = '}';
};

// Collapses every whitespace run (including line breaks) to one space.
inline std::string normalize_space(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
    } else {
      if (pending) out.push_back(' ');
      pending = false;
      out.push_back(c);
    }
  }
  return out;
}

inline std::map<std::string, std::string> month_macros() {
  return {{"jan", "Jan"}, {"feb", "Feb"}, {"mar", "Mar"}, {"apr", "Apr"},
          {"may", "May"}, {"jun", "Jun"}, {"jul", "Jul"}, {"aug", "Aug"},
          {"sep", "Sep"}, {"oct", "Oct"}, {"nov", "Nov"}, {"dec", "Dec"}};
}

}  // namespace detail

inline BibParseResult parse_bibtex(std::string_view source) {
  BibParseResult result;
  auto macros = detail::month_macros();

  // Split into chunks at lines starting with '@'.
  std::vector<std::pair<std::size_t, std::size_t>> chunks;  // offset, line
  std::size_t line = 1;
  for (std::size_t i = 0; i < source.size();) {
    std::size_t eol = source.find('\n', i);
    if (eol == std::string_view::npos) eol = source.size();
    std::size_t j = i;
    while (j < eol && (source[j] == ' ' || source[j] == '\t' || source[j] == '\r')) ++j;
    if (j < eol && source[j] == '@') chunks.emplace_back(j, line);
    i = eol + 1;
    ++line;
  }

  for (std::size_t k = 0; k < chunks.size(); ++k) {
    auto [off, entry_line] = chunks[k];
    std::size_t end = k + 1 < chunks.size() ? chunks[k + 1].first : source.size();
    std::string_view text = source.substr(off, end - off);
    try {
      detail::BibEntryParser parser(text, macros);
      auto entry = parser.parse();
      if (entry.key.empty()) continue;  // @string, @comment, @preamble
      PaperRecord rec;
      for (auto& [name, raw] : entry.fields) {
        std::string value = detail::normalize_space(raw);
        if (value.empty()) continue;
        if (name == "title") rec.title = value;
        else if (name == "editor") rec.editor = value;
        else if (name == "month") rec.month = value;
        else if (name == "year") rec.year = value;
        else if (name == "address") rec.address = value;
        else if (name == "publisher") rec.publisher = value;
        else if (name == "url") rec.url = value;
        else if (name == "author") rec.author = value;
        else if (name == "booktitle") rec.booktitle = value;
        else if (name == "pages") rec.pages = value;
      }
      if (rec.url.empty()) throw FormatError("entry '" + entry.key + "' has no url");
      result.records.push_back(std::move(rec));
    } catch (const FormatError& err) {
      ++result.skipped;
      result.issues.push_back({entry_line, err.what()});
    }
  }
  return result;
}

inline BibParseResult parse_bibtex(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_bibtex(std::string_view(text));
}

}  // namespace sciner
