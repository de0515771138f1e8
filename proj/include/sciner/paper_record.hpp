#pragma once

#include <cctype>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sciner/error.hpp"
#include "sciner/hash.hpp"

namespace sciner {

// Lowercase hex SHA-256 of the URL bytes. Used as the paper identity and as
// the PDF file stem.
inline std::string hash_url(std::string_view url) {
  if (url.empty()) throw ArgumentError("hash_url: empty url");
  return Sha256::of(url);
}

inline bool is_paper_id(std::string_view s) {
  if (s.size() != 64) return false;
  for (char c : s)
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  return true;
}

enum class Venue { ACL, EMNLP, NAACL, OTHER };

inline std::string_view to_string(Venue v) {
  switch (v) {
    case Venue::ACL: return "ACL";
    case Venue::EMNLP: return "EMNLP";
    case Venue::NAACL: return "NAACL";
    case Venue::OTHER: break;
  }
  return "OTHER";
}

namespace detail {

inline bool has_token(std::string_view text, std::string_view token) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && std::isalnum(static_cast<unsigned char>(text[j]))) ++j;
    if (j - i == token.size()) {
      bool eq = true;
      for (std::size_t k = 0; k < token.size() && eq; ++k)
        eq = std::tolower(static_cast<unsigned char>(text[i + k])) == token[k];
      if (eq) return true;
    }
    i = j;
  }
  return false;
}

}  // namespace detail

// Whole-token, case-insensitive match against booktitle and url; tokens are
// alphanumeric runs, so "naacl" never matches "acl" and "aclanthology" never
// matches either. First match in ACL, EMNLP, NAACL order wins.
inline Venue derive_venue(std::string_view booktitle, std::string_view url) {
  static constexpr std::pair<std::string_view, Venue> kOrder[] = {
      {"acl", Venue::ACL}, {"emnlp", Venue::EMNLP}, {"naacl", Venue::NAACL}};
  for (auto [token, venue] : kOrder)
    if (detail::has_token(booktitle, token) || detail::has_token(url, token)) return venue;
  return Venue::OTHER;
}

// One bibliography entry. Absent fields are nullopt; empty strings are never
// stored.
struct PaperRecord {
  std::string title;
  std::optional<std::string> editor;
  std::optional<std::string> month;
  std::optional<std::string> year;
  std::optional<std::string> address;
  std::optional<std::string> publisher;
  std::string url;
  std::optional<std::string> author;
  std::optional<std::string> booktitle;
  std::optional<std::string> pages;

  std::string paper_id() const { return hash_url(url); }
  Venue venue() const { return derive_venue(booktitle.value_or(""), url); }

  // Positive calendar year, or nullopt when absent or unparseable.
  std::optional<int> parsed_year() const {
    if (!year) return std::nullopt;
    int value = 0;
    const char* b = year->data();
    const char* e = b + year->size();
    auto [p, ec] = std::from_chars(b, e, value);
    if (ec != std::errc{} || p != e || value <= 0) return std::nullopt;
    return value;
  }

  friend bool operator==(const PaperRecord&, const PaperRecord&) = default;
};

}  // namespace sciner
