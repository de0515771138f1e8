#pragma once

// Paper catalog as CSV, in the column layout of the anthology export:
//   Unnamed: 0,title,editor,month,year,address,publisher,url,author,booktitle,pages
// UTF-8, LF line endings, RFC 4180 quoting. Absent fields are empty cells.

#include <algorithm>
#include <array>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "sciner/paper_record.hpp"

namespace sciner {

inline constexpr std::array<std::string_view, 11> kCatalogColumns = {
    "Unnamed: 0", "title",     "editor", "month",  "year",     "address",
    "publisher",  "url",       "author", "booktitle", "pages"};

inline std::string catalog_header() {
  std::string h;
  for (std::size_t i = 0; i < kCatalogColumns.size(); ++i) {
    if (i) h.push_back(',');
    h += kCatalogColumns[i];
  }
  return h;
}

inline std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::size_t write_catalog_csv(const std::vector<PaperRecord>& records, std::ostream& sink) {
  sink << catalog_header() << '\n';
  auto cell = [](const std::optional<std::string>& v) { return csv_escape(v.value_or("")); };
  for (std::size_t i = 0; i < records.size(); ++i) {
    const PaperRecord& r = records[i];
    sink << i << ',' << csv_escape(r.title) << ',' << cell(r.editor) << ',' << cell(r.month) << ','
         << cell(r.year) << ',' << cell(r.address) << ',' << cell(r.publisher) << ','
         << csv_escape(r.url) << ',' << cell(r.author) << ',' << cell(r.booktitle) << ','
         << cell(r.pages) << '\n';
  }
  if (!sink) throw IoError("catalog write failed");
  return records.size();
}

// Splits CSV text into rows of fields. Quoted fields may hold commas, quotes
// and line breaks.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_field();
      rows.push_back(std::move(row));
      row.clear();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw FormatError("catalog: unterminated quoted field");
  if (field_started || !row.empty()) {
    end_field();
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<PaperRecord> read_catalog_csv(std::istream& source) {
  std::string text((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
  auto rows = parse_csv(text);
  if (rows.empty()) throw FormatError("catalog: missing header");
  const auto& header = rows.front();
  for (std::size_t i = 0; i < std::max(header.size(), kCatalogColumns.size()); ++i) {
    if (i >= header.size())
      throw FormatError("catalog: missing column '" + std::string(kCatalogColumns[i]) + "'");
    if (i >= kCatalogColumns.size() || header[i] != kCatalogColumns[i])
      throw FormatError("catalog: unexpected column '" + header[i] + "'");
  }
  std::vector<PaperRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != kCatalogColumns.size())
      throw FormatError("catalog: row " + std::to_string(r) + " has " +
                        std::to_string(row.size()) + " fields");
    auto opt = [](const std::string& s) -> std::optional<std::string> {
      if (s.empty()) return std::nullopt;
      return s;
    };
    PaperRecord rec;
    rec.title = row[1];
    rec.editor = opt(row[2]);
    rec.month = opt(row[3]);
    rec.year = opt(row[4]);
    rec.address = opt(row[5]);
    rec.publisher = opt(row[6]);
    rec.url = row[7];
    rec.author = opt(row[8]);
    rec.booktitle = opt(row[9]);
    rec.pages = opt(row[10]);
    if (rec.url.empty()) throw FormatError("catalog: row " + std::to_string(r) + " has no url");
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace sciner
