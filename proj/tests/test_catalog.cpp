#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "sciner/bibtex.hpp"
#include "sciner/catalog.hpp"

using namespace sciner;

TEST(Catalog, HeaderOnly) {
  std::ostringstream os;
  EXPECT_EQ(write_catalog_csv({}, os), 0u);
  EXPECT_EQ(os.str(), "Unnamed: 0,title,editor,month,year,address,publisher,url,author,booktitle,pages\n");
  std::istringstream in(os.str());
  EXPECT_TRUE(read_catalog_csv(in).empty());
}

TEST(Catalog, ProceedingsRowBytes) {
  auto parsed = parse_bibtex(fixtures::kProceedingsBib);
  std::ostringstream os;
  EXPECT_EQ(write_catalog_csv(parsed.records, os), 1u);
  EXPECT_EQ(os.str(), fixtures::kProceedingsCsv);
}

TEST(Catalog, CommaTitleQuotedAndRoundTrips) {
  PaperRecord r;
  r.title = "Disambiguation of Instrumental, Dative and Ablative Case";
  r.url = "https://aclanthology.org/x";
  std::ostringstream os;
  write_catalog_csv({r}, os);
  EXPECT_NE(os.str().find("0,\"Disambiguation of Instrumental, Dative and Ablative Case\","), std::string::npos);
  std::istringstream in(os.str());
  auto back = read_catalog_csv(in);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], r);
}

TEST(Catalog, RowIndexColumn) {
  std::vector<PaperRecord> rs(3);
  for (int i = 0; i < 3; ++i) rs[i].url = "u" + std::to_string(i);
  std::ostringstream os;
  write_catalog_csv(rs, os);
  std::istringstream lines(os.str());
  std::string line;
  std::getline(lines, line);
  for (int i = 0; i < 3; ++i) {
    std::getline(lines, line);
    EXPECT_EQ(line.substr(0, 2), std::to_string(i) + ",");
  }
}

TEST(Catalog, RandomRoundTrip) {
  std::mt19937_64 rng(5);
  const std::string alphabet = "ab ,\"\n\rxyZ{}-:;'";
  auto text = [&] {
    std::string s(1 + rng() % 12, ' ');
    for (char& c : s) c = alphabet[rng() % alphabet.size()];
    return s;
  };
  auto opt = [&]() -> std::optional<std::string> {
    if (rng() % 3 == 0) return std::nullopt;
    return text();
  };
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PaperRecord> rs(rng() % 6);
    for (auto& r : rs) {
      r.title = text();
      r.editor = opt();
      r.month = opt();
      r.year = opt();
      r.address = opt();
      r.publisher = opt();
      r.url = text();
      r.author = opt();
      r.booktitle = opt();
      r.pages = opt();
    }
    std::ostringstream os;
    write_catalog_csv(rs, os);
    std::istringstream in(os.str());
    ASSERT_EQ(read_catalog_csv(in), rs) << os.str();
  }
}

TEST(Catalog, WrongHeaderNamesColumn) {
  std::istringstream in("Unnamed: 0,title,editor,month,year,address,publisher,link,author,booktitle,pages\n");
  try {
    read_catalog_csv(in);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("link"), std::string::npos);
  }
  std::istringstream short_header("Unnamed: 0,title\n");
  EXPECT_THROW(read_catalog_csv(short_header), FormatError);
}

TEST(Csv, QuotedFieldsWithNewlines) {
  auto rows = parse_csv("a,\"b\nc\",\"d\"\"e\"\n1,,3\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"a", "b\nc", "d\"e"}));
  EXPECT_EQ(rows[1], (std::vector<std::string>{"1", "", "3"}));
}
