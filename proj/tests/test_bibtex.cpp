#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "sciner/bibtex.hpp"

using namespace sciner;

TEST(Bibtex, ProceedingsEntry) {
  auto r = parse_bibtex(fixtures::kProceedingsBib);
  EXPECT_EQ(r.skipped, 0u);
  ASSERT_EQ(r.records.size(), 1u);
  const PaperRecord& p = r.records[0];
  EXPECT_EQ(p.title, "Proceedings of the Computational (S)anskrit (V6) Digital Humanities: Selected Papers");
  EXPECT_EQ(p.editor, "Mulkarni, Amba and Helliwig, Oliver");
  EXPECT_EQ(p.month, "Jan");
  EXPECT_EQ(p.year, "2023");
  EXPECT_EQ(p.parsed_year(), 2023);
  EXPECT_EQ(p.address, "Canberra, Australia (Online mode)");
  EXPECT_EQ(p.publisher, "Association for Computational Linguistics");
  EXPECT_EQ(p.url, "https://aclanthology.org/2023-wsc-csdh.e");
  EXPECT_FALSE(p.author);
  EXPECT_FALSE(p.booktitle);
  EXPECT_FALSE(p.pages);
  EXPECT_EQ(p.venue(), Venue::OTHER);
}

TEST(Bibtex, EmptyInput) {
  auto r = parse_bibtex("");
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.skipped, 0u);
}

// Entry 2 never closes its title brace; entries 1 and 3 survive.
TEST(Bibtex, UnbalancedEntrySkipped) {
  const std::string text = R"(@inproceedings{a1,
  title = {First {BERT} Paper},
  author = "Doe, Jane",
  year = 2022,
  booktitle = "Proceedings of ACL 2022",
  url = "https://aclanthology.org/2022.acl-long.1.pdf"
}

@inproceedings{a2,
  title = {Broken {title,
  url = "https://aclanthology.org/2022.acl-long.2.pdf"
}

@inproceedings{a3,
  title = "Third",
  pages = "10--20",
  url = {https://aclanthology.org/2022.emnlp-main.3.pdf},
}
)";
  auto r = parse_bibtex(text);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.skipped, 1u);
  ASSERT_EQ(r.issues.size(), 1u);
  EXPECT_EQ(r.issues[0].line, 9u);

  PaperRecord first;
  first.title = "First {BERT} Paper";
  first.author = "Doe, Jane";
  first.year = "2022";
  first.booktitle = "Proceedings of ACL 2022";
  first.url = "https://aclanthology.org/2022.acl-long.1.pdf";
  PaperRecord third;
  third.title = "Third";
  third.pages = "10--20";
  third.url = "https://aclanthology.org/2022.emnlp-main.3.pdf";
  EXPECT_EQ(r.records[0], first);
  EXPECT_EQ(r.records[1], third);
  EXPECT_EQ(r.records[0].venue(), Venue::ACL);
  EXPECT_EQ(r.records[1].venue(), Venue::EMNLP);
}

TEST(Bibtex, MissingKeySkippedWithLine) {
  const std::string text = "@article{,\n  title = \"x\",\n  url = \"u\"\n}\n@article{ok,\n  url = \"v\"\n}\n";
  auto r = parse_bibtex(text);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].url, "v");
  ASSERT_EQ(r.issues.size(), 1u);
  EXPECT_EQ(r.issues[0].line, 1u);
  EXPECT_NE(r.issues[0].message.find("citation key"), std::string::npos);
}

TEST(Bibtex, StringMacrosAndConcatenation) {
  const std::string text = R"(@string{acl = "Association for Computational Linguistics"}
@comment{ignored {nested} text}
@inproceedings{k,
  title = "Part one" # { and two},
  publisher = acl,
  month = dec,
  url = "https://example.org/x"
}
)";
  auto r = parse_bibtex(text);
  EXPECT_EQ(r.skipped, 0u);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].title, "Part one and two");
  EXPECT_EQ(r.records[0].publisher, "Association for Computational Linguistics");
  EXPECT_EQ(r.records[0].month, "Dec");
}

TEST(Bibtex, EntryOrderPreserved) {
  std::string text;
  for (int i = 0; i < 50; ++i)
    text += "@misc{k" + std::to_string(i) + ", title = {T" + std::to_string(i) + "}, url = {u" + std::to_string(i) + "}}\n";
  auto r = parse_bibtex(text);
  ASSERT_EQ(r.records.size(), 50u);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(r.records[i].title, "T" + std::to_string(i));
}

TEST(Bibtex, EntryWithoutUrlSkipped) {
  auto r = parse_bibtex("@misc{k, title = {No link}}\n");
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.skipped, 1u);
}

TEST(Bibtex, StreamOverload) {
  std::istringstream in(fixtures::kProceedingsBib);
  EXPECT_EQ(parse_bibtex(in).records, parse_bibtex(fixtures::kProceedingsBib).records);
}
