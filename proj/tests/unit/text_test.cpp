#include <gtest/gtest.h>

#include "mtie/text.hpp"

namespace mtie::text {
namespace {

TEST(Canonicalize, FoldsCaseQuotesAndWhitespace) {
  EXPECT_EQ(canonicalize("  'Person-Nationality' "), "person-nationality");
  EXPECT_EQ(canonicalize("`LOC'"), "loc");
  EXPECT_EQ(canonicalize("argument   role"), "argument role");
}

TEST(Canonicalize, KeepsSeparatorsDistinct) {
  EXPECT_NE(canonicalize("person-place_lived"), canonicalize("person-place-lived"));
  EXPECT_NE(canonicalize("person_place_lived"), canonicalize("person-place_lived"));
}

TEST(CleanCell, StripsQuotesAndTrailingPunctuation) {
  EXPECT_EQ(clean_cell(" \"Jacques Chirac\". "), "Jacques Chirac");
  EXPECT_EQ(clean_cell("\xE2\x80\x9CJapan\xE2\x80\x9D"), "Japan");
  EXPECT_EQ(clean_cell("`Syrian'"), "Syrian");
  EXPECT_EQ(clean_cell("'over a million of his own citizens',"), "over a million of his own citizens");
}

TEST(CleanCell, PreservesInteriorBytes) {
  EXPECT_EQ(clean_cell("O'Neil"), "O'Neil");
  EXPECT_EQ(clean_cell("St. Louis"), "St. Louis");
  EXPECT_EQ(clean_cell("  a  b  "), "a  b");
}

TEST(NormalizePunctuation, MapsFullWidthForms) {
  EXPECT_EQ(normalize_punctuation("（周杰伦，中国）"), "(周杰伦,中国)");
  EXPECT_EQ(normalize_punctuation("地名、人名"), "地名,人名");
  EXPECT_EQ(normalize_punctuation("plain ascii"), "plain ascii");
}

TEST(SplitFields, QuoteAware) {
  auto f = split_fields("'Smith, John', 'Acme'", ',');
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(clean_cell(f[0]), "Smith, John");
  EXPECT_EQ(clean_cell(f[1]), "Acme");
}

TEST(SplitFields, ApostropheInsideWordDoesNotOpenQuote) {
  auto f = split_fields("O'Neil's team, Boston", ',');
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(trim(f[0]), "O'Neil's team");
}

TEST(Utf8, CharsAndCjk) {
  EXPECT_EQ(utf8_chars("a中b").size(), 3u);
  EXPECT_TRUE(contains_cjk("周杰伦"));
  EXPECT_FALSE(contains_cjk("Japan"));
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace mtie::text
