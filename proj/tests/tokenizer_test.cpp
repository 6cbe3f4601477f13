#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "dynawarp/horspool.hpp"
#include "dynawarp/tokenizer.hpp"

namespace dynawarp {
namespace {

using Set = std::set<std::string>;

auto as_set(const std::vector<std::string>& v) -> Set { return {v.begin(), v.end()}; }

auto includes(const Set& super, const Set& sub) -> bool {
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

TEST(Tokenizer, AlphanumericRunWithTrigrams) {
  EXPECT_EQ(as_set(tokenize("warning")), (Set{"warning", "war", "arn", "rni", "nin", "ing"}));
  EXPECT_EQ(as_set(tokenize("WARNING")), as_set(tokenize("warning")));
  EXPECT_EQ(as_set(tokenize("ab")), (Set{"ab"}));
}

TEST(Tokenizer, DottedComposites) {
  const Set t = as_set(tokenize("192.0.0"));
  EXPECT_TRUE(t.count("192.0.0"));
  EXPECT_TRUE(t.count("192.0"));
  EXPECT_TRUE(t.count("0.0"));
  EXPECT_TRUE(t.count("192"));
  EXPECT_TRUE(t.count("0"));
  EXPECT_TRUE(t.count("."));
  // Five runs starting at "0" do not exist, so no second rule-5 token.
  EXPECT_EQ(t, (Set{"192.0.0", "192.0", "0.0", "192", "0", ".", "192"}));
}

TEST(Tokenizer, SeparatorComposites) {
  const Set t = as_set(tokenize("name@company"));
  EXPECT_TRUE(includes(t, Set{"name@company", "name", "company", "@", "nam", "ame", "com", "omp", "mpa",
                             "pan", "any"}));
  for (const char* s : {"a.b", "a:b", "a_b", "a-b", "a/b", "a@b"}) {
    EXPECT_TRUE(as_set(tokenize(s)).count(s)) << s;
  }
  EXPECT_FALSE(as_set(tokenize("a+b")).count("a+b"));
  EXPECT_FALSE(as_set(tokenize("a..b")).count("a..b"));
  // Composites join alphanumeric runs only.
  EXPECT_FALSE(as_set(tokenize("a.\xc3\xa9")).count("a.\xc3\xa9"));
}

TEST(Tokenizer, FiveRunDottedCompositesSlide) {
  const Set t = as_set(tokenize("10.1.2.3"));
  EXPECT_TRUE(includes(t, Set{"10.1.2", "1.2.3", "10.1", "1.2", "2.3"}));
  EXPECT_FALSE(t.count("10.1.2.3"));
  EXPECT_FALSE(as_set(tokenize("a.b:c")).count("a.b:c"));
}

TEST(Tokenizer, PunctuationGrams) {
  // All 1-, 2- and 3-grams of the run "${}" plus the run itself.
  EXPECT_EQ(as_set(tokenize("${}")), (Set{"${}", "$", "{", "}", "${", "{}"}));
  const Set t = as_set(tokenize("${jndi"));
  EXPECT_TRUE(includes(t, Set{"$", "{", "${", "jndi", "jnd", "ndi"}));
  EXPECT_FALSE(t.count("{j"));
}

TEST(Tokenizer, NonAsciiBigramsOverCodePoints) {
  // "äöü" is three two-byte code points.
  const Set t = as_set(tokenize("\xc3\xa4\xc3\xb6\xc3\xbc"));
  EXPECT_EQ(t, (Set{"\xc3\xa4\xc3\xb6\xc3\xbc", "\xc3\xa4\xc3\xb6", "\xc3\xb6\xc3\xbc"}));
  // Non-ASCII bytes are not case folded.
  EXPECT_EQ(as_set(tokenize("\xc3\x84")), (Set{"\xc3\x84"}));
}

TEST(Tokenizer, EmptyLineHasNoTokens) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(term_tokens("").empty());
}

TEST(Tokenizer, NgramsCanBeDisabled) {
  Tokenizer plain(false);
  const auto& v = plain.tokens("warning ${x}");
  const Set t(v.begin(), v.end());
  EXPECT_EQ(t, (Set{"warning", " ${", "x", "}"}));
  EXPECT_EQ(as_set(term_tokens("Host-1.example")),
            (Set{"host", "-", "1", ".", "example", "host-1", "1.example"}));
}

TEST(ContainsGrams, SixteenLetterId) {
  const std::vector<std::string> grams = contains_grams("lamhmiagiialitjq");
  EXPECT_EQ(grams.size(), 14u);
  EXPECT_TRUE(std::is_sorted(grams.begin(), grams.end()));
}

TEST(ContainsGrams, ShortAlnumNeedleHasNoGrams) {
  EXPECT_TRUE(contains_grams("ab").empty());
  EXPECT_TRUE(contains_grams("a").empty());
  EXPECT_TRUE(contains_grams("ab\xc3\xa4").empty());
  // A trailing partial code point is dropped.
  EXPECT_EQ(as_set(contains_grams("\xe2\x82\xac\xc3")), Set{});
  EXPECT_EQ(as_set(contains_grams("\xe2\x82\xac\xc3\xa9")), (Set{"\xe2\x82\xac\xc3\xa9"}));
}

TEST(ContainsGrams, GramsStayInsideClassRuns) {
  EXPECT_EQ(as_set(contains_grams("${jndi")), (Set{"$", "{", "${", "jnd", "ndi"}));
  EXPECT_EQ(as_set(contains_grams("Ab.Cd")), (Set{"."}));
}

// Random lines over a mixed alphabet. Every whole-token occurrence of a term
// must have all its rule 1-5 tokens indexed for the line, and every substring
// must have all its contains grams indexed.
TEST(Tokenizer, QueryPlansAreSoundOnRandomLines) {
  std::mt19937_64 rng(5);
  const std::vector<std::string> alphabet{"a", "b", "C", "1", "9", ".", ":", "-", "@", "/", " ", "=", "$",
                                          "{", "\xc3\xa9", "\xe2\x82\xac"};
  for (int i = 0; i < 3000; ++i) {
    std::string line;
    const std::size_t len = rng() % 24;
    for (std::size_t k = 0; k < len; ++k) {
      line += alphabet[rng() % alphabet.size()];
    }
    const Set indexed = as_set(tokenize(line));
    const std::string lower = ascii_lowercase(line);
    for (std::size_t b = 0; b < line.size(); ++b) {
      for (std::size_t e = b + 1; e <= line.size(); ++e) {
        const std::string sub = line.substr(b, e - b);
        ASSERT_TRUE(includes(indexed, as_set(contains_grams(sub)))) << line << " / " << sub;
        if (contains_whole_token(lower, ascii_lowercase(sub))) {
          ASSERT_TRUE(includes(indexed, as_set(term_tokens(sub)))) << line << " / " << sub;
        }
      }
    }
  }
}

TEST(WholeToken, BoundariesFollowCharacterClasses) {
  EXPECT_TRUE(contains_whole_token("info: start", "info"));
  EXPECT_TRUE(contains_whole_token("info: start", "start"));
  EXPECT_FALSE(contains_whole_token("info: restart", "start"));
  EXPECT_TRUE(contains_whole_token("restart start", "start"));
  EXPECT_TRUE(contains_whole_token("ip 10.0.0.1 up", "10.0.0"));
  EXPECT_TRUE(contains_whole_token("${x}", "${"));
  EXPECT_FALSE(contains_whole_token("a ${x}", "${"));  // the run is " ${"
  EXPECT_FALSE(contains_whole_token("${x}", "{"));
  EXPECT_FALSE(contains_whole_token("abc", ""));
}

TEST(Horspool, FindsAllOccurrences) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 2000; ++i) {
    std::string text;
    const std::size_t len = rng() % 200;
    for (std::size_t k = 0; k < len; ++k) {
      text.push_back(static_cast<char>('a' + rng() % 3));
    }
    std::string pattern;
    const std::size_t plen = 1 + rng() % 5;
    for (std::size_t k = 0; k < plen; ++k) {
      pattern.push_back(static_cast<char>('a' + rng() % 3));
    }
    const HorspoolMatcher m(pattern);
    for (std::size_t from = 0; from <= text.size(); from += 7) {
      ASSERT_EQ(m.find(text, from), text.find(pattern, from)) << text << " / " << pattern;
    }
  }
  EXPECT_EQ(HorspoolMatcher("").find("abc", 1), 1u);
  EXPECT_EQ(HorspoolMatcher("abcd").find("abc"), HorspoolMatcher::npos);
  EXPECT_EQ(HorspoolMatcher(std::string_view("\xff\x00", 2)).find(std::string_view("x\xff\x00", 3)), 1u);
}

}  // namespace
}  // namespace dynawarp
