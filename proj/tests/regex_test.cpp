#include <gtest/gtest.h>

#include <regex>

#include "farview/ops/regex.hpp"
#include "test_util.hpp"

using namespace farview;
using namespace farview::ops;

namespace {

std::string gen_atom(std::mt19937_64& rng, int depth);

std::string gen_alt(std::mt19937_64& rng, int depth) {
  std::string out;
  const int branches = 1 + (rng() % 4 == 0 ? 1 : 0);
  for (int b = 0; b < branches; ++b) {
    if (b) out += '|';
    const int atoms = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < atoms; ++i) {
      out += gen_atom(rng, depth);
      switch (rng() % 8) {
        case 0: out += '*'; break;
        case 1: out += '+'; break;
        case 2: out += '?'; break;
        case 3:
          out += "*+?"[rng() % 3];
          out += '?';
          break;
        default: break;
      }
    }
  }
  return out;
}

std::string gen_atom(std::mt19937_64& rng, int depth) {
  static const char* const kAtoms[] = {"a",    "b",    "c",   "1",     ".",     "[ab]", "[^a]", "[a-c]",
                                       "\\d",  "\\w",  "\\s", "\\D",   "\\W",   "\\S",  "\\.",  "[0-9_]",
                                       "\\n",  " ",    "_",   "[\\d]", "[a\\-]"};
  if (depth > 0 && rng() % 6 == 0) return "(" + gen_alt(rng, depth - 1) + ")";
  return kAtoms[rng() % std::size(kAtoms)];
}

std::string gen_pattern(std::mt19937_64& rng) {
  std::string p = gen_alt(rng, 2);
  if (rng() % 5 == 0) p = "^" + p;
  if (rng() % 5 == 0) p += "$";
  return p;
}

std::string gen_string(std::mt19937_64& rng) {
  static const char kAlphabet[] = "abcab1 \n_.-";
  std::string s(rng() % 14, 'a');
  for (auto& c : s) c = kAlphabet[rng() % (sizeof(kAlphabet) - 1)];
  return s;
}

}  // namespace

TEST(Regex, Basics) {
  EXPECT_EQ(regex_match_stream(std::vector<std::string>{"aXXb", "ba"}, "a.*b", 4),
            (std::vector<std::string>{"aXXb"}));
  const auto r = Regex::compile("^ab+c$");
  EXPECT_TRUE(r.search("abbbc"));
  EXPECT_FALSE(r.search("xabc"));
  EXPECT_FALSE(r.search("ac"));
  EXPECT_TRUE(Regex::compile("").search("anything"));
  EXPECT_FALSE(Regex::compile("a.b").search("a\nb"));
}

TEST(Regex, RejectsUnsupportedOrMalformed) {
  for (const char* p : {"(", ")", "a)", "[abc", "*a", "a{2}", "(?:a)", "a**", "\\q", "[z-a]", "a|*"}) {
    try {
      Regex::compile(p);
      FAIL() << p;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kRequest) << p;
    }
  }
  EXPECT_THROW(regex_match_stream(std::vector<std::string>{"x"}, "(", 2), Error);
}

TEST(Regex, ParityWithStdRegex) {
  std::mt19937_64 rng(42);
  int patterns = 0;
  for (int i = 0; i < 1500; ++i) {
    const std::string p = gen_pattern(rng);
    const auto mine = Regex::compile(p);
    const std::regex ref(p, std::regex::ECMAScript);
    ++patterns;
    for (int k = 0; k < 40; ++k) {
      const std::string s = gen_string(rng);
      ASSERT_EQ(mine.search(s), std::regex_search(s, ref)) << "pattern /" << p << "/ on '" << s << "'";
    }
  }
  EXPECT_EQ(patterns, 1500);
}

TEST(Regex, EngineCountDoesNotChangeOutput) {
  std::mt19937_64 rng(5);
  std::vector<std::string> strings(10000);
  for (auto& s : strings) s = gen_string(rng);
  const auto one = regex_match_stream(strings, "a[b1]+|_\\s", 1);
  EXPECT_EQ(regex_match_stream(strings, "a[b1]+|_\\s", 8), one);
  EXPECT_FALSE(one.empty());
}

TEST(Regex, StringStreamCodec) {
  const std::vector<std::string> v{"", "abc", std::string(300, 'x')};
  const Bytes enc = encode_string_stream(v);
  EXPECT_EQ(enc.size(), 2 + 2 + 3 + 2 + 300u);
  EXPECT_EQ(decode_string_stream(enc), v);
  EXPECT_EQ(decode_string_stream(regex_match_stream(enc, "b", 3)), (std::vector<std::string>{"abc"}));
}

TEST(Regex, LongInputAndDfaCacheReset) {
  // Enough distinct DFA states to overflow the cache at least once.
  const auto r = Regex::compile("a.........................b");
  std::mt19937_64 rng(1);
  std::string s(200000, 'a');
  for (auto& c : s) c = "ab"[rng() % 2];
  const std::regex ref("a.........................b");
  EXPECT_EQ(r.search(s), std::regex_search(s, ref));
  s.back() = 'c';
  s[s.size() - 27] = 'c';
  EXPECT_EQ(r.search(s.substr(s.size() - 40)), std::regex_search(s.substr(s.size() - 40), ref));
}
