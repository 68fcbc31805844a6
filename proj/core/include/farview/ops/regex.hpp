#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "farview/common.hpp"

namespace farview::ops {

/// Unanchored-search regex over bytes. Supported: literals, '.', '*', '+',
/// '?', bracket classes with ranges and negation, '|', groups, '^', '$',
/// backslash escapes including \d \w \s (and their negations).
/// Semantics match ECMAScript regex_search for this subset; '.' excludes
/// '\n' and '\r'.
class Regex {
 public:
  /// Throws Error(kRequest) on a malformed pattern.
  static Regex compile(std::string_view pattern);

  bool search(std::string_view s) const;
  std::size_t nfa_states() const { return nfa_->states.size(); }

 private:
  struct State {
    enum Kind : std::uint8_t { kChar, kSplit, kBegin, kEnd, kMatch } kind;
    std::bitset<256> set;
    int out = -1;
    int out1 = -1;
  };
  struct Nfa {
    std::vector<State> states;
    int start = 0;
  };
  struct DState {
    std::vector<int> nfa;  // sorted char/match states after closure
    bool accepts = false;  // Match reachable without an end assertion
    bool accepts_at_end = false;
    std::array<int, 256> next;
  };
  struct Cache {
    std::vector<DState> states;
    std::map<std::vector<int>, int> index;
  };

  std::vector<int> closure(const std::vector<int>& seeds, bool at_begin, bool at_end) const;
  int intern(std::vector<int> core) const;
  int step(int d, unsigned char c) const;

  std::shared_ptr<const Nfa> nfa_;
  mutable Cache cache_;
  mutable int initial_ = -1;
};

/// Stream of u16 length-prefixed strings.
Bytes encode_string_stream(const std::vector<std::string>& strings);
std::vector<std::string> decode_string_stream(ByteSpan stream);

/// Dispatches strings round-robin to `engines` matchers and merges in input
/// order. Throws Error(kRequest) before matching when the pattern is bad.
std::vector<std::string> regex_match_stream(const std::vector<std::string>& strings, std::string_view pattern,
                                            std::uint32_t engines);
Bytes regex_match_stream(ByteSpan stream, std::string_view pattern, std::uint32_t engines);

/// `engines` independent matchers over one pattern, for the pipelines.
class RegexBank {
 public:
  RegexBank(std::string_view pattern, std::uint32_t engines);
  std::uint32_t engines() const { return static_cast<std::uint32_t>(engines_.size()); }
  bool match(std::uint32_t engine, std::string_view s) const { return engines_[engine].search(s); }

 private:
  std::vector<Regex> engines_;
};

}  // namespace farview::ops
