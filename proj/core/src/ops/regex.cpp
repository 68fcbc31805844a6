#include "farview/ops/regex.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <optional>

namespace farview::ops {

namespace {

struct Frag {
  int start;
  std::vector<std::pair<int, bool>> outs;  // (state, second edge?) left dangling
};

constexpr std::size_t kMaxCachedStates = 4096;

class Parser {
 public:
  template <typename S>
  Parser(std::string_view p, std::vector<S>& states, auto make)
      : p_(p), add_([&states, make](int kind, const std::bitset<256>& set) {
          states.push_back(make(kind, set));
          return static_cast<int>(states.size() - 1);
        }),
        patch_([&states](const std::vector<std::pair<int, bool>>& outs, int target) {
          for (auto [s, second] : outs) (second ? states[s].out1 : states[s].out) = target;
        }),
        set_out_([&states](int s, int out, int out1) {
          states[s].out = out;
          states[s].out1 = out1;
        }) {}

  Frag parse() {
    Frag f = alternation();
    if (pos_ != p_.size()) bad("unbalanced ')'");
    return f;
  }

 private:
  enum Kind { kChar = 0, kSplit = 1, kBegin = 2, kEnd = 3, kMatch = 4 };

  [[noreturn]] void bad(const std::string& why) const {
    fail(ErrorCode::kRequest, "bad regex at offset " + std::to_string(pos_) + ": " + why);
  }

  bool more() const { return pos_ < p_.size(); }
  char peek() const { return p_[pos_]; }

  Frag epsilon() {
    const int s = add_(kSplit, {});
    return Frag{s, {{s, false}}};
  }

  Frag alternation() {
    Frag left = concatenation();
    while (more() && peek() == '|') {
      ++pos_;
      Frag right = concatenation();
      const int s = add_(kSplit, {});
      set_out_(s, left.start, right.start);
      left.outs.insert(left.outs.end(), right.outs.begin(), right.outs.end());
      left.start = s;
    }
    return left;
  }

  Frag concatenation() {
    std::optional<Frag> acc;
    while (more() && peek() != '|' && peek() != ')') {
      Frag next = repetition();
      if (!acc) {
        acc = std::move(next);
      } else {
        patch_(acc->outs, next.start);
        acc->outs = std::move(next.outs);
      }
    }
    return acc ? std::move(*acc) : epsilon();
  }

  Frag repetition() {
    const bool assertion = more() && (peek() == '^' || peek() == '$');
    Frag f = atom();
    if (!more()) return f;
    const char q = peek();
    if (q != '*' && q != '+' && q != '?') return f;
    if (assertion) bad("quantifier after an anchor");
    ++pos_;
    if (more() && peek() == '?') ++pos_;  // lazy form: same language
    if (more() && (peek() == '*' || peek() == '+' || peek() == '?')) bad("nested quantifier");
    const int s = add_(kSplit, {});
    if (q == '*') {
      set_out_(s, f.start, -1);
      patch_(f.outs, s);
      return Frag{s, {{s, true}}};
    }
    if (q == '+') {
      set_out_(s, f.start, -1);
      patch_(f.outs, s);
      return Frag{f.start, {{s, true}}};
    }
    set_out_(s, f.start, -1);
    f.outs.emplace_back(s, true);
    return Frag{s, std::move(f.outs)};
  }

  Frag single(const std::bitset<256>& set) {
    const int s = add_(kChar, set);
    return Frag{s, {{s, false}}};
  }

  Frag atom() {
    const char c = peek();
    switch (c) {
      case '(': {
        ++pos_;
        if (more() && peek() == '?') bad("group extensions are not supported");
        Frag f = alternation();
        if (!more() || peek() != ')') bad("missing ')'");
        ++pos_;
        return f;
      }
      case '*':
      case '+':
      case '?':
        bad("quantifier without operand");
      case '{':
      case '}':
        bad("counted repetition is not supported");
      case '^': {
        ++pos_;
        const int s = add_(kBegin, {});
        return Frag{s, {{s, false}}};
      }
      case '$': {
        ++pos_;
        const int s = add_(kEnd, {});
        return Frag{s, {{s, false}}};
      }
      case '.': {
        ++pos_;
        std::bitset<256> set;
        set.set();
        set.reset('\n');
        set.reset('\r');
        return single(set);
      }
      case '[':
        ++pos_;
        return single(bracket());
      case '\\':
        ++pos_;
        return single(escape(false));
      default:
        ++pos_;
        return single(std::bitset<256>().set(static_cast<unsigned char>(c)));
    }
  }

  static std::bitset<256> predicate_set(int (*pred)(int)) {
    std::bitset<256> s;
    for (int i = 0; i < 128; ++i)
      if (pred(i)) s.set(i);
    return s;
  }

  static int is_word(int c) { return std::isalnum(c) || c == '_'; }

  // Parses the escape after a backslash. Sets `*single` when the escape is a
  // single character (usable as a range endpoint).
  std::bitset<256> escape(bool in_class, int* single = nullptr) {
    if (!more()) bad("trailing backslash");
    const char c = p_[pos_++];
    auto one = [&](unsigned char ch) {
      if (single) *single = ch;
      return std::bitset<256>().set(ch);
    };
    switch (c) {
      case 'd': return predicate_set([](int ch) { return std::isdigit(ch); });
      case 'D': return ~predicate_set([](int ch) { return std::isdigit(ch); });
      case 'w': return predicate_set(is_word);
      case 'W': return ~predicate_set(is_word);
      case 's': return predicate_set([](int ch) { return std::isspace(ch); });
      case 'S': return ~predicate_set([](int ch) { return std::isspace(ch); });
      case 'n': return one('\n');
      case 't': return one('\t');
      case 'r': return one('\r');
      case 'f': return one('\f');
      case 'v': return one('\v');
      default: break;
    }
    if (std::isalnum(static_cast<unsigned char>(c)) && !(in_class && c == 'b'))
      bad(std::string("unsupported escape \\") + c);
    if (in_class && c == 'b') return one('\b');
    return one(static_cast<unsigned char>(c));
  }

  std::bitset<256> bracket() {
    std::bitset<256> set;
    bool negate = false;
    if (more() && peek() == '^') {
      negate = true;
      ++pos_;
    }
    while (true) {
      if (!more()) bad("missing ']'");
      if (peek() == ']') {
        ++pos_;
        break;
      }
      int lo = -1;
      std::bitset<256> item;
      if (peek() == '\\') {
        ++pos_;
        item = escape(true, &lo);
      } else {
        lo = static_cast<unsigned char>(p_[pos_++]);
        item.set(lo);
      }
      if (lo >= 0 && pos_ + 1 < p_.size() && peek() == '-' && p_[pos_ + 1] != ']') {
        ++pos_;
        int hi = -1;
        if (peek() == '\\') {
          ++pos_;
          escape(true, &hi);
          if (hi < 0) bad("class escape used as a range endpoint");
        } else {
          hi = static_cast<unsigned char>(p_[pos_++]);
        }
        if (hi < lo) bad("inverted range");
        for (int ch = lo; ch <= hi; ++ch) item.set(ch);
      } else if (lo < 0 && pos_ + 1 < p_.size() && peek() == '-' && p_[pos_ + 1] != ']') {
        bad("class escape used as a range endpoint");
      }
      set |= item;
    }
    return negate ? ~set : set;
  }

  std::string_view p_;
  std::size_t pos_ = 0;
  std::function<int(int, const std::bitset<256>&)> add_;
  std::function<void(const std::vector<std::pair<int, bool>>&, int)> patch_;
  std::function<void(int, int, int)> set_out_;
};

}  // namespace

Regex Regex::compile(std::string_view pattern) {
  auto nfa = std::make_shared<Nfa>();
  Parser parser(pattern, nfa->states, [](int kind, const std::bitset<256>& set) {
    State s{static_cast<State::Kind>(kind), set, -1, -1};
    return s;
  });
  Frag f = parser.parse();
  nfa->states.push_back(State{State::kMatch, {}, -1, -1});
  const int match = static_cast<int>(nfa->states.size() - 1);
  for (auto [s, second] : f.outs) (second ? nfa->states[s].out1 : nfa->states[s].out) = match;
  nfa->start = f.start;
  Regex r;
  r.nfa_ = std::move(nfa);
  return r;
}

std::vector<int> Regex::closure(const std::vector<int>& seeds, bool at_begin, bool at_end) const {
  std::vector<int> out;
  std::vector<char> seen(nfa_->states.size(), 0);
  std::vector<int> stack(seeds.rbegin(), seeds.rend());
  while (!stack.empty()) {
    const int s = stack.back();
    stack.pop_back();
    if (s < 0 || seen[s]) continue;
    seen[s] = 1;
    const auto& st = nfa_->states[s];
    switch (st.kind) {
      case State::kChar:
      case State::kMatch:
        out.push_back(s);
        break;
      case State::kSplit:
        stack.push_back(st.out1);
        stack.push_back(st.out);
        break;
      case State::kBegin:
        if (at_begin) stack.push_back(st.out);
        break;
      case State::kEnd:
        if (at_end) stack.push_back(st.out);
        break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// `key` holds the seed states; a leading -2 marks the start-of-input state.
int Regex::intern(std::vector<int> key) const {
  if (auto it = cache_.index.find(key); it != cache_.index.end()) return it->second;
  const bool at_begin = !key.empty() && key.front() == -2;
  std::vector<int> seeds(key.begin() + (at_begin ? 1 : 0), key.end());
  DState d;
  d.nfa = closure(seeds, at_begin, false);
  const int match = static_cast<int>(nfa_->states.size() - 1);
  d.accepts = std::binary_search(d.nfa.begin(), d.nfa.end(), match);
  const auto end_set = closure(seeds, at_begin, true);
  d.accepts_at_end = std::binary_search(end_set.begin(), end_set.end(), match);
  d.next.fill(-1);
  cache_.states.push_back(std::move(d));
  const int id = static_cast<int>(cache_.states.size() - 1);
  cache_.index.emplace(std::move(key), id);
  return id;
}

int Regex::step(int d, unsigned char c) const {
  if (const int n = cache_.states[d].next[c]; n >= 0) return n;
  std::vector<int> seeds{nfa_->start};
  for (int s : cache_.states[d].nfa) {
    const auto& st = nfa_->states[s];
    if (st.kind == State::kChar && st.set.test(c)) seeds.push_back(st.out);
  }
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  if (cache_.states.size() >= kMaxCachedStates) {
    cache_.states.clear();
    cache_.index.clear();
    initial_ = -1;
    return intern(std::move(seeds));
  }
  const int n = intern(std::move(seeds));
  cache_.states[d].next[c] = n;
  return n;
}

bool Regex::search(std::string_view s) const {
  if (initial_ < 0) initial_ = intern({-2, nfa_->start});
  int d = initial_;
  if (cache_.states[d].accepts) return true;
  for (unsigned char c : s) {
    d = step(d, c);
    if (cache_.states[d].accepts) return true;
  }
  return cache_.states[d].accepts_at_end;
}

Bytes encode_string_stream(const std::vector<std::string>& strings) {
  Bytes out;
  for (const auto& s : strings) {
    if (s.size() > 0xFFFF) fail(ErrorCode::kArgument, "string longer than 65535 bytes");
    append_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
    const auto b = as_bytes(s);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

std::vector<std::string> decode_string_stream(ByteSpan stream) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (at < stream.size()) {
    if (stream.size() - at < 2) fail(ErrorCode::kParse, "truncated string length");
    const std::size_t n = load_le<std::uint16_t>(stream.data() + at);
    at += 2;
    if (stream.size() - at < n) fail(ErrorCode::kParse, "truncated string body");
    out.emplace_back(reinterpret_cast<const char*>(stream.data() + at), n);
    at += n;
  }
  return out;
}

RegexBank::RegexBank(std::string_view pattern, std::uint32_t engines) {
  if (engines == 0) fail(ErrorCode::kArgument, "engines must be >= 1");
  const Regex proto = Regex::compile(pattern);
  engines_.assign(engines, proto);
}

std::vector<std::string> regex_match_stream(const std::vector<std::string>& strings, std::string_view pattern,
                                            std::uint32_t engines) {
  RegexBank bank(pattern, engines);
  const std::uint32_t e = bank.engines();
  std::vector<std::string> out;
  // Engine i % E sees string i; reading results back in slot order restores
  // the input order.
  std::vector<char> hit(strings.size());
  for (std::uint32_t engine = 0; engine < e; ++engine)
    for (std::size_t i = engine; i < strings.size(); i += e) hit[i] = bank.match(engine, strings[i]);
  for (std::size_t i = 0; i < strings.size(); ++i)
    if (hit[i]) out.push_back(strings[i]);
  return out;
}

Bytes regex_match_stream(ByteSpan stream, std::string_view pattern, std::uint32_t engines) {
  return encode_string_stream(regex_match_stream(decode_string_stream(stream), pattern, engines));
}

}  // namespace farview::ops
