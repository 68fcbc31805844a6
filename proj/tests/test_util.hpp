#pragma once

#include <random>

#include "farview/common.hpp"
#include "farview/schema.hpp"

namespace farview::test {

inline Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  for (std::size_t i = 0; i < n; i += 8) {
    const std::uint64_t v = rng();
    std::memcpy(out.data() + i, &v, std::min<std::size_t>(8, n - i));
  }
  return out;
}

/// rows x 8 columns of u64, column c drawn uniformly from [0, bound[c]).
inline Bytes uniform_table(std::mt19937_64& rng, std::size_t rows, std::uint64_t bound, std::size_t cols = 8) {
  Bytes out(rows * cols * 8);
  std::uniform_int_distribution<std::uint64_t> d(0, bound - 1);
  for (std::size_t i = 0; i < rows * cols; ++i) store_le<std::uint64_t>(out.data() + 8 * i, d(rng));
  return out;
}

inline Bytes u64_rows(std::initializer_list<std::initializer_list<std::uint64_t>> rows) {
  Bytes out;
  for (const auto& r : rows)
    for (auto v : r) append_le(out, v);
  return out;
}

}  // namespace farview::test
