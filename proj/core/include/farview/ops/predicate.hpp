#pragma once

#include <cstdint>
#include <vector>

#include "farview/ops/tuple.hpp"

namespace farview::ops {

enum class Comparator : std::uint8_t { kLt = 0, kLe = 1, kEq = 2, kGe = 3, kGt = 4, kNe = 5 };
enum class ValueType : std::uint8_t { kInt = 0, kUint = 1, kFloat = 2 };
enum class Combiner : std::uint8_t { kAnd = 0, kOr = 1 };

struct PredicateTerm {
  std::uint32_t column = 0;
  Comparator cmp = Comparator::kEq;
  ValueType type = ValueType::kInt;
  std::uint64_t constant = 0;  // raw bits: two's complement, unsigned, or binary64

  bool operator==(const PredicateTerm&) const = default;
};

struct SelectionPredicate {
  std::vector<PredicateTerm> terms;
  Combiner combiner = Combiner::kAnd;

  ColumnMask columns() const;
  bool operator==(const SelectionPredicate&) const = default;
};

std::uint64_t float_bits(double v);
double bits_float(std::uint64_t bits);

/// Column value widened to 64 bits: sign-extended ints, zero-extended uints,
/// binary64 for floats (4-byte floats are promoted).
std::int64_t read_int(ByteSpan col);
std::uint64_t read_uint(ByteSpan col);
double read_float(ByteSpan col);

/// Applies one comparator; for floats NaN compares false for every
/// comparator except kNe.
bool compare(ByteSpan col, ValueType type, Comparator cmp, std::uint64_t constant);

bool eval_predicate(const AnnotatedTuple& t, const SelectionPredicate& p);

/// A predicate closed over its constants and the schema's column offsets,
/// evaluated on raw tuple pointers.
class CompiledPredicate {
 public:
  CompiledPredicate(const SelectionPredicate& p, const Schema& schema);

  bool operator()(const std::byte* tuple) const;
  bool empty() const { return terms_.empty(); }

 private:
  struct Term {
    std::uint32_t offset;
    std::uint32_t width;
    ValueType type;
    Comparator cmp;
    std::uint64_t constant;
  };
  std::vector<Term> terms_;
  Combiner combiner_;
};

}  // namespace farview::ops
