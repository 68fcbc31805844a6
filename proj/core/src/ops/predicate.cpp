#include "farview/ops/predicate.hpp"

#include <bit>
#include <cmath>

namespace farview::ops {

ColumnMask SelectionPredicate::columns() const {
  ColumnMask m = 0;
  for (const auto& t : terms) m |= ColumnMask{1} << t.column;
  return m;
}

std::uint64_t float_bits(double v) { return std::bit_cast<std::uint64_t>(v); }
double bits_float(std::uint64_t bits) { return std::bit_cast<double>(bits); }

namespace {

std::int64_t read_int_raw(const std::byte* p, std::uint32_t w) {
  switch (w) {
    case 1: return load_le<std::int8_t>(p);
    case 2: return load_le<std::int16_t>(p);
    case 4: return load_le<std::int32_t>(p);
    default: return load_le<std::int64_t>(p);
  }
}

std::uint64_t read_uint_raw(const std::byte* p, std::uint32_t w) {
  switch (w) {
    case 1: return load_le<std::uint8_t>(p);
    case 2: return load_le<std::uint16_t>(p);
    case 4: return load_le<std::uint32_t>(p);
    default: return load_le<std::uint64_t>(p);
  }
}

double read_float_raw(const std::byte* p, std::uint32_t w) {
  if (w == 4) return static_cast<double>(load_le<float>(p));
  return load_le<double>(p);
}

template <typename T>
bool apply(T a, Comparator cmp, T b) {
  switch (cmp) {
    case Comparator::kLt: return a < b;
    case Comparator::kLe: return a <= b;
    case Comparator::kEq: return a == b;
    case Comparator::kGe: return a >= b;
    case Comparator::kGt: return a > b;
    case Comparator::kNe: return a != b;
  }
  return false;
}

bool compare_raw(const std::byte* p, std::uint32_t w, ValueType type, Comparator cmp, std::uint64_t constant) {
  switch (type) {
    case ValueType::kInt: return apply(read_int_raw(p, w), cmp, static_cast<std::int64_t>(constant));
    case ValueType::kUint: return apply(read_uint_raw(p, w), cmp, constant);
    case ValueType::kFloat: return apply(read_float_raw(p, w), cmp, bits_float(constant));
  }
  return false;
}

}  // namespace

std::int64_t read_int(ByteSpan col) { return read_int_raw(col.data(), static_cast<std::uint32_t>(col.size())); }
std::uint64_t read_uint(ByteSpan col) { return read_uint_raw(col.data(), static_cast<std::uint32_t>(col.size())); }
double read_float(ByteSpan col) { return read_float_raw(col.data(), static_cast<std::uint32_t>(col.size())); }

bool compare(ByteSpan col, ValueType type, Comparator cmp, std::uint64_t constant) {
  return compare_raw(col.data(), static_cast<std::uint32_t>(col.size()), type, cmp, constant);
}

bool eval_predicate(const AnnotatedTuple& t, const SelectionPredicate& p) {
  if (p.terms.empty()) return true;
  const bool want_any = p.combiner == Combiner::kOr;
  for (const auto& term : p.terms) {
    const bool r = compare(t.column(term.column), term.type, term.cmp, term.constant);
    if (r == want_any) return want_any;
  }
  return !want_any;
}

CompiledPredicate::CompiledPredicate(const SelectionPredicate& p, const Schema& schema) : combiner_(p.combiner) {
  for (const auto& t : p.terms) {
    if (t.column >= schema.columns()) fail(ErrorCode::kRequest, "predicate column outside schema");
    const auto w = schema.width(t.column);
    if (t.type == ValueType::kFloat ? (w != 4 && w != 8) : (w != 1 && w != 2 && w != 4 && w != 8))
      fail(ErrorCode::kRequest, "predicate column width does not fit its value type");
    terms_.push_back(Term{schema.offset(t.column), w, t.type, t.cmp, t.constant});
  }
}

bool CompiledPredicate::operator()(const std::byte* tuple) const {
  if (terms_.empty()) return true;
  const bool want_any = combiner_ == Combiner::kOr;
  for (const auto& t : terms_) {
    if (compare_raw(tuple + t.offset, t.width, t.type, t.cmp, t.constant) == want_any) return want_any;
  }
  return !want_any;
}

}  // namespace farview::ops
