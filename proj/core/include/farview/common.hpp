#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace farview {

using Bytes = std::vector<std::byte>;
using ByteSpan = std::span<const std::byte>;
using MutableByteSpan = std::span<std::byte>;

/// Bitmask over schema columns; bit i selects column i.
using ColumnMask = std::uint64_t;

inline constexpr std::size_t kMaxColumns = 64;
inline constexpr std::size_t kPageSize = std::size_t{1} << 21;
inline constexpr std::size_t kChannelWord = 64;

/// Status codes shared by the library and the wire. Values are stable: they
/// travel in RESPONSE frames.
enum class ErrorCode : std::uint16_t {
  kOk = 0,
  kProtocol = 1,
  kFraming = 2,
  kIncompleteMessage = 3,
  kArgument = 4,
  kAllocation = 5,
  kPermission = 6,
  kTranslationFault = 7,
  kBounds = 8,
  kResourceExhausted = 9,
  kRequest = 10,
  kUnknownPipeline = 11,
  kRegionBusy = 12,
  kAborted = 13,
  kDoubleFree = 14,
  kParse = 15,
  kIo = 16,
  kConfig = 17,
  kOracleMismatch = 18,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

// Little-endian load/store. Everything on the wire and in tables is LE.
template <typename T>
inline T load_le(const std::byte* p) {
  static_assert(std::is_trivially_copyable_v<T>);
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  return v;
}

template <typename T>
inline void store_le(std::byte* p, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  std::memcpy(p, &v, sizeof(T));
}

template <typename T>
inline void append_le(Bytes& out, T v) {
  const std::size_t at = out.size();
  out.resize(at + sizeof(T));
  store_le(out.data() + at, v);
}

inline std::size_t div_ceil(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

inline int popcount(ColumnMask m) { return std::popcount(m); }

inline ByteSpan as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::byte*>(s.data()), s.size()};
}

}  // namespace farview
