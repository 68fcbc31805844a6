#pragma once

#include "farview/ops/aes.hpp"

namespace farview::ops {

/// Push-based byte stream between pipeline stages.
class ByteSink {
 public:
  virtual ~ByteSink() = default;
  virtual void write(ByteSpan bytes) = 0;
  virtual void finish() {}
};

class CollectSink final : public ByteSink {
 public:
  void write(ByteSpan bytes) override { bytes_.insert(bytes_.end(), bytes.begin(), bytes.end()); }
  const Bytes& bytes() const { return bytes_; }
  Bytes take() { return std::move(bytes_); }

 private:
  Bytes bytes_;
};

/// Applies the CTR keystream to everything passing through, positioned by
/// the running byte count.
class CtrEncryptSink final : public ByteSink {
 public:
  CtrEncryptSink(const CryptoParams& cp, ByteSink& next) : cipher_(cp), next_(next) {}

  void write(ByteSpan bytes) override {
    buf_.assign(bytes.begin(), bytes.end());
    cipher_.apply(buf_, offset_);
    offset_ += buf_.size();
    next_.write(buf_);
  }
  void finish() override { next_.finish(); }

 private:
  CtrCipher cipher_;
  ByteSink& next_;
  Bytes buf_;
  std::uint64_t offset_ = 0;
};

}  // namespace farview::ops
