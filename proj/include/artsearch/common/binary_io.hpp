#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "artsearch/common/error.hpp"

namespace artsearch {

static_assert(std::endian::native == std::endian::little, "on-disk formats assume a little-endian host");

/// Appends little-endian scalars and length-prefixed strings to a byte buffer.
class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    const auto* p = reinterpret_cast<const uint8_t*>(&value);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }

  void put_string(std::string_view s) {
    put(static_cast<uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  void put_floats(std::span<const float> values) {
    const auto* p = reinterpret_cast<const uint8_t*>(values.data());
    buf_.insert(buf_.end(), p, p + values.size_bytes());
  }

  void put_bytes(std::span<const uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

  const std::vector<uint8_t>& bytes() const noexcept { return buf_; }
  std::vector<uint8_t>& bytes() noexcept { return buf_; }

 private:
  std::vector<uint8_t> buf_;
};

/// Bounds-checked reader over a byte span. Running past the end throws
/// Error(kIntegrity).
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    require(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string() {
    const auto n = get<uint32_t>();
    require(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void get_floats(std::span<float> out) {
    require(out.size_bytes());
    std::memcpy(out.data(), bytes_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
  }

  std::span<const uint8_t> get_bytes(size_t n) {
    require(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  size_t position() const noexcept { return pos_; }
  size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void require(size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::kIntegrity, "unexpected end of data");
  }

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

}  // namespace artsearch
