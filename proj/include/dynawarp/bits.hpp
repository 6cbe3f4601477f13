#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>
#include <vector>

namespace dynawarp {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Every persisted bit sequence packs bits MSB-first into consecutive bytes:
// bit i lives in byte i / 8 at mask 0x80 >> (i % 8).

/// Append-only bit sequence.
class BitWriter {
 public:
  /// Appends the low `width` bits of `value`, most significant first. width <= 64.
  void write(std::uint64_t value, unsigned width);
  void write_bit(bool bit);

  [[nodiscard]] auto bit_length() const noexcept -> std::uint64_t { return bit_length_; }
  [[nodiscard]] auto bytes() const noexcept -> const Bytes& { return bytes_; }
  [[nodiscard]] auto take_bytes() noexcept -> Bytes { return std::move(bytes_); }

 private:
  Bytes bytes_;
  std::uint64_t bit_length_{0};
};

/// Reads `width` (<= 64) bits at `bit_offset`. The caller guarantees the
/// range lies inside `bytes`; checked_read_bits validates it instead.
[[nodiscard]] auto read_bits(ByteView bytes, std::uint64_t bit_offset, unsigned width) noexcept
    -> std::uint64_t;
[[nodiscard]] auto checked_read_bits(ByteView bytes, std::uint64_t bit_offset, unsigned width)
    -> std::uint64_t;

[[nodiscard]] inline auto test_bit(ByteView bytes, std::uint64_t bit) noexcept -> bool {
  return (bytes[bit >> 3] >> (7 - (bit & 7))) & 1u;
}

inline void set_bit(std::span<std::uint8_t> bytes, std::uint64_t bit) noexcept {
  bytes[bit >> 3] |= static_cast<std::uint8_t>(0x80u >> (bit & 7));
}

/// Number of bits needed to write v in plain binary (0 for v == 0).
[[nodiscard]] constexpr auto bit_width_of(std::uint64_t v) noexcept -> unsigned {
  return static_cast<unsigned>(std::bit_width(v));
}

// Little-endian scalar helpers for the fixed-width file fields.

template <typename T>
[[nodiscard]] constexpr auto byte_swap(T value) noexcept -> T {
  if constexpr (sizeof(T) == 1) {
    return value;
  } else if constexpr (sizeof(T) == 2) {
    return static_cast<T>(__builtin_bswap16(static_cast<std::uint16_t>(value)));
  } else if constexpr (sizeof(T) == 4) {
    return static_cast<T>(__builtin_bswap32(static_cast<std::uint32_t>(value)));
  } else {
    return static_cast<T>(__builtin_bswap64(static_cast<std::uint64_t>(value)));
  }
}

template <typename T>
[[nodiscard]] inline auto load_le(ByteView bytes, std::size_t offset) noexcept -> T {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    value = byte_swap(value);
  }
  return value;
}

/// Growable little-endian byte buffer used by all serializers.
class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    if constexpr (std::endian::native == std::endian::big) {
      value = byte_swap(value);
    }
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }

  template <typename T>
  void put_at(std::size_t offset, T value) {
    if constexpr (std::endian::native == std::endian::big) {
      value = byte_swap(value);
    }
    std::memcpy(buf_.data() + offset, &value, sizeof(T));
  }

  void append(ByteView bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
  void append(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void pad_to(std::size_t alignment) {
    while (buf_.size() % alignment != 0) {
      buf_.push_back(0);
    }
  }

  [[nodiscard]] auto size() const noexcept -> std::size_t { return buf_.size(); }
  [[nodiscard]] auto bytes() const noexcept -> const Bytes& { return buf_; }
  [[nodiscard]] auto take() noexcept -> Bytes { return std::move(buf_); }

 private:
  Bytes buf_;
};

}  // namespace dynawarp
