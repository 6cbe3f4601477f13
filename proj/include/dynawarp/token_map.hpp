#pragma once

#include <cstdint>
#include <vector>

#include "dynawarp/hashing.hpp"

namespace dynawarp {

/// 32-bit tagged token-map value. The two most significant bits select
/// ABSENT (00), DIRECT (01, payload is a posting) or LIST (10, payload is a
/// list handle); the low 30 bits hold the payload.
class TokenMapValue {
 public:
  enum class Tag : std::uint32_t { kAbsent = 0, kDirect = 1, kList = 2 };

  static constexpr std::uint32_t kPayloadBits = 30;
  static constexpr std::uint32_t kPayloadMask = (1u << kPayloadBits) - 1;

  constexpr TokenMapValue() = default;
  static constexpr auto from_raw(std::uint32_t raw) noexcept -> TokenMapValue {
    TokenMapValue v;
    v.raw_ = raw;
    return v;
  }
  static constexpr auto direct(PostingId p) noexcept -> TokenMapValue {
    return from_raw((static_cast<std::uint32_t>(Tag::kDirect) << kPayloadBits) | p);
  }
  static constexpr auto list(std::uint32_t handle) noexcept -> TokenMapValue {
    return from_raw((static_cast<std::uint32_t>(Tag::kList) << kPayloadBits) |
                    (handle & kPayloadMask));
  }

  [[nodiscard]] constexpr auto tag() const noexcept -> Tag { return static_cast<Tag>(raw_ >> kPayloadBits); }
  [[nodiscard]] constexpr auto payload() const noexcept -> std::uint32_t { return raw_ & kPayloadMask; }
  [[nodiscard]] constexpr auto raw() const noexcept -> std::uint32_t { return raw_; }
  [[nodiscard]] constexpr auto is_absent() const noexcept -> bool { return tag() == Tag::kAbsent; }

  friend constexpr bool operator==(TokenMapValue, TokenMapValue) = default;

 private:
  std::uint32_t raw_{0};
};

/// Open-addressed fingerprint -> value table; linear probing, power-of-two
/// slot count, doubled once the load factor would exceed 0.75. An ABSENT
/// value marks an empty slot.
class TokenMap {
 public:
  explicit TokenMap(std::size_t initial_slots = 64);

  [[nodiscard]] auto get(TokenFingerprint fp) const noexcept -> TokenMapValue;
  /// Reference to the value slot for `fp`, inserting an ABSENT placeholder
  /// if needed. Callers must store a non-ABSENT value before the next call.
  auto slot_for(TokenFingerprint fp) -> TokenMapValue&;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const Entry& e : entries_) {
      if (!e.value.is_absent()) {
        fn(TokenFingerprint{e.key}, e.value);
      }
    }
  }

  [[nodiscard]] auto size() const noexcept -> std::size_t { return size_; }
  [[nodiscard]] auto slot_count() const noexcept -> std::size_t { return entries_.size(); }
  [[nodiscard]] auto memory_bytes() const noexcept -> std::size_t {
    return entries_.size() * sizeof(Entry);
  }

 private:
  struct Entry {
    std::uint32_t key{0};
    TokenMapValue value{};
  };

  [[nodiscard]] auto home(std::uint32_t key) const noexcept -> std::size_t {
    return static_cast<std::size_t>((static_cast<std::uint64_t>(key) * 0x9e3779b97f4a7c15ULL) >> shift_);
  }
  void grow();

  std::vector<Entry> entries_;
  std::size_t size_{0};
  unsigned shift_{58};
};

}  // namespace dynawarp
