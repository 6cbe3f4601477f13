#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>

namespace dynawarp {

/// 32-bit stand-in for a token in every sketch structure.
struct TokenFingerprint {
  std::uint32_t value{0};

  friend constexpr auto operator<=>(TokenFingerprint, TokenFingerprint) = default;
};

/// Index of one set (one compressed batch of log lines).
using PostingId = std::uint16_t;

/// Largest number of postings a single sketch can address.
inline constexpr std::uint32_t kMaxCapacity = 1u << 16;

/// XOR-fold of the element hashes of a distinct posting set.
struct PostingsHash {
  std::uint64_t value{0};

  friend constexpr auto operator<=>(PostingsHash, PostingsHash) = default;
};

// LCG step x1 = (a * x0 + c) mod 2^64 used as the per-posting element hash.
inline constexpr std::uint64_t kLcgMultiplier = 0xd1342543de82ef95ULL;
inline constexpr std::uint64_t kLcgIncrement = 1;

/// Seedless 64-bit finalizer (murmur3 fmix64 constants).
[[nodiscard]] constexpr auto mix64(std::uint64_t x) noexcept -> std::uint64_t {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

/// Full 64-bit token hash; `fingerprint` keeps the low 32 bits.
[[nodiscard]] auto hash_bytes64(std::string_view bytes) noexcept -> std::uint64_t;

/// Throws std::invalid_argument on an empty token.
[[nodiscard]] auto fingerprint(std::string_view token) -> TokenFingerprint;

[[nodiscard]] constexpr auto element_hash(PostingId p) noexcept -> std::uint64_t {
  return kLcgMultiplier * static_cast<std::uint64_t>(p) + kLcgIncrement;
}

[[nodiscard]] constexpr auto extend_hash(PostingsHash h, PostingId p) noexcept -> PostingsHash {
  return PostingsHash{h.value ^ element_hash(p)};
}

/// Postings must be distinct; the empty set hashes to 0.
[[nodiscard]] auto postings_hash(std::span<const PostingId> postings) noexcept -> PostingsHash;
[[nodiscard]] auto postings_hash(std::initializer_list<PostingId> postings) noexcept -> PostingsHash;

}  // namespace dynawarp
