#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "dynawarp/bits.hpp"
#include "dynawarp/hashing.hpp"

namespace dynawarp {

inline constexpr double kDefaultGamma = 2.0;
inline constexpr std::uint32_t kMphfMaxLevels = 32;
inline constexpr std::uint32_t kMphfRankBlockBits = 512;

/// Read-only BBHash-style minimal perfect hash function evaluated in place
/// over its serialized bytes.
///
/// Layout (little-endian scalars, MSB-first bit vectors):
///   n u64 | level_count u32 | reserved u32 | fallback_count u64 | fallback_offset u64
///   level_count x { seed u64, bit_length u64, rank_offset u64, bits_offset u64 }
///   per level: ceil(bit_length / 512) absolute rank samples (u64), then the bit vector
///   fallback_count x { key u32, index u32 } sorted by key
/// Offsets are relative to the start of the section.
///
/// Construction reads nothing; every evaluation bounds-checks the offsets
/// it follows, so a damaged section yields nullopt rather than a wild read.
class MphfView {
 public:
  MphfView() = default;
  explicit MphfView(ByteView section) noexcept : bytes_(section) {}

  /// Index in [0, n) for every build key. Alien keys yield an arbitrary
  /// in-range index or nullopt.
  [[nodiscard]] auto evaluate(TokenFingerprint key) const noexcept -> std::optional<std::uint64_t>;

  /// Throws std::out_of_range if the level table or fallback leaves the section.
  void validate() const;

  [[nodiscard]] auto size() const noexcept -> std::uint64_t;
  [[nodiscard]] auto level_count() const noexcept -> std::uint32_t;
  [[nodiscard]] auto fallback_count() const noexcept -> std::uint64_t;
  /// Total bits across all level vectors.
  [[nodiscard]] auto level_bits() const noexcept -> std::uint64_t;

 private:
  ByteView bytes_;
};

/// Owning MPHF: the serialized bytes plus a view over them.
class Mphf {
 public:
  Mphf() : Mphf(Bytes{}) {}
  explicit Mphf(Bytes bytes);
  Mphf(const Mphf& other) : Mphf(other.bytes_) {}
  Mphf(Mphf&& other) noexcept;
  auto operator=(Mphf other) noexcept -> Mphf&;

  [[nodiscard]] auto evaluate(TokenFingerprint key) const noexcept -> std::optional<std::uint64_t> {
    return view_.evaluate(key);
  }
  [[nodiscard]] auto size() const noexcept -> std::uint64_t { return view_.size(); }
  [[nodiscard]] auto view() const noexcept -> const MphfView& { return view_; }
  [[nodiscard]] auto bytes() const noexcept -> const Bytes& { return bytes_; }

 private:
  Bytes bytes_;
  MphfView view_;
};

/// Builds over distinct keys (any order; sorted internally so equal key
/// sets serialize identically). Throws std::invalid_argument on duplicates
/// or gamma < 1.
[[nodiscard]] auto mphf_build(std::span<const TokenFingerprint> keys, double gamma = kDefaultGamma)
    -> Mphf;

/// Per-level position hash, exposed for tests.
[[nodiscard]] auto mphf_level_seed(std::uint32_t level) noexcept -> std::uint64_t;

}  // namespace dynawarp
