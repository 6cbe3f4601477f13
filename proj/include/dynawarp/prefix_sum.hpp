#pragma once

#include <cstdint>
#include <span>

#include "dynawarp/bits.hpp"

namespace dynawarp {

inline constexpr std::uint32_t kDefaultSampleInterval = 64;

struct PrefixEntry {
  std::uint64_t offset{0};
  std::uint32_t length{0};

  friend constexpr bool operator==(const PrefixEntry&, const PrefixEntry&) = default;
};

/// Serialized prefix-sum index: fixed-width entry lengths plus absolute
/// 64-bit offsets sampled every `sample_interval` entries.
struct PrefixSumData {
  Bytes lengths;  // count * width bits, MSB-first
  Bytes samples;  // ceil(count / interval) little-endian u64
  std::uint64_t count{0};
  std::uint8_t width{0};
  std::uint32_t sample_interval{kDefaultSampleInterval};
};

/// Every length must be >= 1.
[[nodiscard]] auto build_prefix_sum(std::span<const std::uint32_t> lengths,
                                    std::uint32_t sample_interval = kDefaultSampleInterval)
    -> PrefixSumData;

/// Read-only view over serialized prefix-sum sections; no copying.
class PrefixSumView {
 public:
  PrefixSumView() = default;
  PrefixSumView(ByteView lengths, ByteView samples, std::uint64_t count, std::uint8_t width,
                std::uint32_t sample_interval);
  explicit PrefixSumView(const PrefixSumData& data)
      : PrefixSumView(data.lengths, data.samples, data.count, data.width, data.sample_interval) {}

  /// Bit offset and length of entry i; at most sample_interval - 1 additions
  /// past the nearest sample. Throws std::out_of_range for i >= size().
  [[nodiscard]] auto entry(std::uint64_t i) const -> PrefixEntry;
  [[nodiscard]] auto length(std::uint64_t i) const noexcept -> std::uint32_t {
    return static_cast<std::uint32_t>(read_bits(lengths_, i * width_, width_));
  }
  [[nodiscard]] auto size() const noexcept -> std::uint64_t { return count_; }

 private:
  ByteView lengths_;
  ByteView samples_;
  std::uint64_t count_{0};
  std::uint8_t width_{0};
  std::uint32_t interval_{kDefaultSampleInterval};
};

}  // namespace dynawarp
