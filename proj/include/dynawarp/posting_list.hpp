#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dynawarp/hashing.hpp"

namespace dynawarp {

/// Deduplicated, reference-counted posting set with an incrementally
/// maintained postings hash. Short lists are sorted arrays; once the
/// cardinality passes the promotion threshold the list becomes a dense
/// bitset of `capacity` bits.
class MutablePostingList {
 public:
  MutablePostingList() = default;
  MutablePostingList(std::uint32_t capacity, std::uint32_t promotion_threshold);

  /// True iff newly added. Throws std::out_of_range for p >= capacity.
  auto insert(PostingId p) -> bool;
  [[nodiscard]] auto contains(PostingId p) const -> bool;

  /// True iff this set equals other ∪ {p} (p not in other). Uses cardinality
  /// and hash as a filter before comparing contents.
  [[nodiscard]] auto equals_extended(const MutablePostingList& other, PostingId p) const -> bool;
  [[nodiscard]] auto same_postings(const MutablePostingList& other) const -> bool;

  [[nodiscard]] auto to_vector() const -> std::vector<PostingId>;
  [[nodiscard]] auto is_long() const noexcept -> bool { return long_form_; }
  [[nodiscard]] auto cardinality() const noexcept -> std::uint32_t { return cardinality_; }
  [[nodiscard]] auto hash() const noexcept -> PostingsHash { return hash_; }
  [[nodiscard]] auto capacity() const noexcept -> std::uint32_t { return capacity_; }
  [[nodiscard]] auto promotion_threshold() const noexcept -> std::uint32_t { return threshold_; }
  [[nodiscard]] auto smallest() const -> PostingId;

  /// Payload bytes used by the current representation.
  [[nodiscard]] auto payload_bytes() const noexcept -> std::size_t;

  std::uint32_t token_count{0};

 private:
  void promote();

  std::vector<PostingId> sorted_;
  std::vector<std::uint64_t> bitset_;
  std::uint32_t capacity_{kMaxCapacity};
  std::uint32_t threshold_{kMaxCapacity / 16};
  std::uint32_t cardinality_{0};
  PostingsHash hash_{};
  bool long_form_{false};
};

/// Byte-size crossover where a 16-bit sorted list outgrows a capacity-bit bitset.
[[nodiscard]] constexpr auto default_promotion_threshold(std::uint32_t capacity) noexcept
    -> std::uint32_t {
  return capacity / 16;
}

}  // namespace dynawarp
