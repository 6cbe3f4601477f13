#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dynawarp/bits.hpp"
#include "dynawarp/hashing.hpp"

namespace dynawarp {

// Binary Interpolative Coding (Moffat & Stuiver): the middle element of
// the current index window is written with a truncated-binary code over its
// feasible range, then the left half, then the right half. A feasible range
// of exactly one value costs zero bits.

/// Appends the code for `postings` (strictly increasing, inside [lo, hi]).
/// Throws std::invalid_argument on unsorted or out-of-range input.
void bic_encode(std::span<const PostingId> postings, std::uint32_t lo, std::uint32_t hi,
                BitWriter& out);
[[nodiscard]] auto bic_encode(std::span<const PostingId> postings, std::uint32_t lo,
                              std::uint32_t hi) -> BitWriter;

struct BicDecoded {
  std::vector<PostingId> postings;
  std::uint64_t bits_consumed{0};
};

/// Inverse of bic_encode. Reads are bounds-checked against `bits`, so a
/// corrupted sequence fails with std::out_of_range instead of over-reading.
[[nodiscard]] auto bic_decode(ByteView bits, std::uint64_t at, std::uint32_t count,
                              std::uint32_t lo, std::uint32_t hi) -> BicDecoded;

}  // namespace dynawarp
