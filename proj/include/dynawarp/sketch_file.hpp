#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynawarp/bits.hpp"
#include "dynawarp/hashing.hpp"
#include "dynawarp/mphf.hpp"
#include "dynawarp/mutable_sketch.hpp"
#include "dynawarp/prefix_sum.hpp"

namespace dynawarp {

// Immutable sketch file (.dwsk). A fixed 160-byte little-endian header:
//
//   0   magic "DWSK"
//   4   version u16
//   6   flags u16           bit 0: temporary (full fingerprints instead of signatures)
//   8   n_tokens u64
//   16  n_lists u64
//   24  capacity u32        posting universe [0, capacity)
//   28  signature_bits u8
//   29  rank_length_width u8
//   30  reserved u16
//   32  sample_interval u32
//   36  reserved u32
//   40  7 x (offset u64, length u64): mphf, signatures, rank lengths,
//       rank offset samples, rank bits, list directory, list bits
//   152 checksum u64        FNV-1a over bytes [0, 152)
//
// Sections follow in that order, each 8-byte aligned. The list directory
// holds 12-byte entries (bit offset u64, cardinality u32) indexed by rank.

inline constexpr std::uint16_t kSketchVersion = 1;
inline constexpr std::size_t kSketchHeaderSize = 160;
inline constexpr std::uint16_t kSketchFlagTemporary = 1;
inline constexpr std::size_t kListDirectoryEntrySize = 12;
inline constexpr std::uint64_t kMaxLists = std::uint64_t{1} << 30;

enum class SketchSection : std::size_t {
  kMphf = 0,
  kSignatures,
  kRankLengths,
  kRankSamples,
  kRankBits,
  kListDirectory,
  kListBits,
};
inline constexpr std::size_t kSketchSectionCount = 7;

struct SectionRange {
  std::uint64_t offset{0};
  std::uint64_t length{0};
};

struct SketchHeader {
  std::uint16_t version{kSketchVersion};
  std::uint16_t flags{0};
  std::uint64_t n_tokens{0};
  std::uint64_t n_lists{0};
  std::uint32_t capacity{0};
  std::uint8_t signature_bits{8};
  std::uint8_t rank_length_width{0};
  std::uint32_t sample_interval{kDefaultSampleInterval};
  std::array<SectionRange, kSketchSectionCount> sections{};
  std::uint64_t checksum{0};

  [[nodiscard]] auto temporary() const noexcept -> bool { return (flags & kSketchFlagTemporary) != 0; }
  /// Bits stored per token: the full fingerprint for temporary files.
  [[nodiscard]] auto signature_width() const noexcept -> unsigned {
    return temporary() ? 32u : signature_bits;
  }
  [[nodiscard]] auto section(SketchSection s) const noexcept -> const SectionRange& {
    return sections[static_cast<std::size_t>(s)];
  }
};

class SketchFormatError : public std::runtime_error {
 public:
  enum class Kind { kBounds, kBadMagic, kBadVersion, kBadChecksum, kCorrupt };

  SketchFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] auto kind() const noexcept -> Kind { return kind_; }

 private:
  Kind kind_;
};

struct SketchBuildConfig {
  std::uint8_t signature_bits{8};
  std::uint32_t sample_interval{kDefaultSampleInterval};
  bool temporary{false};
  double gamma{kDefaultGamma};
  /// Posting universe written to the header; defaults to the sketch's
  /// capacity. Must cover every stored posting.
  std::optional<std::uint32_t> capacity;
};

/// Bits used for the rank code of `rank`: ceil(log2(max(rank, 1))) + 1.
[[nodiscard]] constexpr auto rank_code_width(std::uint64_t rank) noexcept -> unsigned {
  const std::uint64_t r = rank < 1 ? 1 : rank;
  return static_cast<unsigned>(std::bit_width(r - 1)) + 1;
}

[[nodiscard]] auto header_checksum(ByteView header_bytes) noexcept -> std::uint64_t;

/// Serializes the sketch into the immutable single-file layout. Direct
/// entries become singleton lists; lists are ranked by descending reference
/// count (ties: smallest posting, cardinality, then lexicographic postings).
[[nodiscard]] auto build_sketch(const MutableSketch& sketch, const SketchBuildConfig& cfg = {})
    -> Bytes;

/// Reader over one sketch file presented as random-access bytes (typically
/// a memory mapping). Construction parses and validates the header only.
/// Immutable after construction and safe for concurrent use.
class SketchReader {
 public:
  /// Throws SketchFormatError on a short file, bad magic, version or
  /// checksum, or sections that overlap or leave the file.
  explicit SketchReader(ByteView file);
  /// The reader only views its bytes; a temporary buffer would dangle.
  explicit SketchReader(const Bytes&& file) = delete;

  /// Rank of the token's list, or nullopt if the MPHF rejects it or the
  /// stored signature differs.
  [[nodiscard]] auto is_present(TokenFingerprint fp) const -> std::optional<std::uint64_t>;
  /// Sorted postings of list `list_id` (its rank). Throws std::out_of_range
  /// for list_id >= n_lists or when the stored bits are inconsistent.
  [[nodiscard]] auto decode_list(std::uint64_t list_id) const -> std::vector<PostingId>;

  // Query-view contract.
  [[nodiscard]] auto present(TokenFingerprint fp) const -> std::optional<std::uint64_t> {
    return is_present(fp);
  }
  [[nodiscard]] auto decode(std::uint64_t list_id) const -> std::vector<PostingId> {
    return decode_list(list_id);
  }

  /// Rank stored for minimal hash `index`, decoded via lengths and samples.
  [[nodiscard]] auto rank_at(std::uint64_t index) const -> std::uint64_t;
  /// Stored signature (the full fingerprint for temporary files).
  [[nodiscard]] auto signature_at(std::uint64_t index) const -> std::uint32_t;
  [[nodiscard]] auto list_cardinality(std::uint64_t list_id) const -> std::uint32_t;

  /// Deep structural validation of every section (MPHF tables, directory
  /// monotonicity, rank ranges). Touches the whole file.
  void validate() const;

  [[nodiscard]] auto header() const noexcept -> const SketchHeader& { return header_; }
  [[nodiscard]] auto section_bytes(SketchSection s) const noexcept -> ByteView;
  [[nodiscard]] auto file_size() const noexcept -> std::size_t { return file_.size(); }

 private:
  ByteView file_;
  SketchHeader header_;
  MphfView mphf_;
  PrefixSumView rank_lengths_;
};

/// Parses and validates only the header bytes.
[[nodiscard]] auto parse_sketch_header(ByteView file) -> SketchHeader;

/// Replays temporary sketches into one fresh mutable sketch, as if the
/// input had never been split. Throws std::invalid_argument for a
/// non-temporary reader or mismatched capacities.
[[nodiscard]] auto merge_segments(std::span<const SketchReader* const> readers) -> MutableSketch;

}  // namespace dynawarp
