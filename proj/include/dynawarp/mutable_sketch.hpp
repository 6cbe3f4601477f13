#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dynawarp/hashing.hpp"
#include "dynawarp/lookup_map.hpp"
#include "dynawarp/posting_list.hpp"
#include "dynawarp/token_map.hpp"

namespace dynawarp {

struct SketchStats {
  std::uint64_t token_count{0};
  std::uint64_t list_count{0};
  std::uint64_t direct_count{0};
  /// 1 - list_count / (tokens referencing a list); 0 when no token does.
  double dedup_ratio{0.0};
};

/// Ingest-side sketch: token map of fingerprints, deduplicated posting
/// lists in a handle arena, and the postings-hash lookup map that finds an
/// existing list with a required posting set.
///
/// Single writer; no internal locking.
class MutableSketch {
 public:
  explicit MutableSketch(std::uint32_t capacity = kMaxCapacity);
  MutableSketch(std::uint32_t capacity, std::uint32_t promotion_threshold);

  /// Records that the token with fingerprint `fp` occurs in posting `p`.
  /// Throws std::out_of_range for p >= capacity and std::length_error when
  /// the 2^30 handle space is exhausted.
  void add(TokenFingerprint fp, PostingId p);

  /// Sorted postings of `fp`, or nullopt when the fingerprint was never added.
  [[nodiscard]] auto get_postings(TokenFingerprint fp) const -> std::optional<std::vector<PostingId>>;
  [[nodiscard]] auto value_of(TokenFingerprint fp) const noexcept -> TokenMapValue {
    return token_map_.get(fp);
  }

  // Query-view contract. List ids are stable per posting set: DIRECT
  // entries map to (1 << 32) | posting, lists to their handle.
  [[nodiscard]] auto present(TokenFingerprint fp) const noexcept -> std::optional<std::uint64_t>;
  [[nodiscard]] auto decode(std::uint64_t list_id) const -> std::vector<PostingId>;

  /// Lookup-map insertion of a live list. If a resident list holds the same
  /// postings, its token count is incremented and its handle returned;
  /// otherwise `handle` is stored at the first free slot from its hash.
  auto lookup_insert(ListHandle handle) -> ListHandle;
  /// Lookup-map removal with back-shift; the list must be present.
  void lookup_remove(ListHandle handle);

  /// High-water mark of the byte accounting (tables, arena, list payloads)
  /// since construction; never decreases across adds.
  [[nodiscard]] auto estimate_memory() const noexcept -> std::size_t;
  [[nodiscard]] auto stats() const noexcept -> SketchStats;

  [[nodiscard]] auto capacity() const noexcept -> std::uint32_t { return capacity_; }
  [[nodiscard]] auto promotion_threshold() const noexcept -> std::uint32_t { return threshold_; }
  [[nodiscard]] auto token_count() const noexcept -> std::size_t { return token_map_.size(); }
  [[nodiscard]] auto list(ListHandle h) const -> const MutablePostingList&;
  [[nodiscard]] auto is_live(ListHandle h) const noexcept -> bool {
    return h < live_.size() && live_[h];
  }
  [[nodiscard]] auto lookup_map() const noexcept -> const LookupMap& { return lookup_; }

  template <typename Fn>
  void for_each_token(Fn&& fn) const {
    token_map_.for_each(fn);
  }
  template <typename Fn>
  void for_each_list(Fn&& fn) const {
    for (ListHandle h = 0; h < arena_.size(); ++h) {
      if (live_[h]) {
        fn(h, arena_[h]);
      }
    }
  }

  /// Exhaustive structural check (dedup, reference counts, lookup-map
  /// membership and probe invariant). Returns an empty string when sound.
  [[nodiscard]] auto check_invariants() const -> std::string;

  /// Creates a live list outside any token reference; used by tests of the
  /// lookup-map operations. The list starts with token_count 0.
  auto make_list(std::span<const PostingId> postings) -> ListHandle;

 private:
  auto allocate(MutablePostingList list) -> ListHandle;
  void release(ListHandle h);
  void extend_list_entry(TokenMapValue& entry, PostingId p);
  void promote_direct(TokenMapValue& entry, PostingId q, PostingId p);
  [[nodiscard]] auto current_memory() const noexcept -> std::size_t;

  TokenMap token_map_;
  LookupMap lookup_;
  std::vector<MutablePostingList> arena_;
  std::vector<bool> live_;
  std::vector<ListHandle> free_;  // min-heap: lowest free handle first
  std::uint32_t capacity_;
  std::uint32_t threshold_;
  std::size_t live_lists_{0};
  std::size_t direct_count_{0};
  std::size_t payload_bytes_{0};
  std::size_t peak_bytes_{0};
};

}  // namespace dynawarp
