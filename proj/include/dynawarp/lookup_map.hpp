#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dynawarp/hashing.hpp"

namespace dynawarp {

using ListHandle = std::uint32_t;

/// Table from postings hash to list handle. A list is stored at the first
/// unoccupied slot at or after the home slot of its hash (the "next highest
/// hash" rule), with wrap-around. Removal back-shifts later residents so a
/// forward probe from any home slot never crosses an empty slot before
/// reaching its resident.
class LookupMap {
 public:
  static constexpr ListHandle kNoHandle = 0xffffffffu;

  explicit LookupMap(std::size_t initial_slots = 16);

  /// Forward probe from the home slot of `h`; returns the first resident whose
  /// stored hash equals `h` and for which `is_match(handle)` holds.
  template <typename Pred>
  [[nodiscard]] auto find(PostingsHash h, Pred&& is_match) const -> std::optional<ListHandle> {
    for (std::size_t slot = home_slot(h);; slot = next(slot)) {
      const Slot& s = slots_[slot];
      if (s.handle == kNoHandle) {
        return std::nullopt;
      }
      if (s.hash == h.value && is_match(s.handle)) {
        return s.handle;
      }
    }
  }

  /// Stores `handle` at the first free slot from the home slot; grows first
  /// when the load factor would exceed 0.75.
  void insert(PostingsHash h, ListHandle handle);

  /// Removes the resident (h, handle) and back-shifts the following run.
  /// Returns false when the probe reaches an empty slot without finding it.
  auto remove(PostingsHash h, ListHandle handle) -> bool;

  [[nodiscard]] auto home_slot(PostingsHash h) const noexcept -> std::size_t {
    return static_cast<std::size_t>((h.value * 0x9e3779b97f4a7c15ULL) >> shift_);
  }
  [[nodiscard]] auto slot_of(PostingsHash h, ListHandle handle) const -> std::optional<std::size_t>;
  /// Every resident reachable from its home slot without crossing an empty slot.
  [[nodiscard]] auto probe_invariant_holds() const -> bool;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      if (slots_[i].handle != kNoHandle) {
        fn(PostingsHash{slots_[i].hash}, slots_[i].handle, i);
      }
    }
  }

  [[nodiscard]] auto size() const noexcept -> std::size_t { return size_; }
  [[nodiscard]] auto slot_count() const noexcept -> std::size_t { return slots_.size(); }
  [[nodiscard]] auto memory_bytes() const noexcept -> std::size_t {
    return slots_.size() * sizeof(Slot);
  }

 private:
  struct Slot {
    std::uint64_t hash{0};
    ListHandle handle{kNoHandle};
  };

  [[nodiscard]] auto next(std::size_t slot) const noexcept -> std::size_t {
    return (slot + 1) & (slots_.size() - 1);
  }
  void place(std::uint64_t hash, ListHandle handle);
  void grow();

  std::vector<Slot> slots_;
  std::size_t size_{0};
  unsigned shift_{60};
};

}  // namespace dynawarp
