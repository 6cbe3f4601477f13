#include "dynawarp/lookup_map.hpp"

#include <bit>
#include <stdexcept>

namespace dynawarp {

LookupMap::LookupMap(std::size_t initial_slots) {
  const std::size_t n = std::bit_ceil(initial_slots < 4 ? std::size_t{4} : initial_slots);
  slots_.assign(n, Slot{});
  shift_ = 64 - static_cast<unsigned>(std::countr_zero(n));
}

void LookupMap::place(std::uint64_t hash, ListHandle handle) {
  std::size_t slot = home_slot(PostingsHash{hash});
  while (slots_[slot].handle != kNoHandle) {
    slot = next(slot);
  }
  slots_[slot] = Slot{hash, handle};
}

void LookupMap::grow() {
  std::vector<Slot> old = std::move(slots_);
  slots_.assign(old.size() * 2, Slot{});
  shift_ -= 1;
  for (const Slot& s : old) {
    if (s.handle != kNoHandle) {
      place(s.hash, s.handle);
    }
  }
}

void LookupMap::insert(PostingsHash h, ListHandle handle) {
  if (handle == kNoHandle) {
    throw std::invalid_argument("lookup map: reserved handle");
  }
  if ((size_ + 1) * 4 > slots_.size() * 3) {
    grow();
  }
  place(h.value, handle);
  ++size_;
}

auto LookupMap::remove(PostingsHash h, ListHandle handle) -> bool {
  std::size_t freed = home_slot(h);
  for (;; freed = next(freed)) {
    const Slot& s = slots_[freed];
    if (s.handle == kNoHandle) {
      return false;
    }
    if (s.hash == h.value && s.handle == handle) {
      break;
    }
  }
  slots_[freed] = Slot{};
  --size_;

  // Move later residents of the run back toward their home slots. A resident
  // at `slot` may fill `freed` iff `freed` lies cyclically in [home, slot).
  const std::size_t mask = slots_.size() - 1;
  for (std::size_t slot = next(freed); slots_[slot].handle != kNoHandle; slot = next(slot)) {
    const std::size_t home = home_slot(PostingsHash{slots_[slot].hash});
    const std::size_t home_distance = (slot - home) & mask;
    const std::size_t freed_distance = (slot - freed) & mask;
    if (home_distance >= freed_distance) {
      slots_[freed] = slots_[slot];
      slots_[slot] = Slot{};
      freed = slot;
    }
  }
  return true;
}

auto LookupMap::slot_of(PostingsHash h, ListHandle handle) const -> std::optional<std::size_t> {
  for (std::size_t slot = home_slot(h);; slot = next(slot)) {
    const Slot& s = slots_[slot];
    if (s.handle == kNoHandle) {
      return std::nullopt;
    }
    if (s.hash == h.value && s.handle == handle) {
      return slot;
    }
  }
}

auto LookupMap::probe_invariant_holds() const -> bool {
  bool ok = true;
  for_each([&](PostingsHash h, ListHandle handle, std::size_t slot) {
    auto found = slot_of(h, handle);
    ok = ok && found.has_value() && *found == slot;
  });
  return ok;
}

}  // namespace dynawarp
