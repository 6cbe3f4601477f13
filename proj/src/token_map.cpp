#include "dynawarp/token_map.hpp"

#include <bit>

namespace dynawarp {

TokenMap::TokenMap(std::size_t initial_slots) {
  const std::size_t n = std::bit_ceil(initial_slots < 4 ? std::size_t{4} : initial_slots);
  entries_.assign(n, Entry{});
  shift_ = 64 - static_cast<unsigned>(std::countr_zero(n));
}

auto TokenMap::get(TokenFingerprint fp) const noexcept -> TokenMapValue {
  const std::size_t mask = entries_.size() - 1;
  for (std::size_t i = home(fp.value);; i = (i + 1) & mask) {
    const Entry& e = entries_[i];
    if (e.value.is_absent()) {
      return TokenMapValue{};
    }
    if (e.key == fp.value) {
      return e.value;
    }
  }
}

auto TokenMap::slot_for(TokenFingerprint fp) -> TokenMapValue& {
  for (bool grown = false;; grown = true) {
    const std::size_t mask = entries_.size() - 1;
    std::size_t i = home(fp.value);
    for (; !entries_[i].value.is_absent(); i = (i + 1) & mask) {
      if (entries_[i].key == fp.value) {
        return entries_[i].value;
      }
    }
    if (grown || (size_ + 1) * 4 <= entries_.size() * 3) {
      entries_[i].key = fp.value;
      ++size_;
      return entries_[i].value;
    }
    grow();
  }
}

void TokenMap::grow() {
  std::vector<Entry> old = std::move(entries_);
  entries_.assign(old.size() * 2, Entry{});
  shift_ -= 1;
  const std::size_t mask = entries_.size() - 1;
  for (const Entry& e : old) {
    if (e.value.is_absent()) {
      continue;
    }
    std::size_t i = home(e.key);
    while (!entries_[i].value.is_absent()) {
      i = (i + 1) & mask;
    }
    entries_[i] = e;
  }
}

}  // namespace dynawarp
