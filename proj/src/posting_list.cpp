#include "dynawarp/posting_list.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <stdexcept>

namespace dynawarp {

MutablePostingList::MutablePostingList(std::uint32_t capacity, std::uint32_t promotion_threshold)
    : capacity_(capacity), threshold_(promotion_threshold) {
  if (capacity == 0 || capacity > kMaxCapacity) {
    throw std::invalid_argument("posting list: capacity must be in [1, 2^16]");
  }
  if (threshold_ == 0) {
    promote();
  }
}

auto MutablePostingList::insert(PostingId p) -> bool {
  if (p >= capacity_) {
    throw std::out_of_range("posting list: posting beyond capacity");
  }
  if (long_form_) {
    std::uint64_t& word = bitset_[p >> 6];
    const std::uint64_t mask = std::uint64_t{1} << (p & 63);
    if (word & mask) {
      return false;
    }
    word |= mask;
  } else {
    auto it = std::lower_bound(sorted_.begin(), sorted_.end(), p);
    if (it != sorted_.end() && *it == p) {
      return false;
    }
    sorted_.insert(it, p);
  }
  ++cardinality_;
  hash_ = extend_hash(hash_, p);
  if (!long_form_ && cardinality_ > threshold_) {
    promote();
  }
  return true;
}

auto MutablePostingList::contains(PostingId p) const -> bool {
  if (p >= capacity_) {
    throw std::out_of_range("posting list: posting beyond capacity");
  }
  if (long_form_) {
    return (bitset_[p >> 6] >> (p & 63)) & 1u;
  }
  return std::binary_search(sorted_.begin(), sorted_.end(), p);
}

void MutablePostingList::promote() {
  bitset_.assign((capacity_ + 63) / 64, 0);
  for (PostingId p : sorted_) {
    bitset_[p >> 6] |= std::uint64_t{1} << (p & 63);
  }
  sorted_.clear();
  sorted_.shrink_to_fit();
  long_form_ = true;
}

auto MutablePostingList::equals_extended(const MutablePostingList& other, PostingId p) const
    -> bool {
  if (cardinality_ != other.cardinality_ + 1 || hash_ != extend_hash(other.hash_, p) ||
      capacity_ != other.capacity_) {
    return false;
  }
  if (long_form_ && other.long_form_) {
    const std::size_t word_index = p >> 6;
    for (std::size_t i = 0; i < bitset_.size(); ++i) {
      std::uint64_t expected = other.bitset_[i];
      if (i == word_index) {
        expected |= std::uint64_t{1} << (p & 63);
      }
      if (bitset_[i] != expected) {
        return false;
      }
    }
    return true;
  }
  if (!long_form_ && !other.long_form_) {
    const auto split = static_cast<std::size_t>(
        std::lower_bound(other.sorted_.begin(), other.sorted_.end(), p) - other.sorted_.begin());
    if (sorted_[split] != p) {
      return false;
    }
    return std::equal(other.sorted_.begin(), other.sorted_.begin() + split, sorted_.begin()) &&
           std::equal(other.sorted_.begin() + split, other.sorted_.end(),
                      sorted_.begin() + split + 1);
  }
  // Mixed representations only occur right at the promotion boundary.
  if (!contains(p)) {
    return false;
  }
  for (PostingId q : other.to_vector()) {
    if (q == p || !contains(q)) {
      return false;
    }
  }
  return true;
}

auto MutablePostingList::same_postings(const MutablePostingList& other) const -> bool {
  if (cardinality_ != other.cardinality_ || hash_ != other.hash_) {
    return false;
  }
  if (long_form_ == other.long_form_) {
    return long_form_ ? bitset_ == other.bitset_ : sorted_ == other.sorted_;
  }
  return to_vector() == other.to_vector();
}

auto MutablePostingList::to_vector() const -> std::vector<PostingId> {
  if (!long_form_) {
    return sorted_;
  }
  std::vector<PostingId> out;
  out.reserve(cardinality_);
  for (std::size_t w = 0; w < bitset_.size(); ++w) {
    std::uint64_t word = bitset_[w];
    while (word != 0) {
      const int bit = std::countr_zero(word);
      out.push_back(static_cast<PostingId>(w * 64 + static_cast<std::size_t>(bit)));
      word &= word - 1;
    }
  }
  return out;
}

auto MutablePostingList::smallest() const -> PostingId {
  if (cardinality_ == 0) {
    throw std::logic_error("posting list: empty list has no smallest posting");
  }
  if (!long_form_) {
    return sorted_.front();
  }
  for (std::size_t w = 0; w < bitset_.size(); ++w) {
    if (bitset_[w] != 0) {
      return static_cast<PostingId>(w * 64 + static_cast<std::size_t>(std::countr_zero(bitset_[w])));
    }
  }
  return 0;
}

auto MutablePostingList::payload_bytes() const noexcept -> std::size_t {
  return long_form_ ? bitset_.size() * sizeof(std::uint64_t) : sorted_.size() * sizeof(PostingId);
}

}  // namespace dynawarp
