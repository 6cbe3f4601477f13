#include "dynawarp/mutable_sketch.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <stdexcept>

namespace dynawarp {

namespace {

constexpr std::uint64_t kDirectIdBit = std::uint64_t{1} << 32;
constexpr std::size_t kMaxHandles = std::size_t{1} << TokenMapValue::kPayloadBits;
constexpr std::size_t kBaselineBytes = sizeof(MutableSketch);

}  // namespace

MutableSketch::MutableSketch(std::uint32_t capacity)
    : MutableSketch(capacity, default_promotion_threshold(capacity)) {}

MutableSketch::MutableSketch(std::uint32_t capacity, std::uint32_t promotion_threshold)
    : capacity_(capacity), threshold_(promotion_threshold) {
  if (capacity == 0 || capacity > kMaxCapacity) {
    throw std::invalid_argument("mutable sketch: capacity must be in [1, 2^16]");
  }
}

auto MutableSketch::allocate(MutablePostingList list) -> ListHandle {
  payload_bytes_ += list.payload_bytes();
  ++live_lists_;
  if (!free_.empty()) {
    std::pop_heap(free_.begin(), free_.end(), std::greater<>{});
    const ListHandle h = free_.back();
    free_.pop_back();
    arena_[h] = std::move(list);
    live_[h] = true;
    return h;
  }
  if (arena_.size() >= kMaxHandles) {
    throw std::length_error("mutable sketch: posting list handles exhausted");
  }
  arena_.push_back(std::move(list));
  live_.push_back(true);
  return static_cast<ListHandle>(arena_.size() - 1);
}

void MutableSketch::release(ListHandle h) {
  MutablePostingList& list = arena_[h];
  if (--list.token_count > 0) {
    return;
  }
  lookup_remove(h);
  payload_bytes_ -= list.payload_bytes();
  list = MutablePostingList{};
  live_[h] = false;
  --live_lists_;
  free_.push_back(h);
  std::push_heap(free_.begin(), free_.end(), std::greater<>{});
}

auto MutableSketch::make_list(std::span<const PostingId> postings) -> ListHandle {
  MutablePostingList list(capacity_, threshold_);
  for (PostingId p : postings) {
    list.insert(p);
  }
  return allocate(std::move(list));
}

auto MutableSketch::lookup_insert(ListHandle handle) -> ListHandle {
  const MutablePostingList& candidate = list(handle);
  auto resident = lookup_.find(candidate.hash(), [&](ListHandle c) {
    return arena_[c].same_postings(candidate);
  });
  if (resident) {
    ++arena_[*resident].token_count;
    return *resident;
  }
  lookup_.insert(candidate.hash(), handle);
  return handle;
}

void MutableSketch::lookup_remove(ListHandle handle) {
  if (!lookup_.remove(list(handle).hash(), handle)) {
    throw std::logic_error("mutable sketch: lookup map lost a live posting list");
  }
}

void MutableSketch::promote_direct(TokenMapValue& entry, PostingId q, PostingId p) {
  const PostingsHash target = extend_hash(extend_hash(PostingsHash{}, q), p);
  auto resident = lookup_.find(target, [&](ListHandle c) {
    const MutablePostingList& l = arena_[c];
    return l.cardinality() == 2 && l.contains(q) && l.contains(p);
  });
  if (resident) {
    ++arena_[*resident].token_count;
    entry = TokenMapValue::list(*resident);
  } else {
    MutablePostingList pair(capacity_, threshold_);
    pair.insert(q);
    pair.insert(p);
    pair.token_count = 1;
    const ListHandle h = allocate(std::move(pair));
    lookup_.insert(target, h);
    entry = TokenMapValue::list(h);
  }
  --direct_count_;
}

void MutableSketch::extend_list_entry(TokenMapValue& entry, PostingId p) {
  const ListHandle h = entry.payload();
  if (arena_[h].contains(p)) {
    return;
  }
  const PostingsHash target = extend_hash(arena_[h].hash(), p);
  auto resident = lookup_.find(target, [&](ListHandle c) {
    return arena_[c].equals_extended(arena_[h], p);
  });
  if (resident) {
    ++arena_[*resident].token_count;
    entry = TokenMapValue::list(*resident);
    release(h);
    return;
  }
  if (arena_[h].token_count == 1) {
    // Sole owner: extend in place and re-key.
    MutablePostingList& list = arena_[h];
    lookup_remove(h);
    payload_bytes_ -= list.payload_bytes();
    list.insert(p);
    payload_bytes_ += list.payload_bytes();
    lookup_.insert(list.hash(), h);
    return;
  }
  MutablePostingList copy = arena_[h];
  copy.insert(p);
  copy.token_count = 1;
  const ListHandle n = allocate(std::move(copy));
  lookup_.insert(target, n);
  entry = TokenMapValue::list(n);
  --arena_[h].token_count;
}

void MutableSketch::add(TokenFingerprint fp, PostingId p) {
  if (p >= capacity_) {
    throw std::out_of_range("mutable sketch: posting beyond capacity");
  }
  TokenMapValue& entry = token_map_.slot_for(fp);
  switch (entry.tag()) {
    case TokenMapValue::Tag::kAbsent:
      entry = TokenMapValue::direct(p);
      ++direct_count_;
      break;
    case TokenMapValue::Tag::kDirect: {
      const auto q = static_cast<PostingId>(entry.payload());
      if (q != p) {
        promote_direct(entry, q, p);
      }
      break;
    }
    case TokenMapValue::Tag::kList:
      extend_list_entry(entry, p);
      break;
    default:
      throw std::logic_error("mutable sketch: corrupt token map value");
  }
  peak_bytes_ = std::max(peak_bytes_, current_memory());
}

auto MutableSketch::get_postings(TokenFingerprint fp) const
    -> std::optional<std::vector<PostingId>> {
  auto id = present(fp);
  if (!id) {
    return std::nullopt;
  }
  return decode(*id);
}

auto MutableSketch::present(TokenFingerprint fp) const noexcept -> std::optional<std::uint64_t> {
  const TokenMapValue v = token_map_.get(fp);
  switch (v.tag()) {
    case TokenMapValue::Tag::kDirect:
      return kDirectIdBit | v.payload();
    case TokenMapValue::Tag::kList:
      return v.payload();
    default:
      return std::nullopt;
  }
}

auto MutableSketch::decode(std::uint64_t list_id) const -> std::vector<PostingId> {
  if (list_id & kDirectIdBit) {
    return {static_cast<PostingId>(list_id & 0xffff)};
  }
  return list(static_cast<ListHandle>(list_id)).to_vector();
}

auto MutableSketch::list(ListHandle h) const -> const MutablePostingList& {
  if (!is_live(h)) {
    throw std::out_of_range("mutable sketch: dead or unknown list handle");
  }
  return arena_[h];
}

auto MutableSketch::estimate_memory() const noexcept -> std::size_t {
  return std::max(peak_bytes_, current_memory());
}

auto MutableSketch::current_memory() const noexcept -> std::size_t {
  return kBaselineBytes + token_map_.memory_bytes() + lookup_.memory_bytes() +
         arena_.size() * sizeof(MutablePostingList) + live_.size() / 8 +
         free_.size() * sizeof(ListHandle) + payload_bytes_;
}

auto MutableSketch::stats() const noexcept -> SketchStats {
  SketchStats s;
  s.token_count = token_map_.size();
  s.list_count = live_lists_;
  s.direct_count = direct_count_;
  const std::uint64_t with_lists = s.token_count - s.direct_count;
  s.dedup_ratio = with_lists == 0 ? 0.0
                                  : 1.0 - static_cast<double>(s.list_count) /
                                              static_cast<double>(with_lists);
  return s;
}

auto MutableSketch::check_invariants() const -> std::string {
  std::vector<std::uint32_t> refs(arena_.size(), 0);
  std::size_t directs = 0;
  std::string error;
  token_map_.for_each([&](TokenFingerprint fp, TokenMapValue v) {
    if (!error.empty()) {
      return;
    }
    if (v.tag() == TokenMapValue::Tag::kDirect) {
      ++directs;
      if (v.payload() >= capacity_) {
        error = "direct posting beyond capacity for fingerprint " + std::to_string(fp.value);
      }
    } else if (v.tag() == TokenMapValue::Tag::kList) {
      if (!is_live(v.payload())) {
        error = "token references dead list " + std::to_string(v.payload());
      } else {
        ++refs[v.payload()];
      }
    } else {
      error = "unknown tag";
    }
  });
  if (!error.empty()) {
    return error;
  }
  if (directs != direct_count_) {
    return "direct count mismatch";
  }
  std::map<std::vector<PostingId>, ListHandle> seen;
  std::size_t live = 0;
  for (ListHandle h = 0; h < arena_.size(); ++h) {
    if (!live_[h]) {
      continue;
    }
    ++live;
    const MutablePostingList& l = arena_[h];
    if (l.token_count != refs[h]) {
      return "token count mismatch on list " + std::to_string(h);
    }
    if (l.token_count == 0) {
      return "unreferenced live list " + std::to_string(h);
    }
    auto postings = l.to_vector();
    if (postings.size() < 2) {
      return "list with fewer than two postings " + std::to_string(h);
    }
    if (postings_hash(postings) != l.hash()) {
      return "stale postings hash on list " + std::to_string(h);
    }
    if (l.is_long() != (l.cardinality() > l.promotion_threshold())) {
      return "representation does not match promotion threshold on list " + std::to_string(h);
    }
    auto [it, inserted] = seen.emplace(std::move(postings), h);
    if (!inserted) {
      return "duplicate posting set in lists " + std::to_string(it->second) + " and " +
             std::to_string(h);
    }
    if (lookup_.slot_of(l.hash(), h) == std::nullopt) {
      return "list " + std::to_string(h) + " unreachable in lookup map";
    }
  }
  if (live != live_lists_ || lookup_.size() != live) {
    return "lookup map size does not match live lists";
  }
  if (!lookup_.probe_invariant_holds()) {
    return "lookup map probe invariant violated";
  }
  return {};
}

}  // namespace dynawarp
