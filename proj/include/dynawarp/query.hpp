#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "dynawarp/hashing.hpp"

namespace dynawarp {

/// Uniform reader contract of both sketch forms. List ids are stable within
/// one view: equal posting sets share an id.
template <typename V>
concept SketchView = requires(const V& view, TokenFingerprint fp, std::uint64_t id) {
  { view.present(fp) } -> std::convertible_to<std::optional<std::uint64_t>>;
  { view.decode(id) } -> std::convertible_to<std::vector<PostingId>>;
};

/// Receives one (possibly empty) posting array per absent token and per
/// distinct list id, and may ask the executor to stop early.
template <typename C>
concept PostingsConsumer = requires(C& consumer, std::span<const PostingId> postings) {
  consumer.accept(postings);
  { consumer.should_stop() } -> std::convertible_to<bool>;
};

/// Runs a token query: absent tokens are reported immediately as empty
/// lists, then each distinct list is decoded once, in first-seen order.
template <SketchView View, PostingsConsumer Consumer>
void execute(const View& view, std::span<const std::string> tokens, Consumer& consumer) {
  std::vector<std::uint64_t> list_ids;
  std::unordered_set<std::uint64_t> seen;
  for (const std::string& token : tokens) {
    const auto id = view.present(fingerprint(token));
    if (id) {
      if (seen.insert(*id).second) {
        list_ids.push_back(*id);
      }
      continue;
    }
    consumer.accept(std::span<const PostingId>{});
    if (consumer.should_stop()) {
      return;
    }
  }
  for (std::uint64_t id : list_ids) {
    const std::vector<PostingId> postings = view.decode(id);
    consumer.accept(std::span<const PostingId>(postings));
    if (consumer.should_stop()) {
      return;
    }
  }
}

/// AND consumer: running sorted-merge intersection, stops once empty.
class IntersectConsumer {
 public:
  void accept(std::span<const PostingId> postings) {
    if (!started_) {
      result_.assign(postings.begin(), postings.end());
      started_ = true;
      return;
    }
    std::vector<PostingId> next;
    std::set_intersection(result_.begin(), result_.end(), postings.begin(), postings.end(),
                          std::back_inserter(next));
    result_.swap(next);
  }
  [[nodiscard]] auto should_stop() const noexcept -> bool { return started_ && result_.empty(); }
  [[nodiscard]] auto result() && -> std::vector<PostingId> { return std::move(result_); }

 private:
  std::vector<PostingId> result_;
  bool started_{false};
};

/// OR consumer.
class UnionConsumer {
 public:
  void accept(std::span<const PostingId> postings) {
    std::vector<PostingId> next;
    std::set_union(result_.begin(), result_.end(), postings.begin(), postings.end(),
                   std::back_inserter(next));
    result_.swap(next);
  }
  [[nodiscard]] static constexpr auto should_stop() noexcept -> bool { return false; }
  [[nodiscard]] auto result() && -> std::vector<PostingId> { return std::move(result_); }

 private:
  std::vector<PostingId> result_;
};

/// Postings containing every token. Throws std::invalid_argument on an
/// empty token list.
template <SketchView View>
[[nodiscard]] auto intersect_all(const View& view, std::span<const std::string> tokens)
    -> std::vector<PostingId> {
  if (tokens.empty()) {
    throw std::invalid_argument("intersect_all: no tokens");
  }
  IntersectConsumer consumer;
  execute(view, tokens, consumer);
  return std::move(consumer).result();
}

template <SketchView View>
[[nodiscard]] auto union_all(const View& view, std::span<const std::string> tokens)
    -> std::vector<PostingId> {
  UnionConsumer consumer;
  execute(view, tokens, consumer);
  return std::move(consumer).result();
}

}  // namespace dynawarp
