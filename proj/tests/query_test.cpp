#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "dynawarp/query.hpp"
#include "dynawarp/sketch_file.hpp"
#include "test_util.hpp"

namespace dynawarp {
namespace {

using Tokens = std::vector<std::string>;

/// Wraps a view and counts decodes.
template <typename View>
struct CountingView {
  const View& inner;
  mutable std::size_t decodes{0};

  [[nodiscard]] auto present(TokenFingerprint fp) const { return inner.present(fp); }
  [[nodiscard]] auto decode(std::uint64_t id) const -> std::vector<PostingId> {
    ++decodes;
    return inner.decode(id);
  }
};

struct RecordingConsumer {
  std::vector<std::vector<PostingId>> accepted;
  std::size_t stop_after{static_cast<std::size_t>(-1)};

  void accept(std::span<const PostingId> postings) { accepted.emplace_back(postings.begin(), postings.end()); }
  [[nodiscard]] auto should_stop() const -> bool { return accepted.size() >= stop_after; }
};

class QueryOnExample : public ::testing::Test {
 protected:
  QueryOnExample() : mutable_(testing::example_sketch()), bytes_(build_sketch(mutable_)), immutable_(bytes_) {}

  template <typename Fn>
  void on_both(Fn&& fn) {
    fn(mutable_);
    fn(immutable_);
  }

  MutableSketch mutable_;
  Bytes bytes_;
  SketchReader immutable_;
};

TEST_F(QueryOnExample, SharedListDecodedOnce) {
  on_both([](const auto& view) {
    CountingView counting{view};
    RecordingConsumer consumer;
    const Tokens tokens{"connection", "host"};
    execute(counting, std::span<const std::string>(tokens), consumer);
    EXPECT_EQ(counting.decodes, 1u);
    ASSERT_EQ(consumer.accepted.size(), 1u);
    EXPECT_EQ(consumer.accepted[0], (std::vector<PostingId>{0, 2}));
  });
}

TEST_F(QueryOnExample, AbsentTokensAcceptEmptyWithoutDecoding) {
  on_both([](const auto& view) {
    CountingView counting{view};
    RecordingConsumer consumer;
    const Tokens tokens{"zebra", "quokka", "xylophone"};
    execute(counting, std::span<const std::string>(tokens), consumer);
    EXPECT_EQ(counting.decodes, 0u);
    ASSERT_EQ(consumer.accepted.size(), 3u);
    for (const auto& a : consumer.accepted) {
      EXPECT_TRUE(a.empty());
    }
  });
}

TEST_F(QueryOnExample, EarlyStopSkipsFurtherDecodes) {
  on_both([](const auto& view) {
    CountingView counting{view};
    RecordingConsumer consumer;
    consumer.stop_after = 1;
    const Tokens tokens{"info", "host", "start"};
    execute(counting, std::span<const std::string>(tokens), consumer);
    EXPECT_EQ(counting.decodes, 1u);
    EXPECT_EQ(consumer.accepted.size(), 1u);
  });
  on_both([](const auto& view) {
    CountingView counting{view};
    RecordingConsumer consumer;
    consumer.stop_after = 1;
    const Tokens tokens{"info", "absent-token", "host"};
    execute(counting, std::span<const std::string>(tokens), consumer);
    EXPECT_EQ(counting.decodes, 0u);  // the absent token arrives first
    ASSERT_EQ(consumer.accepted.size(), 1u);
    EXPECT_TRUE(consumer.accepted[0].empty());
  });
}

TEST_F(QueryOnExample, IntersectAndUnion) {
  on_both([](const auto& view) {
    const Tokens info{"info"};
    EXPECT_EQ(intersect_all(view, std::span<const std::string>(info)), (std::vector<PostingId>{0, 1, 3}));
    const Tokens info_connection{"info", "connection"};
    EXPECT_EQ(intersect_all(view, std::span<const std::string>(info_connection)), (std::vector<PostingId>{0}));
    const Tokens with_absent{"info", "nowhere"};
    EXPECT_TRUE(intersect_all(view, std::span<const std::string>(with_absent)).empty());
    const Tokens connection_start{"connection", "start"};
    EXPECT_EQ(union_all(view, std::span<const std::string>(connection_start)), (std::vector<PostingId>{0, 1, 2}));
    const Tokens restart{"restart"};
    EXPECT_EQ(union_all(view, std::span<const std::string>(restart)), (std::vector<PostingId>{3}));
    EXPECT_TRUE(union_all(view, std::span<const std::string>{}).empty());
    EXPECT_THROW((void)intersect_all(view, std::span<const std::string>{}), std::invalid_argument);
  });
}

TEST(Query, AcceptCountAndSetAlgebraOnRandomCorpus) {
  std::mt19937_64 rng(3);
  MutableSketch m(128);
  std::map<std::string, std::set<PostingId>> oracle;
  for (int i = 0; i < 20000; ++i) {
    const std::string token = "w" + std::to_string(rng() % 700);
    const auto p = static_cast<PostingId>(rng() % 128);
    m.add(fingerprint(token), p);
    oracle[token].insert(p);
  }
  const Bytes bytes = build_sketch(m);
  const SketchReader r(bytes);
  for (int q = 0; q < 500; ++q) {
    Tokens tokens;
    const std::size_t n = 1 + rng() % 5;
    for (std::size_t k = 0; k < n; ++k) {
      tokens.push_back("w" + std::to_string(rng() % 800));  // some are absent
    }
    std::set<PostingId> inter;
    std::set<PostingId> uni;
    bool first = true;
    std::size_t absent = 0;
    std::set<std::set<PostingId>> distinct;
    for (const std::string& t : tokens) {
      const auto it = oracle.find(t);
      const std::set<PostingId> s = it == oracle.end() ? std::set<PostingId>{} : it->second;
      absent += it == oracle.end() ? 1 : 0;
      if (it != oracle.end()) {
        distinct.insert(s);
      }
      uni.insert(s.begin(), s.end());
      if (first) {
        inter = s;
        first = false;
      } else {
        std::set<PostingId> next;
        std::set_intersection(inter.begin(), inter.end(), s.begin(), s.end(), std::inserter(next, next.end()));
        inter = next;
      }
    }
    const std::span<const std::string> span(tokens);
    for (const auto* view : {static_cast<const void*>(&m), static_cast<const void*>(&r)}) {
      const auto check = [&](const auto& v) {
        ASSERT_EQ(intersect_all(v, span), std::vector<PostingId>(inter.begin(), inter.end()));
        ASSERT_EQ(union_all(v, span), std::vector<PostingId>(uni.begin(), uni.end()));
        RecordingConsumer consumer;
        execute(v, span, consumer);
        ASSERT_EQ(consumer.accepted.size(), absent + distinct.size());
      };
      if (view == &m) {
        check(m);
      } else {
        check(r);
      }
    }
  }
}

}  // namespace
}  // namespace dynawarp
