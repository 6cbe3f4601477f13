#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <numeric>
#include <random>
#include <unordered_set>

#include "dynawarp/hashing.hpp"

namespace dynawarp {
namespace {

TEST(Fingerprint, PinnedValues) {
  // Golden values; persisted sketches depend on them.
  EXPECT_EQ(fingerprint("info").value, 0xa508dc6au);
  EXPECT_EQ(fingerprint("connection").value, 0xbb34212au);
  EXPECT_EQ(hash_bytes64("info"), 0xf1bf536ba508dc6aULL);
}

TEST(Fingerprint, StableAndDiscriminating) {
  EXPECT_EQ(fingerprint("host"), fingerprint("host"));
  EXPECT_NE(fingerprint("host"), fingerprint("hosT"));
  EXPECT_NE(fingerprint("ab"), fingerprint("ba"));
  EXPECT_NE(hash_bytes64(std::string_view("\0", 1)), hash_bytes64(std::string_view("\0\0", 2)));
}

TEST(Fingerprint, EmptyTokenRejected) { EXPECT_THROW((void)fingerprint(""), std::invalid_argument); }

TEST(Fingerprint, FewCollisionsOnDistinctTokens) {
  std::unordered_set<std::uint32_t> seen;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    seen.insert(fingerprint("token" + std::to_string(i)).value);
  }
  // Birthday bound for 1e5 keys in 2^32: about 1.2 expected collisions.
  EXPECT_GE(seen.size(), static_cast<std::size_t>(n - 10));
}

TEST(Fingerprint, LowBitsAreBalanced) {
  std::array<int, 256> buckets{};
  const int n = 256 * 400;
  for (int i = 0; i < n; ++i) {
    ++buckets[fingerprint("k" + std::to_string(i)).value & 0xff];
  }
  for (int c : buckets) {
    EXPECT_GT(c, 400 / 2);
    EXPECT_LT(c, 400 * 2);
  }
}

TEST(ElementHash, LcgStep) {
  EXPECT_EQ(element_hash(0), kLcgIncrement);
  EXPECT_EQ(element_hash(1), kLcgMultiplier + kLcgIncrement);
  EXPECT_EQ(element_hash(2) - element_hash(1), kLcgMultiplier);
  EXPECT_EQ(element_hash(65535) - element_hash(65534), kLcgMultiplier);
}

TEST(ElementHash, InjectiveOverAllPostings) {
  std::vector<std::uint64_t> values;
  values.reserve(kMaxCapacity);
  for (std::uint32_t p = 0; p < kMaxCapacity; ++p) {
    values.push_back(element_hash(static_cast<PostingId>(p)));
  }
  std::sort(values.begin(), values.end());
  EXPECT_EQ(std::adjacent_find(values.begin(), values.end()), values.end());
}

TEST(PostingsHash, WorkedXorValue) {
  // Three element hashes folded in any order.
  const std::array<std::uint64_t, 3> hashes{0xad, 0x61, 0x2d};
  std::array<int, 3> order{0, 1, 2};
  do {
    std::uint64_t h = 0;
    for (int i : order) {
      h ^= hashes[static_cast<std::size_t>(i)];
    }
    EXPECT_EQ(h, 0xe1u);
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(PostingsHash, EmptyAndSingleton) {
  EXPECT_EQ(postings_hash({}).value, 0u);
  EXPECT_EQ(postings_hash({7}).value, element_hash(7));
  EXPECT_EQ(extend_hash(PostingsHash{}, 9).value, element_hash(9));
  const PostingsHash h = postings_hash({1, 4});
  EXPECT_EQ(extend_hash(extend_hash(h, 11), 11), h);
}

TEST(PostingsHash, OrderInvarianceExhaustiveSmallSets) {
  // Every set of size <= 8 over postings [0, 32): the fold in descending and
  // in a shuffled order equals the ascending fold. Sets of size <= 4 are
  // checked under every permutation.
  std::mt19937_64 rng(3);
  std::uint64_t sets = 0;
  std::vector<PostingId> set;
  auto visit = [&](auto&& self, PostingId next) -> void {
    ++sets;
    const PostingsHash expected = postings_hash(set);
    PostingsHash reversed{};
    for (auto it = set.rbegin(); it != set.rend(); ++it) {
      reversed = extend_hash(reversed, *it);
    }
    ASSERT_EQ(reversed, expected);
    if (set.size() <= 4) {
      std::vector<PostingId> perm = set;
      do {
        PostingsHash h{};
        for (PostingId p : perm) {
          h = extend_hash(h, p);
        }
        ASSERT_EQ(h, expected);
      } while (std::next_permutation(perm.begin(), perm.end()));
    } else if (set.size() == 8 && (sets & 0xff) == 0) {
      std::vector<PostingId> perm = set;
      std::shuffle(perm.begin(), perm.end(), rng);
      PostingsHash h{};
      for (PostingId p : perm) {
        h = extend_hash(h, p);
      }
      ASSERT_EQ(h, expected);
    }
    if (set.size() == 8) {
      return;
    }
    for (PostingId p = next; p < 32; ++p) {
      set.push_back(p);
      self(self, static_cast<PostingId>(p + 1));
      set.pop_back();
    }
  };
  visit(visit, 0);
  // sum_{k=0..8} C(32, k)
  EXPECT_EQ(sets, 15033173u);
}

TEST(PostingsHash, OrderInvarianceRandomized) {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 10000; ++round) {
    const std::size_t n = 1 + rng() % 200;
    std::vector<PostingId> set;
    std::unordered_set<PostingId> used;
    while (set.size() < n) {
      const auto p = static_cast<PostingId>(rng());
      if (used.insert(p).second) {
        set.push_back(p);
      }
    }
    PostingsHash incremental{};
    for (PostingId p : set) {
      incremental = extend_hash(incremental, p);
    }
    std::sort(set.begin(), set.end());
    ASSERT_EQ(incremental, postings_hash(set));
  }
}

}  // namespace
}  // namespace dynawarp
