#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "dynawarp/bic.hpp"
#include "dynawarp/bits.hpp"
#include "dynawarp/posting_list.hpp"
#include "dynawarp/prefix_sum.hpp"

namespace dynawarp {
namespace {

auto random_set(std::mt19937_64& rng, std::uint32_t universe, std::size_t max_size)
    -> std::vector<PostingId> {
  const std::size_t n = rng() % (std::min<std::size_t>(max_size, universe) + 1);
  std::set<PostingId> s;
  while (s.size() < n) {
    s.insert(static_cast<PostingId>(rng() % universe));
  }
  return {s.begin(), s.end()};
}

// ---- bit sequences -------------------------------------------------------

TEST(BitSequence, MsbFirstPacking) {
  BitWriter w;
  w.write(0b101, 3);
  w.write(0b00001, 5);
  w.write_bit(true);
  ASSERT_EQ(w.bit_length(), 9u);
  ASSERT_EQ(w.bytes().size(), 2u);
  EXPECT_EQ(w.bytes()[0], 0b10100001);
  EXPECT_EQ(w.bytes()[1], 0b10000000);
}

TEST(BitSequence, RandomWritesReadBack) {
  std::mt19937_64 rng(11);
  std::vector<std::pair<std::uint64_t, unsigned>> fields;
  BitWriter w;
  for (int i = 0; i < 20000; ++i) {
    const unsigned width = static_cast<unsigned>(rng() % 65);
    const std::uint64_t value = width == 64 ? rng() : (width == 0 ? 0 : rng() & ((1ULL << width) - 1));
    w.write(value, width);
    fields.emplace_back(value, width);
  }
  std::uint64_t pos = 0;
  for (const auto& [value, width] : fields) {
    ASSERT_EQ(read_bits(w.bytes(), pos, width), value);
    ASSERT_EQ(checked_read_bits(w.bytes(), pos, width), value);
    pos += width;
  }
  EXPECT_EQ(pos, w.bit_length());
}

TEST(BitSequence, CheckedReadRejectsOverrun) {
  const Bytes bytes{0xff};
  EXPECT_EQ(checked_read_bits(bytes, 4, 4), 0xfu);
  EXPECT_THROW((void)checked_read_bits(bytes, 5, 4), std::out_of_range);
}

// ---- posting lists ------------------------------------------------------

TEST(PostingList, ContainsOnSharedList) {
  MutablePostingList list(16, 4);
  list.insert(0);
  list.insert(2);
  EXPECT_TRUE(list.contains(2));
  EXPECT_TRUE(list.contains(0));
  EXPECT_FALSE(list.contains(1));
  EXPECT_FALSE(MutablePostingList(16, 4).contains(5));
}

TEST(PostingList, InsertIsIdempotent) {
  MutablePostingList list(100, 10);
  EXPECT_TRUE(list.insert(42));
  const PostingsHash h = list.hash();
  EXPECT_FALSE(list.insert(42));
  EXPECT_EQ(list.cardinality(), 1u);
  EXPECT_EQ(list.hash(), h);
}

TEST(PostingList, RejectsPostingBeyondCapacity) {
  MutablePostingList list(10, 2);
  EXPECT_THROW(list.insert(10), std::out_of_range);
  EXPECT_THROW((void)list.contains(10), std::out_of_range);
  EXPECT_THROW(MutablePostingList(0, 1), std::invalid_argument);
  EXPECT_THROW(MutablePostingList(kMaxCapacity + 1, 1), std::invalid_argument);
}

TEST(PostingList, PromotionKeepsContent) {
  const std::uint32_t capacity = 1024;
  const std::uint32_t threshold = default_promotion_threshold(capacity);
  EXPECT_EQ(threshold, 64u);
  MutablePostingList list(capacity, threshold);
  std::mt19937_64 rng(5);
  std::set<PostingId> oracle;
  while (oracle.size() < threshold) {
    const auto p = static_cast<PostingId>(rng() % capacity);
    EXPECT_EQ(list.insert(p), oracle.insert(p).second);
  }
  ASSERT_FALSE(list.is_long());
  const std::vector<PostingId> before = list.to_vector();
  PostingId extra = 0;
  while (oracle.count(extra)) {
    ++extra;
  }
  ASSERT_TRUE(list.insert(extra));
  oracle.insert(extra);
  EXPECT_TRUE(list.is_long());
  EXPECT_EQ(list.to_vector(), std::vector<PostingId>(oracle.begin(), oracle.end()));
  for (PostingId p : before) {
    EXPECT_TRUE(list.contains(p));
  }
  EXPECT_EQ(list.hash(), postings_hash(list.to_vector()));
}

TEST(PostingList, RandomInsertsMatchOracle) {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 50; ++round) {
    const std::uint32_t capacity = 1 + static_cast<std::uint32_t>(rng() % kMaxCapacity);
    const std::uint32_t threshold = static_cast<std::uint32_t>(rng() % 300);
    MutablePostingList list(capacity, threshold);
    std::set<PostingId> oracle;
    std::uint32_t last_card = 0;
    const int inserts = static_cast<int>(rng() % 2000);
    for (int i = 0; i < inserts; ++i) {
      const auto p = static_cast<PostingId>(rng() % std::min<std::uint32_t>(capacity, 4096));
      ASSERT_EQ(list.insert(p), oracle.insert(p).second);
      ASSERT_GE(list.cardinality(), last_card);
      last_card = list.cardinality();
    }
    ASSERT_EQ(list.cardinality(), oracle.size());
    ASSERT_EQ(list.is_long(), oracle.size() > threshold);
    const std::vector<PostingId> expected(oracle.begin(), oracle.end());
    ASSERT_EQ(list.to_vector(), expected);
    ASSERT_EQ(list.hash(), postings_hash(expected));
    if (!expected.empty()) {
      ASSERT_EQ(list.smallest(), expected.front());
    }
  }
}

TEST(PostingList, AllProbesAgreeWithOracle) {
  std::mt19937_64 rng(23);
  const std::uint32_t capacity = 1u << 12;
  for (std::uint32_t threshold : {0u, 100u, capacity}) {
    MutablePostingList list(capacity, threshold);
    std::set<PostingId> oracle;
    for (int i = 0; i < 700; ++i) {
      const auto p = static_cast<PostingId>(rng() % capacity);
      list.insert(p);
      oracle.insert(p);
    }
    for (std::uint32_t p = 0; p < capacity; ++p) {
      ASSERT_EQ(list.contains(static_cast<PostingId>(p)), oracle.count(static_cast<PostingId>(p)) == 1);
    }
  }
}

TEST(PostingList, EqualsExtended) {
  MutablePostingList a(64, 8);
  MutablePostingList b(64, 8);
  for (PostingId p : {1, 5, 9}) {
    a.insert(p);
    b.insert(p);
  }
  b.insert(20);
  EXPECT_TRUE(b.equals_extended(a, 20));
  EXPECT_FALSE(b.equals_extended(a, 21));
  EXPECT_TRUE(a.same_postings(a));
  EXPECT_FALSE(a.same_postings(b));
}

TEST(PostingList, SmallestOfEmptyListThrows) {
  EXPECT_THROW((void)MutablePostingList(8, 2).smallest(), std::logic_error);
}

// ---- binary interpolative coding ----------------------------------------

TEST(Bic, EmptySetCostsNothing) {
  const BitWriter w = bic_encode(std::vector<PostingId>{}, 0, 65535);
  EXPECT_EQ(w.bit_length(), 0u);
  const BicDecoded d = bic_decode(ByteView{}, 0, 0, 0, 65535);
  EXPECT_TRUE(d.postings.empty());
  EXPECT_EQ(d.bits_consumed, 0u);
}

TEST(Bic, FullUniverseCostsNothing) {
  for (std::uint32_t cap : {1u, 2u, 7u, 64u, 1000u, kMaxCapacity}) {
    std::vector<PostingId> all(cap);
    std::iota(all.begin(), all.end(), PostingId{0});
    const BitWriter w = bic_encode(all, 0, cap - 1);
    EXPECT_EQ(w.bit_length(), 0u) << cap;
    const BicDecoded d = bic_decode(ByteView{}, 0, cap, 0, cap - 1);
    EXPECT_EQ(d.postings, all);
  }
  // A full sub-range [lo, hi] decodes from zero bits as well.
  const BicDecoded d = bic_decode(ByteView{}, 0, 4, 10, 13);
  EXPECT_EQ(d.postings, (std::vector<PostingId>{10, 11, 12, 13}));
}

TEST(Bic, KnownSmallCode) {
  // [3] over [0, 7]: range size 8, 3 bits "011".
  const BitWriter w = bic_encode(std::vector<PostingId>{3}, 0, 7);
  ASSERT_EQ(w.bit_length(), 3u);
  EXPECT_EQ(w.bytes()[0], 0b01100000);
  // [1] over [0, 4]: range size 5, short codes 3 (2 bits), so "01".
  const BitWriter v = bic_encode(std::vector<PostingId>{1}, 0, 4);
  ASSERT_EQ(v.bit_length(), 2u);
  EXPECT_EQ(v.bytes()[0], 0b01000000);
  // [4] over [0, 4]: long code 4 + 3 = 7 in 3 bits, "111".
  const BitWriter x = bic_encode(std::vector<PostingId>{4}, 0, 4);
  ASSERT_EQ(x.bit_length(), 3u);
  EXPECT_EQ(x.bytes()[0], 0b11100000);
}

TEST(Bic, RandomRoundTrip) {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t max_size = (i % 10 == 0) ? 5000 : 64;
    const std::vector<PostingId> set = random_set(rng, kMaxCapacity, max_size);
    BitWriter w;
    w.write(0x5, 3);  // unaligned start
    bic_encode(set, 0, kMaxCapacity - 1, w);
    const BicDecoded d = bic_decode(w.bytes(), 3, static_cast<std::uint32_t>(set.size()), 0,
                                    kMaxCapacity - 1);
    ASSERT_EQ(d.postings, set);
    ASSERT_EQ(d.bits_consumed, w.bit_length() - 3);
    ASSERT_TRUE(std::is_sorted(d.postings.begin(), d.postings.end()));
    ASSERT_EQ(std::adjacent_find(d.postings.begin(), d.postings.end()), d.postings.end());
  }
}

TEST(Bic, RoundTripInSubRanges) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 2000; ++i) {
    const auto lo = static_cast<std::uint32_t>(rng() % 1000);
    const auto hi = lo + static_cast<std::uint32_t>(rng() % 200);
    std::set<PostingId> s;
    const std::size_t n = rng() % (hi - lo + 2);
    while (s.size() < n) {
      s.insert(static_cast<PostingId>(lo + rng() % (hi - lo + 1)));
    }
    const std::vector<PostingId> set(s.begin(), s.end());
    const BitWriter w = bic_encode(set, lo, hi);
    const BicDecoded d = bic_decode(w.bytes(), 0, static_cast<std::uint32_t>(set.size()), lo, hi);
    ASSERT_EQ(d.postings, set);
    ASSERT_EQ(d.bits_consumed, w.bit_length());
  }
}

TEST(Bic, ConsecutiveRunsAreCheap) {
  // A run touching either end of the universe costs well under 2 bits per
  // posting from 64 postings up.
  for (std::uint32_t len : {64u, 128u, 256u, 1024u, 4096u}) {
    for (std::uint32_t start : {0u, kMaxCapacity - len}) {
      std::vector<PostingId> run(len);
      std::iota(run.begin(), run.end(), static_cast<PostingId>(start));
      const BitWriter w = bic_encode(run, 0, kMaxCapacity - 1);
      EXPECT_LT(static_cast<double>(w.bit_length()) / len, 2.0) << len << " @ " << start;
    }
  }
  // Anywhere in the universe, runs of 128 and more stay below 2 bits per
  // posting. An interior run of 64 pays two spines of ~16-bit codes.
  std::mt19937_64 rng(37);
  for (int i = 0; i < 200; ++i) {
    for (std::uint32_t len : {64u, 128u, 512u}) {
      const auto start = static_cast<std::uint32_t>(rng() % (kMaxCapacity - len + 1));
      std::vector<PostingId> run(len);
      std::iota(run.begin(), run.end(), static_cast<PostingId>(start));
      const BitWriter w = bic_encode(run, 0, kMaxCapacity - 1);
      const double per = static_cast<double>(w.bit_length()) / len;
      EXPECT_LT(per, len == 64 ? 3.0 : 2.0) << len << " @ " << start;
    }
  }
}

TEST(Bic, RejectsBadInput) {
  EXPECT_THROW((void)bic_encode(std::vector<PostingId>{3, 2}, 0, 10), std::invalid_argument);
  EXPECT_THROW((void)bic_encode(std::vector<PostingId>{2, 2}, 0, 10), std::invalid_argument);
  EXPECT_THROW((void)bic_encode(std::vector<PostingId>{11}, 0, 10), std::invalid_argument);
  EXPECT_THROW((void)bic_encode(std::vector<PostingId>{4}, 5, 10), std::invalid_argument);
  EXPECT_THROW((void)bic_decode(ByteView{}, 0, 12, 0, 10), std::invalid_argument);
}

TEST(Bic, TruncatedBitsFailCleanly) {
  std::mt19937_64 rng(41);
  std::vector<PostingId> set = random_set(rng, kMaxCapacity, 500);
  while (set.size() < 10) {
    set = random_set(rng, kMaxCapacity, 500);
  }
  const BitWriter w = bic_encode(set, 0, kMaxCapacity - 1);
  Bytes cut(w.bytes().begin(), w.bytes().begin() + static_cast<std::ptrdiff_t>(w.bytes().size() / 2));
  EXPECT_THROW((void)bic_decode(cut, 0, static_cast<std::uint32_t>(set.size()), 0, kMaxCapacity - 1),
               std::out_of_range);
}

// ---- prefix sums --------------------------------------------------------

TEST(PrefixSum, FirstEntryAndDifferences) {
  const std::vector<std::uint32_t> lengths{3, 1, 4, 1, 5, 9, 2, 6};
  const PrefixSumData data = build_prefix_sum(lengths, 3);
  EXPECT_EQ(data.width, 4);
  const PrefixSumView view(data);
  EXPECT_EQ(view.entry(0), (PrefixEntry{0, 3}));
  for (std::size_t i = 0; i + 1 < lengths.size(); ++i) {
    EXPECT_EQ(view.entry(i + 1).offset - view.entry(i).offset, lengths[i]);
  }
  EXPECT_THROW((void)view.entry(lengths.size()), std::out_of_range);
}

TEST(PrefixSum, RejectsZeroLengthAndInterval) {
  EXPECT_THROW((void)build_prefix_sum(std::vector<std::uint32_t>{1, 0}), std::invalid_argument);
  EXPECT_THROW((void)build_prefix_sum(std::vector<std::uint32_t>{1}, 0), std::invalid_argument);
}

TEST(PrefixSum, MatchesRunningSumOnMillionEntries) {
  std::mt19937_64 rng(43);
  const std::size_t n = 1'000'000;
  std::vector<std::uint32_t> lengths(n);
  for (auto& len : lengths) {
    len = 1 + static_cast<std::uint32_t>(rng() % 20);
  }
  for (std::uint32_t interval : {1u, 7u, 64u, 1000u}) {
    const PrefixSumData data = build_prefix_sum(lengths, interval);
    const PrefixSumView view(data);
    ASSERT_EQ(view.size(), n);
    std::uint64_t offset = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const PrefixEntry e = view.entry(i);
      ASSERT_EQ(e.offset, offset) << i;
      ASSERT_EQ(e.length, lengths[i]);
      offset += lengths[i];
    }
  }
}

TEST(PrefixSum, ShortSectionsRejected) {
  const std::vector<std::uint32_t> lengths(100, 5);
  const PrefixSumData data = build_prefix_sum(lengths, 10);
  const ByteView samples(data.samples.data(), data.samples.size() - 8);
  EXPECT_THROW(PrefixSumView(data.lengths, samples, data.count, data.width, 10), std::out_of_range);
}

}  // namespace
}  // namespace dynawarp
