#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "dynawarp/lookup_map.hpp"
#include "dynawarp/mutable_sketch.hpp"
#include "dynawarp/token_map.hpp"
#include "test_util.hpp"

namespace dynawarp {
namespace {

using testing::example_sketch;
using testing::OracleIndex;

auto fp(const char* token) -> TokenFingerprint { return fingerprint(token); }

// Two disjoint posting sets with equal postings hash. Element hashes are
// 64-bit vectors over GF(2), so any 65 of them are linearly dependent;
// Gaussian elimination finds a subset folding to zero, and any split of
// that subset gives two sets with the same XOR.
auto colliding_sets() -> std::pair<std::vector<PostingId>, std::vector<PostingId>> {
  struct Row {
    std::uint64_t value;
    std::vector<PostingId> members;
  };
  std::vector<Row> basis;
  for (PostingId p = 0;; ++p) {
    Row row{element_hash(p), {p}};
    for (const Row& b : basis) {
      const int top = 63 - std::countl_zero(b.value);
      if ((row.value >> top) & 1u) {
        row.value ^= b.value;
        std::vector<PostingId> merged;
        std::set_symmetric_difference(row.members.begin(), row.members.end(), b.members.begin(),
                                      b.members.end(), std::back_inserter(merged));
        row.members = std::move(merged);
      }
    }
    if (row.value == 0) {
      std::vector<PostingId>& m = row.members;
      const auto half = static_cast<std::ptrdiff_t>(m.size() / 2);
      return {{m.begin(), m.begin() + half}, {m.begin() + half, m.end()}};
    }
    basis.push_back(std::move(row));
    std::sort(basis.begin(), basis.end(), [](const Row& a, const Row& b) { return a.value > b.value; });
  }
}

// ---- token map values ---------------------------------------------------

TEST(TokenMapValue, TagsAndPayloads) {
  EXPECT_TRUE(TokenMapValue{}.is_absent());
  const TokenMapValue d = TokenMapValue::direct(65535);
  EXPECT_EQ(d.tag(), TokenMapValue::Tag::kDirect);
  EXPECT_EQ(d.payload(), 65535u);
  EXPECT_EQ(d.raw() >> 30, 1u);
  const TokenMapValue l = TokenMapValue::list((1u << 30) - 1);
  EXPECT_EQ(l.tag(), TokenMapValue::Tag::kList);
  EXPECT_EQ(l.payload(), (1u << 30) - 1);
  EXPECT_EQ(l.raw() >> 30, 2u);
}

TEST(TokenMap, GrowsAndKeepsEntries) {
  TokenMap map(4);
  for (std::uint32_t i = 0; i < 10000; ++i) {
    map.slot_for(TokenFingerprint{i * 2654435761u}) = TokenMapValue::direct(static_cast<PostingId>(i));
  }
  EXPECT_EQ(map.size(), 10000u);
  EXPECT_LE(map.size() * 4, map.slot_count() * 3);
  for (std::uint32_t i = 0; i < 10000; ++i) {
    ASSERT_EQ(map.get(TokenFingerprint{i * 2654435761u}), TokenMapValue::direct(static_cast<PostingId>(i)));
  }
  EXPECT_TRUE(map.get(TokenFingerprint{1}).is_absent());
}

// ---- four-line example -------------------------------------------------

TEST(MutableSketch, SharedListForConnectionAndHost) {
  const MutableSketch s = example_sketch();
  const auto connection = s.value_of(fp("connection"));
  const auto host = s.value_of(fp("host"));
  ASSERT_EQ(connection.tag(), TokenMapValue::Tag::kList);
  EXPECT_EQ(connection, host);
  EXPECT_EQ(s.get_postings(fp("connection")), (std::vector<PostingId>{0, 2}));
}

TEST(MutableSketch, StartIsDirectAfterTwoLines) {
  MutableSketch s(16);
  for (std::size_t i = 0; i < 2; ++i) {
    for (const std::string& w : testing::words(testing::kExampleLines[i])) {
      s.add(fingerprint(w), static_cast<PostingId>(i));
    }
  }
  EXPECT_EQ(s.value_of(fp("start")), TokenMapValue::direct(1));
  EXPECT_EQ(s.stats().list_count, 1u);  // only "info" {0, 1}
}

TEST(MutableSketch, InfoListAfterAllLines) {
  const MutableSketch s = example_sketch();
  EXPECT_EQ(s.get_postings(fp("info")), (std::vector<PostingId>{0, 1, 3}));
  EXPECT_EQ(s.get_postings(fp("start")), (std::vector<PostingId>{1}));
  EXPECT_FALSE(s.get_postings(fp("warning")).has_value());
  const SketchStats st = s.stats();
  EXPECT_EQ(st.list_count, 2u);
  EXPECT_EQ(st.token_count, 11u);
  EXPECT_EQ(st.direct_count, 8u);
  EXPECT_DOUBLE_EQ(st.dedup_ratio, 1.0 - 2.0 / 3.0);
  EXPECT_EQ(s.check_invariants(), "");
}

TEST(MutableSketch, RejectsPostingBeyondCapacity) {
  MutableSketch s(8);
  EXPECT_THROW(s.add(fp("x"), 8), std::out_of_range);
  EXPECT_THROW(MutableSketch(0), std::invalid_argument);
}

TEST(MutableSketch, SinglePostingCorpusHasNoLists) {
  MutableSketch s(4);
  for (int i = 0; i < 1000; ++i) {
    s.add(fingerprint("t" + std::to_string(i)), static_cast<PostingId>(i % 4));
  }
  EXPECT_EQ(s.stats().list_count, 0u);
  EXPECT_EQ(s.stats().direct_count, 1000u);
  EXPECT_EQ(s.stats().dedup_ratio, 0.0);
  EXPECT_EQ(s.lookup_map().size(), 0u);
}

// ---- add branches -------------------------------------------------------

TEST(MutableSketch, BranchesOfAdd) {
  MutableSketch s(32);
  const TokenFingerprint a{1}, b{2}, c{3};
  s.add(a, 5);  // absent -> direct
  EXPECT_EQ(s.value_of(a), TokenMapValue::direct(5));
  s.add(a, 5);  // direct, same posting
  EXPECT_EQ(s.value_of(a), TokenMapValue::direct(5));
  s.add(a, 7);  // direct -> new list {5, 7}
  ASSERT_EQ(s.value_of(a).tag(), TokenMapValue::Tag::kList);
  const ListHandle h57 = s.value_of(a).payload();
  EXPECT_EQ(h57, 0u);
  s.add(b, 7);
  s.add(b, 5);  // direct -> existing list {5, 7}
  EXPECT_EQ(s.value_of(b), TokenMapValue::list(h57));
  EXPECT_EQ(s.list(h57).token_count, 2u);
  s.add(b, 5);  // list, posting present
  EXPECT_EQ(s.list(h57).token_count, 2u);
  s.add(a, 9);  // shared list -> copy {5, 7, 9}
  const ListHandle h579 = s.value_of(a).payload();
  EXPECT_NE(h579, h57);
  EXPECT_EQ(s.list(h57).token_count, 1u);
  EXPECT_EQ(s.get_postings(a), (std::vector<PostingId>{5, 7, 9}));
  EXPECT_EQ(s.get_postings(b), (std::vector<PostingId>{5, 7}));
  s.add(b, 9);  // retarget to existing {5, 7, 9}; {5, 7} freed
  EXPECT_EQ(s.value_of(b), TokenMapValue::list(h579));
  EXPECT_FALSE(s.is_live(h57));
  EXPECT_EQ(s.list(h579).token_count, 2u);
  EXPECT_EQ(s.stats().list_count, 1u);
  s.add(c, 1);
  s.add(c, 2);  // lowest free handle is reused
  EXPECT_EQ(s.value_of(c), TokenMapValue::list(h57));
  s.add(c, 3);  // sole owner: extended in place
  EXPECT_EQ(s.value_of(c), TokenMapValue::list(h57));
  EXPECT_EQ(s.get_postings(c), (std::vector<PostingId>{1, 2, 3}));
  EXPECT_EQ(s.check_invariants(), "");
}

TEST(MutableSketch, AddIsIdempotent) {
  OracleIndex oracle;
  MutableSketch s = testing::random_sketch(5000, 256, 800, 3, oracle);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 2000; ++i) {
    auto it = oracle.begin();
    std::advance(it, static_cast<long>(rng() % oracle.size()));
    const PostingId p = it->second[rng() % it->second.size()];
    const SketchStats before = s.stats();
    const TokenMapValue v = s.value_of(TokenFingerprint{it->first});
    const std::size_t mem = s.estimate_memory();
    s.add(TokenFingerprint{it->first}, p);
    ASSERT_EQ(s.value_of(TokenFingerprint{it->first}), v);
    ASSERT_EQ(s.stats().list_count, before.list_count);
    ASSERT_EQ(s.stats().token_count, before.token_count);
    ASSERT_EQ(s.estimate_memory(), mem);
  }
  EXPECT_EQ(s.check_invariants(), "");
}

// ---- oracle comparisons --------------------------------------------------

TEST(MutableSketch, RandomCorpusMatchesOracle) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    OracleIndex oracle;
    const MutableSketch s = testing::random_sketch(40000, 1024, 6000, seed, oracle);
    ASSERT_EQ(s.check_invariants(), "");
    ASSERT_EQ(s.token_count(), oracle.size());
    std::set<std::vector<PostingId>> multi;
    for (const auto& [key, postings] : oracle) {
      ASSERT_EQ(s.get_postings(TokenFingerprint{key}), postings);
      if (postings.size() >= 2) {
        multi.insert(postings);
      }
    }
    EXPECT_EQ(s.stats().list_count, multi.size());
  }
}

TEST(MutableSketch, InvariantsHoldAfterEveryAdd) {
  std::mt19937_64 rng(9);
  MutableSketch s(64, 4);  // low threshold exercises promotion
  OracleIndex oracle;
  for (int i = 0; i < 3000; ++i) {
    const TokenFingerprint f{static_cast<std::uint32_t>(rng() % 60)};
    const auto p = static_cast<PostingId>(rng() % 64);
    s.add(f, p);
    testing::oracle_add(oracle, f, p);
    ASSERT_EQ(s.check_invariants(), "") << "after add " << i;
  }
  for (const auto& [key, postings] : oracle) {
    ASSERT_EQ(s.get_postings(TokenFingerprint{key}), postings);
  }
}

TEST(MutableSketch, OrderIndependentAnswers) {
  std::mt19937_64 rng(12);
  std::vector<std::pair<TokenFingerprint, PostingId>> pairs;
  for (int i = 0; i < 20000; ++i) {
    pairs.emplace_back(TokenFingerprint{static_cast<std::uint32_t>(rng() % 3000)},
                       static_cast<PostingId>(rng() % 200));
  }
  MutableSketch first(200);
  for (const auto& [f, p] : pairs) {
    first.add(f, p);
  }
  for (int round = 0; round < 3; ++round) {
    std::shuffle(pairs.begin(), pairs.end(), rng);
    MutableSketch other(200);
    for (const auto& [f, p] : pairs) {
      other.add(f, p);
    }
    ASSERT_EQ(other.stats().list_count, first.stats().list_count);
    for (std::uint32_t k = 0; k < 3000; ++k) {
      ASSERT_EQ(other.get_postings(TokenFingerprint{k}), first.get_postings(TokenFingerprint{k}));
    }
  }
}

TEST(MutableSketch, SlowModelFuzzHundredThousandAdds) {
  std::mt19937_64 rng(77);
  MutableSketch s(512, 16);
  OracleIndex oracle;
  for (int i = 0; i < 100000; ++i) {
    // Few tokens over few postings force constant merging and splitting.
    const TokenFingerprint f{static_cast<std::uint32_t>(rng() % 400)};
    const auto p = static_cast<PostingId>(rng() % (i < 50000 ? 24 : 512));
    s.add(f, p);
    testing::oracle_add(oracle, f, p);
    if (i % 997 == 0) {
      ASSERT_EQ(s.check_invariants(), "") << i;
    }
  }
  ASSERT_EQ(s.check_invariants(), "");
  for (const auto& [key, postings] : oracle) {
    ASSERT_EQ(s.get_postings(TokenFingerprint{key}), postings);
  }
}

// ---- memory estimate ----------------------------------------------------

TEST(MutableSketch, MemoryBaselineAndMonotonicity) {
  EXPECT_EQ(MutableSketch(100).estimate_memory(), MutableSketch(100).estimate_memory());
  EXPECT_GT(MutableSketch(100).estimate_memory(), 0u);
  std::mt19937_64 rng(8);
  MutableSketch s(4096);
  std::size_t last = s.estimate_memory();
  for (int i = 0; i < 100000; ++i) {
    // Popular tokens grow long lists; others merge into and leave them.
    const TokenFingerprint f{static_cast<std::uint32_t>(rng() % (i % 3 == 0 ? 50 : 20000))};
    s.add(f, static_cast<PostingId>(rng() % 4096));
    const std::size_t now = s.estimate_memory();
    ASSERT_GE(now, last) << i;
    last = now;
  }
}

// ---- lookup map ---------------------------------------------------------

TEST(LookupMap, InsertIntoEmptyUsesHomeSlot) {
  LookupMap map;
  const PostingsHash h = postings_hash({3, 9});
  map.insert(h, 7);
  EXPECT_EQ(map.slot_of(h, 7), map.home_slot(h));
  EXPECT_EQ(map.size(), 1u);
  EXPECT_TRUE(map.remove(h, 7));
  EXPECT_EQ(map.size(), 0u);
  EXPECT_FALSE(map.find(h, [](ListHandle) { return true; }).has_value());
  EXPECT_FALSE(map.remove(h, 7));
}

TEST(LookupMap, CraftedEqualHashesProbeToNextSlot) {
  const auto [a, b] = colliding_sets();
  ASSERT_FALSE(a.empty());
  ASSERT_FALSE(b.empty());
  ASSERT_NE(a, b);
  ASSERT_EQ(postings_hash(a), postings_hash(b));

  MutableSketch s(kMaxCapacity);
  const ListHandle ha = s.make_list(a);
  const ListHandle hb = s.make_list(b);
  EXPECT_EQ(s.lookup_insert(ha), ha);
  EXPECT_EQ(s.lookup_insert(hb), hb);  // different content, stored separately
  const LookupMap& map = s.lookup_map();
  const PostingsHash h = postings_hash(a);
  EXPECT_EQ(map.slot_of(h, ha), map.home_slot(h));
  EXPECT_EQ(map.slot_of(h, hb), (map.home_slot(h) + 1) % map.slot_count());

  // An equal set resolves to the resident list and bumps its count.
  const ListHandle dup = s.make_list(b);
  EXPECT_EQ(s.lookup_insert(dup), hb);
  EXPECT_EQ(s.list(hb).token_count, 1u);
  EXPECT_EQ(map.size(), 2u);

  // Removing the first resident back-shifts the second to the home slot.
  s.lookup_remove(ha);
  EXPECT_EQ(map.slot_of(h, hb), map.home_slot(h));
  EXPECT_TRUE(map.probe_invariant_holds());
}

TEST(LookupMap, RemoveFromCollidingRun) {
  LookupMap map(16);
  // Three residents sharing one hash form a single run.
  const PostingsHash h{0x1234};
  map.insert(h, 1);
  map.insert(h, 2);
  map.insert(h, 3);
  ASSERT_TRUE(map.remove(h, 1));
  EXPECT_EQ(map.slot_of(h, 2), map.home_slot(h));
  EXPECT_TRUE(map.slot_of(h, 3).has_value());
  EXPECT_TRUE(map.probe_invariant_holds());
  ASSERT_TRUE(map.remove(h, 3));
  ASSERT_TRUE(map.remove(h, 2));
  EXPECT_EQ(map.size(), 0u);
}

TEST(LookupMap, ModelFuzzAgainstReferenceMultimap) {
  std::mt19937_64 rng(101);
  LookupMap map(4);
  std::multimap<std::uint64_t, ListHandle> model;
  // Hash values from a small pool so runs collide, overlap and wrap.
  std::vector<std::uint64_t> pool(40);
  for (auto& v : pool) {
    v = rng();
  }
  // A few values that land in the last slot exercise wrap-around.
  pool[0] = ~0ULL;
  ListHandle next_handle = 0;
  for (int op = 0; op < 100000; ++op) {
    const bool grow = model.size() < 20 || (model.size() < 300 && rng() % 2 == 0);
    if (grow) {
      const std::uint64_t h = pool[rng() % pool.size()];
      map.insert(PostingsHash{h}, next_handle);
      model.emplace(h, next_handle);
      ++next_handle;
    } else {
      auto it = model.begin();
      std::advance(it, static_cast<long>(rng() % model.size()));
      ASSERT_TRUE(map.remove(PostingsHash{it->first}, it->second));
      model.erase(it);
    }
    ASSERT_EQ(map.size(), model.size());
    if (op % 10 == 0 || model.size() < 50) {
      ASSERT_TRUE(map.probe_invariant_holds()) << op;
      for (const auto& [h, handle] : model) {
        const auto found = map.find(PostingsHash{h}, [&](ListHandle c) { return c == handle; });
        ASSERT_EQ(found, std::optional<ListHandle>(handle)) << op;
      }
      std::size_t residents = 0;
      map.for_each([&](PostingsHash h, ListHandle handle, std::size_t) {
        ++residents;
        const auto [lo, hi] = model.equal_range(h.value);
        ASSERT_TRUE(std::any_of(lo, hi, [&](const auto& e) { return e.second == handle; }));
      });
      ASSERT_EQ(residents, model.size());
    }
  }
  EXPECT_FALSE(map.remove(PostingsHash{12345}, 999999));
}

TEST(LookupMap, SketchLevelInsertRemoveFuzz) {
  std::mt19937_64 rng(202);
  MutableSketch s(128);
  std::map<std::vector<PostingId>, ListHandle> model;
  std::vector<ListHandle> stored;
  for (int op = 0; op < 20000; ++op) {
    if (stored.empty() || rng() % 3 != 0) {
      std::set<PostingId> set;
      const std::size_t n = 2 + rng() % 4;
      while (set.size() < n) {
        set.insert(static_cast<PostingId>(rng() % 10));
      }
      const std::vector<PostingId> v(set.begin(), set.end());
      const ListHandle h = s.make_list(v);
      const ListHandle got = s.lookup_insert(h);
      auto it = model.find(v);
      if (it == model.end()) {
        ASSERT_EQ(got, h);
        model.emplace(v, h);
        stored.push_back(h);
      } else {
        ASSERT_EQ(got, it->second);
      }
    } else {
      const std::size_t i = rng() % stored.size();
      const ListHandle h = stored[i];
      model.erase(s.list(h).to_vector());
      s.lookup_remove(h);
      stored.erase(stored.begin() + static_cast<long>(i));
    }
    ASSERT_EQ(s.lookup_map().size(), model.size());
  }
  EXPECT_TRUE(s.lookup_map().probe_invariant_holds());
  for (const auto& [v, h] : model) {
    const ListHandle dup = s.make_list(v);
    ASSERT_EQ(s.lookup_insert(dup), h);
  }
}

}  // namespace
}  // namespace dynawarp
