#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <unordered_set>

#include "dynawarp/mphf.hpp"

namespace dynawarp {
namespace {

auto random_keys(std::size_t n, std::uint64_t seed) -> std::vector<TokenFingerprint> {
  std::mt19937_64 rng(seed);
  std::unordered_set<std::uint32_t> seen;
  std::vector<TokenFingerprint> keys;
  keys.reserve(n);
  while (keys.size() < n) {
    const auto k = static_cast<std::uint32_t>(rng());
    if (seen.insert(k).second) {
      keys.push_back(TokenFingerprint{k});
    }
  }
  return keys;
}

void expect_bijection(const Mphf& f, const std::vector<TokenFingerprint>& keys) {
  ASSERT_EQ(f.size(), keys.size());
  std::vector<std::uint8_t> hit(keys.size(), 0);
  for (TokenFingerprint k : keys) {
    const auto idx = f.evaluate(k);
    ASSERT_TRUE(idx.has_value()) << k.value;
    ASSERT_LT(*idx, keys.size());
    ASSERT_EQ(hit[*idx], 0) << "index " << *idx << " assigned twice";
    hit[*idx] = 1;
  }
}

class MphfBijection : public ::testing::TestWithParam<std::size_t> {};

TEST_P(MphfBijection, MapsKeysOntoRange) {
  const std::size_t n = GetParam();
  const auto keys = random_keys(n, 1000 + n);
  const Mphf f = mphf_build(keys);
  expect_bijection(f, keys);
  EXPECT_NO_THROW(f.view().validate());
}

INSTANTIATE_TEST_SUITE_P(Sizes, MphfBijection,
                         ::testing::Values(std::size_t{0}, std::size_t{1}, std::size_t{2},
                                           std::size_t{10}, std::size_t{1000}, std::size_t{10000},
                                           std::size_t{1000000}));

TEST(Mphf, SingleKeyMapsToZero) {
  const std::vector<TokenFingerprint> keys{TokenFingerprint{0xdeadbeef}};
  EXPECT_EQ(mphf_build(keys).evaluate(keys[0]), std::optional<std::uint64_t>(0));
}

TEST(Mphf, EmptyFunctionRejectsEverything) {
  const Mphf f = mphf_build(std::vector<TokenFingerprint>{});
  EXPECT_EQ(f.size(), 0u);
  for (std::uint32_t k = 0; k < 1000; ++k) {
    EXPECT_FALSE(f.evaluate(TokenFingerprint{k * 7919u}).has_value());
  }
  EXPECT_FALSE(Mphf().evaluate(TokenFingerprint{1}).has_value());
}

TEST(Mphf, RejectsDuplicatesAndBadGamma) {
  const std::vector<TokenFingerprint> dup{TokenFingerprint{5}, TokenFingerprint{9}, TokenFingerprint{5}};
  EXPECT_THROW((void)mphf_build(dup), std::invalid_argument);
  EXPECT_THROW((void)mphf_build(random_keys(10, 1), 0.5), std::invalid_argument);
}

TEST(Mphf, DeterministicAcrossInputOrder) {
  auto keys = random_keys(50000, 7);
  const Mphf a = mphf_build(keys);
  std::mt19937_64 rng(8);
  std::shuffle(keys.begin(), keys.end(), rng);
  const Mphf b = mphf_build(keys);
  EXPECT_EQ(a.bytes(), b.bytes());
}

TEST(Mphf, SpaceAtMostEightBitsPerKey) {
  for (std::size_t n : {std::size_t{10000}, std::size_t{100000}, std::size_t{1000000}}) {
    const Mphf f = mphf_build(random_keys(n, n));
    const double bits_per_key = 8.0 * static_cast<double>(f.bytes().size()) / static_cast<double>(n);
    EXPECT_LE(bits_per_key, 8.0) << n;
    EXPECT_LE(f.view().level_bits(), 8 * n);
  }
}

TEST(Mphf, OtherGammasStillBijective) {
  const auto keys = random_keys(20000, 55);
  for (double gamma : {1.0, 1.5, 3.0, 5.0}) {
    expect_bijection(mphf_build(keys, gamma), keys);
  }
}

TEST(Mphf, AlienKeysLandInRangeOrAbsent) {
  const auto keys = random_keys(100000, 21);
  const Mphf f = mphf_build(keys);
  const std::unordered_set<std::uint32_t> key_set = [&] {
    std::unordered_set<std::uint32_t> s;
    for (auto k : keys) {
      s.insert(k.value);
    }
    return s;
  }();
  std::mt19937_64 rng(22);
  std::size_t absent = 0;
  std::size_t probes = 0;
  while (probes < 100000) {
    const auto k = static_cast<std::uint32_t>(rng());
    if (key_set.count(k)) {
      continue;
    }
    ++probes;
    const auto idx = f.evaluate(TokenFingerprint{k});
    if (!idx) {
      ++absent;
    } else {
      ASSERT_LT(*idx, keys.size());
    }
  }
  EXPECT_GT(absent, 0u);
  EXPECT_LT(absent, probes);
}

TEST(Mphf, AdversarialKeysReachFallback) {
  // With gamma 1 and tiny levels, a few keys can survive all levels; they
  // must still be mapped through the fallback table.
  std::size_t with_fallback = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto keys = random_keys(3, seed);
    const Mphf f = mphf_build(keys, 1.0);
    expect_bijection(f, keys);
    with_fallback += f.view().fallback_count() > 0 ? 1 : 0;
    EXPECT_LE(f.view().level_count(), kMphfMaxLevels);
  }
  SUCCEED() << with_fallback << " builds used the fallback table";
}

TEST(Mphf, TruncatedSectionFailsValidation) {
  const Mphf f = mphf_build(random_keys(5000, 3));
  const Bytes& bytes = f.bytes();
  for (std::size_t cut : {std::size_t{8}, std::size_t{40}, bytes.size() / 2, bytes.size() - 1}) {
    const MphfView view(ByteView(bytes.data(), cut));
    EXPECT_THROW(view.validate(), std::out_of_range) << cut;
  }
}

TEST(Mphf, LevelSeedsDiffer) {
  std::unordered_set<std::uint64_t> seeds;
  for (std::uint32_t l = 0; l < kMphfMaxLevels; ++l) {
    seeds.insert(mphf_level_seed(l));
  }
  EXPECT_EQ(seeds.size(), kMphfMaxLevels);
}

TEST(Mphf, CopyAndMoveKeepViewsValid) {
  const auto keys = random_keys(1000, 4);
  Mphf a = mphf_build(keys);
  const Mphf b = a;  // NOLINT(performance-unnecessary-copy-initialization)
  Mphf c = std::move(a);
  expect_bijection(b, keys);
  expect_bijection(c, keys);
  c = b;
  expect_bijection(c, keys);
}

}  // namespace
}  // namespace dynawarp
