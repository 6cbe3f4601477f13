#include <gtest/gtest.h>
#include <sys/mman.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <random>
#include <set>
#include <unordered_set>

#include "dynawarp/sketch_file.hpp"
#include "test_util.hpp"

namespace dynawarp {
namespace {

using testing::OracleIndex;
using Kind = SketchFormatError::Kind;

auto reader_postings(const SketchReader& r, TokenFingerprint fp) -> std::optional<std::vector<PostingId>> {
  const auto id = r.is_present(fp);
  if (!id) {
    return std::nullopt;
  }
  return r.decode_list(*id);
}

auto format_error_kind(ByteView bytes) -> std::optional<Kind> {
  try {
    SketchReader r(bytes);
  } catch (const SketchFormatError& e) {
    return e.kind();
  }
  return std::nullopt;
}

void reseal_header(Bytes& bytes) {
  const std::uint64_t sum = header_checksum(ByteView(bytes.data(), 152));
  std::memcpy(bytes.data() + 152, &sum, 8);
}

// ---- rank codes ----------------------------------------------------------

TEST(RankCode, WidthsAndBits) {
  EXPECT_EQ(rank_code_width(0), 1u);
  EXPECT_EQ(rank_code_width(1), 1u);
  EXPECT_EQ(rank_code_width(2), 2u);
  EXPECT_EQ(rank_code_width(3), 3u);
  EXPECT_EQ(rank_code_width(4), 3u);
  EXPECT_EQ(rank_code_width(5), 4u);
  BitWriter w;
  w.write(0, rank_code_width(0));
  w.write(1, rank_code_width(1));
  w.write(2, rank_code_width(2));
  w.write(5, rank_code_width(5));
  ASSERT_EQ(w.bit_length(), 8u);
  EXPECT_EQ(w.bytes()[0], 0b0'1'10'0101);
  // Every rank fits its width.
  for (std::uint64_t r = 0; r < 100000; ++r) {
    ASSERT_LT(r, std::uint64_t{1} << rank_code_width(r));
  }
}

// ---- four-line example ---------------------------------------------------

TEST(ImmutableSketch, ExampleRoundTrip) {
  const MutableSketch m = testing::example_sketch();
  SketchBuildConfig cfg;
  cfg.signature_bits = 8;
  cfg.sample_interval = 4;
  const Bytes bytes = build_sketch(m, cfg);
  const SketchReader r(bytes);
  const SketchHeader& h = r.header();
  EXPECT_EQ(h.n_tokens, 11u);
  EXPECT_EQ(h.capacity, 16u);
  EXPECT_EQ(h.signature_bits, 8);
  EXPECT_EQ(h.sample_interval, 4u);
  EXPECT_FALSE(h.temporary());
  // {0,1,3}, {0,2} plus singletons {0}, {1}, {2}, {3}.
  EXPECT_EQ(h.n_lists, 6u);
  const auto info = r.is_present(fingerprint("info"));
  ASSERT_TRUE(info.has_value());
  EXPECT_EQ(r.decode_list(*info), (std::vector<PostingId>{0, 1, 3}));
  EXPECT_EQ(r.is_present(fingerprint("connection")), r.is_present(fingerprint("host")));
  EXPECT_EQ(reader_postings(r, fingerprint("host")), (std::vector<PostingId>{0, 2}));
  EXPECT_EQ(reader_postings(r, fingerprint("start")), (std::vector<PostingId>{1}));
  // Five lists are referenced twice; ties go to the smaller first posting,
  // then the smaller cardinality, so {0} precedes {0, 2}.
  EXPECT_EQ(r.decode_list(0), (std::vector<PostingId>{0}));
  EXPECT_EQ(*r.is_present(fingerprint("host")), 1u);
  EXPECT_EQ(r.decode_list(5), (std::vector<PostingId>{0, 1, 3}));
  EXPECT_NO_THROW(r.validate());
}

TEST(ImmutableSketch, ListCountMatchesDistinctSetsOfExample) {
  OracleIndex oracle;
  for (std::size_t i = 0; i < testing::kExampleLines.size(); ++i) {
    for (const std::string& w : testing::words(testing::kExampleLines[i])) {
      testing::oracle_add(oracle, fingerprint(w), static_cast<PostingId>(i));
    }
  }
  const Bytes file = build_sketch(testing::example_sketch());
  const SketchReader r(file);
  EXPECT_EQ(r.header().n_lists, testing::distinct_sets(oracle));
}

TEST(ImmutableSketch, EmptySketch) {
  const Bytes bytes = build_sketch(MutableSketch(10));
  const SketchReader r(bytes);
  EXPECT_EQ(r.header().n_tokens, 0u);
  EXPECT_EQ(r.header().n_lists, 0u);
  for (std::size_t s = 1; s < kSketchSectionCount; ++s) {
    EXPECT_EQ(r.header().sections[s].length, 0u) << s;
  }
  EXPECT_FALSE(r.is_present(fingerprint("anything")).has_value());
  EXPECT_THROW((void)r.decode_list(0), std::out_of_range);
  EXPECT_NO_THROW(r.validate());
}

// ---- header validation ---------------------------------------------------

TEST(ImmutableSketch, HeaderFitsInOnePage) {
  OracleIndex oracle;
  const Bytes bytes = build_sketch(testing::random_sketch(5000, 512, 2000, 1, oracle));
  const SketchReader r(bytes);
  EXPECT_LE(kSketchHeaderSize, 4096u);
  std::uint64_t end = kSketchHeaderSize;
  for (const SectionRange& s : r.header().sections) {
    EXPECT_GE(s.offset, end);
    EXPECT_EQ(s.offset % 8, 0u);
    end = s.offset + s.length;
  }
  EXPECT_LE(end, bytes.size());
}

TEST(ImmutableSketch, CorruptionKinds) {
  const Bytes good = build_sketch(testing::example_sketch());
  ASSERT_FALSE(format_error_kind(good).has_value());

  EXPECT_EQ(format_error_kind(ByteView(good.data(), 100)), Kind::kBounds);
  EXPECT_EQ(format_error_kind(ByteView(good.data(), good.size() - 8)), Kind::kBounds);

  Bytes magic = good;
  magic[0] = 'X';
  EXPECT_EQ(format_error_kind(magic), Kind::kBadMagic);

  Bytes version = good;
  version[4] = 9;
  EXPECT_EQ(format_error_kind(version), Kind::kBadVersion);

  for (std::size_t at : {std::size_t{8}, std::size_t{24}, std::size_t{28}, std::size_t{60}, std::size_t{151}}) {
    Bytes flipped = good;
    flipped[at] ^= 0x10;
    EXPECT_EQ(format_error_kind(flipped), Kind::kBadChecksum) << at;
  }

  // A consistent checksum over a section pointing past the end.
  Bytes bounds = good;
  const std::uint64_t far = good.size() + 64;
  std::memcpy(bounds.data() + 40 + 16 * 6, &far, 8);
  reseal_header(bounds);
  EXPECT_EQ(format_error_kind(bounds), Kind::kBounds);

  // Overlapping sections.
  Bytes overlap = good;
  std::uint64_t mphf_offset;
  std::memcpy(&mphf_offset, good.data() + 40, 8);
  std::memcpy(overlap.data() + 40 + 16, &mphf_offset, 8);
  reseal_header(overlap);
  EXPECT_EQ(format_error_kind(overlap), Kind::kBounds);
}

TEST(ImmutableSketch, OpeningTouchesOnlyTheHeader) {
  OracleIndex oracle;
  const Bytes bytes = build_sketch(testing::random_sketch(20000, 1024, 8000, 2, oracle));
  const auto page = static_cast<std::size_t>(sysconf(_SC_PAGESIZE));
  ASSERT_GE(page, kSketchHeaderSize);
  // Lay the file out so the header ends exactly at a page boundary and
  // everything after it sits on inaccessible pages.
  const std::size_t body_pages = (bytes.size() - kSketchHeaderSize + page - 1) / page;
  const std::size_t total = page * (1 + body_pages);
  void* region = mmap(nullptr, total, PROT_READ | PROT_WRITE, MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
  ASSERT_NE(region, MAP_FAILED);
  auto* base = static_cast<std::uint8_t*>(region);
  std::uint8_t* file = base + page - kSketchHeaderSize;
  std::memcpy(file, bytes.data(), bytes.size());
  ASSERT_EQ(mprotect(base + page, total - page, PROT_NONE), 0);

  const ByteView view(file, bytes.size());
  std::optional<SketchReader> reader;
  // Faults here would kill the test process.
  reader.emplace(view);
  EXPECT_EQ(reader->header().n_tokens, bytes.size() > 0 ? SketchReader(bytes).header().n_tokens : 0);

  ASSERT_EQ(mprotect(base + page, total - page, PROT_READ), 0);
  for (const auto& [key, postings] : oracle) {
    ASSERT_EQ(reader_postings(*reader, TokenFingerprint{key}), postings);
  }
  munmap(region, total);
}

// ---- oracle equality -------------------------------------------------------

TEST(ImmutableSketch, RandomCorporaRoundTripExactly) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    OracleIndex oracle;
    const MutableSketch m = testing::random_sketch(60000, 2048, 15000, seed, oracle);
    SketchBuildConfig cfg;
    cfg.sample_interval = static_cast<std::uint32_t>(1 + seed * 17);
    const Bytes bytes = build_sketch(m, cfg);
    const SketchReader r(bytes);
    ASSERT_NO_THROW(r.validate());
    ASSERT_EQ(r.header().n_tokens, oracle.size());
    ASSERT_EQ(r.header().n_lists, testing::distinct_sets(oracle));
    for (const auto& [key, postings] : oracle) {
      ASSERT_EQ(reader_postings(r, TokenFingerprint{key}), postings);
      ASSERT_EQ(m.get_postings(TokenFingerprint{key}), postings);
    }
  }
}

TEST(ImmutableSketch, RankOrderAndStableDecode) {
  OracleIndex oracle;
  const MutableSketch m = testing::random_sketch(50000, 1024, 10000, 9, oracle);
  const Bytes file = build_sketch(m);
  const SketchReader r(file);
  std::vector<std::uint64_t> refs(r.header().n_lists, 0);
  for (std::uint64_t i = 0; i < r.header().n_tokens; ++i) {
    ++refs[r.rank_at(i)];
  }
  for (std::size_t k = 1; k < refs.size(); ++k) {
    ASSERT_GE(refs[k - 1], refs[k]) << k;
  }
  EXPECT_GE(refs[0], *std::max_element(refs.begin(), refs.end()));
  for (std::uint64_t id = 0; id < r.header().n_lists; id += 37) {
    ASSERT_EQ(r.decode_list(id), r.decode_list(id));
    ASSERT_EQ(r.decode_list(id).size(), r.list_cardinality(id));
  }
  EXPECT_THROW((void)r.decode_list(r.header().n_lists), std::out_of_range);
}

TEST(ImmutableSketch, RankDecodeReproducesBuildAssignment) {
  OracleIndex oracle;
  const MutableSketch m = testing::random_sketch(30000, 1000, 7000, 13, oracle);
  SketchBuildConfig cfg;
  cfg.temporary = true;  // full fingerprints make index -> token recoverable
  cfg.sample_interval = 5;
  const Bytes file = build_sketch(m, cfg);
  const SketchReader r(file);
  // The rank of each token's set, derived independently from the oracle.
  std::map<std::vector<PostingId>, std::uint64_t> refs;
  for (const auto& [key, postings] : oracle) {
    ++refs[postings];
  }
  for (std::uint64_t i = 0; i < r.header().n_tokens; ++i) {
    const std::uint32_t key = r.signature_at(i);
    const std::uint64_t rank = r.rank_at(i);
    ASSERT_EQ(r.decode_list(rank), oracle.at(key));
    ASSERT_EQ(r.is_present(TokenFingerprint{key}), rank);
  }
  // Ranks group by popularity: a list referenced by more tokens never ranks
  // after a less popular one.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> by_rank;
  for (const auto& [postings, count] : refs) {
    const std::uint32_t any_key = [&] {
      for (const auto& [key, p] : oracle) {
        if (p == postings) {
          return key;
        }
      }
      return 0u;
    }();
    by_rank.emplace_back(*r.is_present(TokenFingerprint{any_key}), count);
    if (by_rank.size() > 300) {
      break;
    }
  }
  std::sort(by_rank.begin(), by_rank.end());
  for (std::size_t k = 1; k < by_rank.size(); ++k) {
    ASSERT_GE(by_rank[k - 1].second, by_rank[k].second);
  }
}

TEST(ImmutableSketch, BuildIsDeterministic) {
  std::mt19937_64 rng(5);
  std::vector<std::pair<TokenFingerprint, PostingId>> pairs;
  for (int i = 0; i < 30000; ++i) {
    pairs.emplace_back(TokenFingerprint{static_cast<std::uint32_t>(rng() % 5000) * 2654435761u},
                       static_cast<PostingId>(rng() % 300));
  }
  MutableSketch a(300);
  for (const auto& [f, p] : pairs) {
    a.add(f, p);
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  MutableSketch b(300);
  for (const auto& [f, p] : pairs) {
    b.add(f, p);
  }
  EXPECT_EQ(build_sketch(a), build_sketch(b));
  EXPECT_EQ(build_sketch(a), build_sketch(a));
}

TEST(ImmutableSketch, BuildRejectsBadConfig) {
  const MutableSketch m = testing::example_sketch();
  SketchBuildConfig bad_bits;
  bad_bits.signature_bits = 33;
  EXPECT_THROW((void)build_sketch(m, bad_bits), std::invalid_argument);
  SketchBuildConfig bad_interval;
  bad_interval.sample_interval = 0;
  EXPECT_THROW((void)build_sketch(m, bad_interval), std::invalid_argument);
  SketchBuildConfig small_capacity;
  small_capacity.capacity = 3;  // posting 3 is stored
  EXPECT_THROW((void)build_sketch(m, small_capacity), std::invalid_argument);
  SketchBuildConfig exact_capacity;
  exact_capacity.capacity = 4;
  const Bytes exact = build_sketch(m, exact_capacity);
  EXPECT_EQ(SketchReader(exact).header().capacity, 4u);
}

// ---- signatures ----------------------------------------------------------

auto alien_acceptance(const SketchReader& r, const std::unordered_set<std::uint32_t>& keys,
                      std::size_t probes, std::uint64_t seed) -> double {
  std::mt19937_64 rng(seed);
  std::size_t accepted = 0;
  std::size_t done = 0;
  while (done < probes) {
    const auto k = static_cast<std::uint32_t>(rng());
    if (keys.count(k)) {
      continue;
    }
    ++done;
    accepted += r.is_present(TokenFingerprint{k}).has_value() ? 1 : 0;
  }
  return static_cast<double>(accepted) / static_cast<double>(probes);
}

TEST(ImmutableSketch, AlienAcceptanceWithEightBitSignatures) {
  OracleIndex oracle;
  const MutableSketch m = testing::random_sketch(200000, 4096, 60000, 3, oracle);
  std::unordered_set<std::uint32_t> keys;
  for (const auto& [key, _] : oracle) {
    keys.insert(key);
  }
  SketchBuildConfig cfg;
  cfg.signature_bits = 8;
  const Bytes file = build_sketch(m, cfg);
  const SketchReader r(file);
  const double rate = alien_acceptance(r, keys, 100000, 4);
  EXPECT_GE(rate, 1.0 / 256 / 4);
  EXPECT_LE(rate, 4.0 / 256);
}

TEST(ImmutableSketch, SignatureBitsScaleAcceptance) {
  OracleIndex oracle;
  const MutableSketch m = testing::random_sketch(200000, 4096, 60000, 5, oracle);
  std::unordered_set<std::uint32_t> keys;
  for (const auto& [key, _] : oracle) {
    keys.insert(key);
  }
  std::vector<double> rates;
  for (std::uint8_t b : {4, 8, 12}) {
    SketchBuildConfig cfg;
    cfg.signature_bits = b;
    const Bytes file = build_sketch(m, cfg);
    const SketchReader r(file);
    rates.push_back(alien_acceptance(r, keys, 1000000, 6));
  }
  // Each +4 bits divides the rate by 16, within a x4 band.
  for (std::size_t k = 1; k < rates.size(); ++k) {
    ASSERT_GT(rates[k], 0.0);
    const double factor = rates[k - 1] / rates[k];
    EXPECT_GE(factor, 16.0 / 4) << k;
    EXPECT_LE(factor, 16.0 * 4) << k;
  }
}

TEST(ImmutableSketch, TemporaryFileRejectsAliensByFullFingerprint) {
  OracleIndex oracle;
  const MutableSketch m = testing::random_sketch(50000, 1024, 20000, 8, oracle);
  std::unordered_set<std::uint32_t> keys;
  for (const auto& [key, _] : oracle) {
    keys.insert(key);
  }
  SketchBuildConfig cfg;
  cfg.temporary = true;
  const Bytes file = build_sketch(m, cfg);
  const SketchReader r(file);
  EXPECT_TRUE(r.header().temporary());
  EXPECT_EQ(r.header().signature_width(), 32u);
  EXPECT_EQ(alien_acceptance(r, keys, 200000, 9), 0.0);
}

// ---- merge ---------------------------------------------------------------

TEST(ImmutableSketch, MergeOfOneSegmentAnswersIdentically) {
  OracleIndex oracle;
  const MutableSketch m = testing::random_sketch(20000, 512, 5000, 10, oracle);
  SketchBuildConfig cfg;
  cfg.temporary = true;
  const Bytes bytes = build_sketch(m, cfg);
  const SketchReader r(bytes);
  const SketchReader* readers[] = {&r};
  const MutableSketch merged = merge_segments(readers);
  EXPECT_EQ(merged.check_invariants(), "");
  for (const auto& [key, postings] : oracle) {
    ASSERT_EQ(merged.get_postings(TokenFingerprint{key}), postings);
  }
}

TEST(ImmutableSketch, MergedFlushesEqualSinglePassBuild) {
  std::mt19937_64 rng(11);
  const std::uint32_t capacity = 1000;
  std::vector<std::pair<TokenFingerprint, PostingId>> stream;
  for (int i = 0; i < 80000; ++i) {
    // Postings advance with the stream, as batches do during ingest.
    const auto p = static_cast<PostingId>(std::min<std::uint32_t>(capacity - 1, static_cast<std::uint32_t>(i / 80)));
    const double u = std::uniform_real_distribution<double>(0, 1)(rng);
    stream.emplace_back(TokenFingerprint{static_cast<std::uint32_t>(mix64(static_cast<std::uint64_t>(20000 * u * u)))}, p);
  }
  MutableSketch whole(capacity);
  for (const auto& [f, p] : stream) {
    whole.add(f, p);
  }
  SketchBuildConfig temp;
  temp.temporary = true;
  std::vector<Bytes> files;
  const std::size_t parts = 4;
  for (std::size_t k = 0; k < parts; ++k) {
    // Uneven cut points; a posting may straddle two parts.
    const std::size_t lo = stream.size() * k * k / (parts * parts);
    const std::size_t hi = stream.size() * (k + 1) * (k + 1) / (parts * parts) + (k + 1 < parts ? 7 : 0);
    MutableSketch part(capacity);
    for (std::size_t i = lo; i < std::min(hi, stream.size()); ++i) {
      part.add(stream[i].first, stream[i].second);
    }
    files.push_back(build_sketch(part, temp));
  }
  std::vector<SketchReader> readers;
  for (const Bytes& f : files) {
    readers.emplace_back(f);
  }
  std::vector<const SketchReader*> ptrs;
  for (const SketchReader& r : readers) {
    ptrs.push_back(&r);
  }
  const MutableSketch merged = merge_segments(ptrs);
  EXPECT_EQ(merged.check_invariants(), "");
  EXPECT_EQ(merged.token_count(), whole.token_count());
  EXPECT_EQ(merged.stats().list_count, whole.stats().list_count);
  whole.for_each_token([&](TokenFingerprint f, TokenMapValue) {
    ASSERT_EQ(merged.get_postings(f), whole.get_postings(f));
  });
  // Same token -> set mapping, so the final files are bit-identical.
  EXPECT_EQ(build_sketch(merged), build_sketch(whole));
}

TEST(ImmutableSketch, MergeOfDisjointSegmentsAddsTokenCounts) {
  SketchBuildConfig temp;
  temp.temporary = true;
  MutableSketch a(64);
  MutableSketch b(64);
  for (std::uint32_t i = 0; i < 500; ++i) {
    a.add(TokenFingerprint{i}, static_cast<PostingId>(i % 64));
    a.add(TokenFingerprint{i}, static_cast<PostingId>((i * 7) % 64));
    b.add(TokenFingerprint{100000 + i}, static_cast<PostingId>(i % 13));
  }
  const Bytes fa = build_sketch(a, temp);
  const Bytes fb = build_sketch(b, temp);
  const SketchReader ra(fa);
  const SketchReader rb(fb);
  const SketchReader* readers[] = {&ra, &rb};
  EXPECT_EQ(merge_segments(readers).token_count(), a.token_count() + b.token_count());
}

TEST(ImmutableSketch, MergeRejectsBadInputs) {
  const MutableSketch m = testing::example_sketch();
  const Bytes final_file = build_sketch(m);
  SketchBuildConfig temp;
  temp.temporary = true;
  const Bytes temp_file = build_sketch(m, temp);
  temp.capacity = 8;
  const Bytes other_capacity = build_sketch(m, temp);
  const SketchReader rf(final_file);
  const SketchReader rt(temp_file);
  const SketchReader ro(other_capacity);
  const SketchReader* not_temporary[] = {&rt, &rf};
  EXPECT_THROW((void)merge_segments(not_temporary), std::invalid_argument);
  const SketchReader* mismatch[] = {&rt, &ro};
  EXPECT_THROW((void)merge_segments(mismatch), std::invalid_argument);
}

}  // namespace
}  // namespace dynawarp
