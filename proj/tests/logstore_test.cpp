#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "dynawarp/compression.hpp"
#include "dynawarp/corpus.hpp"
#include "dynawarp/segment.hpp"
#include "dynawarp/tokenizer.hpp"
#include "test_util.hpp"

namespace dynawarp {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

auto build(const fs::path& dir, const std::vector<std::string>& lines, StoreConfig cfg = {}) -> SegmentSummary {
  SegmentWriter w(dir, cfg);
  for (const std::string& l : lines) {
    w.ingest(l);
  }
  return w.finish();
}

auto build(const fs::path& dir, const std::vector<LogRecord>& records, StoreConfig cfg = {}) -> SegmentSummary {
  SegmentWriter w(dir, cfg);
  for (const LogRecord& r : records) {
    w.ingest(r);
  }
  return w.finish();
}

auto slurp(const fs::path& p) -> std::string {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

auto lines_of(const QueryResult& r) -> std::vector<std::string> {
  std::vector<std::string> out;
  for (const Match& m : r.matches) {
    out.push_back(m.line);
  }
  return out;
}

TEST(Segment, ExampleOneLinePerBatch) {
  TempDir tmp;
  StoreConfig cfg;
  cfg.batch_lines = 1;
  const SegmentSummary s = build(tmp / "seg", testing::kExampleLines, cfg);
  EXPECT_EQ(s.lines, 4u);
  EXPECT_EQ(s.batches, 4u);
  EXPECT_EQ(s.flushes, 0u);

  const Segment seg(tmp / "seg");
  EXPECT_EQ(seg.batch_count(), 4u);
  const QueryResult info = seg.query_term("info");
  EXPECT_EQ(lines_of(info), (std::vector<std::string>{testing::kExampleLines[0], testing::kExampleLines[1],
                                                      testing::kExampleLines[3]}));
  EXPECT_EQ(info.stats.candidate_batches, 3u);
  EXPECT_EQ(info.stats.false_positive_batches, 0u);
  // "start" is a whole token of line 1 only; "Restart" does not match.
  const QueryResult start = seg.query_term("start");
  ASSERT_EQ(start.matches.size(), 1u);
  EXPECT_EQ(start.matches[0].posting, 1);
  // Substring search does match inside "Restart".
  EXPECT_EQ(seg.query_contains("start").matches.size(), 2u);
  EXPECT_EQ(seg.query_term("HOST").matches.size(), 2u);
}

TEST(Segment, AbsentTermDecompressesNothing) {
  TempDir tmp;
  StoreConfig cfg;
  cfg.batch_lines = 1;
  build(tmp / "seg", testing::kExampleLines, cfg);
  const Segment seg(tmp / "seg");
  const QueryResult r = seg.query_term("lamhmiagiialitjq");
  EXPECT_TRUE(r.matches.empty());
  EXPECT_EQ(r.stats.decompressed_batches, 0u);
  const QueryResult c = seg.query_contains("lamhmiagiialitjq");
  EXPECT_EQ(c.stats.decompressed_batches, 0u);
}

TEST(Segment, EmptyStoreIsValid) {
  TempDir tmp;
  const SegmentSummary s = build(tmp / "seg", std::vector<std::string>{});
  EXPECT_EQ(s.batches, 0u);
  const Segment seg(tmp / "seg");
  EXPECT_EQ(seg.batch_count(), 0u);
  EXPECT_TRUE(seg.query_term("info").matches.empty());
  EXPECT_TRUE(seg.scan_query("info").matches.empty());
  EXPECT_EQ(seg.error_rate(plan_term("info")), 0.0);
}

TEST(Segment, FinishIsTerminal) {
  TempDir tmp;
  SegmentWriter w(tmp / "seg", StoreConfig{});
  w.ingest("hello world");
  (void)w.finish();
  EXPECT_TRUE(w.finished());
  EXPECT_THROW((void)w.finish(), std::logic_error);
  EXPECT_THROW(w.ingest("more"), std::logic_error);
}

TEST(Segment, FullSegmentRejectsNewBatch) {
  TempDir tmp;
  StoreConfig cfg;
  cfg.capacity = 3;
  cfg.batch_lines = 2;
  SegmentWriter w(tmp / "seg", cfg);
  for (int i = 0; i < 6; ++i) {
    w.ingest("line " + std::to_string(i));
  }
  EXPECT_THROW(w.ingest("overflow"), SegmentFullError);
  const SegmentSummary s = w.finish();
  EXPECT_EQ(s.lines, 6u);
  EXPECT_EQ(s.batches, 3u);
  const Segment seg(tmp / "seg");
  EXPECT_TRUE(seg.query_contains("overflow").matches.empty());
}

TEST(Segment, EmbeddedNewlinesSplitLines) {
  TempDir tmp;
  StoreConfig cfg;
  cfg.batch_lines = 1;
  build(tmp / "seg", std::vector<std::string>{"alpha one\nbeta two\n"}, cfg);
  const Segment seg(tmp / "seg");
  EXPECT_EQ(seg.batch_count(), 2u);
  EXPECT_EQ(seg.batch_lines(1), (std::vector<std::string>{"beta two"}));
}

TEST(Segment, BatchesHoldLinesInOrder) {
  TempDir tmp;
  StoreConfig cfg;
  cfg.batch_lines = 3;
  const auto records = generate_corpus(100, 11);
  build(tmp / "seg", records, cfg);
  const Segment seg(tmp / "seg");
  ASSERT_EQ(seg.batch_count(), 34u);
  std::size_t i = 0;
  for (PostingId p = 0; p < seg.batch_count(); ++p) {
    for (const std::string& l : seg.batch_lines(p)) {
      ASSERT_EQ(l, records[i++].line);
    }
  }
  EXPECT_EQ(i, records.size());
  EXPECT_EQ(seg.manifest().total_lines, 100u);
}

TEST(Segment, SketchAnswersEqualScans) {
  TempDir tmp;
  StoreConfig cfg;
  cfg.batch_lines = 64;
  const auto records = generate_corpus(20000, 12);
  build(tmp / "seg", records, cfg);
  const Segment seg(tmp / "seg");

  std::mt19937_64 rng(13);
  std::size_t pruned = 0;
  for (int q = 0; q < 120; ++q) {
    const std::string& line = records[rng() % records.size()].line;
    const std::size_t b = rng() % line.size();
    const std::size_t len = 1 + rng() % std::min<std::size_t>(20, line.size() - b);
    const std::string needle = line.substr(b, len);
    const QueryResult fast = seg.query_contains(needle);
    const QueryResult slow = seg.scan_query(needle);
    ASSERT_EQ(fast.matches, slow.matches) << needle;
    ASSERT_FALSE(fast.matches.empty());
    pruned += fast.stats.decompressed_batches < slow.stats.decompressed_batches ? 1 : 0;

    const std::vector<std::string> terms = tokenize(line);
    const std::string& term = terms[rng() % terms.size()];
    const QueryResult tf = seg.query_term(term);
    const QueryResult ts = seg.scan_term(term);
    ASSERT_EQ(tf.matches, ts.matches) << term;
  }
  EXPECT_GT(pruned, 40u);

  for (const std::string& id : random_ids(50, 14)) {
    const QueryResult r = seg.query_contains(id);
    EXPECT_EQ(r.matches, seg.scan_query(id).matches);
  }
}

TEST(Segment, MemoryLimitFlushesMatchUnlimited) {
  TempDir tmp;
  const auto records = generate_corpus(30000, 15);
  StoreConfig plain;
  plain.batch_lines = 100;
  const SegmentSummary a = build(tmp / "a", records, plain);
  StoreConfig limited = plain;
  limited.memory_limit = 1 << 20;
  const SegmentSummary b = build(tmp / "b", records, limited);
  EXPECT_EQ(a.flushes, 0u);
  EXPECT_GE(b.flushes, 3u);
  EXPECT_EQ(slurp(tmp / "a" / std::string(kSketchFile)), slurp(tmp / "b" / std::string(kSketchFile)));
  EXPECT_EQ(slurp(tmp / "a" / std::string(kBatchFile)), slurp(tmp / "b" / std::string(kBatchFile)));
  EXPECT_TRUE(fs::is_empty(tmp.path() / "b") == false);
  for (const auto& entry : fs::directory_iterator(tmp / "b")) {
    EXPECT_NE(entry.path().extension(), ".tmp") << entry.path();
  }
}

TEST(Segment, DeterministicFiles) {
  TempDir tmp;
  const auto records = generate_corpus(5000, 16);
  build(tmp / "a", records);
  build(tmp / "b", records);
  for (std::string_view f : {kSketchFile, kBatchFile, kManifestFile}) {
    EXPECT_EQ(slurp(tmp / "a" / std::string(f)), slurp(tmp / "b" / std::string(f))) << f;
  }
}

TEST(Segment, ErrorRateCountsFalsePositiveBatches) {
  TempDir tmp;
  StoreConfig cfg;
  cfg.batch_lines = 1;
  build(tmp / "seg", testing::kExampleLines, cfg);
  const Segment seg(tmp / "seg");
  EXPECT_EQ(seg.error_rate(plan_term("info")), 0.0);
  // Every batch is a candidate of a scan; only batch 1 holds "processing".
  QueryPlan scan = plan_contains("processing");
  scan.mode = QueryPlan::Mode::kScan;
  scan.tokens.clear();
  EXPECT_DOUBLE_EQ(seg.error_rate(scan), 0.75);
}

TEST(Segment, GroupBySourceKeepsSourcesApart) {
  TempDir tmp;
  StoreConfig cfg;
  cfg.group_by_source = true;
  cfg.batch_lines = 2;
  SegmentWriter w(tmp / "seg", cfg);
  w.ingest("a1 alpha", "A");
  w.ingest("b1 beta", "B");
  w.ingest("a2 alpha", "A");
  w.ingest("b2 beta", "B");
  w.ingest("a3 alpha", "A");
  (void)w.finish();
  const Segment seg(tmp / "seg");
  ASSERT_EQ(seg.batch_count(), 3u);
  EXPECT_EQ(seg.batch_lines(0), (std::vector<std::string>{"a1 alpha", "a2 alpha"}));
  EXPECT_EQ(seg.batch_lines(1), (std::vector<std::string>{"b1 beta", "b2 beta"}));
  EXPECT_EQ(seg.batch_lines(2), (std::vector<std::string>{"a3 alpha"}));
  EXPECT_EQ(seg.query_term("beta").stats.candidate_batches, 1u);
}

TEST(Segment, LruSealsOldestSource) {
  TempDir tmp;
  StoreConfig cfg;
  cfg.group_by_source = true;
  cfg.max_open_sources = 2;
  SegmentWriter w(tmp / "seg", cfg);
  w.ingest("x", "A");
  w.ingest("y", "B");
  w.ingest("x again", "A");
  w.ingest("z", "C");  // seals B
  w.ingest("y again", "B");
  (void)w.finish();
  const Segment seg(tmp / "seg");
  ASSERT_EQ(seg.batch_count(), 4u);
  EXPECT_EQ(seg.batch_lines(1), (std::vector<std::string>{"y"}));
  EXPECT_EQ(seg.batch_lines(3), (std::vector<std::string>{"y again"}));
}

TEST(Segment, DamagedFilesAreRejected) {
  TempDir tmp;
  build(tmp / "seg", testing::kExampleLines);
  fs::remove(tmp / "seg" / std::string(kSketchFile));
  EXPECT_ANY_THROW(Segment(tmp / "seg"));
  EXPECT_ANY_THROW(Segment(tmp / "missing"));
}

TEST(Compression, RoundTripBothCodecs) {
  std::mt19937_64 rng(17);
  for (Codec codec : {Codec::kNone, Codec::kZstd}) {
    for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{1000}, std::size_t{200000}}) {
      std::string data;
      for (std::size_t i = 0; i < n; ++i) {
        data.push_back(static_cast<char>('a' + rng() % 4));
      }
      const Bytes frame = compress(data, codec);
      std::string out;
      decompress(frame, codec, data.size(), out);
      EXPECT_EQ(out, data);
      if (codec == Codec::kZstd && n == 200000) {
        EXPECT_LT(frame.size(), n / 2);
      }
    }
  }
  EXPECT_EQ(parse_codec(codec_name(Codec::kZstd)), Codec::kZstd);
  EXPECT_EQ(parse_codec("none"), Codec::kNone);
  EXPECT_THROW((void)parse_codec("lz4"), std::invalid_argument);
  const Bytes frame = compress("some text to compress", Codec::kZstd);
  std::string out;
  EXPECT_ANY_THROW(decompress(frame, Codec::kZstd, 3, out));
}

TEST(Manifest, SerializeParseRoundTrip) {
  Manifest m;
  m.codec = Codec::kNone;
  m.ngrams = false;
  m.capacity = 77;
  m.total_lines = 15;  // sum of the batch line counts
  for (std::uint64_t i = 0; i < 5; ++i) {
    m.batches.push_back(BatchRecord{i * 100, 100, 400 + i, static_cast<std::uint32_t>(i + 1)});
  }
  const Bytes bytes = m.serialize();
  const Manifest p = Manifest::parse(bytes);
  EXPECT_EQ(p.codec, m.codec);
  EXPECT_EQ(p.ngrams, m.ngrams);
  EXPECT_EQ(p.capacity, m.capacity);
  EXPECT_EQ(p.total_lines, m.total_lines);
  Manifest inconsistent = m;
  inconsistent.total_lines = 16;
  EXPECT_THROW((void)Manifest::parse(inconsistent.serialize()), std::runtime_error);
  ASSERT_EQ(p.batches.size(), 5u);
  EXPECT_EQ(p.batches[3].offset, 300u);
  EXPECT_EQ(p.batches[3].uncompressed_size, 403u);
  EXPECT_EQ(p.batches[4].line_count, 5u);
  EXPECT_THROW((void)Manifest::parse(ByteView(bytes.data(), bytes.size() - 1)), std::runtime_error);
  Bytes bad = bytes;
  bad[0] ^= 0xff;
  EXPECT_THROW((void)Manifest::parse(bad), std::runtime_error);
}

TEST(Plan, ModesFollowNeedle) {
  EXPECT_EQ(plan_contains("lamhmiagiialitjq").mode, QueryPlan::Mode::kContains);
  EXPECT_EQ(plan_contains("ab").mode, QueryPlan::Mode::kScan);
  EXPECT_TRUE(plan_contains("ab").tokens.empty());
  const QueryPlan t = plan_term("Host-1");
  EXPECT_EQ(t.mode, QueryPlan::Mode::kTerm);
  EXPECT_EQ(t.needle, "host-1");
  EXPECT_THROW((void)plan_contains(""), std::invalid_argument);
  EXPECT_THROW((void)plan_term(""), std::invalid_argument);
  EXPECT_EQ(mode_name(QueryPlan::Mode::kContains), "contains");
}

TEST(StoreConfig, ValidateRejectsBadFields) {
  EXPECT_NO_THROW(StoreConfig{}.validate());
  StoreConfig c;
  c.capacity = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = StoreConfig{};
  c.batch_lines = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = StoreConfig{};
  c.signature_bits = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Corpus, DeterministicAndQueryParsing) {
  EXPECT_EQ(generate_corpus(200, 3)[199].line, generate_corpus(200, 3)[199].line);
  const auto records = generate_corpus(2000, 4);
  const auto queries = make_queries(records, 5, 9);
  EXPECT_FALSE(queries.empty());
  EXPECT_EQ(parse_queries(format_queries(queries)), queries);
  EXPECT_THROW((void)parse_queries("id\tfuzzy\tx\n"), std::invalid_argument);
  const auto ids = random_ids(100, 1);
  EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), 100u);
}

}  // namespace
}  // namespace dynawarp
