// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   acceptance [--only N] [--work-dir DIR]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dynawarp/bic.hpp"
#include "dynawarp/corpus.hpp"
#include "dynawarp/lookup_map.hpp"
#include "dynawarp/mphf.hpp"
#include "dynawarp/mutable_sketch.hpp"
#include "dynawarp/segment.hpp"
#include "dynawarp/sketch_file.hpp"
#include "dynawarp/tokenizer.hpp"

namespace fs = std::filesystem;
using namespace dynawarp;

namespace {

using Clock = std::chrono::steady_clock;

auto elapsed(Clock::time_point since) -> double {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass{false};
  std::string detail;
};

auto fmt(const char* f, auto... args) -> std::string {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Brute-force index straight from the input records.
using Oracle = std::unordered_map<std::uint32_t, std::vector<PostingId>>;

auto build_oracle(const std::vector<LogRecord>& records, std::uint32_t batch_lines) -> Oracle {
  Oracle oracle;
  Tokenizer tokenizer(true);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto p = static_cast<PostingId>(i / batch_lines);
    for (std::string_view t : tokenizer.tokens(records[i].line)) {
      auto& v = oracle[fingerprint(t).value];
      if (v.empty() || v.back() != p) {
        v.push_back(p);
      }
    }
  }
  return oracle;
}

auto decode_from(const SketchReader& r, std::uint32_t fp) -> std::optional<std::vector<PostingId>> {
  const auto id = r.is_present(TokenFingerprint{fp});
  if (!id) {
    return std::nullopt;
  }
  return r.decode_list(*id);
}

auto is_superset(const std::vector<PostingId>& sup, const std::vector<PostingId>& sub) -> bool {
  return std::includes(sup.begin(), sup.end(), sub.begin(), sub.end());
}

/// Shared 10^5-line fixture: records, one segment built with the default
/// rules and 128-line batches, its mutable sketch and the brute-force oracle.
struct Fixture {
  static constexpr std::size_t kLines = 100000;
  static constexpr std::uint32_t kBatchLines = 128;

  fs::path root;
  std::vector<LogRecord> records;
  Oracle oracle;
  std::optional<SegmentWriter> writer;
  SegmentSummary summary;
  std::size_t peak_memory{0};
  std::optional<Segment> segment;

  explicit Fixture(fs::path dir) : root(std::move(dir)) {
    records = generate_corpus(kLines, 2024);
    oracle = build_oracle(records, kBatchLines);
    StoreConfig cfg;
    cfg.batch_lines = kBatchLines;
    writer.emplace(root / "base", cfg);
    for (const LogRecord& r : records) {
      writer->ingest(r);
    }
    peak_memory = writer->sketch().estimate_memory();
    summary = writer->finish();
    segment.emplace(root / "base");
  }
};

// ---- 1 ----------------------------------------------------------------------

auto no_false_negatives(Fixture& fx) -> Outcome {
  const SketchReader& r = fx.segment->sketch();
  std::size_t missing = 0;
  std::size_t exact = 0;
  for (const auto& [fp, postings] : fx.oracle) {
    const auto got = decode_from(r, fp);
    if (!got || !is_superset(*got, postings)) {
      ++missing;
    } else if (*got == postings) {
      ++exact;
    }
  }

  // Term queries against a scan of the raw records.
  std::mt19937_64 rng(1);
  Tokenizer tokenizer(true);
  std::size_t term_mismatch = 0;
  const std::size_t term_queries = 200;
  for (std::size_t q = 0; q < term_queries; ++q) {
    const std::string& line = fx.records[rng() % fx.records.size()].line;
    const auto& tokens = tokenizer.top_level_tokens(line);
    const std::string term(tokens[rng() % tokens.size()]);
    const std::string needle = ascii_lowercase(term);
    std::vector<std::string> expected;
    for (const LogRecord& rec : fx.records) {
      const std::string lower = ascii_lowercase(rec.line);
      if (lower.find(needle) != std::string::npos && contains_whole_token(lower, needle)) {
        expected.push_back(rec.line);
      }
    }
    std::vector<std::string> got;
    for (const Match& m : fx.segment->query_term(term).matches) {
      got.push_back(m.line);
    }
    term_mismatch += got == expected ? 0 : 1;
  }
  return {missing == 0 && term_mismatch == 0,
          fmt("%zu lines, %zu tokens, %zu missing postings, %zu exact lists, %zu/%zu term queries differ",
              fx.records.size(), fx.oracle.size(), missing, exact, term_mismatch, term_queries)};
}

// ---- 2 ----------------------------------------------------------------------

struct AlienRates {
  double term{0};
  double contains{0};
  std::size_t accepted{0};
};

auto alien_rates(const Fixture& fx, std::uint8_t bits, const std::vector<std::string>& ids,
                 std::size_t contains_queries) -> AlienRates {
  StoreConfig cfg;
  cfg.batch_lines = Fixture::kBatchLines;
  cfg.signature_bits = bits;
  const fs::path dir = fx.root / ("bits-" + std::to_string(bits));
  {
    SegmentWriter w(dir, cfg);
    for (const LogRecord& r : fx.records) {
      w.ingest(r);
    }
    (void)w.finish();
  }
  const Segment seg(dir);
  AlienRates out;
  for (const std::string& id : ids) {
    const QueryPlan plan = plan_term(id);
    const QueryResult res = seg.execute_plan(plan);
    out.term += static_cast<double>(res.stats.false_positive_batches);
    out.accepted += res.stats.candidate_batches > 0 ? 1 : 0;
  }
  out.term /= static_cast<double>(ids.size()) * static_cast<double>(seg.batch_count());
  for (std::size_t i = 0; i < contains_queries; ++i) {
    out.contains += seg.error_rate(plan_contains(ids[i]));
  }
  out.contains /= static_cast<double>(contains_queries);
  return out;
}

auto alien_false_positives(Fixture& fx) -> Outcome {
  // Candidate IDs that occur anywhere in the corpus are dropped.
  std::vector<std::string> ids;
  for (std::string& id : random_ids(1'000'000, 77)) {
    if (!fx.oracle.contains(fingerprint(id).value)) {
      ids.push_back(std::move(id));
    }
  }
  const AlienRates b8 = alien_rates(fx, 8, ids, 10000);
  const AlienRates b12 = alien_rates(fx, 12, ids, 10000);
  const double factor = b12.term > 0 ? b8.term / b12.term : 0.0;
  const bool pass = b8.term <= 1.0 / 128 && factor >= 8 && factor <= 32;
  return {pass, fmt("%zu alien IDs; b=8 error rate %.3g (%zu accepted), b=12 %.3g (%zu accepted), factor %.1f; "
                    "contains-mode rate b=8 %.3g, b=12 %.3g",
                    ids.size(), b8.term, b8.accepted, b12.term, b12.accepted, factor, b8.contains, b12.contains)};
}

// ---- 3 ----------------------------------------------------------------------

auto dedup_effectiveness(Fixture& fx) -> Outcome {
  std::set<std::vector<PostingId>> distinct;
  std::set<std::vector<PostingId>> shared;
  for (const auto& [fp, postings] : fx.oracle) {
    distinct.insert(postings);
    if (postings.size() >= 2) {
      shared.insert(postings);
    }
  }
  const SketchStats s = fx.writer->sketch().stats();
  const SketchHeader& h = fx.segment->sketch().header();
  const double share = static_cast<double>(h.n_lists) / static_cast<double>(h.n_tokens);
  const bool pass = s.list_count == shared.size() && h.n_lists == distinct.size() &&
                    h.n_tokens == fx.oracle.size() && share <= 0.5;
  return {pass, fmt("mutable lists %llu (oracle %zu), file lists %llu (oracle %zu distinct sets), "
                    "%llu tokens, lists/tokens %.3f, dedup ratio %.3f",
                    static_cast<unsigned long long>(s.list_count), shared.size(),
                    static_cast<unsigned long long>(h.n_lists), distinct.size(),
                    static_cast<unsigned long long>(h.n_tokens), share, s.dedup_ratio)};
}

// ---- 4 ----------------------------------------------------------------------

auto needle_speedup(const fs::path& root) -> Outcome {
  const auto t0 = Clock::now();
  const fs::path dir = root / "million";
  {
    StoreConfig cfg;
    SegmentWriter w(dir, cfg);
    CorpusGenerator gen(9);
    for (std::size_t i = 0; i < 1'000'000; ++i) {
      w.ingest(gen.next());
    }
    (void)w.finish();
  }
  const double ingest_s = elapsed(t0);
  const Segment seg(dir);
  const std::vector<std::string> ids = random_ids(2000, 123);

  // Warm-up touches every batch and the sketch.
  (void)seg.scan_query(ids[0]);
  for (std::size_t i = 0; i < 100; ++i) {
    (void)seg.query_contains(ids[i]);
  }

  std::size_t sketch_matches = 0;
  auto t = Clock::now();
  for (const std::string& id : ids) {
    sketch_matches += seg.query_contains(id).matches.size();
  }
  const double sketch_qps = static_cast<double>(ids.size()) / elapsed(t);

  const std::size_t scans = 5;
  std::size_t scan_matches = 0;
  t = Clock::now();
  for (std::size_t i = 0; i < scans; ++i) {
    scan_matches += seg.scan_query(ids[i]).matches.size();
  }
  const double scan_qps = static_cast<double>(scans) / elapsed(t);
  const double speedup = sketch_qps / scan_qps;
  return {speedup >= 50 && sketch_matches == 0 && scan_matches == 0,
          fmt("%zu batches, ingest %.1f s, sketch %.0f q/s, scan %.2f q/s, speedup %.0fx", seg.batch_count(),
              ingest_s, sketch_qps, scan_qps, speedup)};
}

// ---- 5 ----------------------------------------------------------------------

auto storage_overhead(Fixture& fx) -> Outcome {
  const double ratio = static_cast<double>(fx.summary.sketch_bytes) / static_cast<double>(fx.summary.data_bytes);
  return {ratio <= 0.40, fmt("sketch %llu bytes, compressed data %llu bytes, ratio %.3f",
                             static_cast<unsigned long long>(fx.summary.sketch_bytes),
                             static_cast<unsigned long long>(fx.summary.data_bytes), ratio)};
}

// ---- 6 ----------------------------------------------------------------------

auto segmentation_equivalence(Fixture& fx) -> Outcome {
  StoreConfig cfg;
  cfg.batch_lines = Fixture::kBatchLines;
  cfg.memory_limit = fx.peak_memory / 5;
  const fs::path dir = fx.root / "flushed";
  SegmentSummary s;
  {
    SegmentWriter w(dir, cfg);
    for (const LogRecord& r : fx.records) {
      w.ingest(r);
    }
    s = w.finish();
  }
  const Segment flushed(dir);
  std::size_t differ = 0;
  for (const auto& [fp, postings] : fx.oracle) {
    differ += decode_from(flushed.sketch(), fp) == decode_from(fx.segment->sketch(), fp) ? 0 : 1;
  }
  return {s.flushes >= 3 && differ == 0,
          fmt("memory limit %zu bytes, %llu flushes, %zu of %zu tokens answer differently", cfg.memory_limit,
              static_cast<unsigned long long>(s.flushes), differ, fx.oracle.size())};
}

// ---- 7 ----------------------------------------------------------------------

auto mphf_oracle() -> std::string {
  std::mt19937_64 rng(5);
  for (std::size_t n : {std::size_t{1}, std::size_t{1000}, std::size_t{1'000'000}}) {
    std::unordered_set<std::uint32_t> seen;
    std::vector<TokenFingerprint> keys;
    while (keys.size() < n) {
      const auto k = static_cast<std::uint32_t>(rng());
      if (seen.insert(k).second) {
        keys.push_back(TokenFingerprint{k});
      }
    }
    const Mphf f = mphf_build(keys);
    std::vector<std::uint8_t> hit(n, 0);
    for (TokenFingerprint k : keys) {
      const auto idx = f.evaluate(k);
      if (!idx || *idx >= n || hit[*idx]) {
        return "mphf not a bijection at n=" + std::to_string(n);
      }
      hit[*idx] = 1;
    }
  }
  return {};
}

auto bic_oracle() -> std::string {
  std::mt19937_64 rng(6);
  for (int round = 0; round < 10000; ++round) {
    const std::uint32_t lo = static_cast<std::uint32_t>(rng() % 1000);
    const std::uint32_t hi = lo + static_cast<std::uint32_t>(rng() % 3000);
    const std::uint32_t span = hi - lo + 1;
    const std::uint32_t count = static_cast<std::uint32_t>(rng() % std::min<std::uint32_t>(span, 300)) + 1;
    std::set<PostingId> set;
    while (set.size() < count) {
      set.insert(static_cast<PostingId>(lo + rng() % span));
    }
    const std::vector<PostingId> postings(set.begin(), set.end());
    const BitWriter w = bic_encode(postings, lo, hi);
    const BicDecoded d = bic_decode(w.bytes(), 0, count, lo, hi);
    if (d.postings != postings || d.bits_consumed != w.bit_length()) {
      return "bic round trip failed in round " + std::to_string(round);
    }
  }
  return {};
}

auto hash_order_oracle() -> std::string {
  std::uint64_t sets = 0;
  std::vector<PostingId> set;
  bool ok = true;
  auto visit = [&](auto&& self, PostingId next) -> void {
    ++sets;
    PostingsHash reversed{};
    for (auto it = set.rbegin(); it != set.rend(); ++it) {
      reversed = extend_hash(reversed, *it);
    }
    ok = ok && reversed == postings_hash(set);
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
  if (!ok || sets != 15033173u) {
    return "order invariance failed over small sets";
  }
  std::mt19937_64 rng(7);
  for (int round = 0; round < 10000; ++round) {
    std::vector<PostingId> v;
    std::unordered_set<PostingId> used;
    const std::size_t n = 9 + rng() % 500;
    while (v.size() < n) {
      const auto p = static_cast<PostingId>(rng());
      if (used.insert(p).second) {
        v.push_back(p);
      }
    }
    PostingsHash h{};
    for (PostingId p : v) {
      h = extend_hash(h, p);
    }
    std::sort(v.begin(), v.end());
    if (h != postings_hash(v)) {
      return "order invariance failed on a random set";
    }
  }
  return {};
}

auto sketch_model_fuzz() -> std::string {
  std::mt19937_64 rng(8);
  MutableSketch s(512, 16);
  std::map<std::uint32_t, std::set<PostingId>> model;
  for (int i = 0; i < 200000; ++i) {
    const auto fp = static_cast<std::uint32_t>(rng() % 500);
    const auto p = static_cast<PostingId>(rng() % (i < 100000 ? 24 : 512));
    s.add(TokenFingerprint{fp}, p);
    model[fp].insert(p);
  }
  if (const std::string err = s.check_invariants(); !err.empty()) {
    return "sketch invariant: " + err;
  }
  std::set<std::set<PostingId>> shared;
  for (const auto& [fp, postings] : model) {
    const auto got = s.get_postings(TokenFingerprint{fp});
    if (!got || *got != std::vector<PostingId>(postings.begin(), postings.end())) {
      return "sketch postings differ from the model";
    }
    if (postings.size() >= 2) {
      shared.insert(postings);
    }
  }
  if (s.stats().list_count != shared.size()) {
    return "sketch list count differs from the model";
  }

  LookupMap map(4);
  std::multimap<std::uint64_t, ListHandle> ref;
  std::vector<std::uint64_t> pool(40);
  for (auto& v : pool) {
    v = rng();
  }
  ListHandle next = 0;
  for (int op = 0; op < 100000; ++op) {
    if (ref.size() < 20 || (ref.size() < 300 && rng() % 2 == 0)) {
      const std::uint64_t h = pool[rng() % pool.size()];
      map.insert(PostingsHash{h}, next);
      ref.emplace(h, next++);
    } else {
      auto it = ref.begin();
      std::advance(it, static_cast<long>(rng() % ref.size()));
      if (!map.remove(PostingsHash{it->first}, it->second)) {
        return "lookup map lost a resident";
      }
      ref.erase(it);
    }
    if (op % 100 == 0) {
      if (!map.probe_invariant_holds() || map.size() != ref.size()) {
        return "lookup map probe invariant broken";
      }
      for (const auto& [h, handle] : ref) {
        if (map.find(PostingsHash{h}, [&](ListHandle c) { return c == handle; }) != handle) {
          return "lookup map find differs from the model";
        }
      }
    }
  }
  return {};
}

auto worked_hash_fixture() -> std::string {
  const PostingsHash folded{(PostingsHash{0xad}.value ^ 0x61) ^ 0x2d};
  if (folded.value != 0xe1) {
    return "worked xor value";
  }
  if (postings_hash({0, 1, 3}).value != (element_hash(0) ^ element_hash(1) ^ element_hash(3))) {
    return "postings hash is not the xor of element hashes";
  }
  return {};
}

auto component_oracles() -> Outcome {
  std::vector<std::string> failures;
  std::string parts;
  for (const auto& [name, fn] : std::vector<std::pair<const char*, std::function<std::string()>>>{
           {"mphf", mphf_oracle},
           {"bic", bic_oracle},
           {"hash-order", hash_order_oracle},
           {"model-fuzz", sketch_model_fuzz},
           {"xor-fixture", worked_hash_fixture}}) {
    const auto t = Clock::now();
    const std::string err = fn();
    parts += fmt("%s%s %.1fs", parts.empty() ? "" : ", ", name, elapsed(t));
    if (!err.empty()) {
      failures.push_back(err);
    }
  }
  std::string detail = parts;
  for (const std::string& f : failures) {
    detail += "; " + f;
  }
  return {failures.empty(), detail};
}

// ---- 8 ----------------------------------------------------------------------

auto mutable_immutable_agreement(Fixture& fx) -> Outcome {
  std::size_t differ = 0;
  const MutableSketch& m = fx.writer->sketch();
  for (const auto& [fp, postings] : fx.oracle) {
    differ += m.get_postings(TokenFingerprint{fp}) == decode_from(fx.segment->sketch(), fp) ? 0 : 1;
  }
  return {differ == 0 && m.token_count() == fx.oracle.size(),
          fmt("%zu tokens, %zu disagree", fx.oracle.size(), differ)};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  fs::path work = fs::temp_directory_path() / ("dynawarp-acceptance-" + std::to_string(std::random_device{}()));
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::stoi(argv[++i]);
    } else if (arg == "--work-dir" && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--only N] [--work-dir DIR]\n", argv[0]);
      return 2;
    }
  }
  fs::remove_all(work);
  fs::create_directories(work);

  std::optional<Fixture> fixture;
  auto fx = [&]() -> Fixture& {
    if (!fixture) {
      fixture.emplace(work);
    }
    return *fixture;
  };

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"no false negatives", [&] { return no_false_negatives(fx()); }},
      {"alien false-positive rate", [&] { return alien_false_positives(fx()); }},
      {"dedup exactness and effectiveness", [&] { return dedup_effectiveness(fx()); }},
      {"needle-in-haystack speedup", [&] { return needle_speedup(work); }},
      {"sketch storage overhead", [&] { return storage_overhead(fx()); }},
      {"segmentation equivalence", [&] { return segmentation_equivalence(fx()); }},
      {"component oracles", [] { return component_oracles(); }},
      {"mutable/immutable agreement", [&] { return mutable_immutable_agreement(fx()); }},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (only != 0 && only != number) {
      continue;
    }
    const auto t = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    all = all && o.pass;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", number, criteria[i].first,
                o.detail.c_str(), elapsed(t));
    std::fflush(stdout);
  }
  fixture.reset();
  fs::remove_all(work);
  return all ? 0 : 1;
}
