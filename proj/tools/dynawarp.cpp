// dynawarp: ingest, query, verify, inspect and benchmark log segments.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unistd.h>
#include <json.hpp>

#include "dynawarp/corpus.hpp"
#include "dynawarp/segment.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace dynawarp;

namespace {

struct Options {
  bool json{false};

  // ingest
  std::string input{"-"};
  std::string output;
  StoreConfig store;
  std::string codec{"zstd"};
  bool source_tab{false};
  bool no_ngrams{false};

  // query
  std::string segment;
  std::string term;
  std::string contains;
  std::string mode{"sketch"};
  bool count_only{false};
  bool explain{false};

  // bench
  std::string queries;
  std::string work_dir;
  unsigned iterations{3};
  unsigned warmup{1};
  unsigned parallel{1};

  // generate
  std::uint64_t lines{100000};
  std::uint64_t seed{1};
  std::size_t per_class{100};
  std::string queries_out;
};

class InputReader {
 public:
  InputReader(const std::string& path, bool source_tab) : source_tab_(source_tab) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) {
        throw std::runtime_error("cannot open input " + path);
      }
    }
  }

  /// Next line; `source` is empty unless tab-separated sources are enabled.
  auto next(std::string& line, std::string& source) -> bool {
    std::istream& in = file_.is_open() ? static_cast<std::istream&>(file_) : std::cin;
    if (!std::getline(in, buffer_)) {
      return false;
    }
    source.clear();
    if (source_tab_) {
      const std::size_t tab = buffer_.find('\t');
      if (tab != std::string::npos) {
        source = buffer_.substr(0, tab);
        line = buffer_.substr(tab + 1);
        return true;
      }
    }
    line = buffer_;
    return true;
  }

 private:
  bool source_tab_;
  std::ifstream file_;
  std::string buffer_;
};

auto segment_name(std::size_t index) -> std::string {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "seg-%06zu", index);
  return buf;
}

/// A segment directory itself, or every `seg-*` segment below a root.
auto collect_segments(const fs::path& path) -> std::vector<fs::path> {
  if (fs::exists(path / kManifestFile)) {
    return {path};
  }
  if (!fs::is_directory(path)) {
    throw std::runtime_error("no segment at " + path.string());
  }
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(path)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("seg-", 0) == 0 && name.find(".partial") == std::string::npos &&
        fs::exists(entry.path() / kManifestFile)) {
      out.push_back(entry.path());
    }
  }
  if (out.empty()) {
    throw std::runtime_error("no segment at " + path.string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

auto open_segments(const std::string& path) -> std::vector<std::unique_ptr<Segment>> {
  std::vector<std::unique_ptr<Segment>> out;
  for (const fs::path& p : collect_segments(path)) {
    spdlog::debug("opening segment {}", p.string());
    out.push_back(std::make_unique<Segment>(p));
  }
  return out;
}

void print_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  auto print_row = [](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::cout << (i ? "\t" : "") << row[i];
    }
    std::cout << '\n';
  };
  print_row(header);
  for (const auto& row : rows) {
    print_row(row);
  }
}

auto fixed(double v, int digits = 6) -> std::string {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

// --- ingest -----------------------------------------------------------------

auto summary_json(const SegmentSummary& s) -> json {
  return {{"segment", s.path.string()},
          {"lines", s.lines},
          {"batches", s.batches},
          {"uncompressed_bytes", s.uncompressed_bytes},
          {"data_bytes", s.data_bytes},
          {"sketch_bytes", s.sketch_bytes},
          {"tokens", s.sketch_stats.token_count},
          {"posting_lists", s.sketch_stats.list_count},
          {"direct_tokens", s.sketch_stats.direct_count},
          {"dedup_ratio", s.sketch_stats.dedup_ratio},
          {"flushes", s.flushes},
          {"ingest_seconds", s.timings.ingest_seconds},
          {"sketch_finish_seconds", s.timings.sketch_finish_seconds},
          {"data_finish_seconds", s.timings.data_finish_seconds}};
}

auto ingest_all(const Options& opt, const fs::path& root) -> std::vector<SegmentSummary> {
  StoreConfig cfg = opt.store;
  cfg.codec = parse_codec(opt.codec);
  cfg.ngrams = !opt.no_ngrams;
  cfg.validate();
  InputReader reader(opt.input, opt.source_tab);
  fs::create_directories(root);

  std::vector<SegmentSummary> summaries;
  auto writer = std::make_unique<SegmentWriter>(root / segment_name(0), cfg);
  std::string line;
  std::string source;
  while (reader.next(line, source)) {
    try {
      writer->ingest(line, source);
    } catch (const SegmentFullError&) {
      summaries.push_back(writer->finish());
      spdlog::info("segment {} full, rolling over", summaries.back().path.string());
      writer = std::make_unique<SegmentWriter>(root / segment_name(summaries.size()), cfg);
      writer->ingest(line, source);
    }
  }
  summaries.push_back(writer->finish());
  return summaries;
}

auto cmd_ingest(const Options& opt) -> int {
  const auto summaries = ingest_all(opt, opt.output);
  if (opt.json) {
    json out = json::array();
    for (const auto& s : summaries) {
      out.push_back(summary_json(s));
    }
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : summaries) {
    rows.push_back({s.path.filename().string(), std::to_string(s.lines), std::to_string(s.batches),
                    std::to_string(s.data_bytes), std::to_string(s.sketch_bytes),
                    std::to_string(s.sketch_stats.token_count), std::to_string(s.sketch_stats.list_count),
                    fixed(s.sketch_stats.dedup_ratio, 4), std::to_string(s.flushes),
                    fixed(s.timings.ingest_seconds, 3), fixed(s.timings.sketch_finish_seconds, 3),
                    fixed(s.timings.data_finish_seconds, 3)});
  }
  print_table({"segment", "lines", "batches", "data_bytes", "sketch_bytes", "tokens", "posting_lists",
               "dedup_ratio", "flushes", "ingest_s", "sketch_finish_s", "data_finish_s"},
              rows);
  return 0;
}

// --- query ------------------------------------------------------------------

auto run_query(const Segment& seg, const QueryPlan& plan, bool scan) -> QueryResult {
  if (!scan) {
    return seg.execute_plan(plan);
  }
  return plan.mode == QueryPlan::Mode::kTerm ? seg.scan_term(plan.needle) : seg.scan_query(plan.needle);
}

auto cmd_query(const Options& opt) -> int {
  const bool is_term = !opt.term.empty();
  const QueryPlan plan = is_term ? plan_term(opt.term) : plan_contains(opt.contains);
  const bool scan = opt.mode == "scan";
  const auto segments = open_segments(opt.segment);

  std::vector<std::string> lines;
  QueryStats total;
  total.mode = scan ? QueryPlan::Mode::kScan : plan.mode;
  for (const auto& seg : segments) {
    QueryResult r = run_query(*seg, plan, scan);
    total.total_batches += r.stats.total_batches;
    total.candidate_batches += r.stats.candidate_batches;
    total.decompressed_batches += r.stats.decompressed_batches;
    total.false_positive_batches += r.stats.false_positive_batches;
    for (Match& m : r.matches) {
      lines.push_back(std::move(m.line));
    }
  }

  if (opt.json) {
    json out{{"query", is_term ? opt.term : opt.contains},
             {"kind", is_term ? "term" : "contains"},
             {"count", lines.size()}};
    if (opt.explain) {
      out["plan"] = {{"mode", mode_name(total.mode)},
                     {"tokens", plan.tokens},
                     {"total_batches", total.total_batches},
                     {"candidate_batches", total.candidate_batches},
                     {"decompressed_batches", total.decompressed_batches},
                     {"false_positive_batches", total.false_positive_batches}};
    }
    if (!opt.count_only) {
      out["lines"] = lines;
    }
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  if (opt.explain) {
    std::string grams;
    for (const std::string& t : plan.tokens) {
      grams += (grams.empty() ? "" : " ") + t;
    }
    std::cerr << "mode\t" << mode_name(total.mode) << '\n'
              << "tokens\t" << grams << '\n'
              << "total_batches\t" << total.total_batches << '\n'
              << "candidate_batches\t" << total.candidate_batches << '\n'
              << "decompressed_batches\t" << total.decompressed_batches << '\n'
              << "false_positive_batches\t" << total.false_positive_batches << '\n';
  }
  if (opt.count_only) {
    std::cout << lines.size() << '\n';
  } else {
    for (const std::string& l : lines) {
      std::cout << l << '\n';
    }
  }
  return 0;
}

// --- verify -----------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool ok{true};
  std::string detail;
};

auto format_postings(const std::vector<PostingId>& p) -> std::string {
  std::string s = "{";
  for (std::size_t i = 0; i < p.size() && i < 16; ++i) {
    s += (i ? "," : "") + std::to_string(p[i]);
  }
  if (p.size() > 16) {
    s += ",...(" + std::to_string(p.size()) + ")";
  }
  return s + "}";
}

struct OracleEntry {
  std::string token;  // one token with this fingerprint, for reporting
  std::vector<PostingId> postings;
};

auto build_oracle(const Segment& seg) -> std::unordered_map<std::uint32_t, OracleEntry> {
  std::unordered_map<std::uint32_t, OracleEntry> oracle;
  Tokenizer tokenizer(seg.manifest().ngrams);
  for (std::size_t p = 0; p < seg.batch_count(); ++p) {
    for (const std::string& line : seg.batch_lines(static_cast<PostingId>(p))) {
      for (std::string_view tok : tokenizer.tokens(line)) {
        OracleEntry& e = oracle[fingerprint(tok).value];
        if (e.token.empty()) {
          e.token = std::string(tok);
        }
        if (e.postings.empty() || e.postings.back() != p) {
          e.postings.push_back(static_cast<PostingId>(p));
        }
      }
    }
  }
  return oracle;
}

auto verify_segment(const Segment& seg) -> std::vector<CheckResult> {
  std::vector<CheckResult> checks;
  const std::string prefix = seg.path().filename().string() + ":";
  const auto oracle = build_oracle(seg);
  const SketchHeader& h = seg.sketch().header();

  CheckResult tokens{prefix + "token_count", true, {}};
  if (h.n_tokens != oracle.size()) {
    tokens.ok = false;
    tokens.detail = "sketch has " + std::to_string(h.n_tokens) + " tokens, oracle " + std::to_string(oracle.size());
  } else {
    tokens.detail = std::to_string(h.n_tokens);
  }
  checks.push_back(tokens);

  std::vector<std::uint32_t> fps;
  fps.reserve(oracle.size());
  for (const auto& [fp, entry] : oracle) {
    fps.push_back(fp);
  }
  std::sort(fps.begin(), fps.end());
  CheckResult postings{prefix + "postings", true, {}};
  std::size_t checked = 0;
  for (std::uint32_t fp : fps) {
    const OracleEntry& e = oracle.at(fp);
    std::string problem;
    try {
      const auto id = seg.sketch().is_present(TokenFingerprint{fp});
      if (!id) {
        problem = "absent from sketch";
      } else {
        const auto got = seg.sketch().decode_list(*id);
        if (got != e.postings) {
          problem = "sketch " + format_postings(got) + " oracle " + format_postings(e.postings);
        }
      }
    } catch (const std::exception& ex) {
      problem = std::string("decode error: ") + ex.what();
    }
    if (!problem.empty()) {
      postings.ok = false;
      postings.detail = "token '" + e.token + "': " + problem;
      break;
    }
    ++checked;
  }
  if (postings.ok) {
    postings.detail = std::to_string(checked) + " tokens exact";
  }
  checks.push_back(postings);

  CheckResult dedup{prefix + "dedup", true, {}};
  std::set<std::vector<PostingId>> distinct;
  std::set<std::vector<PostingId>> shared;
  std::size_t list_tokens = 0;
  for (const auto& [fp, entry] : oracle) {
    distinct.insert(entry.postings);
    if (entry.postings.size() >= 2) {
      shared.insert(entry.postings);
      ++list_tokens;
    }
  }
  // Same definition as the mutable sketch: lists saved per multi-posting token.
  const double ratio =
      list_tokens == 0 ? 0.0 : 1.0 - static_cast<double>(shared.size()) / static_cast<double>(list_tokens);
  if (h.n_lists != distinct.size()) {
    dedup.ok = false;
    dedup.detail = "sketch has " + std::to_string(h.n_lists) + " lists, oracle " + std::to_string(distinct.size()) +
                   " distinct posting sets";
  } else {
    dedup.detail = std::to_string(distinct.size()) + " lists, dedup_ratio " + fixed(ratio, 4);
  }
  checks.push_back(dedup);

  CheckResult structure{prefix + "structure", true, {}};
  try {
    seg.sketch().validate();
  } catch (const std::exception& ex) {
    structure.ok = false;
    structure.detail = ex.what();
  }
  checks.push_back(structure);
  return checks;
}

auto cmd_verify(const Options& opt) -> int {
  std::vector<CheckResult> checks;
  std::vector<std::string> stored;
  const auto paths = collect_segments(opt.segment);
  for (const fs::path& p : paths) {
    try {
      const Segment seg(p);
      auto c = verify_segment(seg);
      checks.insert(checks.end(), c.begin(), c.end());
      if (!opt.input.empty() && opt.input != "-") {
        for (std::size_t b = 0; b < seg.batch_count(); ++b) {
          for (std::string& l : seg.batch_lines(static_cast<PostingId>(b))) {
            stored.push_back(std::move(l));
          }
        }
      }
    } catch (const std::exception& ex) {
      checks.push_back({p.filename().string() + ":open", false, ex.what()});
    }
  }
  if (!opt.input.empty() && opt.input != "-") {
    CheckResult lines{"input_lines", true, {}};
    InputReader reader(opt.input, opt.source_tab);
    std::vector<std::string> input;
    std::string line;
    std::string source;
    while (reader.next(line, source)) {
      input.push_back(line);
    }
    std::sort(input.begin(), input.end());
    std::sort(stored.begin(), stored.end());
    if (input != stored) {
      lines.ok = false;
      const auto mm = std::mismatch(input.begin(), input.end(), stored.begin(), stored.end());
      lines.detail = "input has " + std::to_string(input.size()) + " lines, segments " +
                     std::to_string(stored.size());
      if (mm.first != input.end()) {
        lines.detail += "; first differing input line: " + *mm.first;
      }
    } else {
      lines.detail = std::to_string(input.size()) + " lines";
    }
    checks.push_back(lines);
  }

  const bool ok = std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.ok; });
  if (opt.json) {
    json out{{"ok", ok}, {"checks", json::array()}};
    for (const auto& c : checks) {
      out["checks"].push_back({{"check", c.name}, {"ok", c.ok}, {"detail", c.detail}});
    }
    std::cout << out.dump(2) << '\n';
  } else {
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : checks) {
      rows.push_back({c.name, c.ok ? "pass" : "fail", c.detail});
    }
    print_table({"check", "result", "detail"}, rows);
  }
  return ok ? 0 : 1;
}

// --- stats ------------------------------------------------------------------

auto cmd_stats(const Options& opt) -> int {
  const auto segments = open_segments(opt.segment);
  json out = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& seg : segments) {
    const SketchHeader& h = seg->sketch().header();
    std::map<unsigned, std::uint64_t> widths;
    std::set<std::uint64_t> shared_lists;
    std::uint64_t list_tokens = 0;
    for (std::uint64_t i = 0; i < h.n_tokens; ++i) {
      const std::uint64_t rank = seg->sketch().rank_at(i);
      ++widths[rank_code_width(rank)];
      if (seg->sketch().list_cardinality(rank) >= 2) {
        shared_lists.insert(rank);
        ++list_tokens;
      }
    }
    const double ratio = seg->data_bytes() == 0 ? 0.0
                                                : static_cast<double>(seg->sketch_bytes()) /
                                                      static_cast<double>(seg->data_bytes());
    const double bits_per_token =
        h.n_tokens == 0 ? 0.0 : 8.0 * static_cast<double>(seg->sketch_bytes()) / static_cast<double>(h.n_tokens);
    const double dedup = list_tokens == 0 ? 0.0
                                          : 1.0 - static_cast<double>(shared_lists.size()) /
                                                      static_cast<double>(list_tokens);
    std::string hist;
    json hist_json = json::object();
    for (const auto& [w, n] : widths) {
      hist += (hist.empty() ? "" : ",") + std::to_string(w) + ":" + std::to_string(n);
      hist_json[std::to_string(w)] = n;
    }
    const std::string name = seg->path().filename().string();
    out.push_back({{"segment", name},
                   {"lines", seg->manifest().total_lines},
                   {"batches", seg->batch_count()},
                   {"data_bytes", seg->data_bytes()},
                   {"sketch_bytes", seg->sketch_bytes()},
                   {"manifest_bytes", seg->manifest_bytes()},
                   {"sketch_data_ratio", ratio},
                   {"tokens", h.n_tokens},
                   {"lists", h.n_lists},
                   {"dedup_ratio", dedup},
                   {"bits_per_token", bits_per_token},
                   {"signature_bits", h.signature_bits},
                   {"rank_width_histogram", hist_json}});
    rows.push_back({name, std::to_string(seg->manifest().total_lines), std::to_string(seg->batch_count()),
                    std::to_string(seg->data_bytes()), std::to_string(seg->sketch_bytes()),
                    std::to_string(seg->manifest_bytes()), fixed(ratio, 4), std::to_string(h.n_tokens),
                    std::to_string(h.n_lists), fixed(dedup, 4), fixed(bits_per_token, 2),
                    hist.empty() ? "-" : hist});
  }
  if (opt.json) {
    std::cout << out.dump(2) << '\n';
  } else {
    print_table({"segment", "lines", "batches", "data_bytes", "sketch_bytes", "manifest_bytes", "sketch_data_ratio",
                 "tokens", "lists", "dedup_ratio", "bits_per_token", "rank_widths"},
                rows);
  }
  return 0;
}

// --- bench ------------------------------------------------------------------

struct ClassTotals {
  std::size_t queries{0};
  double sketch_seconds{0};
  double scan_seconds{0};
  double error_rate_sum{0};
  std::size_t mismatches{0};
};

/// Runs every query of `qs` `iterations` times; K threads each own every
/// K-th segment. Returns wall seconds; `results[q]` collects matched line
/// counts and FP/total batch counts from the last iteration.
struct RunOutcome {
  std::vector<std::uint64_t> matches;
  std::vector<std::uint64_t> false_positives;
  std::vector<std::uint64_t> batches;
};

auto timed_run(const std::vector<std::unique_ptr<Segment>>& segments, const std::vector<QueryPlan>& plans,
               bool scan, unsigned iterations, unsigned parallel, RunOutcome& outcome) -> double {
  const unsigned k = std::max(1u, std::min<unsigned>(parallel, static_cast<unsigned>(segments.size())));
  std::vector<RunOutcome> partial(k);
  for (auto& p : partial) {
    p.matches.assign(plans.size(), 0);
    p.false_positives.assign(plans.size(), 0);
    p.batches.assign(plans.size(), 0);
  }
  auto work = [&](unsigned t) {
    for (unsigned it = 0; it < iterations; ++it) {
      for (std::size_t q = 0; q < plans.size(); ++q) {
        std::uint64_t m = 0;
        std::uint64_t fp = 0;
        std::uint64_t b = 0;
        for (std::size_t s = t; s < segments.size(); s += k) {
          const QueryResult r = run_query(*segments[s], plans[q], scan);
          m += r.matches.size();
          fp += r.stats.false_positive_batches;
          b += r.stats.total_batches;
        }
        partial[t].matches[q] = m;
        partial[t].false_positives[q] = fp;
        partial[t].batches[q] = b;
      }
    }
  };
  const auto start = std::chrono::steady_clock::now();
  if (k == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < k; ++t) {
      threads.emplace_back(work, t);
    }
    for (auto& th : threads) {
      th.join();
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  outcome.matches.assign(plans.size(), 0);
  outcome.false_positives.assign(plans.size(), 0);
  outcome.batches.assign(plans.size(), 0);
  for (const auto& p : partial) {
    for (std::size_t q = 0; q < plans.size(); ++q) {
      outcome.matches[q] += p.matches[q];
      outcome.false_positives[q] += p.false_positives[q];
      outcome.batches[q] += p.batches[q];
    }
  }
  return secs;
}

auto cmd_bench(const Options& opt) -> int {
  std::ifstream qf(opt.queries, std::ios::binary);
  if (!qf) {
    throw std::runtime_error("cannot open queries " + opt.queries);
  }
  const std::string qtext((std::istreambuf_iterator<char>(qf)), std::istreambuf_iterator<char>());
  const auto queries = parse_queries(qtext);

  fs::path root = opt.segment;
  fs::path scratch;
  if (root.empty()) {
    scratch = opt.work_dir.empty() ? fs::temp_directory_path() / ("dynawarp-bench-" + std::to_string(::getpid()))
                                   : fs::path(opt.work_dir);
    fs::remove_all(scratch);
    spdlog::info("ingesting {} into {}", opt.input, scratch.string());
    ingest_all(opt, scratch);
    root = scratch;
  }
  int status = 0;
  try {
    const auto segments = open_segments(root.string());
    std::map<std::string, std::vector<QueryPlan>> classes;
    for (const BenchQuery& q : queries) {
      classes[q.query_class].push_back(q.kind == QueryPlan::Mode::kTerm ? plan_term(q.text) : plan_contains(q.text));
    }
    json out = json::array();
    std::vector<std::vector<std::string>> rows;
    for (const auto& [name, plans] : classes) {
      RunOutcome sketch;
      RunOutcome scan;
      if (opt.warmup > 0) {
        timed_run(segments, plans, false, opt.warmup, opt.parallel, sketch);
        timed_run(segments, plans, true, opt.warmup, opt.parallel, scan);
      }
      const double sketch_s = timed_run(segments, plans, false, opt.iterations, opt.parallel, sketch);
      const double scan_s = timed_run(segments, plans, true, opt.iterations, opt.parallel, scan);
      std::size_t mismatches = 0;
      double err = 0;
      for (std::size_t q = 0; q < plans.size(); ++q) {
        mismatches += sketch.matches[q] != scan.matches[q];
        err += sketch.batches[q] == 0 ? 0.0
                                      : static_cast<double>(sketch.false_positives[q]) /
                                            static_cast<double>(sketch.batches[q]);
      }
      const double n = static_cast<double>(plans.size()) * opt.iterations;
      const double sketch_qps = sketch_s > 0 ? n / sketch_s : 0.0;
      const double scan_qps = scan_s > 0 ? n / scan_s : 0.0;
      const double speedup = scan_qps > 0 ? sketch_qps / scan_qps : 0.0;
      const double error_rate = plans.empty() ? 0.0 : err / static_cast<double>(plans.size());
      if (mismatches != 0) {
        status = 1;
      }
      out.push_back({{"class", name},
                     {"queries", plans.size()},
                     {"sketch_qps", sketch_qps},
                     {"scan_qps", scan_qps},
                     {"speedup", speedup},
                     {"error_rate", error_rate},
                     {"mismatches", mismatches}});
      rows.push_back({name, std::to_string(plans.size()), fixed(sketch_qps, 2), fixed(scan_qps, 2),
                      fixed(speedup, 2), fixed(error_rate, 6), std::to_string(mismatches)});
    }
    if (opt.json) {
      std::cout << out.dump(2) << '\n';
    } else {
      print_table({"class", "queries", "sketch_qps", "scan_qps", "speedup", "error_rate", "mismatches"}, rows);
    }
  } catch (...) {
    if (!scratch.empty()) {
      fs::remove_all(scratch);
    }
    throw;
  }
  if (!scratch.empty()) {
    fs::remove_all(scratch);
  }
  return status;
}

// --- generate ---------------------------------------------------------------

auto cmd_generate(const Options& opt) -> int {
  std::ofstream file;
  if (opt.output != "-" && !opt.output.empty()) {
    file.open(opt.output, std::ios::binary | std::ios::trunc);
    if (!file) {
      throw std::runtime_error("cannot write " + opt.output);
    }
  }
  std::ostream& out = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
  CorpusGenerator gen(opt.seed);
  std::vector<LogRecord> sample;
  for (std::uint64_t i = 0; i < opt.lines; ++i) {
    LogRecord r = gen.next();
    if (opt.source_tab) {
      out << *r.source_id << '\t';
    }
    out << r.line << '\n';
    if (!opt.queries_out.empty()) {
      sample.push_back(std::move(r));
    }
  }
  if (!opt.queries_out.empty()) {
    std::ofstream qf(opt.queries_out, std::ios::binary | std::ios::trunc);
    qf << format_queries(make_queries(sample, opt.per_class, opt.seed));
    if (!qf) {
      throw std::runtime_error("cannot write " + opt.queries_out);
    }
  }
  return out ? 0 : 1;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_st("dynawarp");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("DYNAWARP_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

void add_store_options(CLI::App* cmd, Options& opt) {
  cmd->add_option("--input,-i", opt.input, "Input file, '-' for stdin");
  cmd->add_option("--capacity", opt.store.capacity, "Batches per segment")->check(CLI::Range(1u, kMaxCapacity));
  cmd->add_option("--batch-lines", opt.store.batch_lines, "Seal a batch after this many lines")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--batch-bytes", opt.store.batch_bytes, "Seal a batch after this many bytes")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--signature-bits", opt.store.signature_bits, "Signature bits per token")
      ->check(CLI::Range(1, 32));
  cmd->add_option("--memory-limit", opt.store.memory_limit,
                  "Mutable sketch bytes before a temporary flush (0 = unlimited)");
  cmd->add_option("--sample-interval", opt.store.sample_interval, "Rank prefix-sum sample interval")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--group-by-source", opt.store.group_by_source, "Keep one open batch per source");
  cmd->add_option("--max-open-sources", opt.store.max_open_sources, "Open source batches before LRU sealing")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--codec", opt.codec, "Batch codec")->check(CLI::IsMember({"zstd", "none"}));
  cmd->add_option("--level", opt.store.compression_level, "zstd level")->check(CLI::Range(1, 22));
  cmd->add_flag("--no-ngrams", opt.no_ngrams, "Index whole tokens only (contains queries fall back to scans)");
  cmd->add_flag("--source-tab", opt.source_tab, "Input lines are 'source<TAB>line'");
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  Options opt;
  CLI::App app{"dynawarp: sketch-indexed compressed log segments"};
  app.set_config("--config", "", "Read options from a key=value file; flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.add_flag("--json", opt.json, "Structured output");
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "Build segments from newline-delimited input");
  add_store_options(ingest, opt);
  ingest->add_option("--output,-o", opt.output, "Directory receiving seg-NNNNNN segments")->required();

  auto* query = app.add_subcommand("query", "Search segments");
  query->add_option("--segment,-s", opt.segment, "Segment or directory of segments")->required();
  auto* term = query->add_option("--term", opt.term, "Whole-token search");
  auto* contains = query->add_option("--contains", opt.contains, "Substring search");
  term->excludes(contains);
  query->add_option("--mode", opt.mode, "Use the sketch or scan every batch")
      ->check(CLI::IsMember({"sketch", "scan"}));
  query->add_flag("--count-only", opt.count_only, "Print the number of matching lines");
  query->add_flag("--explain", opt.explain, "Print the plan and batch counters to stderr");

  auto* verify = app.add_subcommand("verify", "Check segments against a rebuilt oracle");
  verify->add_option("--segment,-s", opt.segment, "Segment or directory of segments")->required();
  verify->add_option("--input,-i", opt.input, "Original input to compare line multisets")->default_val("");
  verify->add_flag("--source-tab", opt.source_tab, "Input lines are 'source<TAB>line'");

  auto* stats = app.add_subcommand("stats", "Print sizes and sketch statistics");
  stats->add_option("--segment,-s", opt.segment, "Segment or directory of segments")->required();

  auto* bench = app.add_subcommand("bench", "Measure sketch vs scan query throughput");
  add_store_options(bench, opt);
  bench->add_option("--segment,-s", opt.segment, "Existing segments (instead of --input)");
  bench->add_option("--queries,-q", opt.queries, "Query file: class<TAB>term|contains<TAB>text")->required();
  bench->add_option("--iterations", opt.iterations, "Measured passes over the queries")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", opt.warmup, "Warm-up passes");
  bench->add_option("--parallel", opt.parallel, "Segments queried concurrently")->check(CLI::PositiveNumber);
  bench->add_option("--work-dir", opt.work_dir, "Scratch directory for --input segments");

  auto* generate = app.add_subcommand("generate", "Write a synthetic log corpus");
  generate->add_option("--lines,-n", opt.lines, "Number of lines");
  generate->add_option("--seed", opt.seed, "Random seed");
  generate->add_option("--output,-o", opt.output, "Output file, '-' for stdout")->default_val("-");
  generate->add_flag("--source-tab", opt.source_tab, "Prefix lines with 'source<TAB>'");
  generate->add_option("--queries", opt.queries_out, "Also write a query file");
  generate->add_option("--per-class", opt.per_class, "Queries per class");

  CLI11_PARSE(app, argc, argv);

  try {
    if (query->parsed() && opt.term.empty() && opt.contains.empty()) {
      throw CLI::RequiredError("--term or --contains");
    }
    if (bench->parsed() && opt.segment.empty() == (bench->count("--input") == 0)) {
      throw CLI::ValidationError("bench", "give exactly one of --segment or --input");
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (ingest->parsed()) {
      return cmd_ingest(opt);
    }
    if (query->parsed()) {
      return cmd_query(opt);
    }
    if (verify->parsed()) {
      return cmd_verify(opt);
    }
    if (stats->parsed()) {
      return cmd_stats(opt);
    }
    if (bench->parsed()) {
      return cmd_bench(opt);
    }
    if (generate->parsed()) {
      return cmd_generate(opt);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 2;
}
