#include "dynawarp/segment.hpp"

#include <algorithm>
#include <cstdio>
#include <system_error>

#include "dynawarp/horspool.hpp"
#include "dynawarp/query.hpp"

namespace dynawarp {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kManifestMagic = "DWMF";
constexpr std::size_t kManifestHeaderSize = 4 + 2 + 1 + 1 + 4 + 4 + 8;
constexpr std::size_t kManifestRecordSize = 8 + 8 + 8 + 4 + 4;
constexpr std::uint8_t kManifestFlagNgrams = 1;

auto seconds(std::chrono::steady_clock::duration d) -> double {
  return std::chrono::duration<double>(d).count();
}

auto temp_name(std::size_t index) -> std::string {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "tmp-%06zu.dwsk", index);
  return buf;
}

}  // namespace

void StoreConfig::validate() const {
  if (capacity == 0 || capacity > kMaxCapacity) {
    throw std::invalid_argument("capacity must be in [1, 65536]");
  }
  if (batch_lines == 0) {
    throw std::invalid_argument("batch_lines must be positive");
  }
  if (batch_bytes == 0) {
    throw std::invalid_argument("batch_bytes must be positive");
  }
  if (signature_bits == 0 || signature_bits > 32) {
    throw std::invalid_argument("signature_bits must be in [1, 32]");
  }
  if (sample_interval == 0) {
    throw std::invalid_argument("sample_interval must be positive");
  }
  if (group_by_source && max_open_sources == 0) {
    throw std::invalid_argument("max_open_sources must be positive");
  }
  if (!(gamma >= 1.0)) {
    throw std::invalid_argument("gamma must be >= 1");
  }
}

// --- manifest ---------------------------------------------------------------

auto Manifest::serialize() const -> Bytes {
  ByteWriter w;
  w.append(kManifestMagic);
  w.put<std::uint16_t>(kManifestVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(codec));
  w.put<std::uint8_t>(ngrams ? kManifestFlagNgrams : 0);
  w.put<std::uint32_t>(capacity);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(batches.size()));
  w.put<std::uint64_t>(total_lines);
  for (const BatchRecord& b : batches) {
    w.put<std::uint64_t>(b.offset);
    w.put<std::uint64_t>(b.compressed_size);
    w.put<std::uint64_t>(b.uncompressed_size);
    w.put<std::uint32_t>(b.line_count);
    w.put<std::uint32_t>(0);
  }
  return w.take();
}

auto Manifest::parse(ByteView bytes) -> Manifest {
  if (bytes.size() < kManifestHeaderSize ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) != kManifestMagic) {
    throw std::runtime_error("manifest: bad magic or truncated header");
  }
  if (load_le<std::uint16_t>(bytes, 4) != kManifestVersion) {
    throw std::runtime_error("manifest: unsupported version");
  }
  Manifest m;
  const auto codec = bytes[6];
  if (codec > static_cast<std::uint8_t>(Codec::kZstd)) {
    throw std::runtime_error("manifest: unknown codec");
  }
  m.codec = static_cast<Codec>(codec);
  m.ngrams = (bytes[7] & kManifestFlagNgrams) != 0;
  m.capacity = load_le<std::uint32_t>(bytes, 8);
  const auto n = load_le<std::uint32_t>(bytes, 12);
  m.total_lines = load_le<std::uint64_t>(bytes, 16);
  if (n > m.capacity || bytes.size() != kManifestHeaderSize + std::size_t{n} * kManifestRecordSize) {
    throw std::runtime_error("manifest: batch count does not match size");
  }
  m.batches.resize(n);
  std::uint64_t lines = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t at = kManifestHeaderSize + i * kManifestRecordSize;
    BatchRecord& b = m.batches[i];
    b.offset = load_le<std::uint64_t>(bytes, at);
    b.compressed_size = load_le<std::uint64_t>(bytes, at + 8);
    b.uncompressed_size = load_le<std::uint64_t>(bytes, at + 16);
    b.line_count = load_le<std::uint32_t>(bytes, at + 24);
    lines += b.line_count;
  }
  if (lines != m.total_lines) {
    throw std::runtime_error("manifest: line count mismatch");
  }
  return m;
}

// --- writer -----------------------------------------------------------------

SegmentWriter::SegmentWriter(fs::path dir, StoreConfig config)
    : dir_(std::move(dir)), config_(config), sketch_((config.validate(), config.capacity)),
      tokenizer_(config.ngrams) {
  if (fs::exists(dir_)) {
    throw std::runtime_error("segment directory already exists: " + dir_.string());
  }
  partial_ = dir_;
  partial_ += ".partial";
  fs::remove_all(partial_);
  fs::create_directories(partial_);
  batch_out_.open(partial_ / kBatchFile, std::ios::binary | std::ios::trunc);
  if (!batch_out_) {
    throw std::runtime_error("cannot create " + (partial_ / kBatchFile).string());
  }
  manifest_.codec = config_.codec;
  manifest_.capacity = config_.capacity;
  manifest_.ngrams = config_.ngrams;
}

SegmentWriter::~SegmentWriter() {
  if (!finished_) {
    batch_out_.close();
    std::error_code ec;
    fs::remove_all(partial_, ec);
  }
}

void SegmentWriter::ingest(const LogRecord& record) {
  ingest(record.line, record.source_id ? std::string_view(*record.source_id) : std::string_view{});
}

void SegmentWriter::ingest(std::string_view line, std::string_view source_id) {
  if (finished_) {
    throw std::logic_error("segment already finished");
  }
  const auto start = std::chrono::steady_clock::now();
  if (!line.empty() && line.back() == '\n') {
    line.remove_suffix(1);
  }
  std::size_t begin = 0;
  while (true) {
    const std::size_t nl = line.find('\n', begin);
    ingest_line(line.substr(begin, nl == std::string_view::npos ? std::string_view::npos : nl - begin),
                source_id);
    if (nl == std::string_view::npos) {
      break;
    }
    begin = nl + 1;
  }
  ingest_time_ += std::chrono::steady_clock::now() - start;
}

auto SegmentWriter::open_batch_for(std::string_view source_id) -> OpenBatch& {
  const std::string_view key = config_.group_by_source ? source_id : std::string_view{};
  if (auto it = open_.find(key); it != open_.end()) {
    it->second.last_used = ++tick_;
    return it->second;
  }
  if (next_posting_ >= config_.capacity) {
    throw SegmentFullError("segment is full: all " + std::to_string(config_.capacity) +
                           " batches are allocated");
  }
  if (config_.group_by_source && open_.size() >= config_.max_open_sources) {
    auto lru = std::min_element(open_.begin(), open_.end(), [](const auto& a, const auto& b) {
      return a.second.last_used < b.second.last_used;
    });
    seal(std::string(lru->first));
  }
  OpenBatch batch;
  batch.posting = static_cast<PostingId>(next_posting_++);
  batch.last_used = ++tick_;
  manifest_.batches.emplace_back();
  return open_.emplace(std::string(key), std::move(batch)).first->second;
}

void SegmentWriter::ingest_line(std::string_view line, std::string_view source_id) {
  OpenBatch& batch = open_batch_for(source_id);
  if (batch.lines > 0) {
    batch.data.push_back('\n');
  }
  batch.data.append(line);
  ++batch.lines;
  ++total_lines_;
  for (std::string_view token : tokenizer_.tokens(line)) {
    sketch_.add(fingerprint(token), batch.posting);
  }
  if (batch.lines >= config_.batch_lines || batch.data.size() >= config_.batch_bytes) {
    seal(std::string(config_.group_by_source ? source_id : std::string_view{}));
  }
  if (config_.memory_limit != 0 && sketch_.estimate_memory() > config_.memory_limit) {
    flush_temporary();
  }
}

void SegmentWriter::seal(const std::string& key) {
  auto it = open_.find(key);
  if (it == open_.end()) {
    return;
  }
  const OpenBatch& batch = it->second;
  const Bytes frame = compress(batch.data, config_.codec, config_.compression_level);
  batch_out_.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
  if (!batch_out_) {
    throw std::runtime_error("write failed: " + (partial_ / kBatchFile).string());
  }
  BatchRecord& rec = manifest_.batches[batch.posting];
  rec.offset = batch_bytes_written_;
  rec.compressed_size = frame.size();
  rec.uncompressed_size = batch.data.size();
  rec.line_count = batch.lines;
  batch_bytes_written_ += frame.size();
  uncompressed_bytes_ += batch.data.size();
  open_.erase(it);
}

void SegmentWriter::flush_temporary() {
  SketchBuildConfig cfg;
  cfg.signature_bits = config_.signature_bits;
  cfg.sample_interval = config_.sample_interval;
  cfg.gamma = config_.gamma;
  cfg.temporary = true;
  const Bytes bytes = build_sketch(sketch_, cfg);
  const fs::path path = partial_ / temp_name(temp_files_.size());
  write_file(path, bytes);
  temp_files_.push_back(path);
  sketch_ = MutableSketch(config_.capacity);
}

auto SegmentWriter::finish() -> SegmentSummary {
  if (finished_) {
    throw std::logic_error("segment already finished");
  }
  using Clock = std::chrono::steady_clock;

  auto t0 = Clock::now();
  std::vector<std::pair<PostingId, std::string>> remaining;
  for (const auto& [key, batch] : open_) {
    remaining.emplace_back(batch.posting, key);
  }
  std::sort(remaining.begin(), remaining.end());
  for (const auto& entry : remaining) {
    seal(entry.second);
  }
  batch_out_.close();
  if (!batch_out_) {
    throw std::runtime_error("write failed: " + (partial_ / kBatchFile).string());
  }
  manifest_.total_lines = total_lines_;
  write_file(partial_ / kManifestFile, manifest_.serialize());
  const auto data_time = Clock::now() - t0;

  t0 = Clock::now();
  SketchBuildConfig cfg;
  cfg.signature_bits = config_.signature_bits;
  cfg.sample_interval = config_.sample_interval;
  cfg.gamma = config_.gamma;
  cfg.capacity = std::max<std::uint32_t>(next_posting_, 1);
  SketchStats stats;
  if (temp_files_.empty()) {
    stats = sketch_.stats();
    write_file(partial_ / kSketchFile, build_sketch(sketch_, cfg));
  } else {
    if (sketch_.token_count() > 0) {
      flush_temporary();
    }
    std::vector<MappedFile> maps;
    std::vector<SketchReader> readers;
    maps.reserve(temp_files_.size());
    readers.reserve(temp_files_.size());
    for (const fs::path& p : temp_files_) {
      maps.emplace_back(p);
      readers.emplace_back(maps.back().bytes());
    }
    std::vector<const SketchReader*> ptrs;
    for (const SketchReader& r : readers) {
      ptrs.push_back(&r);
    }
    const MutableSketch merged = merge_segments(ptrs);
    stats = merged.stats();
    write_file(partial_ / kSketchFile, build_sketch(merged, cfg));
    readers.clear();
    maps.clear();
    for (const fs::path& p : temp_files_) {
      fs::remove(p);
    }
  }
  const auto sketch_time = Clock::now() - t0;

  fs::rename(partial_, dir_);
  finished_ = true;

  SegmentSummary s;
  s.path = dir_;
  s.lines = total_lines_;
  s.batches = next_posting_;
  s.data_bytes = batch_bytes_written_;
  s.uncompressed_bytes = uncompressed_bytes_;
  s.sketch_bytes = fs::file_size(dir_ / kSketchFile);
  s.flushes = temp_files_.size();
  s.sketch_stats = stats;
  s.timings.ingest_seconds = seconds(ingest_time_);
  s.timings.sketch_finish_seconds = seconds(sketch_time);
  s.timings.data_finish_seconds = seconds(data_time);
  return s;
}

// --- planning ---------------------------------------------------------------

auto mode_name(QueryPlan::Mode mode) -> std::string_view {
  switch (mode) {
    case QueryPlan::Mode::kTerm:
      return "term";
    case QueryPlan::Mode::kContains:
      return "contains";
    case QueryPlan::Mode::kScan:
      return "scan";
  }
  return "unknown";
}

auto plan_contains(std::string_view needle) -> QueryPlan {
  if (needle.empty()) {
    throw std::invalid_argument("empty contains needle");
  }
  QueryPlan plan;
  plan.needle = ascii_lowercase(needle);
  plan.tokens = contains_grams(needle);
  plan.mode = plan.tokens.empty() ? QueryPlan::Mode::kScan : QueryPlan::Mode::kContains;
  return plan;
}

auto plan_term(std::string_view term) -> QueryPlan {
  if (term.empty()) {
    throw std::invalid_argument("empty term");
  }
  QueryPlan plan;
  plan.needle = ascii_lowercase(term);
  plan.tokens = term_tokens(term);
  plan.mode = QueryPlan::Mode::kTerm;
  return plan;
}

// --- reader -----------------------------------------------------------------

Segment::Segment(const fs::path& dir) : dir_(dir) {
  const Bytes manifest = read_file(dir / kManifestFile);
  manifest_size_ = manifest.size();
  manifest_ = Manifest::parse(manifest);
  batches_ = MappedFile(dir / kBatchFile);
  for (const BatchRecord& b : manifest_.batches) {
    if (b.offset > batches_.size() || b.compressed_size > batches_.size() - b.offset) {
      throw std::runtime_error("manifest: batch record outside " + std::string(kBatchFile));
    }
  }
  sketch_file_ = MappedFile(dir / kSketchFile);
  sketch_.emplace(sketch_file_.bytes());
  if (sketch_->header().temporary()) {
    throw std::runtime_error("segment sketch is a temporary file");
  }
  if (sketch_->header().capacity < std::max<std::size_t>(manifest_.batches.size(), 1)) {
    throw std::runtime_error("sketch capacity does not cover the batches");
  }
}

void Segment::read_batch(PostingId posting, std::string& out) const {
  if (posting >= manifest_.batches.size()) {
    throw std::out_of_range("batch " + std::to_string(posting) + " does not exist");
  }
  const BatchRecord& b = manifest_.batches[posting];
  decompress(batches_.bytes().subspan(b.offset, b.compressed_size), manifest_.codec,
             b.uncompressed_size, out);
}

auto Segment::batch_lines(PostingId posting) const -> std::vector<std::string> {
  std::string data;
  read_batch(posting, data);
  std::vector<std::string> lines;
  std::size_t begin = 0;
  while (true) {
    const std::size_t nl = data.find('\n', begin);
    if (nl == std::string::npos) {
      lines.emplace_back(data.substr(begin));
      break;
    }
    lines.emplace_back(data.substr(begin, nl - begin));
    begin = nl + 1;
  }
  return lines;
}

auto Segment::candidates(const QueryPlan& plan) const -> std::vector<PostingId> {
  if (plan.mode == QueryPlan::Mode::kScan || plan.tokens.empty()) {
    std::vector<PostingId> all(manifest_.batches.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
      all[i] = static_cast<PostingId>(i);
    }
    return all;
  }
  std::vector<PostingId> result = intersect_all(*sketch_, plan.tokens);
  // The sketch may answer with postings of its full universe; only real
  // batches exist.
  std::erase_if(result, [&](PostingId p) { return p >= manifest_.batches.size(); });
  return result;
}

auto Segment::filter_batch(PostingId posting, const QueryPlan& plan, std::vector<Match>& out) const
    -> bool {
  std::string data;
  read_batch(posting, data);
  std::string lower;
  ascii_lowercase(data, lower);
  const HorspoolMatcher matcher(plan.needle);
  const std::string_view text(lower);
  bool any = false;
  std::size_t cursor = 0;  // newlines before `cursor` are counted in line_index
  std::uint32_t line_index = 0;
  std::size_t pos = 0;
  while ((pos = matcher.find(text, pos)) != HorspoolMatcher::npos) {
    line_index += static_cast<std::uint32_t>(std::count(text.begin() + cursor, text.begin() + pos, '\n'));
    std::size_t start = 0;
    if (pos > 0) {
      const std::size_t nl = text.rfind('\n', pos - 1);
      start = nl == std::string_view::npos ? 0 : nl + 1;
    }
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    const std::string_view line = text.substr(start, end - start);
    const bool hit = plan.mode != QueryPlan::Mode::kTerm || contains_whole_token(line, plan.needle);
    if (hit) {
      out.push_back(Match{posting, line_index, data.substr(start, end - start)});
      any = true;
    }
    cursor = pos;
    pos = end + 1;
    if (pos > text.size()) {
      break;
    }
  }
  return any;
}

auto Segment::run(const QueryPlan& plan, const std::vector<PostingId>& batches) const -> QueryResult {
  QueryResult result;
  result.stats.mode = plan.mode;
  result.stats.total_batches = manifest_.batches.size();
  result.stats.candidate_batches = batches.size();
  for (PostingId p : batches) {
    ++result.stats.decompressed_batches;
    if (!filter_batch(p, plan, result.matches)) {
      ++result.stats.false_positive_batches;
    }
  }
  return result;
}

auto Segment::execute_plan(const QueryPlan& plan) const -> QueryResult {
  return run(plan, candidates(plan));
}

auto Segment::query_term(std::string_view term) const -> QueryResult {
  return execute_plan(plan_term(term));
}

auto Segment::query_contains(std::string_view needle) const -> QueryResult {
  return execute_plan(plan_contains(needle));
}

auto Segment::scan_query(std::string_view needle) const -> QueryResult {
  QueryPlan plan = plan_contains(needle);
  plan.mode = QueryPlan::Mode::kScan;
  plan.tokens.clear();
  return execute_plan(plan);
}

auto Segment::scan_term(std::string_view term) const -> QueryResult {
  QueryPlan plan = plan_term(term);
  QueryResult result = run(plan, candidates(QueryPlan{}));
  return result;
}

auto Segment::error_rate(const QueryPlan& plan) const -> double {
  if (manifest_.batches.empty()) {
    return 0.0;
  }
  const QueryResult r = execute_plan(plan);
  return static_cast<double>(r.stats.false_positive_batches) /
         static_cast<double>(manifest_.batches.size());
}

}  // namespace dynawarp
