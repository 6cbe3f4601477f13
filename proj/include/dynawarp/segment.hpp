#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dynawarp/compression.hpp"
#include "dynawarp/mapped_file.hpp"
#include "dynawarp/mutable_sketch.hpp"
#include "dynawarp/sketch_file.hpp"
#include "dynawarp/tokenizer.hpp"

namespace dynawarp {

inline constexpr std::string_view kManifestFile = "manifest.dwm";
inline constexpr std::string_view kBatchFile = "batches.dwb";
inline constexpr std::string_view kSketchFile = "sketch.dwsk";
inline constexpr std::uint16_t kManifestVersion = 1;

struct StoreConfig {
  std::uint32_t capacity{kMaxCapacity};
  std::uint32_t batch_lines{1024};
  std::size_t batch_bytes{256 * 1024};
  std::uint8_t signature_bits{8};
  std::uint32_t sample_interval{kDefaultSampleInterval};
  /// Mutable-sketch memory estimate that triggers a temporary flush; 0 = unlimited.
  std::size_t memory_limit{0};
  bool group_by_source{false};
  std::size_t max_open_sources{16};
  Codec codec{Codec::kZstd};
  int compression_level{kDefaultZstdLevel};
  /// Index rules 6-8 (n-grams); required for sketch-pruned contains queries.
  bool ngrams{true};
  double gamma{kDefaultGamma};

  /// Throws std::invalid_argument describing the first invalid field.
  void validate() const;
};

struct LogRecord {
  std::string line;
  std::optional<std::string> source_id;
};

struct BatchRecord {
  std::uint64_t offset{0};
  std::uint64_t compressed_size{0};
  std::uint64_t uncompressed_size{0};
  std::uint32_t line_count{0};
};

struct Manifest {
  Codec codec{Codec::kZstd};
  /// Whether lines were indexed with the n-gram rules.
  bool ngrams{true};
  std::uint32_t capacity{kMaxCapacity};
  std::uint64_t total_lines{0};
  std::vector<BatchRecord> batches;  // indexed by posting

  [[nodiscard]] auto serialize() const -> Bytes;
  /// Throws std::runtime_error on a malformed manifest.
  [[nodiscard]] static auto parse(ByteView bytes) -> Manifest;
};

/// Thrown when opening another batch would exceed the posting capacity.
class SegmentFullError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IngestTimings {
  double ingest_seconds{0};
  double sketch_finish_seconds{0};
  double data_finish_seconds{0};
};

struct SegmentSummary {
  std::filesystem::path path;
  std::uint64_t lines{0};
  std::uint64_t batches{0};
  std::uint64_t data_bytes{0};
  std::uint64_t uncompressed_bytes{0};
  std::uint64_t sketch_bytes{0};
  std::uint64_t flushes{0};
  SketchStats sketch_stats;
  IngestTimings timings;
};

/// Mutable segment. Lines go to open batches (one batch = one posting);
/// every token of a line is added to the mutable sketch under the posting
/// of the batch that will hold the line. finish() seals everything, merges
/// temporary sketch flushes and writes the immutable segment directory.
///
/// Files are written under `<dir>.partial` and renamed into place by finish().
class SegmentWriter {
 public:
  SegmentWriter(std::filesystem::path dir, StoreConfig config);
  ~SegmentWriter();

  SegmentWriter(const SegmentWriter&) = delete;
  auto operator=(const SegmentWriter&) -> SegmentWriter& = delete;

  /// Embedded newlines split the record into several lines. Throws
  /// SegmentFullError (store unchanged) when a new batch is needed but the
  /// capacity is used up, std::logic_error after finish().
  void ingest(const LogRecord& record);
  void ingest(std::string_view line, std::string_view source_id = {});

  auto finish() -> SegmentSummary;

  [[nodiscard]] auto sketch() const noexcept -> const MutableSketch& { return sketch_; }
  [[nodiscard]] auto batch_count() const noexcept -> std::size_t { return next_posting_; }
  [[nodiscard]] auto flush_count() const noexcept -> std::size_t { return temp_files_.size(); }
  [[nodiscard]] auto finished() const noexcept -> bool { return finished_; }
  [[nodiscard]] auto line_count() const noexcept -> std::uint64_t { return total_lines_; }

 private:
  struct OpenBatch {
    PostingId posting{0};
    std::string data;
    std::uint32_t lines{0};
    std::uint64_t last_used{0};
  };

  void ingest_line(std::string_view line, std::string_view source_id);
  auto open_batch_for(std::string_view source_id) -> OpenBatch&;
  void seal(const std::string& key);
  void flush_temporary();

  std::filesystem::path dir_;
  std::filesystem::path partial_;
  StoreConfig config_;
  MutableSketch sketch_;
  Tokenizer tokenizer_;
  std::map<std::string, OpenBatch, std::less<>> open_;
  Manifest manifest_;
  std::ofstream batch_out_;
  std::uint64_t batch_bytes_written_{0};
  std::uint32_t next_posting_{0};
  std::uint64_t total_lines_{0};
  std::uint64_t uncompressed_bytes_{0};
  std::uint64_t tick_{0};
  std::vector<std::filesystem::path> temp_files_;
  bool finished_{false};
  std::chrono::steady_clock::duration ingest_time_{};
};

struct QueryPlan {
  enum class Mode { kTerm, kContains, kScan };

  Mode mode{Mode::kScan};
  /// Tokens that must all be present (AND). Empty under kScan.
  std::vector<std::string> tokens;
  /// Raw needle kept for post-filtering.
  std::string needle;
};

[[nodiscard]] auto mode_name(QueryPlan::Mode mode) -> std::string_view;

/// Throws std::invalid_argument on an empty needle.
[[nodiscard]] auto plan_contains(std::string_view needle) -> QueryPlan;
[[nodiscard]] auto plan_term(std::string_view term) -> QueryPlan;

struct Match {
  PostingId posting{0};
  std::uint32_t line_index{0};
  std::string line;

  friend bool operator==(const Match&, const Match&) = default;
};

struct QueryStats {
  QueryPlan::Mode mode{QueryPlan::Mode::kScan};
  std::uint64_t total_batches{0};
  std::uint64_t candidate_batches{0};
  std::uint64_t decompressed_batches{0};
  std::uint64_t false_positive_batches{0};
};

struct QueryResult {
  std::vector<Match> matches;  // ordered by (posting, line)
  QueryStats stats;
};

/// Finished, read-only segment. Safe for concurrent queries.
class Segment {
 public:
  /// Throws std::runtime_error / SketchFormatError on missing or damaged files.
  explicit Segment(const std::filesystem::path& dir);

  [[nodiscard]] auto query_term(std::string_view term) const -> QueryResult;
  [[nodiscard]] auto query_contains(std::string_view needle) const -> QueryResult;
  /// Brute-force contains over every batch; the exactness oracle.
  [[nodiscard]] auto scan_query(std::string_view needle) const -> QueryResult;
  /// Brute-force whole-token search over every batch.
  [[nodiscard]] auto scan_term(std::string_view term) const -> QueryResult;
  /// Runs a plan against the sketch (or every batch for kScan).
  [[nodiscard]] auto execute_plan(const QueryPlan& plan) const -> QueryResult;

  /// Candidate postings the sketch reports for `plan` (all batches for kScan).
  [[nodiscard]] auto candidates(const QueryPlan& plan) const -> std::vector<PostingId>;
  /// Candidate batches without a true match divided by the total batch count.
  [[nodiscard]] auto error_rate(const QueryPlan& plan) const -> double;

  [[nodiscard]] auto batch_lines(PostingId posting) const -> std::vector<std::string>;
  void read_batch(PostingId posting, std::string& out) const;

  [[nodiscard]] auto batch_count() const noexcept -> std::size_t { return manifest_.batches.size(); }
  [[nodiscard]] auto manifest() const noexcept -> const Manifest& { return manifest_; }
  [[nodiscard]] auto sketch() const noexcept -> const SketchReader& { return *sketch_; }
  [[nodiscard]] auto path() const noexcept -> const std::filesystem::path& { return dir_; }
  [[nodiscard]] auto data_bytes() const noexcept -> std::uint64_t { return batches_.size(); }
  [[nodiscard]] auto sketch_bytes() const noexcept -> std::uint64_t { return sketch_file_.size(); }
  [[nodiscard]] auto manifest_bytes() const noexcept -> std::uint64_t { return manifest_size_; }

 private:
  /// Appends matching lines of one batch; returns true iff any matched.
  auto filter_batch(PostingId posting, const QueryPlan& plan, std::vector<Match>& out) const -> bool;
  auto run(const QueryPlan& plan, const std::vector<PostingId>& batches) const -> QueryResult;

  std::filesystem::path dir_;
  Manifest manifest_;
  std::uint64_t manifest_size_{0};
  MappedFile batches_;
  MappedFile sketch_file_;
  std::optional<SketchReader> sketch_;
};

}  // namespace dynawarp
