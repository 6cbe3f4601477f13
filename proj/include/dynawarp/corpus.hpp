#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dynawarp/segment.hpp"

namespace dynawarp {

/// Deterministic generator of LogHub-style lines (HDFS, OpenSSH, Apache,
/// Spark, ZooKeeper, OpenStack, BGL and a few non-ASCII messages). Field
/// values are drawn from skewed pools so identifiers recur the way they do
/// in real logs.
class CorpusGenerator {
 public:
  explicit CorpusGenerator(std::uint64_t seed = 1);

  auto next() -> LogRecord;

 private:
  void expand(std::string_view pattern, std::string& out);
  auto skewed(std::size_t pool) -> std::size_t;
  auto ip() -> std::string;
  auto block() -> std::string;
  auto uuid() -> std::string;
  void advance_clock();

  std::mt19937_64 rng_;
  std::vector<std::string> ips_;
  std::vector<std::string> users_;
  std::vector<std::string> nodes_;
  std::vector<std::string> recent_blocks_;
  std::vector<std::string> recent_uuids_;
  std::uint64_t clock_ms_{1'445'191'307'000};  // 2015-10-18 18:01:47
  std::uint32_t tid_{0};
};

[[nodiscard]] auto generate_corpus(std::size_t lines, std::uint64_t seed = 1) -> std::vector<LogRecord>;

/// `count` distinct strings of `length` random lowercase letters.
[[nodiscard]] auto random_ids(std::size_t count, std::uint64_t seed, std::size_t length = 16)
    -> std::vector<std::string>;

struct BenchQuery {
  std::string query_class;  // e.g. "id", "ip", "extracted"
  QueryPlan::Mode kind{QueryPlan::Mode::kTerm};  // kTerm or kContains
  std::string text;

  friend bool operator==(const BenchQuery&, const BenchQuery&) = default;
};

/// Query mix over `lines`: random 16-letter IDs (contains), IP terms drawn
/// from the lines, and terms extracted from random lines (3-character alnum
/// terms excluded); `per_class` each.
[[nodiscard]] auto make_queries(const std::vector<LogRecord>& lines, std::size_t per_class,
                                std::uint64_t seed) -> std::vector<BenchQuery>;

/// One query per line: `class \t term|contains \t text`.
[[nodiscard]] auto format_queries(const std::vector<BenchQuery>& queries) -> std::string;
/// Skips blank lines and lines starting with '#'. Throws std::invalid_argument
/// naming the offending line number.
[[nodiscard]] auto parse_queries(std::string_view text) -> std::vector<BenchQuery>;

}  // namespace dynawarp
