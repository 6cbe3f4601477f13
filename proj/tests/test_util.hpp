#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dynawarp/hashing.hpp"
#include "dynawarp/mutable_sketch.hpp"

namespace dynawarp::testing {

/// Four example log lines, one per posting.
inline const std::vector<std::string> kExampleLines{
    "INFO: Connection to host established",
    "INFO: Start processing",
    "ERROR: Host connection terminated",
    "INFO: Restart triggered",
};

/// Lowercased alphanumeric words.
inline auto words(const std::string& line) -> std::vector<std::string> {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) {
    out.push_back(cur);
  }
  return out;
}

/// Mutable sketch of the example lines, word-tokenized, line i -> posting i.
inline auto example_sketch() -> MutableSketch {
  MutableSketch sketch(16);
  for (std::size_t i = 0; i < kExampleLines.size(); ++i) {
    for (const std::string& w : words(kExampleLines[i])) {
      sketch.add(fingerprint(w), static_cast<PostingId>(i));
    }
  }
  return sketch;
}

/// Reference index: fingerprint -> sorted posting set.
using OracleIndex = std::map<std::uint32_t, std::vector<PostingId>>;

inline void oracle_add(OracleIndex& oracle, TokenFingerprint fp, PostingId p) {
  auto& v = oracle[fp.value];
  const auto it = std::lower_bound(v.begin(), v.end(), p);
  if (it == v.end() || *it != p) {
    v.insert(it, p);
  }
}

inline auto distinct_sets(const OracleIndex& oracle) -> std::size_t {
  std::set<std::vector<PostingId>> sets;
  for (const auto& [fp, v] : oracle) {
    sets.insert(v);
  }
  return sets.size();
}

/// Random token stream over a skewed vocabulary; fills `oracle` alongside.
inline auto random_sketch(std::size_t adds, std::uint32_t capacity, std::size_t vocabulary,
                          std::uint64_t seed, OracleIndex& oracle) -> MutableSketch {
  std::mt19937_64 rng(seed);
  MutableSketch sketch(capacity);
  for (std::size_t i = 0; i < adds; ++i) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto word = static_cast<std::uint64_t>(static_cast<double>(vocabulary) * u * u);
    const TokenFingerprint fp{static_cast<std::uint32_t>(mix64(word + 1))};
    // Popular words spread over many postings, rare ones cluster.
    const auto p = static_cast<PostingId>(word < vocabulary / 20 ? rng() % capacity
                                                                 : (word * 7 + rng() % 3) % capacity);
    sketch.add(fp, p);
    oracle_add(oracle, fp, p);
  }
  return sketch;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("dynawarp-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  auto operator=(const TempDir&) -> TempDir& = delete;

  [[nodiscard]] auto path() const -> const std::filesystem::path& { return path_; }
  [[nodiscard]] auto operator/(const std::string& name) const -> std::filesystem::path { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace dynawarp::testing
