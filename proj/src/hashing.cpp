#include "dynawarp/hashing.hpp"

#include <cstring>
#include <stdexcept>

namespace dynawarp {

namespace {

constexpr std::uint64_t kSeedBasis = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kWordMultiplier = 0x100000001b3ULL * 0x2545f4914f6cdd1dULL;

}  // namespace

auto hash_bytes64(std::string_view bytes) noexcept -> std::uint64_t {
  // Polynomial accumulation over little-endian 8-byte words, then the
  // length and a final avalanche.
  std::uint64_t h = kSeedBasis;
  const char* data = bytes.data();
  std::size_t remaining = bytes.size();
  while (remaining >= 8) {
    std::uint64_t word;
    std::memcpy(&word, data, 8);
    h = (h ^ mix64(word)) * kWordMultiplier;
    h ^= h >> 29;
    data += 8;
    remaining -= 8;
  }
  std::uint64_t tail = 0;
  for (std::size_t i = 0; i < remaining; ++i) {
    tail |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[i])) << (8 * i);
  }
  h = (h ^ tail) * kWordMultiplier;
  h ^= static_cast<std::uint64_t>(bytes.size()) * kSeedBasis;
  return mix64(h);
}

auto fingerprint(std::string_view token) -> TokenFingerprint {
  if (token.empty()) {
    throw std::invalid_argument("fingerprint: empty token");
  }
  return TokenFingerprint{static_cast<std::uint32_t>(hash_bytes64(token))};
}

auto postings_hash(std::span<const PostingId> postings) noexcept -> PostingsHash {
  PostingsHash h{};
  for (PostingId p : postings) {
    h = extend_hash(h, p);
  }
  return h;
}

auto postings_hash(std::initializer_list<PostingId> postings) noexcept -> PostingsHash {
  return postings_hash(std::span<const PostingId>(postings.begin(), postings.size()));
}

}  // namespace dynawarp
