#include "dynawarp/mphf.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dynawarp {

namespace {

constexpr std::size_t kPrefixBytes = 32;
constexpr std::size_t kLevelEntryBytes = 32;
constexpr std::uint32_t kWordsPerBlock = kMphfRankBlockBits / 64;

auto level_position(std::uint32_t key, std::uint64_t seed, std::uint64_t bit_length) noexcept
    -> std::uint64_t {
  const std::uint64_t h = mix64(static_cast<std::uint64_t>(key) ^ seed);
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(h) * bit_length) >> 64);
}

// Bit i of a level lives in word i / 64 at position 63 - i % 64, so that
// writing words big-endian gives the shared MSB-first byte layout.
auto word_mask(std::uint64_t i) noexcept -> std::uint64_t {
  return std::uint64_t{1} << (63 - (i & 63));
}

auto load_be_word(ByteView bytes, std::size_t offset) noexcept -> std::uint64_t {
  std::uint64_t w;
  std::memcpy(&w, bytes.data() + offset, 8);
  if constexpr (std::endian::native == std::endian::little) {
    w = byte_swap(w);
  }
  return w;
}

struct Level {
  std::uint64_t seed;
  std::uint64_t bit_length;
  std::vector<std::uint64_t> words;
};

}  // namespace

auto mphf_level_seed(std::uint32_t level) noexcept -> std::uint64_t {
  return mix64(0x6a09e667f3bcc909ULL + 0x9e3779b97f4a7c15ULL * (level + 1));
}

auto MphfView::size() const noexcept -> std::uint64_t {
  return bytes_.size() < kPrefixBytes ? 0 : load_le<std::uint64_t>(bytes_, 0);
}

auto MphfView::level_count() const noexcept -> std::uint32_t {
  return bytes_.size() < kPrefixBytes ? 0 : load_le<std::uint32_t>(bytes_, 8);
}

auto MphfView::fallback_count() const noexcept -> std::uint64_t {
  return bytes_.size() < kPrefixBytes ? 0 : load_le<std::uint64_t>(bytes_, 16);
}

void MphfView::validate() const {
  if (bytes_.empty()) {
    return;  // empty function
  }
  if (bytes_.size() < kPrefixBytes) {
    throw std::out_of_range("mphf: section shorter than its fixed prefix");
  }
  const std::uint32_t levels = level_count();
  const std::uint64_t fallback_count = this->fallback_count();
  const auto fallback_offset = load_le<std::uint64_t>(bytes_, 24);
  if (levels > kMphfMaxLevels ||
      kPrefixBytes + static_cast<std::uint64_t>(levels) * kLevelEntryBytes > bytes_.size() ||
      fallback_offset > bytes_.size() || fallback_count > (bytes_.size() - fallback_offset) / 8) {
    throw std::out_of_range("mphf: level table or fallback outside section");
  }
  for (std::uint32_t l = 0; l < levels; ++l) {
    const std::size_t entry = kPrefixBytes + l * kLevelEntryBytes;
    const auto bit_length = load_le<std::uint64_t>(bytes_, entry + 8);
    const auto rank_offset = load_le<std::uint64_t>(bytes_, entry + 16);
    const auto bits_offset = load_le<std::uint64_t>(bytes_, entry + 24);
    const std::uint64_t blocks = (bit_length + kMphfRankBlockBits - 1) / kMphfRankBlockBits;
    if (bit_length == 0 || bit_length % 64 != 0 || rank_offset > bytes_.size() ||
        blocks > (bytes_.size() - rank_offset) / 8 || bits_offset > bytes_.size() ||
        bit_length / 8 > bytes_.size() - bits_offset) {
      throw std::out_of_range("mphf: level data outside section");
    }
  }
}

auto MphfView::level_bits() const noexcept -> std::uint64_t {
  std::uint64_t total = 0;
  const std::uint32_t levels = level_count();
  for (std::uint32_t l = 0; l < levels; ++l) {
    const std::size_t entry = kPrefixBytes + l * kLevelEntryBytes;
    if (entry + kLevelEntryBytes > bytes_.size()) {
      break;
    }
    total += load_le<std::uint64_t>(bytes_, entry + 8);
  }
  return total;
}

auto MphfView::evaluate(TokenFingerprint key) const noexcept -> std::optional<std::uint64_t> {
  const std::size_t size = bytes_.size();
  if (size < kPrefixBytes || load_le<std::uint64_t>(bytes_, 0) == 0) {
    return std::nullopt;
  }
  const auto levels = load_le<std::uint32_t>(bytes_, 8);
  if (levels > kMphfMaxLevels || kPrefixBytes + std::size_t{levels} * kLevelEntryBytes > size) {
    return std::nullopt;
  }
  for (std::uint32_t l = 0; l < levels; ++l) {
    const std::size_t entry = kPrefixBytes + l * kLevelEntryBytes;
    const auto seed = load_le<std::uint64_t>(bytes_, entry);
    const auto bit_length = load_le<std::uint64_t>(bytes_, entry + 8);
    const auto rank_offset = load_le<std::uint64_t>(bytes_, entry + 16);
    const auto bits_offset = load_le<std::uint64_t>(bytes_, entry + 24);
    if (bit_length == 0 || bits_offset > size || bit_length / 8 > size - bits_offset) {
      return std::nullopt;
    }
    const std::uint64_t pos = level_position(key.value, seed, bit_length);
    const std::uint64_t word_index = pos / 64;
    const std::uint64_t word = load_be_word(bytes_, bits_offset + word_index * 8);
    if ((word & word_mask(pos)) == 0) {
      continue;
    }
    const std::uint64_t block = pos / kMphfRankBlockBits;
    if (rank_offset > size || block >= (size - rank_offset) / 8) {
      return std::nullopt;
    }
    std::uint64_t rank = load_le<std::uint64_t>(bytes_, rank_offset + block * 8);
    for (std::uint64_t w = block * kWordsPerBlock; w < word_index; ++w) {
      rank += static_cast<std::uint64_t>(std::popcount(load_be_word(bytes_, bits_offset + w * 8)));
    }
    const unsigned in_word = static_cast<unsigned>(pos & 63);
    if (in_word != 0) {
      rank += static_cast<std::uint64_t>(std::popcount(word >> (64 - in_word)));
    }
    return rank;
  }
  const auto fallback_count = load_le<std::uint64_t>(bytes_, 16);
  const auto fallback_offset = load_le<std::uint64_t>(bytes_, 24);
  if (fallback_offset > size || fallback_count > (size - fallback_offset) / 8) {
    return std::nullopt;
  }
  // Binary search the sorted fallback table.
  std::uint64_t lo = 0;
  std::uint64_t hi = fallback_count;
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    const auto k = load_le<std::uint32_t>(bytes_, fallback_offset + mid * 8);
    if (k < key.value) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo < fallback_count && load_le<std::uint32_t>(bytes_, fallback_offset + lo * 8) == key.value) {
    return load_le<std::uint32_t>(bytes_, fallback_offset + lo * 8 + 4);
  }
  return std::nullopt;
}

Mphf::Mphf(Bytes bytes) : bytes_(std::move(bytes)), view_(bytes_) { view_.validate(); }

Mphf::Mphf(Mphf&& other) noexcept : bytes_(std::move(other.bytes_)), view_(other.view_) {
  other.view_ = MphfView{};
}

auto Mphf::operator=(Mphf other) noexcept -> Mphf& {
  bytes_ = std::move(other.bytes_);
  view_ = other.view_;
  other.view_ = MphfView{};
  return *this;
}

auto mphf_build(std::span<const TokenFingerprint> keys, double gamma) -> Mphf {
  if (!(gamma >= 1.0)) {
    throw std::invalid_argument("mphf: gamma must be >= 1");
  }
  std::vector<std::uint32_t> remaining;
  remaining.reserve(keys.size());
  for (TokenFingerprint k : keys) {
    remaining.push_back(k.value);
  }
  std::sort(remaining.begin(), remaining.end());
  if (std::adjacent_find(remaining.begin(), remaining.end()) != remaining.end()) {
    throw std::invalid_argument("mphf: duplicate keys");
  }
  const std::uint64_t n = remaining.size();
  if (n == 0) {
    return Mphf{};
  }

  std::vector<Level> levels;
  std::vector<std::uint32_t> next;
  for (std::uint32_t l = 0; l < kMphfMaxLevels && !remaining.empty(); ++l) {
    Level level;
    level.seed = mphf_level_seed(l);
    const auto wanted = static_cast<std::uint64_t>(std::ceil(gamma * static_cast<double>(remaining.size())));
    level.bit_length = std::max<std::uint64_t>(64, (wanted + 63) / 64 * 64);
    const std::size_t words = level.bit_length / 64;
    std::vector<std::uint64_t> seen(words, 0);
    std::vector<std::uint64_t> collided(words, 0);
    for (std::uint32_t key : remaining) {
      const std::uint64_t pos = level_position(key, level.seed, level.bit_length);
      const std::uint64_t mask = word_mask(pos);
      if (seen[pos / 64] & mask) {
        collided[pos / 64] |= mask;
      } else {
        seen[pos / 64] |= mask;
      }
    }
    level.words.resize(words);
    for (std::size_t w = 0; w < words; ++w) {
      level.words[w] = seen[w] & ~collided[w];
    }
    next.clear();
    for (std::uint32_t key : remaining) {
      const std::uint64_t pos = level_position(key, level.seed, level.bit_length);
      if (collided[pos / 64] & word_mask(pos)) {
        next.push_back(key);
      }
    }
    levels.push_back(std::move(level));
    remaining.swap(next);
  }

  ByteWriter out;
  out.put<std::uint64_t>(n);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(levels.size()));
  out.put<std::uint32_t>(0);
  out.put<std::uint64_t>(remaining.size());
  const std::size_t fallback_offset_field = out.size();
  out.put<std::uint64_t>(0);
  const std::size_t table = out.size();
  for (std::size_t l = 0; l < levels.size(); ++l) {
    out.put<std::uint64_t>(levels[l].seed);
    out.put<std::uint64_t>(levels[l].bit_length);
    out.put<std::uint64_t>(0);
    out.put<std::uint64_t>(0);
  }
  std::uint64_t rank = 0;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const Level& level = levels[l];
    out.put_at<std::uint64_t>(table + l * kLevelEntryBytes + 16, out.size());
    for (std::size_t w = 0; w < level.words.size(); ++w) {
      if (w % kWordsPerBlock == 0) {
        std::uint64_t block_rank = rank;
        for (std::size_t v = w; v < level.words.size() && v < w + kWordsPerBlock; ++v) {
          rank += static_cast<std::uint64_t>(std::popcount(level.words[v]));
        }
        out.put<std::uint64_t>(block_rank);
      }
    }
    out.put_at<std::uint64_t>(table + l * kLevelEntryBytes + 24, out.size());
    for (std::uint64_t word : level.words) {
      for (int shift = 56; shift >= 0; shift -= 8) {
        out.put<std::uint8_t>(static_cast<std::uint8_t>(word >> shift));
      }
    }
  }
  out.put_at<std::uint64_t>(fallback_offset_field, out.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) {
    out.put<std::uint32_t>(remaining[i]);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(rank + i));
  }
  return Mphf{out.take()};
}

}  // namespace dynawarp
