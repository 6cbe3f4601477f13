#include "dynawarp/bic.hpp"

#include <stdexcept>

namespace dynawarp {

namespace {

// Truncated binary code of v in [0, size). Values below 2^b - size use b - 1 bits.
void write_minimal(BitWriter& out, std::uint32_t v, std::uint32_t size) {
  if (size <= 1) {
    return;
  }
  const unsigned b = bit_width_of(size - 1);
  const std::uint32_t short_codes = (std::uint32_t{1} << b) - size;
  if (v < short_codes) {
    out.write(v, b - 1);
  } else {
    out.write(v + short_codes, b);
  }
}

void encode_range(std::span<const PostingId> xs, std::size_t l, std::size_t r, std::uint32_t lo,
                  std::uint32_t hi, BitWriter& out) {
  // Half-open index window [l, r).
  while (l < r) {
    const std::size_t m = l + (r - l - 1) / 2;
    const std::uint32_t range_lo = lo + static_cast<std::uint32_t>(m - l);
    const std::uint32_t range_hi = hi - static_cast<std::uint32_t>(r - 1 - m);
    const std::uint32_t x = xs[m];
    write_minimal(out, x - range_lo, range_hi - range_lo + 1);
    if (m > l) {
      encode_range(xs, l, m, lo, x - 1, out);
    }
    l = m + 1;
    lo = x + 1;
  }
}

class Decoder {
 public:
  Decoder(ByteView bits, std::uint64_t at, PostingId* out) : bits_(bits), pos_(at), out_(out) {}

  void decode_range(std::size_t l, std::size_t r, std::uint32_t lo, std::uint32_t hi) {
    while (l < r) {
      const std::size_t m = l + (r - l - 1) / 2;
      const std::uint32_t range_lo = lo + static_cast<std::uint32_t>(m - l);
      const std::uint32_t range_hi = hi - static_cast<std::uint32_t>(r - 1 - m);
      const std::uint32_t x = range_lo + read_minimal(range_hi - range_lo + 1);
      out_[m] = static_cast<PostingId>(x);
      if (m > l) {
        decode_range(l, m, lo, x - 1);
      }
      l = m + 1;
      lo = x + 1;
    }
  }

  [[nodiscard]] auto position() const noexcept -> std::uint64_t { return pos_; }

 private:
  auto read_minimal(std::uint32_t size) -> std::uint32_t {
    if (size <= 1) {
      return 0;
    }
    const unsigned b = bit_width_of(size - 1);
    const std::uint32_t short_codes = (std::uint32_t{1} << b) - size;
    auto v = static_cast<std::uint32_t>(checked_read_bits(bits_, pos_, b - 1));
    pos_ += b - 1;
    if (v < short_codes) {
      return v;
    }
    v = (v << 1) | static_cast<std::uint32_t>(checked_read_bits(bits_, pos_, 1));
    pos_ += 1;
    return v - short_codes;
  }

  ByteView bits_;
  std::uint64_t pos_;
  PostingId* out_;
};

}  // namespace

void bic_encode(std::span<const PostingId> postings, std::uint32_t lo, std::uint32_t hi,
                BitWriter& out) {
  if (postings.empty()) {
    return;
  }
  if (lo > hi || postings.front() < lo || postings.back() > hi) {
    throw std::invalid_argument("bic_encode: postings outside [lo, hi]");
  }
  for (std::size_t i = 1; i < postings.size(); ++i) {
    if (postings[i - 1] >= postings[i]) {
      throw std::invalid_argument("bic_encode: postings not strictly increasing");
    }
  }
  encode_range(postings, 0, postings.size(), lo, hi, out);
}

auto bic_encode(std::span<const PostingId> postings, std::uint32_t lo, std::uint32_t hi)
    -> BitWriter {
  BitWriter out;
  bic_encode(postings, lo, hi, out);
  return out;
}

auto bic_decode(ByteView bits, std::uint64_t at, std::uint32_t count, std::uint32_t lo,
                std::uint32_t hi) -> BicDecoded {
  if (count == 0) {
    return {};
  }
  if (lo > hi || count > hi - lo + 1) {
    throw std::invalid_argument("bic_decode: count exceeds value range");
  }
  BicDecoded result;
  result.postings.resize(count);
  Decoder decoder(bits, at, result.postings.data());
  decoder.decode_range(0, count, lo, hi);
  result.bits_consumed = decoder.position() - at;
  return result;
}

}  // namespace dynawarp
