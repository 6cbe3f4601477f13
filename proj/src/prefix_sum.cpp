#include "dynawarp/prefix_sum.hpp"

#include <algorithm>
#include <stdexcept>

namespace dynawarp {

auto build_prefix_sum(std::span<const std::uint32_t> lengths, std::uint32_t sample_interval)
    -> PrefixSumData {
  if (sample_interval == 0) {
    throw std::invalid_argument("prefix sum: sample interval must be positive");
  }
  PrefixSumData out;
  out.count = lengths.size();
  out.sample_interval = sample_interval;
  std::uint32_t max_len = 0;
  for (std::uint32_t len : lengths) {
    if (len == 0) {
      throw std::invalid_argument("prefix sum: entry length must be >= 1");
    }
    max_len = std::max(max_len, len);
  }
  out.width = static_cast<std::uint8_t>(bit_width_of(max_len));

  BitWriter bits;
  ByteWriter samples;
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (i % sample_interval == 0) {
      samples.put<std::uint64_t>(offset);
    }
    bits.write(lengths[i], out.width);
    offset += lengths[i];
  }
  out.lengths = bits.take_bytes();
  out.samples = samples.take();
  return out;
}

PrefixSumView::PrefixSumView(ByteView lengths, ByteView samples, std::uint64_t count,
                             std::uint8_t width, std::uint32_t sample_interval)
    : lengths_(lengths), samples_(samples), count_(count), width_(width),
      interval_(sample_interval) {
  if (count_ > 0 && interval_ == 0) {
    throw std::invalid_argument("prefix sum: sample interval must be positive");
  }
  if (static_cast<std::uint64_t>(lengths_.size()) * 8 < count_ * width_ ||
      samples_.size() / 8 < (count_ + interval_ - 1) / std::max<std::uint32_t>(interval_, 1)) {
    throw std::out_of_range("prefix sum: sections too small for entry count");
  }
}

auto PrefixSumView::entry(std::uint64_t i) const -> PrefixEntry {
  if (i >= count_) {
    throw std::out_of_range("prefix sum: entry index out of range");
  }
  const std::uint64_t block = i / interval_;
  std::uint64_t offset = load_le<std::uint64_t>(samples_, block * 8);
  for (std::uint64_t j = block * interval_; j < i; ++j) {
    offset += length(j);
  }
  return PrefixEntry{offset, length(i)};
}

}  // namespace dynawarp
