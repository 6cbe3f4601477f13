#include "dynawarp/bits.hpp"

#include <stdexcept>

namespace dynawarp {

void BitWriter::write(std::uint64_t value, unsigned width) {
  if (width == 0) {
    return;
  }
  if (width < 64) {
    value &= (std::uint64_t{1} << width) - 1;
  }
  while (width > 0) {
    const unsigned used = static_cast<unsigned>(bit_length_ & 7);
    if (used == 0) {
      bytes_.push_back(0);
    }
    const unsigned room = 8 - used;
    const unsigned take = width < room ? width : room;
    const auto chunk = static_cast<std::uint8_t>((value >> (width - take)) & ((1u << take) - 1));
    bytes_.back() |= static_cast<std::uint8_t>(chunk << (room - take));
    width -= take;
    bit_length_ += take;
  }
}

void BitWriter::write_bit(bool bit) { write(bit ? 1 : 0, 1); }

namespace {

auto load_be64_partial(ByteView bytes, std::size_t byte_index) noexcept -> std::uint64_t {
  std::uint64_t word = 0;
  const std::size_t avail = bytes.size() - byte_index;
  if (avail >= 8) {
    std::memcpy(&word, bytes.data() + byte_index, 8);
    if constexpr (std::endian::native == std::endian::little) {
      word = byte_swap(word);
    }
    return word;
  }
  for (std::size_t i = 0; i < avail; ++i) {
    word |= static_cast<std::uint64_t>(bytes[byte_index + i]) << (56 - 8 * i);
  }
  return word;
}

}  // namespace

auto read_bits(ByteView bytes, std::uint64_t bit_offset, unsigned width) noexcept
    -> std::uint64_t {
  if (width == 0) {
    return 0;
  }
  const std::size_t byte_index = bit_offset >> 3;
  const unsigned shift = static_cast<unsigned>(bit_offset & 7);
  if (width + shift <= 64) {
    const std::uint64_t word = load_be64_partial(bytes, byte_index) << shift;
    return word >> (64 - width);
  }
  // Spans nine bytes: split in two reads.
  const unsigned high_width = width - 32;
  const std::uint64_t high = read_bits(bytes, bit_offset, high_width);
  const std::uint64_t low = read_bits(bytes, bit_offset + high_width, 32);
  return (high << 32) | low;
}

auto checked_read_bits(ByteView bytes, std::uint64_t bit_offset, unsigned width)
    -> std::uint64_t {
  if (width > 64 || bit_offset + width > static_cast<std::uint64_t>(bytes.size()) * 8) {
    throw std::out_of_range("bit read past end of sequence");
  }
  return read_bits(bytes, bit_offset, width);
}

}  // namespace dynawarp
