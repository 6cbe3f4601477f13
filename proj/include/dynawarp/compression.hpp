#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "dynawarp/bits.hpp"

namespace dynawarp {

enum class Codec : std::uint16_t { kNone = 0, kZstd = 1 };

inline constexpr int kDefaultZstdLevel = 3;

[[nodiscard]] auto codec_name(Codec codec) -> std::string_view;
/// Throws std::invalid_argument for an unknown name ("none" or "zstd").
[[nodiscard]] auto parse_codec(std::string_view name) -> Codec;

[[nodiscard]] auto compress(std::string_view data, Codec codec, int level = kDefaultZstdLevel) -> Bytes;
/// Throws std::runtime_error on a corrupt frame or size mismatch.
void decompress(ByteView frame, Codec codec, std::size_t uncompressed_size, std::string& out);

}  // namespace dynawarp
