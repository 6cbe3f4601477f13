#include "dynawarp/compression.hpp"

#include <zstd.h>

#include <stdexcept>

namespace dynawarp {

auto codec_name(Codec codec) -> std::string_view {
  switch (codec) {
    case Codec::kNone:
      return "none";
    case Codec::kZstd:
      return "zstd";
  }
  return "unknown";
}

auto parse_codec(std::string_view name) -> Codec {
  if (name == "none") {
    return Codec::kNone;
  }
  if (name == "zstd") {
    return Codec::kZstd;
  }
  throw std::invalid_argument("unknown codec '" + std::string(name) + "'");
}

auto compress(std::string_view data, Codec codec, int level) -> Bytes {
  if (codec == Codec::kNone) {
    return Bytes(data.begin(), data.end());
  }
  Bytes out(ZSTD_compressBound(data.size()));
  const std::size_t n = ZSTD_compress(out.data(), out.size(), data.data(), data.size(), level);
  if (ZSTD_isError(n)) {
    throw std::runtime_error(std::string("zstd compression failed: ") + ZSTD_getErrorName(n));
  }
  out.resize(n);
  return out;
}

void decompress(ByteView frame, Codec codec, std::size_t uncompressed_size, std::string& out) {
  out.resize(uncompressed_size);
  if (codec == Codec::kNone) {
    if (frame.size() != uncompressed_size) {
      throw std::runtime_error("stored batch size mismatch");
    }
    std::copy(frame.begin(), frame.end(), out.begin());
    return;
  }
  const std::size_t n = ZSTD_decompress(out.data(), out.size(), frame.data(), frame.size());
  if (ZSTD_isError(n)) {
    throw std::runtime_error(std::string("zstd decompression failed: ") + ZSTD_getErrorName(n));
  }
  if (n != uncompressed_size) {
    throw std::runtime_error("decompressed batch size mismatch");
  }
}

}  // namespace dynawarp
