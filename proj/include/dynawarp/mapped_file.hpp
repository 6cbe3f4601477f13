#pragma once

#include <filesystem>

#include "dynawarp/bits.hpp"

namespace dynawarp {

/// Read-only memory mapping of a whole file. Pages are loaded on demand by
/// the operating system; an empty file maps to an empty view.
class MappedFile {
 public:
  MappedFile() = default;
  explicit MappedFile(const std::filesystem::path& path);
  ~MappedFile();

  MappedFile(const MappedFile&) = delete;
  auto operator=(const MappedFile&) -> MappedFile& = delete;
  MappedFile(MappedFile&& other) noexcept;
  auto operator=(MappedFile&& other) noexcept -> MappedFile&;

  [[nodiscard]] auto bytes() const noexcept -> ByteView {
    return {static_cast<const std::uint8_t*>(data_), size_};
  }
  [[nodiscard]] auto size() const noexcept -> std::size_t { return size_; }

 private:
  void reset() noexcept;

  void* data_{nullptr};
  std::size_t size_{0};
};

/// Writes `bytes` to `path` atomically (temporary file + rename).
void write_file(const std::filesystem::path& path, ByteView bytes);
[[nodiscard]] auto read_file(const std::filesystem::path& path) -> Bytes;

}  // namespace dynawarp
