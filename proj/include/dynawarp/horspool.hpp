#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace dynawarp {

/// Boyer-Moore-Horspool substring search (bad-character rule only).
class HorspoolMatcher {
 public:
  explicit HorspoolMatcher(std::string_view pattern);

  /// First occurrence at or after `from`, or npos.
  [[nodiscard]] auto find(std::string_view text, std::size_t from = 0) const noexcept -> std::size_t;
  [[nodiscard]] auto pattern() const noexcept -> std::string_view { return pattern_; }

  static constexpr std::size_t npos = std::string_view::npos;

 private:
  std::string pattern_;
  std::array<std::size_t, 256> shift_{};
};

}  // namespace dynawarp
