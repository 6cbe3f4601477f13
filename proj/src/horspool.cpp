#include "dynawarp/horspool.hpp"

#include <cstring>

namespace dynawarp {

HorspoolMatcher::HorspoolMatcher(std::string_view pattern) : pattern_(pattern) {
  shift_.fill(pattern_.size());
  if (pattern_.empty()) {
    return;
  }
  for (std::size_t i = 0; i + 1 < pattern_.size(); ++i) {
    shift_[static_cast<unsigned char>(pattern_[i])] = pattern_.size() - 1 - i;
  }
}

auto HorspoolMatcher::find(std::string_view text, std::size_t from) const noexcept -> std::size_t {
  const std::size_t m = pattern_.size();
  if (m == 0) {
    return from <= text.size() ? from : npos;
  }
  if (text.size() < m) {
    return npos;
  }
  const char last = pattern_[m - 1];
  std::size_t pos = from;
  while (pos + m <= text.size()) {
    const char c = text[pos + m - 1];
    if (c == last && std::memcmp(text.data() + pos, pattern_.data(), m - 1) == 0) {
      return pos;
    }
    pos += shift_[static_cast<unsigned char>(c)];
  }
  return npos;
}

}  // namespace dynawarp
