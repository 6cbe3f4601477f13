#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dynawarp {

enum class CharClass : unsigned char { kAlnum, kPunct, kNonAscii };

[[nodiscard]] constexpr auto char_class(unsigned char c) noexcept -> CharClass {
  if (c >= 0x80) {
    return CharClass::kNonAscii;
  }
  const bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  return alnum ? CharClass::kAlnum : CharClass::kPunct;
}

[[nodiscard]] constexpr auto ascii_lower(unsigned char c) noexcept -> char {
  return static_cast<char>(c >= 'A' && c <= 'Z' ? c + ('a' - 'A') : c);
}

void ascii_lowercase(std::string_view in, std::string& out);
[[nodiscard]] auto ascii_lowercase(std::string_view in) -> std::string;

struct Run {
  std::size_t begin{0};
  std::size_t end{0};
  CharClass cls{CharClass::kAlnum};

  [[nodiscard]] auto size() const noexcept -> std::size_t { return end - begin; }
};

/// Maximal same-class runs of `text`.
void split_runs(std::string_view text, std::vector<Run>& out);

/// Log-line tokenizer. Produces (on the lowercased line):
///   1. maximal alphanumeric ASCII runs
///   2. maximal non-alphanumeric ASCII runs
///   3. maximal non-ASCII runs
///   4. alnum + one of [.:_-/@] + alnum composites
///   5. alnum . alnum . alnum composites
///   6. 3-grams of every alphanumeric run
///   7. 1-, 2- and 3-grams of every non-alphanumeric ASCII run
///   8. 2-grams (over code points) of every non-ASCII run
/// Rules 6-8 can be switched off. Reuses its buffers between lines; the
/// returned views point into the tokenizer and stay valid until the next call.
class Tokenizer {
 public:
  explicit Tokenizer(bool ngrams = true) : ngrams_(ngrams) {}

  /// Tokens of one line, duplicates included.
  auto tokens(std::string_view line) -> const std::vector<std::string_view>&;
  /// Rules 1-5 only (whole-token terms).
  auto top_level_tokens(std::string_view line) -> const std::vector<std::string_view>&;

 private:
  void run(std::string_view line, bool ngrams);

  bool ngrams_;
  std::string lowered_;
  std::vector<Run> runs_;
  std::vector<std::string_view> tokens_;
  std::vector<std::size_t> code_points_;
};

/// Sorted, duplicate-free token set of `line` under all eight rules.
[[nodiscard]] auto tokenize(std::string_view line) -> std::vector<std::string>;

/// Sorted, duplicate-free rule 1-5 tokens of `term`.
[[nodiscard]] auto term_tokens(std::string_view term) -> std::vector<std::string>;

/// Grams of `needle` that any line containing the needle must have indexed:
/// 3-grams inside alnum runs, 1/2/3-grams inside non-alnum ASCII runs and
/// 2-grams inside non-ASCII runs. Grams never cross a class boundary.
[[nodiscard]] auto contains_grams(std::string_view needle) -> std::vector<std::string>;

/// True iff lowercased `haystack` contains lowercased `term` at run
/// boundaries: the characters around the occurrence belong to a different
/// class than the term's first and last characters.
[[nodiscard]] auto contains_whole_token(std::string_view haystack_lower,
                                        std::string_view term_lower) -> bool;

}  // namespace dynawarp
