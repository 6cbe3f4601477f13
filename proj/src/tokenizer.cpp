#include "dynawarp/tokenizer.hpp"

#include <algorithm>

namespace dynawarp {

namespace {

constexpr auto is_composite_separator(char c) noexcept -> bool {
  return c == '.' || c == ':' || c == '_' || c == '-' || c == '/' || c == '@';
}

constexpr auto is_continuation(unsigned char c) noexcept -> bool { return (c & 0xc0) == 0x80; }

constexpr auto sequence_length(unsigned char lead) noexcept -> std::size_t {
  if ((lead & 0xe0) == 0xc0) {
    return 2;
  }
  if ((lead & 0xf0) == 0xe0) {
    return 3;
  }
  if ((lead & 0xf8) == 0xf0) {
    return 4;
  }
  return 1;
}

auto sorted_unique(const std::vector<std::string_view>& views) -> std::vector<std::string> {
  std::vector<std::string> out(views.begin(), views.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

void ascii_lowercase(std::string_view in, std::string& out) {
  out.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = ascii_lower(static_cast<unsigned char>(in[i]));
  }
}

auto ascii_lowercase(std::string_view in) -> std::string {
  std::string out;
  ascii_lowercase(in, out);
  return out;
}

void split_runs(std::string_view text, std::vector<Run>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < text.size()) {
    const CharClass cls = char_class(static_cast<unsigned char>(text[i]));
    std::size_t j = i + 1;
    while (j < text.size() && char_class(static_cast<unsigned char>(text[j])) == cls) {
      ++j;
    }
    out.push_back(Run{i, j, cls});
    i = j;
  }
}

void Tokenizer::run(std::string_view line, bool ngrams) {
  ascii_lowercase(line, lowered_);
  split_runs(lowered_, runs_);
  tokens_.clear();
  const std::string_view text(lowered_);
  auto emit = [&](std::size_t begin, std::size_t end) { tokens_.push_back(text.substr(begin, end - begin)); };

  for (std::size_t r = 0; r < runs_.size(); ++r) {
    const Run& run = runs_[r];
    emit(run.begin, run.end);  // rules 1-3
    if (run.cls != CharClass::kAlnum) {
      if (ngrams && run.cls == CharClass::kPunct) {  // rule 7
        for (std::size_t n = 1; n <= 3; ++n) {
          for (std::size_t s = run.begin; s + n <= run.end; ++s) {
            emit(s, s + n);
          }
        }
      } else if (ngrams) {  // rule 8, over code points
        code_points_.clear();
        for (std::size_t s = run.begin; s < run.end; ++s) {
          if (!is_continuation(static_cast<unsigned char>(text[s]))) {
            code_points_.push_back(s);
          }
        }
        code_points_.push_back(run.end);
        for (std::size_t k = 0; k + 2 < code_points_.size(); ++k) {
          emit(code_points_[k], code_points_[k + 2]);
        }
      }
      continue;
    }
    if (ngrams) {  // rule 6
      for (std::size_t s = run.begin; s + 3 <= run.end; ++s) {
        emit(s, s + 3);
      }
    }
    // Rules 4 and 5 start at an alnum run followed by single separators.
    if (r + 2 < runs_.size() && runs_[r + 1].size() == 1 &&
        is_composite_separator(text[runs_[r + 1].begin]) && runs_[r + 2].cls == CharClass::kAlnum) {
      emit(run.begin, runs_[r + 2].end);
      if (r + 4 < runs_.size() && text[runs_[r + 1].begin] == '.' && runs_[r + 3].size() == 1 &&
          text[runs_[r + 3].begin] == '.' && runs_[r + 4].cls == CharClass::kAlnum) {
        emit(run.begin, runs_[r + 4].end);
      }
    }
  }
}

auto Tokenizer::tokens(std::string_view line) -> const std::vector<std::string_view>& {
  run(line, ngrams_);
  return tokens_;
}

auto Tokenizer::top_level_tokens(std::string_view line) -> const std::vector<std::string_view>& {
  run(line, false);
  return tokens_;
}

auto tokenize(std::string_view line) -> std::vector<std::string> {
  Tokenizer tokenizer;
  return sorted_unique(tokenizer.tokens(line));
}

auto term_tokens(std::string_view term) -> std::vector<std::string> {
  Tokenizer tokenizer;
  return sorted_unique(tokenizer.top_level_tokens(term));
}

auto contains_grams(std::string_view needle) -> std::vector<std::string> {
  const std::string lowered = ascii_lowercase(needle);
  std::vector<Run> runs;
  split_runs(lowered, runs);
  std::vector<std::string_view> grams;
  const std::string_view text(lowered);
  for (const Run& run : runs) {
    switch (run.cls) {
      case CharClass::kAlnum:
        for (std::size_t s = run.begin; s + 3 <= run.end; ++s) {
          grams.push_back(text.substr(s, 3));
        }
        break;
      case CharClass::kPunct:
        for (std::size_t n = 1; n <= 3; ++n) {
          for (std::size_t s = run.begin; s + n <= run.end; ++s) {
            grams.push_back(text.substr(s, n));
          }
        }
        break;
      case CharClass::kNonAscii: {
        std::vector<std::size_t> starts;
        for (std::size_t s = run.begin; s < run.end; ++s) {
          if (!is_continuation(static_cast<unsigned char>(text[s]))) {
            starts.push_back(s);
          }
        }
        // A code point cut off by the needle's end never matches an indexed gram.
        std::size_t end = run.end;
        if (!starts.empty() && starts.back() + sequence_length(static_cast<unsigned char>(text[starts.back()])) > end) {
          end = starts.back();
          starts.pop_back();
        }
        starts.push_back(end);
        for (std::size_t k = 0; k + 2 < starts.size(); ++k) {
          grams.push_back(text.substr(starts[k], starts[k + 2] - starts[k]));
        }
        break;
      }
    }
  }
  return sorted_unique(grams);
}

auto contains_whole_token(std::string_view haystack_lower, std::string_view term_lower) -> bool {
  if (term_lower.empty()) {
    return false;
  }
  const CharClass first = char_class(static_cast<unsigned char>(term_lower.front()));
  const CharClass last = char_class(static_cast<unsigned char>(term_lower.back()));
  for (std::size_t pos = haystack_lower.find(term_lower); pos != std::string_view::npos;
       pos = haystack_lower.find(term_lower, pos + 1)) {
    const std::size_t end = pos + term_lower.size();
    const bool left_ok =
        pos == 0 || char_class(static_cast<unsigned char>(haystack_lower[pos - 1])) != first;
    const bool right_ok = end == haystack_lower.size() ||
                          char_class(static_cast<unsigned char>(haystack_lower[end])) != last;
    if (left_ok && right_ok) {
      return true;
    }
  }
  return false;
}

}  // namespace dynawarp
