#include "claimgraph/text.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace claimgraph::text {

namespace {

template <typename Fn>
void for_each_code_point(std::string_view s, Fn&& fn) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(s.data());
  const auto length = static_cast<std::int32_t>(s.size());
  std::int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) {
      c = 0xFFFD;
    }
    fn(c);
  }
}

void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  std::int32_t len = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<std::uint8_t*>(buf), len, U8_MAX_LENGTH, c, error);
  if (!error) {
    out.append(buf, static_cast<std::size_t>(len));
  }
}

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) != 0; }

}  // namespace

std::size_t char_count(std::string_view utf8) {
  std::size_t n = 0;
  for_each_code_point(utf8, [&](UChar32) { ++n; });
  return n;
}

bool has_non_whitespace(std::string_view utf8) {
  bool found = false;
  for_each_code_point(utf8, [&](UChar32 c) { found = found || !is_space(c); });
  return found;
}

std::string alnum_fold(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  for_each_code_point(utf8, [&](UChar32 c) {
    if (u_isalnum(c)) {
      append_utf8(out, u_foldCase(c, U_FOLD_CASE_DEFAULT));
    }
  });
  return out;
}

std::string fold_case(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  for_each_code_point(utf8,
                      [&](UChar32 c) { append_utf8(out, u_foldCase(c, U_FOLD_CASE_DEFAULT)); });
  return out;
}

std::string collapse_whitespace(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  bool pending_space = false;
  for_each_code_point(utf8, [&](UChar32 c) {
    if (is_space(c)) {
      pending_space = !out.empty();
      return;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    append_utf8(out, c);
  });
  return out;
}

std::vector<std::string> tokenize(std::string_view utf8) {
  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      tokens.push_back(std::move(word));
      word.clear();
    }
  };
  for_each_code_point(utf8, [&](UChar32 c) {
    if (is_space(c)) {
      flush();
    } else if (u_isalnum(c)) {
      append_utf8(word, c);
    } else {
      flush();
      std::string punct;
      append_utf8(punct, c);
      tokens.push_back(std::move(punct));
    }
  });
  flush();
  return tokens;
}

std::vector<std::string> alpha_words(std::string_view utf8) {
  std::vector<std::string> words;
  std::string word;
  for_each_code_point(utf8, [&](UChar32 c) {
    if (u_isalpha(c)) {
      append_utf8(word, u_tolower(c));
    } else if (!word.empty()) {
      words.push_back(std::move(word));
      word.clear();
    }
  });
  if (!word.empty()) {
    words.push_back(std::move(word));
  }
  return words;
}

}  // namespace claimgraph::text
