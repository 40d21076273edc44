#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Unicode-aware text helpers backed by ICU. Invalid UTF-8 bytes are treated
// as U+FFFD.
namespace claimgraph::text {

/// Number of Unicode scalar values.
std::size_t char_count(std::string_view utf8);

bool has_non_whitespace(std::string_view utf8);

/// Keeps only letters and digits, simple-case-folded.
std::string alnum_fold(std::string_view utf8);

/// Simple case fold of every code point; other characters unchanged.
std::string fold_case(std::string_view utf8);

/// Collapses whitespace runs to one ASCII space and trims both ends.
std::string collapse_whitespace(std::string_view utf8);

/// Whitespace/punctuation tokenizer: alphanumeric runs become one token,
/// every other non-space code point is a token on its own. Case preserved.
std::vector<std::string> tokenize(std::string_view utf8);

/// Lowercased alphabetic runs only (the degraded-mode noun tagger).
std::vector<std::string> alpha_words(std::string_view utf8);

}  // namespace claimgraph::text
