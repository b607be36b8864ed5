// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace commenotes::text {

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Collapses runs of ASCII whitespace into single spaces and trims the ends.
std::string collapse_whitespace(std::string_view s);

/// Number of Unicode scalar values in a UTF-8 string. Each byte of an
/// ill-formed sequence counts as one value (as a U+FFFD replacement would).
std::size_t count_scalar_values(std::string_view utf8);

/// Lowercased word tokens; a word is a run of ASCII letters, digits, or
/// apostrophes. Non-ASCII bytes split words.
std::vector<std::string> word_tokens(std::string_view s);

/// True when `word` occurs in `s` delimited by non-word characters,
/// ignoring ASCII case. Word characters are [A-Za-z0-9_].
bool contains_word_ci(std::string_view s, std::string_view word);

bool contains_ci(std::string_view haystack, std::string_view needle);

/// Replaces `{name}` slots in a single left-to-right pass; substituted text is
/// never rescanned, and unknown slots are left as-is.
std::string fill_template(std::string_view tmpl,
                          const std::vector<std::pair<std::string_view, std::string_view>>& slots);

}  // namespace commenotes::text

namespace commenotes::text {

/// Removes "@handle" tokens (an '@' at the start of the string or after
/// whitespace, followed by one or more [A-Za-z0-9_]) and collapses the
/// remaining whitespace. "a@b.com" is left alone.
std::string strip_mentions(std::string_view s);

}  // namespace commenotes::text
