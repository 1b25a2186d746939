#pragma once

// Small string helpers shared by the generators, validators and metrics.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace situgen::text {

std::string trim(std::string_view s);
std::string lower(std::string_view s);
/// Lowercase, trimmed, inner whitespace collapsed to single spaces.
std::string squash(std::string_view s);
std::vector<std::string> split_words(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// "a" or "an" for the word that follows.
std::string_view indefinite_article(std::string_view word);
/// English plural of a (possibly multi-word) label; only the last word changes.
std::string pluralize(std::string_view label);

/// "A book.", "A book and a lamp.", "A book, a pen, and a lamp."
std::string list_sentence(const std::vector<std::string>& labels);

/// Number words zero..twenty to their value.
std::optional<int> number_word_value(std::string_view word);
std::string_view number_word(int value);

}  // namespace situgen::text
