#include "text_util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

namespace situgen::text {

namespace {

constexpr std::array<std::string_view, 21> kNumberWords = {
    "zero",    "one",     "two",       "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen", "twenty"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string squash(std::string_view s) { return join(split_words(lower(s)), " "); }

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::string current;
  for (const char c : s) {
    if (is_space(c)) {
      if (!current.empty()) {
        out.push_back(std::move(current));
        current.clear();
      }
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) {
    out.push_back(std::move(current));
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string_view indefinite_article(std::string_view word) {
  if (!word.empty() && std::string_view("aeiou").find(static_cast<char>(std::tolower(static_cast<unsigned char>(word.front())))) !=
                           std::string_view::npos) {
    return "an";
  }
  return "a";
}

std::string pluralize(std::string_view label) {
  std::string s(label);
  if (s.empty()) {
    return s;
  }
  const auto ends = [&](std::string_view suffix) { return std::string_view(s).ends_with(suffix); };
  if (ends("shelf")) {
    return s.substr(0, s.size() - 1) + "ves";
  }
  if (ends("s") || ends("x") || ends("z") || ends("ch") || ends("sh")) {
    return s + "es";
  }
  if (s.size() >= 2 && s.back() == 'y' && std::string_view("aeiou").find(s[s.size() - 2]) == std::string_view::npos) {
    return s.substr(0, s.size() - 1) + "ies";
  }
  return s + "s";
}

std::string list_sentence(const std::vector<std::string>& labels) {
  std::vector<std::string> items;
  items.reserve(labels.size());
  for (const auto& l : labels) {
    items.push_back(std::string(indefinite_article(l)) + " " + l);
  }
  std::string out;
  if (items.size() == 1) {
    out = items[0];
  } else if (items.size() == 2) {
    out = items[0] + " and " + items[1];
  } else {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i + 1 == items.size()) {
        out += "and " + items[i];
      } else {
        out += items[i] + ", ";
      }
    }
  }
  if (!out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out + ".";
}

std::optional<int> number_word_value(std::string_view word) {
  for (std::size_t i = 0; i < kNumberWords.size(); ++i) {
    if (kNumberWords[i] == word) {
      return static_cast<int>(i);
    }
  }
  return std::nullopt;
}

std::string_view number_word(int value) {
  if (value < 0 || value >= static_cast<int>(kNumberWords.size())) {
    return {};
  }
  return kNumberWords[static_cast<std::size_t>(value)];
}

}  // namespace situgen::text
