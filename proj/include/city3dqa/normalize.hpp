#pragma once

#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace city3dqa::evalh {

// Canonical answer form: trimmed, single internal spaces, ASCII lowercase,
// leading articles removed, spelled-out integers zero..twenty as numerals.
// Idempotent, so normalized datasets can be re-normalized freely.
inline std::string normalize_answer(std::string_view s) {
  std::string flat;
  flat.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !flat.empty();
      continue;
    }
    if (pending_space) flat += ' ';
    pending_space = false;
    flat += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }

  std::vector<std::string_view> tokens;
  std::string_view view = flat;
  while (!view.empty()) {
    auto sp = view.find(' ');
    tokens.push_back(view.substr(0, sp));
    view = sp == std::string_view::npos ? std::string_view{}
                                        : view.substr(sp + 1);
  }

  std::size_t start = 0;
  while (start < tokens.size() &&
         (tokens[start] == "a" || tokens[start] == "an" ||
          tokens[start] == "the")) {
    ++start;
  }

  static constexpr std::array<std::string_view, 21> words = {
      "zero", "one", "two",    "three",  "four",    "five",    "six",
      "seven", "eight", "nine", "ten",   "eleven",  "twelve",  "thirteen",
      "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen",
      "twenty"};

  std::string out;
  for (std::size_t i = start; i < tokens.size(); ++i) {
    if (!out.empty()) out += ' ';
    bool replaced = false;
    for (std::size_t n = 0; n < words.size(); ++n) {
      if (tokens[i] == words[n]) {
        out += std::to_string(n);
        replaced = true;
        break;
      }
    }
    if (!replaced) out += tokens[i];
  }
  return out;
}

}  // namespace city3dqa::evalh
