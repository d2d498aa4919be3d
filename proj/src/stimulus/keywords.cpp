#include "crm/stimulus/keywords.hpp"

#include <algorithm>

namespace crm::stimulus {

std::string_view to_string(CallSign c) { return c == CallSign::dog ? "dog" : "cat"; }

std::string_view to_string(Color c) {
  switch (c) {
    case Color::red: return "red";
    case Color::green: return "green";
    case Color::pink: return "pink";
    case Color::white: return "white";
    case Color::black: return "black";
    case Color::blue: return "blue";
  }
  return "?";
}

std::optional<CallSign> parse_call_sign(std::string_view s) {
  if (s == "dog") return CallSign::dog;
  if (s == "cat") return CallSign::cat;
  return std::nullopt;
}

std::optional<Color> parse_color(std::string_view s) {
  for (Color c : kColors) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

bool is_valid_number(int n) { return std::find(kNumbers.begin(), kNumbers.end(), n) != kNumbers.end(); }

std::string sentence_id(CallSign call_sign, const Keywords& keywords) {
  return std::string(to_string(call_sign)) + "_" + std::string(to_string(keywords.color)) + "_" +
         std::to_string(keywords.number);
}

std::array<Keywords, 48> all_keyword_pairs() {
  std::array<Keywords, 48> out{};
  std::size_t i = 0;
  for (Color c : kColors) {
    for (int n : kNumbers) out[i++] = Keywords{c, n};
  }
  return out;
}

}  // namespace crm::stimulus
