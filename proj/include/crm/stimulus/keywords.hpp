#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace crm::stimulus {

enum class CallSign { dog, cat };
enum class Color { red, green, pink, white, black, blue };

inline constexpr std::array<Color, 6> kColors{Color::red,   Color::green, Color::pink,
                                              Color::white, Color::black, Color::blue};
// Seven is left out: it is the only disyllabic number.
inline constexpr std::array<int, 8> kNumbers{1, 2, 3, 4, 5, 6, 8, 9};

struct Keywords {
  Color color = Color::red;
  int number = 1;

  friend bool operator==(const Keywords&, const Keywords&) = default;
};

[[nodiscard]] std::string_view to_string(CallSign c);
[[nodiscard]] std::string_view to_string(Color c);
[[nodiscard]] std::optional<CallSign> parse_call_sign(std::string_view s);
[[nodiscard]] std::optional<Color> parse_color(std::string_view s);
[[nodiscard]] bool is_valid_number(int n);

/// Canonical sentence id, e.g. "dog_pink_5".
[[nodiscard]] std::string sentence_id(CallSign call_sign, const Keywords& keywords);

/// All 48 colour/number combinations in canonical order.
[[nodiscard]] std::array<Keywords, 48> all_keyword_pairs();

}  // namespace crm::stimulus
