#pragma once

// Published per-state action rates that the embedded fixtures must reproduce.

#include <array>

namespace rates {

// Acceptance rate per offer $0..$10.
inline constexpr std::array<double, 11> ultimatum_human{0, 0, 0.2, 0.9, 1, 1, 1, 1, 1, 1, 1};
inline constexpr std::array<double, 11> ultimatum_fair{0, 0, 0, 0, 0, 0.4, 0, 0, 0, 0, 1};

// Wait probability for ages 2..5.
inline constexpr std::array<double, 4> marshmallow_two_hours{0.0, 0.2, 1.0, 1.0};
inline constexpr std::array<double, 4> marshmallow_fifteen_minutes{0.2, 0.8, 1.0, 1.0};

// Second-bet probability for epsilon 0, 0.1, ..., 0.4.
inline constexpr std::array<double, 5> gamble_winner{0.3, 0.5, 1, 1, 1};
inline constexpr std::array<double, 5> gamble_loser{1, 1, 0.6, 0, 0};

}  // namespace rates
