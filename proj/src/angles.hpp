#pragma once

#include <cmath>
#include <numbers>

namespace tabsim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an angle into (-pi, pi].
inline double wrap_to_pi(double angle_rad) {
    double r = std::remainder(angle_rad, kTwoPi);
    if (r <= -kPi) r += kTwoPi;
    return r;
}

}  // namespace tabsim
