#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace tsim {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Electrical speed base in rad/s for a nominal frequency in Hz.
inline double speed_base(double f0_hz) { return kTwoPi * f0_hz; }

/// Map an angle onto (-pi, pi].
inline double wrap_to_pi(double angle) {
    double wrapped = std::remainder(angle, kTwoPi);
    if (wrapped <= -kPi) {
        wrapped += kTwoPi;
    }
    return wrapped;
}

}  // namespace tsim
