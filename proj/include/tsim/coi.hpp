#pragma once

#include <span>
#include <vector>

#include "tsim/types.hpp"

namespace tsim {

struct CoiState {
    double omega = 1.0;    // inertia-weighted speed, pu
    double delta = 0.0;    // inertia-weighted angle, rad
    double freq_hz = 0.0;  // f0 * omega / omega0
};

/// Inertia-weighted center-of-inertia speed and angle over the online set.
CoiState coi_states(std::span<const double> speeds, std::span<const double> angles,
                    std::span<const double> inertias, double f0_hz, double omega0 = 1.0);

/// Continuation of `wrapped` (in (-pi, pi]) nearest to `reference`.
double unwrap_step(double wrapped, double reference);

/// Unwrap a sampled angle sequence; the first sample is returned unchanged.
std::vector<double> unwrap_sequence(std::span<const double> wrapped);

/// Weighted average of unwrapped sensor angles (the wide-area angle reference).
/// Throws if the weights are invalid.
double estimate_coi_angle(std::span<const double> thetas, std::span<const double> weights);

/// Trapezoidal integration of omega_b (omega_coi - omega0), plus the constant c.
std::vector<double> coi_angle_by_integration(std::span<const double> coi_speed, double dt,
                                             double omega_b, double omega0 = 1.0,
                                             double c = 0.0);

/// Anchors captured at a stable equilibrium t0. The desired trajectory for any
/// anchored quantity is reference(t) = coi(t) - coi(t0) + anchor(t0).
struct TrajectoryAnchors {
    double coi_at_t0 = 0.0;
    std::vector<double> element_at_t0;
    bool initialized = false;
};

double reference_angle(double coi_now, const TrajectoryAnchors& anchors, int element);

}  // namespace tsim
