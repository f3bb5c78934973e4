#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tsim/engine.hpp"

namespace tsim {

/// COI-frame angle deviation of one machine: delta_i(t) minus the desired
/// trajectory anchored at t0.
std::vector<double> coi_frame_deviation(const Trajectory& traj, int machine);

/// COI-frame speed deviation: omega_i(t) - omega_coi(t).
std::vector<double> coi_speed_deviation(const Trajectory& traj, int machine);

struct FirstSwingResult {
    double magnitude_deg = 0.0;
    bool censored = false;   // no extremum before the end of the record
    int extremum_index = -1;
};

/// Magnitude of the initial extremum of the COI-frame angle deviation after
/// t_disturbance (three-point extremum test, 1e-6 rad noise floor).
FirstSwingResult first_swing(const Trajectory& traj, int machine, double t_disturbance);

/// Per-machine accelerating power in the COI frame:
/// dPa_i = (Pm_i - Pe_i) - (H_i / H_T) sum_k (Pm_k - Pe_k), online machines only.
std::vector<std::vector<double>> coi_accelerating_power(const Trajectory& traj);

struct EnergyReport {
    std::vector<double> accel_power;   // dPa_i(t)
    std::vector<double> angle_dev;     // COI-frame angle deviation
    std::vector<double> integral;      // running trapezoid of dPa over d(angle_dev)
    std::vector<double> kinetic;       // omega_b H_i (omega_i - omega_coi)^2
    std::vector<double> residual;      // integral - (kinetic - kinetic[0])
    double accelerating_area = 0.0;
    double decelerating_area = 0.0;
    double max_abs_residual = 0.0;
    double peak_kinetic = 0.0;
};

/// Equal-area bookkeeping for one machine over a recorded trajectory.
EnergyReport equal_area(const Trajectory& traj, int machine);

struct EnergyWindow {
    double max_abs_residual = 0.0;
    double peak_kinetic = 0.0;
};

/// Identity residual re-based at the first sample at or after t_from. The
/// trapezoidal sums are exact only between switching events (P_e jumps at
/// them), so the identity is checked on a smooth window.
EnergyWindow energy_identity_window(const EnergyReport& report, const Trajectory& traj,
                                    double t_from);

struct CctResult {
    double cct_s = 0.0;       // longest stable clearing time found
    double bracket_lo = 0.0;  // final bracket
    double bracket_hi = 0.0;
    int simulations = 0;
};

/// Bisection on fault-clearing duration. `stable_at` runs one simulation and
/// classifies it. Throws EngineError when the bracket is invalid.
CctResult cct_search(const std::function<bool(double)>& stable_at, double lo, double hi,
                     double resolution_s);

/// Convenience wrapper: bisect the duration of the scenario's single fault
/// event. The scenario must contain exactly one fault.
CctResult cct_search(const Scenario& scenario, double lo, double hi, double resolution_s);

struct TransferLimitSpec {
    std::vector<std::string> load_buses;         // loads scaled by the loading factor
    std::vector<std::string> dispatch_machines;  // units redispatched to cover it
    std::vector<std::string> monitor_branches;   // optional: corridor flow report
    double lo = 1.0;
    double hi = 2.0;
    double resolution = 0.01;
};

struct TransferLimitResult {
    double loading = 0.0;          // last stable scale factor
    double monitored_flow_pu = 0.0;  // pre-disturbance flow over monitor_branches
    int evaluations = 0;
    bool limited_by_powerflow = false;  // boundary hit by infeasibility, not dynamics
};

/// Scale the listed loads, redispatch the listed machines to cover the added
/// demand, and bisect on the loading factor using the scenario's contingency.
TransferLimitResult transfer_limit_search(const Scenario& scenario,
                                          const TransferLimitSpec& spec);

/// Case with the transfer-limit loading pattern applied (exposed for tests).
Case scale_loading(const Case& base, const TransferLimitSpec& spec, double loading);

}  // namespace tsim
