#pragma once

#include "tsim/case.hpp"
#include "tsim/types.hpp"

namespace tsim {

struct MachineState {
    double delta = 0.0;   // rotor angle, electrical rad
    double omega = 1.0;   // rotor speed, pu
    double p_gov = 0.0;   // governor output (mechanical power), pu
};

/// Rotor equations of motion in per-unit accelerating-power form.
/// delta_dot = omega_b (omega - omega0)
/// omega_dot = -(D / 2H)(omega - omega0) + (P_m - P_e) / (2 H omega)
struct SwingDerivatives {
    double delta_dot;
    double omega_dot;
};

SwingDerivatives swing_derivatives(double omega, double p_m, double p_e,
                                   const MachineParams& params, double omega0,
                                   double omega_b);

/// Single-machine-infinite-bus electrical power, (E V / X) sin(delta).
double smib_electrical_power(double e, double v, double x, double delta);

/// Where the governor lag is heading: the droop command clamped to limits.
double governor_target(const GovernorParams& gov, double p_set, double d_omega);

/// d(p_gov)/dt for the first-order droop governor.
double governor_derivative(const GovernorParams& gov, double p_gov, double p_set,
                           double d_omega);

/// Exact zero-order-hold update of the governor lag over one step.
double governor_step(const GovernorParams& gov, double p_gov, double p_set,
                     double d_omega, double dt);

struct MachineInit {
    MachineState state;
    double emf = 0.0;   // internal voltage magnitude behind X'
    double p_m = 0.0;   // mechanical power at the equilibrium
    double p_e = 0.0;   // electrical power at the equilibrium
};

/// Classical-model initialization from terminal conditions:
/// E angle delta = V_t + j X' I_t, P_m = P_e, omega = omega0.
MachineInit init_from_powerflow(Complex v_terminal, Complex s_generated,
                                const MachineParams& params, double omega0 = 1.0);

}  // namespace tsim
