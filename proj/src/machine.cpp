#include "tsim/machine.hpp"

#include <algorithm>
#include <cmath>

namespace tsim {

SwingDerivatives swing_derivatives(double omega, double p_m, double p_e,
                                   const MachineParams& params, double omega0,
                                   double omega_b) {
    SwingDerivatives d;
    d.delta_dot = omega_b * (omega - omega0);
    d.omega_dot = -(params.d / (2.0 * params.h)) * (omega - omega0) +
                  (p_m - p_e) / (2.0 * params.h * omega);
    return d;
}

double smib_electrical_power(double e, double v, double x, double delta) {
    return (e * v / x) * std::sin(delta);
}

double governor_target(const GovernorParams& gov, double p_set, double d_omega) {
    return std::clamp(p_set - d_omega / gov.droop, gov.p_min, gov.p_max);
}

double governor_derivative(const GovernorParams& gov, double p_gov, double p_set,
                           double d_omega) {
    if (!gov.enabled) return 0.0;
    return (governor_target(gov, p_set, d_omega) - p_gov) / gov.t_g;
}

double governor_step(const GovernorParams& gov, double p_gov, double p_set,
                     double d_omega, double dt) {
    if (!gov.enabled) return p_gov;
    const double target = governor_target(gov, p_set, d_omega);
    const double decay = std::exp(-dt / gov.t_g);
    return target + (p_gov - target) * decay;
}

MachineInit init_from_powerflow(Complex v_terminal, Complex s_generated,
                                const MachineParams& params, double omega0) {
    if (std::abs(v_terminal) == 0.0) {
        throw ParseError("machine initialization: zero terminal voltage");
    }
    const Complex i_terminal = std::conj(s_generated / v_terminal);
    const Complex e_phasor = v_terminal + Complex(0.0, params.x_dp) * i_terminal;

    MachineInit init;
    init.emf = std::abs(e_phasor);
    init.state.delta = std::arg(e_phasor);
    init.state.omega = omega0;
    // Air-gap power behind a lossless reactance equals the terminal active power.
    init.p_e = s_generated.real();
    init.p_m = init.p_e;
    init.state.p_gov = init.p_m;
    return init;
}

}  // namespace tsim
