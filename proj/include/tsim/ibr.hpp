#pragma once

#include "tsim/case.hpp"

namespace tsim {

struct IbrState {
    double i_lag = 0.0;    // interface-lag active current, pu
    double soc_mwh = 0.0;  // stored energy bookkeeping
};

/// Voltage-dependent active current bound: 0 below V_zero, the rated limit
/// above V_break, linear in between.
double lvpl_limit(double v_t, const IbrParams& params);

/// Effective power-command bound; tapers near the SoC rails when derating is on.
double effective_power_limit(const IbrParams& params, double soc_mwh);

/// Active current command before the interface lag:
/// clamp(P_ref - p_s, +/-L_e) / max(V_t, V_min). Positive p_s charges.
double current_command(double p_ref, double p_s, double v_t, const IbrParams& params,
                       double soc_mwh = 0.0);

/// d(i_lag)/dt for the interface time constant.
double interface_lag_derivative(const IbrState& state, double p_ref, double p_s,
                                double v_t, const IbrParams& params);

/// Injected current after the final voltage-dependent saturation stage.
double converter_output(const IbrState& state, double v_t, const IbrParams& params);

/// Exact zero-order-hold update over one step; returns the injected current I_p.
double converter_step(IbrState& state, double p_ref, double p_s, double v_t,
                      const IbrParams& params, double dt);

}  // namespace tsim
