#include "tsim/ibr.hpp"

#include <algorithm>
#include <cmath>

namespace tsim {

double lvpl_limit(double v_t, const IbrParams& params) {
    if (v_t <= params.v_zero) return 0.0;
    if (v_t >= params.v_break) return params.i_limit;
    return params.i_limit * (v_t - params.v_zero) / (params.v_break - params.v_zero);
}

double effective_power_limit(const IbrParams& params, double soc_mwh) {
    if (!params.soc_derate || params.energy_mwh <= 0.0) return params.rating;
    // Linear taper over the outer 5% of the energy range.
    const double band = 0.05 * params.energy_mwh;
    const double headroom = std::min(soc_mwh, params.energy_mwh - soc_mwh);
    const double scale = std::clamp(headroom / band, 0.0, 1.0);
    return params.rating * scale;
}

double current_command(double p_ref, double p_s, double v_t, const IbrParams& params,
                       double soc_mwh) {
    const double limit = effective_power_limit(params, soc_mwh);
    const double p_cmd = std::clamp(p_ref - p_s, -limit, limit);
    return p_cmd / std::max(v_t, params.v_min);
}

double interface_lag_derivative(const IbrState& state, double p_ref, double p_s,
                                double v_t, const IbrParams& params) {
    const double i_cmd = current_command(p_ref, p_s, v_t, params, state.soc_mwh);
    return (i_cmd - state.i_lag) / params.t_i;
}

double converter_output(const IbrState& state, double v_t, const IbrParams& params) {
    const double bound = lvpl_limit(v_t, params);
    return std::clamp(state.i_lag, -bound, bound);
}

double converter_step(IbrState& state, double p_ref, double p_s, double v_t,
                      const IbrParams& params, double dt) {
    const double i_cmd = current_command(p_ref, p_s, v_t, params, state.soc_mwh);
    const double decay = std::exp(-dt / params.t_i);
    state.i_lag = i_cmd + (state.i_lag - i_cmd) * decay;
    return converter_output(state, v_t, params);
}

}  // namespace tsim
