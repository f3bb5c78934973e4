#include "tsim/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace tsim {

namespace {
constexpr double kSwingFloor = 1e-6;  // rad
}

std::vector<double> coi_frame_deviation(const Trajectory& traj, int machine) {
    const auto& m = traj.machines.at(machine);
    std::vector<double> dev(traj.n_samples());
    for (int n = 0; n < traj.n_samples(); ++n) {
        const double reference =
            traj.coi.delta[n] - traj.coi_delta0 + traj.machine_delta0[machine];
        dev[n] = m.delta[n] - reference;
    }
    return dev;
}

std::vector<double> coi_speed_deviation(const Trajectory& traj, int machine) {
    const auto& m = traj.machines.at(machine);
    std::vector<double> dev(traj.n_samples());
    for (int n = 0; n < traj.n_samples(); ++n) {
        dev[n] = m.omega[n] - traj.coi.omega[n];
    }
    return dev;
}

FirstSwingResult first_swing(const Trajectory& traj, int machine, double t_disturbance) {
    const std::vector<double> s = coi_frame_deviation(traj, machine);
    const int n_total = traj.n_samples();
    int n_start = 0;
    while (n_start < n_total && traj.t[n_start] < t_disturbance) ++n_start;

    FirstSwingResult result;
    const int offline = traj.machines.at(machine).offline_from;
    const int n_end = offline >= 0 ? offline : n_total;

    for (int n = std::max(1, n_start + 1); n + 1 < n_end; ++n) {
        const double left = s[n] - s[n - 1];
        const double right = s[n + 1] - s[n];
        if (left * right <= 0.0 && std::abs(s[n]) > kSwingFloor) {
            result.magnitude_deg = std::abs(s[n]) * 180.0 / kPi;
            result.extremum_index = n;
            return result;
        }
    }
    // Flat responses land here; below the floor the swing reports as zero.
    double peak = 0.0;
    for (int n = n_start; n < n_end; ++n) peak = std::max(peak, std::abs(s[n]));
    if (peak <= kSwingFloor) {
        result.magnitude_deg = 0.0;
        return result;
    }
    result.censored = true;
    return result;
}

std::vector<std::vector<double>> coi_accelerating_power(const Trajectory& traj) {
    const int nm = traj.machine_count();
    const int ns = traj.n_samples();
    std::vector<std::vector<double>> out(nm, std::vector<double>(ns, 0.0));
    for (int n = 0; n < ns; ++n) {
        double h_total = 0.0;
        double p_total = 0.0;
        for (int m = 0; m < nm; ++m) {
            const auto& series = traj.machines[m];
            const bool online = series.offline_from < 0 || n < series.offline_from;
            if (!online) continue;
            h_total += traj.machine_h[m];
            p_total += series.p_m[n] - series.p_e[n];
        }
        if (h_total <= 0.0) continue;
        for (int m = 0; m < nm; ++m) {
            const auto& series = traj.machines[m];
            const bool online = series.offline_from < 0 || n < series.offline_from;
            if (!online) continue;
            out[m][n] =
                (series.p_m[n] - series.p_e[n]) - (traj.machine_h[m] / h_total) * p_total;
        }
    }
    return out;
}

EnergyReport equal_area(const Trajectory& traj, int machine) {
    EnergyReport report;
    const auto all_dpa = coi_accelerating_power(traj);
    report.accel_power = all_dpa.at(machine);
    report.angle_dev = coi_frame_deviation(traj, machine);
    const std::vector<double> speed_dev = coi_speed_deviation(traj, machine);

    const double h = traj.machine_h[machine];
    const int ns = traj.n_samples();
    report.integral.assign(ns, 0.0);
    report.kinetic.assign(ns, 0.0);
    report.residual.assign(ns, 0.0);

    for (int n = 0; n < ns; ++n) {
        report.kinetic[n] = traj.omega_b * h * speed_dev[n] * speed_dev[n];
    }
    double acc = 0.0;
    for (int n = 1; n < ns; ++n) {
        const double pa_avg = 0.5 * (report.accel_power[n - 1] + report.accel_power[n]);
        const double increment = pa_avg * (report.angle_dev[n] - report.angle_dev[n - 1]);
        acc += increment;
        report.integral[n] = acc;
        if (pa_avg >= 0.0) {
            report.accelerating_area += increment;
        } else {
            report.decelerating_area -= increment;
        }
    }
    for (int n = 0; n < ns; ++n) {
        report.residual[n] = report.integral[n] - (report.kinetic[n] - report.kinetic[0]);
        report.max_abs_residual = std::max(report.max_abs_residual, std::abs(report.residual[n]));
        report.peak_kinetic = std::max(report.peak_kinetic, report.kinetic[n]);
    }
    return report;
}

EnergyWindow energy_identity_window(const EnergyReport& report, const Trajectory& traj,
                                    double t_from) {
    EnergyWindow window;
    int n0 = 0;
    while (n0 < traj.n_samples() && traj.t[n0] < t_from) ++n0;
    if (n0 >= traj.n_samples()) return window;
    for (int n = n0; n < traj.n_samples(); ++n) {
        const double residual = (report.integral[n] - report.integral[n0]) -
                                (report.kinetic[n] - report.kinetic[n0]);
        window.max_abs_residual = std::max(window.max_abs_residual, std::abs(residual));
        window.peak_kinetic = std::max(window.peak_kinetic, report.kinetic[n]);
    }
    return window;
}

CctResult cct_search(const std::function<bool(double)>& stable_at, double lo, double hi,
                     double resolution_s) {
    if (!(hi > lo) || resolution_s <= 0.0) {
        throw EngineError("cct_search: invalid bracket or resolution");
    }
    CctResult result;
    bool lo_stable = stable_at(lo);
    ++result.simulations;
    bool hi_stable = stable_at(hi);
    ++result.simulations;
    if (!lo_stable || hi_stable) {
        throw EngineError("cct_search: bracket must be stable at the lower bound and "
                          "unstable at the upper bound");
    }
    while (hi - lo > resolution_s) {
        const double mid = 0.5 * (lo + hi);
        ++result.simulations;
        if (stable_at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    result.cct_s = lo;
    result.bracket_lo = lo;
    result.bracket_hi = hi;
    return result;
}

CctResult cct_search(const Scenario& scenario, double lo, double hi, double resolution_s) {
    int fault_index = -1;
    for (size_t i = 0; i < scenario.events.size(); ++i) {
        if (scenario.events[i].type == ScenarioEvent::Type::Fault) {
            if (fault_index >= 0) throw EngineError("cct_search: scenario has multiple faults");
            fault_index = static_cast<int>(i);
        }
    }
    if (fault_index < 0) throw EngineError("cct_search: scenario has no fault event");

    auto stable_at = [&](double duration) {
        Scenario trial = scenario;
        trial.events[fault_index].duration_s = duration;
        return classify_stable(simulate(trial));
    };
    return cct_search(stable_at, lo, hi, resolution_s);
}

Case scale_loading(const Case& base, const TransferLimitSpec& spec, double loading) {
    Case c = base;
    double added = 0.0;
    for (const auto& bus_id : spec.load_buses) {
        const int b = c.bus_index(bus_id);
        if (b < 0) throw EngineError("transfer limit: unknown bus '" + bus_id + "'");
        added += c.buses[b].load_p * (loading - 1.0);
        c.buses[b].load_p *= loading;
        c.buses[b].load_q *= loading;
    }
    double dispatch_base = 0.0;
    for (const auto& m_id : spec.dispatch_machines) {
        const int m = c.machine_index(m_id);
        if (m < 0) throw EngineError("transfer limit: unknown machine '" + m_id + "'");
        dispatch_base += c.machines[m].p_dispatch;
    }
    if (dispatch_base > 0.0) {
        for (const auto& m_id : spec.dispatch_machines) {
            const int m = c.machine_index(m_id);
            c.machines[m].p_dispatch += added * c.machines[m].p_dispatch / dispatch_base;
        }
    }
    return c;
}

TransferLimitResult transfer_limit_search(const Scenario& scenario,
                                          const TransferLimitSpec& spec) {
    TransferLimitResult result;
    bool last_failure_was_powerflow = false;

    auto stable_at = [&](double loading) {
        Scenario trial = scenario;
        trial.case_data = scale_loading(scenario.case_data, spec, loading);
        ++result.evaluations;
        PowerFlowSolution pf = solve_powerflow(trial.case_data);
        if (!pf.converged) {
            last_failure_was_powerflow = true;
            return false;
        }
        last_failure_was_powerflow = false;
        if (trial.events.empty()) return true;  // static feasibility only
        return classify_stable(simulate(trial));
    };

    double lo = spec.lo, hi = spec.hi;
    if (!stable_at(lo)) {
        throw EngineError(last_failure_was_powerflow
                              ? "transfer limit: power flow infeasible at the initial loading"
                              : "transfer limit: unstable at the initial loading");
    }
    if (stable_at(hi)) throw EngineError("transfer limit: still stable at the upper bound");
    bool boundary_static = last_failure_was_powerflow;
    while (hi - lo > spec.resolution) {
        const double mid = 0.5 * (lo + hi);
        if (stable_at(mid)) {
            lo = mid;
        } else {
            hi = mid;
            boundary_static = last_failure_was_powerflow;
        }
    }
    result.loading = lo;
    result.limited_by_powerflow = boundary_static;

    if (!spec.monitor_branches.empty()) {
        const Case c = scale_loading(scenario.case_data, spec, lo);
        const PowerFlowSolution pf = solve_powerflow(c);
        double flow = 0.0;
        for (const auto& br_id : spec.monitor_branches) {
            const int k = c.branch_index(br_id);
            if (k < 0) throw EngineError("transfer limit: unknown branch '" + br_id + "'");
            const Branch& br = c.branches[k];
            const Complex v_f = pf.v(br.from);
            const Complex v_t = pf.v(br.to);
            const Complex y_series = 1.0 / Complex(br.r, br.x);
            const Complex i_f = (v_f - v_t) * y_series + v_f * Complex(0.0, br.b_shunt / 2.0);
            flow += (v_f * std::conj(i_f)).real();
        }
        result.monitored_flow_pu = flow;
    }
    return result;
}

}  // namespace tsim
