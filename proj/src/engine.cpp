#include "tsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tsim/coi.hpp"
#include "tsim/ybus.hpp"

namespace tsim {

namespace {
const std::vector<double> kNoExtraInput;
constexpr double kVoltageEps = 1e-9;   // below this, a bus carries no injection
constexpr double kSolveTol = 1e-10;    // fixed-point tolerance on voltages
constexpr int kMaxFixedPoint = 50;
}  // namespace

StateLayout build_layout(const Case& c) {
    StateLayout layout;
    int idx = 0;
    layout.machines.resize(c.machines.size());
    for (size_t m = 0; m < c.machines.size(); ++m) {
        layout.machines[m].delta = idx++;
        layout.machines[m].omega = idx++;
        if (c.machines[m].params.governor.enabled) layout.machines[m].gov = idx++;
    }
    layout.ibr_lag.resize(c.ibr_units.size());
    for (size_t u = 0; u < c.ibr_units.size(); ++u) layout.ibr_lag[u] = idx++;
    layout.sensor_lag.resize(c.sensors.size());
    for (size_t s = 0; s < c.sensors.size(); ++s) layout.sensor_lag[s] = idx++;
    layout.size = idx;
    return layout;
}

// ---------------------------------------------------------------------------
// NetworkSolver
// ---------------------------------------------------------------------------

NetworkSolver::NetworkSolver(const Case& c, const LoadModelConfig& lm,
                             const Eigen::VectorXcd& v_ref)
    : c_(&c), load_model_(lm), v_ref_(v_ref) {}

void NetworkSolver::set_topology(const Topology& topo) {
    topo_ = topo;
    y_aug_ = build_ybus(*c_, topo);
    const int n = static_cast<int>(c_->buses.size());
    for (int b = 0; b < n; ++b) {
        const double scale = topo.load_scale[b];
        const double v2 = std::norm(v_ref_(b));
        Complex s_folded(0.0, c_->buses[b].load_q * scale);
        if (!load_model_.active_constant_current) {
            s_folded += Complex(c_->buses[b].load_p * scale, 0.0);
        }
        y_aug_(b, b) += std::conj(s_folded) / v2;
    }
    for (size_t m = 0; m < c_->machines.size(); ++m) {
        if (!topo.machine_online[m]) continue;
        y_aug_(c_->machines[m].bus, c_->machines[m].bus) +=
            1.0 / Complex(0.0, c_->machines[m].params.x_dp);
    }
    lu_.compute(y_aug_);
    const Eigen::VectorXd pivots = lu_.matrixLU().diagonal().cwiseAbs();
    const double pmax = pivots.maxCoeff();
    singular_ = !(pmax > 0.0) || pivots.minCoeff() <= 1e-13 * pmax;
}

SolveStatus NetworkSolver::solve(const std::vector<Complex>& machine_emf,
                                 const std::vector<double>& ibr_i_lag,
                                 Eigen::VectorXcd& v) const {
    if (singular_) return SolveStatus::Singular;
    const int n = static_cast<int>(c_->buses.size());

    Eigen::VectorXcd i_base = Eigen::VectorXcd::Zero(n);
    for (size_t m = 0; m < c_->machines.size(); ++m) {
        if (!topo_.machine_online[m]) continue;
        i_base(c_->machines[m].bus) += machine_emf[m] / Complex(0.0, c_->machines[m].params.x_dp);
    }

    bool v_dependent = false;
    for (size_t u = 0; u < c_->ibr_units.size(); ++u) {
        if (topo_.ibr_online[u] && ibr_i_lag[u] != 0.0) v_dependent = true;
    }
    if (load_model_.active_constant_current) {
        for (int b = 0; b < n; ++b) {
            if (c_->buses[b].load_p * topo_.load_scale[b] != 0.0) v_dependent = true;
        }
    }

    if (v.size() != n || !v.allFinite()) v = v_ref_;

    for (int iter = 0; iter < kMaxFixedPoint; ++iter) {
        last_iterations_ = iter + 1;
        Eigen::VectorXcd i = i_base;
        if (load_model_.active_constant_current) {
            for (int b = 0; b < n; ++b) {
                const double p = c_->buses[b].load_p * topo_.load_scale[b];
                if (p == 0.0) continue;
                const Complex vb = v(b);
                const double vm = std::abs(vb);
                if (vm > kVoltageEps) {
                    const double s = p * vm / std::abs(v_ref_(b));
                    i(b) -= s / std::conj(vb);
                }
            }
        }
        for (size_t u = 0; u < c_->ibr_units.size(); ++u) {
            if (!topo_.ibr_online[u]) continue;
            const int bus = c_->ibr_units[u].bus;
            const Complex vb = v(bus);
            const double vm = std::abs(vb);
            if (vm <= kVoltageEps) continue;
            const double bound = lvpl_limit(vm, c_->ibr_units[u].params);
            const double ip = std::clamp(ibr_i_lag[u], -bound, bound);
            if (ip != 0.0) i(bus) += ip * vb / vm;
        }

        Eigen::VectorXcd vn = lu_.solve(i);
        if (!vn.allFinite()) return SolveStatus::Singular;
        if (!v_dependent) {
            v = vn;
            return SolveStatus::Ok;
        }
        const double err = (vn - v).cwiseAbs().maxCoeff();
        v = vn;
        if (err <= kSolveTol * std::max(1.0, v.cwiseAbs().maxCoeff())) return SolveStatus::Ok;
    }
    return SolveStatus::NoConvergence;
}

// ---------------------------------------------------------------------------
// PlantModel
// ---------------------------------------------------------------------------

PlantModel::PlantModel(const Case& c, const LoadModelConfig& lm)
    : c_(&c), load_model_(lm), layout_(build_layout(c)), topo_(base_topology(c)) {
    pf_ = solve_powerflow(c, topo_);
    if (!pf_.converged) {
        std::ostringstream os;
        os << "power flow did not converge (max mismatch " << pf_.max_mismatch << " pu after "
           << pf_.iterations << " iterations)";
        throw EngineError(os.str());
    }

    const size_t nm = c.machines.size();
    const size_t nu = c.ibr_units.size();
    emf_.resize(nm);
    p_set_.assign(nm, 0.0);
    x0_ = Eigen::VectorXd::Zero(layout_.size);

    for (size_t m = 0; m < nm; ++m) {
        const Complex v_t = pf_.v(c.machines[m].bus);
        const Complex s_gen(pf_.machine_p[m], pf_.machine_q[m]);
        const MachineInit init = init_from_powerflow(v_t, s_gen, c.machines[m].params);
        emf_[m] = init.emf;
        x0_(layout_.machines[m].delta) = init.state.delta;
        x0_(layout_.machines[m].omega) = 1.0;
    }

    solver_ = std::make_unique<NetworkSolver>(c, lm, pf_.v);
    solver_->set_topology(topo_);

    // Settle the algebraic layer and the IBR interface at a consistent point.
    std::vector<Complex> emf_ph(nm);
    for (size_t m = 0; m < nm; ++m) {
        emf_ph[m] = std::polar(emf_[m], x0_(layout_.machines[m].delta));
    }
    Eigen::VectorXcd v = pf_.v;
    std::vector<double> i_lag(nu, 0.0);
    for (int iter = 0; iter < 60; ++iter) {
        std::vector<double> prev = i_lag;
        for (size_t u = 0; u < nu; ++u) {
            const double vm = std::abs(v(c.ibr_units[u].bus));
            i_lag[u] = current_command(c.ibr_units[u].params.p_ref, 0.0, vm,
                                       c.ibr_units[u].params);
        }
        if (solver_->solve(emf_ph, i_lag, v) != SolveStatus::Ok) {
            throw EngineError("initial network solve failed");
        }
        double delta = 0.0;
        for (size_t u = 0; u < nu; ++u) delta = std::max(delta, std::abs(i_lag[u] - prev[u]));
        if (delta < 1e-14) break;
    }
    v0_ = v;
    v_cache_ = v;
    for (size_t u = 0; u < nu; ++u) x0_(layout_.ibr_lag[u]) = i_lag[u];
    for (size_t s = 0; s < c.sensors.size(); ++s) {
        x0_(layout_.sensor_lag[s]) = std::arg(v0_(c.sensors[s].bus));
    }

    // Mechanical power pinned to the dynamic solve so the initial state is an
    // exact stationary point of the coupled system, not just of the power flow.
    NetworkOut net;
    if (solve_network(x0_, net) != SolveStatus::Ok) {
        throw EngineError("initial network solve failed");
    }
    for (size_t m = 0; m < nm; ++m) {
        p_set_[m] = net.p_e[m];
        if (layout_.machines[m].gov >= 0) x0_(layout_.machines[m].gov) = net.p_e[m];
    }
}

void PlantModel::set_topology(const Topology& topo) {
    topo_ = topo;
    solver_->set_topology(topo);
}

SolveStatus PlantModel::solve_network(const Eigen::VectorXd& x, NetworkOut& net) const {
    const Case& c = *c_;
    const size_t nm = c.machines.size();
    const size_t nu = c.ibr_units.size();

    std::vector<Complex> emf_ph(nm, Complex(0.0, 0.0));
    for (size_t m = 0; m < nm; ++m) {
        if (topo_.machine_online[m]) {
            emf_ph[m] = std::polar(emf_[m], x(layout_.machines[m].delta));
        }
    }
    std::vector<double> i_lag(nu, 0.0);
    for (size_t u = 0; u < nu; ++u) {
        if (topo_.ibr_online[u]) i_lag[u] = x(layout_.ibr_lag[u]);
    }

    net.v = v_cache_;
    net.status = solver_->solve(emf_ph, i_lag, net.v);
    if (net.status != SolveStatus::Ok) return net.status;
    v_cache_ = net.v;

    net.p_e.assign(nm, 0.0);
    for (size_t m = 0; m < nm; ++m) {
        if (!topo_.machine_online[m]) continue;
        const Complex i_m =
            (emf_ph[m] - net.v(c.machines[m].bus)) / Complex(0.0, c.machines[m].params.x_dp);
        net.p_e[m] = (emf_ph[m] * std::conj(i_m)).real();
    }
    net.i_p.assign(nu, 0.0);
    net.p_inj.assign(nu, 0.0);
    for (size_t u = 0; u < nu; ++u) {
        if (!topo_.ibr_online[u]) continue;
        const double vm = std::abs(net.v(c.ibr_units[u].bus));
        const double bound = lvpl_limit(vm, c.ibr_units[u].params);
        net.i_p[u] = std::clamp(i_lag[u], -bound, bound);
        net.p_inj[u] = vm * net.i_p[u];
    }
    return SolveStatus::Ok;
}

void PlantModel::derivatives_from_net(const Eigen::VectorXd& x, const NetworkOut& net,
                                      const std::vector<double>& p_s,
                                      const std::vector<double>& pm_extra,
                                      const std::vector<double>& unwrap_ref,
                                      Eigen::VectorXd& dxdt) const {
    const Case& c = *c_;
    dxdt.setZero(layout_.size);
    const double omega_b = c.omega_b();
    const double omega0 = c.omega0();

    for (size_t m = 0; m < c.machines.size(); ++m) {
        if (!topo_.machine_online[m]) continue;
        const auto& slots = layout_.machines[m];
        const MachineParams& params = c.machines[m].params;
        const double omega = x(slots.omega);
        double p_m = (slots.gov >= 0) ? x(slots.gov) : p_set_[m];
        if (!pm_extra.empty()) p_m += pm_extra[m];
        const SwingDerivatives d =
            swing_derivatives(omega, p_m, net.p_e[m], params, omega0, omega_b);
        dxdt(slots.delta) = d.delta_dot;
        dxdt(slots.omega) = d.omega_dot;
        if (slots.gov >= 0) {
            dxdt(slots.gov) = governor_derivative(params.governor, x(slots.gov), p_set_[m],
                                                  omega - omega0);
        }
    }
    for (size_t u = 0; u < c.ibr_units.size(); ++u) {
        if (!topo_.ibr_online[u]) continue;
        const IbrParams& params = c.ibr_units[u].params;
        const double v_t = std::abs(net.v(c.ibr_units[u].bus));
        IbrState st{x(layout_.ibr_lag[u]), 0.0};
        const double cmd = p_s.empty() ? 0.0 : p_s[u];
        dxdt(layout_.ibr_lag[u]) =
            interface_lag_derivative(st, params.p_ref, cmd, v_t, params);
    }
    for (size_t s = 0; s < c.sensors.size(); ++s) {
        const double theta_raw = std::arg(net.v(c.sensors[s].bus));
        const double theta_u = unwrap_step(theta_raw, unwrap_ref[s]);
        dxdt(layout_.sensor_lag[s]) =
            (theta_u - x(layout_.sensor_lag[s])) / c.sensors[s].t_const;
    }
}

SolveStatus PlantModel::derivatives(const Eigen::VectorXd& x, const std::vector<double>& p_s,
                                    const std::vector<double>& pm_extra,
                                    const std::vector<double>& unwrap_ref, NetworkOut& net,
                                    Eigen::VectorXd& dxdt) const {
    const SolveStatus st = solve_network(x, net);
    if (st != SolveStatus::Ok) return st;
    derivatives_from_net(x, net, p_s, pm_extra, unwrap_ref, dxdt);
    return SolveStatus::Ok;
}

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

std::string termination_name(TerminationStatus s) {
    switch (s) {
        case TerminationStatus::Completed: return "completed";
        case TerminationStatus::NetworkSingular: return "network-singular";
        case TerminationStatus::Diverged: return "diverged";
    }
    return "?";
}

Simulator::Simulator(Scenario scenario) : scenario_(std::move(scenario)) {
    const Case& c = scenario_.case_data;
    plant_ = std::make_unique<PlantModel>(c, scenario_.load_model);
    topo_ = plant_->topology();
    x_ = plant_->equilibrium_state();
    compile_events();
    rng_.seed(scenario_.seed);

    const CommsConfig& cm = scenario_.comms;
    const size_t ns = c.sensors.size();
    channels_.reserve(ns);
    for (size_t s = 0; s < ns; ++s) {
        double delay = 0.0, jitter = 0.0;
        if (!cm.ideal) {
            delay = channel_delay_draw(rng_, cm.delay_min_s, cm.delay_max_s);
            jitter = cm.jitter_s;
        }
        channels_.emplace_back(delay, jitter);
    }
    sensor_value_.assign(ns, 0.0);
    unwrap_ref_.assign(ns, 0.0);
    for (size_t s = 0; s < ns; ++s) {
        unwrap_ref_[s] = std::arg(plant_->equilibrium_voltage()(c.sensors[s].bus));
        const double eq = x_(plant_->layout().sensor_lag[s]) + c.sensors[s].bias;
        channels_[s].seed(0.0, eq);
        sensor_value_[s] = eq;
    }

    p_s_.assign(c.ibr_units.size(), 0.0);
    if (scenario_.controller_enabled && !c.ibr_units.empty()) {
        if (c.sensors.empty()) {
            throw EngineError("closed-loop scenario requires sensors");
        }
        colocated_sensor_.assign(c.ibr_units.size(), -1);
        for (size_t u = 0; u < c.ibr_units.size(); ++u) {
            for (size_t s = 0; s < ns; ++s) {
                if (c.sensors[s].bus == c.ibr_units[u].bus) {
                    colocated_sensor_[u] = static_cast<int>(s);
                    break;
                }
            }
            if (colocated_sensor_[u] < 0) {
                throw EngineError("ibr '" + c.ibr_units[u].id + "' has no co-located sensor");
            }
            controllers_.emplace_back(scenario_.controller, scenario_.dt());
        }
    }

    // Initial machine pair separations for the divergence guard.
    for (size_t i = 0; i < c.machines.size(); ++i) {
        for (size_t j = i + 1; j < c.machines.size(); ++j) {
            pair_sep0_.push_back(x_(plant_->layout().machines[i].delta) -
                                 x_(plant_->layout().machines[j].delta));
        }
    }
}

void Simulator::compile_events() {
    const double dt = scenario_.dt();
    for (const auto& ev : scenario_.events) {
        auto add = [&](double t, Event e) {
            TimedEvent te;
            te.t = t;
            const double g = t / dt;
            const long gi = std::lround(g);
            te.grid_index = (std::abs(g - static_cast<double>(gi)) < 1e-6) ? gi : -1;
            if (te.grid_index >= 0) te.t = dt * static_cast<double>(gi);
            te.ev = std::move(e);
            events_.push_back(std::move(te));
        };
        switch (ev.type) {
            case ScenarioEvent::Type::Fault:
                add(ev.t, Event{Event::Kind::FaultOn, ev.element});
                add(ev.t + ev.duration_s,
                    Event{Event::Kind::FaultClear, ev.element, 1.0, ev.clear_opens_branch});
                break;
            case ScenarioEvent::Type::TripMachine:
                add(ev.t, Event{Event::Kind::TripMachine, ev.element});
                break;
            case ScenarioEvent::Type::TripIbr:
                add(ev.t, Event{Event::Kind::TripIbr, ev.element});
                break;
            case ScenarioEvent::Type::LoadLoss:
                add(ev.t, Event{Event::Kind::ScaleLoad, ev.element, 1.0 - ev.fraction});
                break;
            case ScenarioEvent::Type::OpenBranch:
                add(ev.t, Event{Event::Kind::OpenBranch, ev.element});
                break;
            case ScenarioEvent::Type::CloseBranch:
                add(ev.t, Event{Event::Kind::CloseBranch, ev.element});
                break;
        }
    }
    std::stable_sort(events_.begin(), events_.end(),
                     [](const TimedEvent& a, const TimedEvent& b) { return a.t < b.t; });
}

void Simulator::sample_and_control(double t, long k) {
    const Case& c = scenario_.case_data;
    const CommsConfig& cm = scenario_.comms;
    const double noise_std = cm.ideal ? 0.0 : cm.noise_std_rad;

    for (size_t s = 0; s < c.sensors.size(); ++s) {
        double val = x_(plant_->layout().sensor_lag[s]) + c.sensors[s].bias;
        if (noise_std > 0.0) {
            val += std::normal_distribution<double>(0.0, noise_std)(rng_);
        }
        sensor_value_[s] = val;
        if (k % cm.sample_every == 0) channels_[s].push(t, val, rng_);
    }
    if (controllers_.empty()) return;

    double theta_tilde = 0.0;
    for (size_t s = 0; s < c.sensors.size(); ++s) {
        theta_tilde += c.sensors[s].weight * channels_[s].read(t);
    }
    for (size_t u = 0; u < c.ibr_units.size(); ++u) {
        if (!topo_.ibr_online[u]) {
            p_s_[u] = 0.0;
            continue;
        }
        const double theta_j = sensor_value_[colocated_sensor_[u]];
        if (!controllers_[u].anchored()) controllers_[u].anchor(theta_j, theta_tilde);
        p_s_[u] = controllers_[u].step(theta_j, theta_tilde);
    }
}

SolveStatus Simulator::rk4_step(double /*t*/, double h, const NetworkOut* net_at_start) {
    const int n = plant_->layout().size;
    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n);
    NetworkOut net;
    SolveStatus st;

    if (net_at_start != nullptr) {
        plant_->derivatives_from_net(x_, *net_at_start, p_s_, kNoExtraInput, unwrap_ref_, k1);
    } else {
        st = plant_->derivatives(x_, p_s_, kNoExtraInput, unwrap_ref_, net, k1);
        if (st != SolveStatus::Ok) return st;
    }
    Eigen::VectorXd xt = x_ + 0.5 * h * k1;
    st = plant_->derivatives(xt, p_s_, kNoExtraInput, unwrap_ref_, net, k2);
    if (st != SolveStatus::Ok) return st;
    xt = x_ + 0.5 * h * k2;
    st = plant_->derivatives(xt, p_s_, kNoExtraInput, unwrap_ref_, net, k3);
    if (st != SolveStatus::Ok) return st;
    xt = x_ + h * k3;
    st = plant_->derivatives(xt, p_s_, kNoExtraInput, unwrap_ref_, net, k4);
    if (st != SolveStatus::Ok) return st;
    x_ += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return SolveStatus::Ok;
}

SolveStatus Simulator::integrate_interval(double t_from, double t_to, size_t& ev_cursor) {
    const double eps = 1e-9 * scenario_.dt();
    double t = t_from;
    bool first_segment = true;
    while (t < t_to - eps) {
        double t_next = t_to;
        bool event_at_boundary = false;
        if (ev_cursor < events_.size() && events_[ev_cursor].grid_index < 0 &&
            events_[ev_cursor].t < t_to - eps) {
            t_next = events_[ev_cursor].t;
            event_at_boundary = true;
        }
        const SolveStatus st = rk4_step(t, t_next - t, first_segment ? net_start_ : nullptr);
        if (st != SolveStatus::Ok) return st;
        first_segment = false;
        if (event_at_boundary) {
            while (ev_cursor < events_.size() && events_[ev_cursor].grid_index < 0 &&
                   std::abs(events_[ev_cursor].t - t_next) <= eps) {
                topo_ = apply_event(scenario_.case_data, topo_, events_[ev_cursor].ev);
                ++ev_cursor;
            }
            plant_->set_topology(topo_);
        }
        t = t_next;
    }
    return SolveStatus::Ok;
}

double Simulator::max_pair_separation_deviation() const {
    const auto& layout = plant_->layout();
    const size_t nm = scenario_.case_data.machines.size();
    double worst = 0.0;
    size_t pair = 0;
    for (size_t i = 0; i < nm; ++i) {
        for (size_t j = i + 1; j < nm; ++j, ++pair) {
            if (!topo_.machine_online[i] || !topo_.machine_online[j]) continue;
            const double sep = x_(layout.machines[i].delta) - x_(layout.machines[j].delta);
            worst = std::max(worst, std::abs(sep - pair_sep0_[pair]));
        }
    }
    return worst;
}

void Simulator::record_sample(double t, const NetworkOut& net) {
    const Case& c = scenario_.case_data;
    const auto& layout = plant_->layout();
    const int sample = static_cast<int>(traj_.t.size());
    traj_.t.push_back(t);

    for (size_t m = 0; m < c.machines.size(); ++m) {
        auto& series = traj_.machines[m];
        series.delta.push_back(x_(layout.machines[m].delta));
        series.omega.push_back(x_(layout.machines[m].omega));
        const double p_m =
            layout.machines[m].gov >= 0 ? x_(layout.machines[m].gov) : plant_->p_set()[m];
        series.p_m.push_back(p_m);
        series.p_e.push_back(net.p_e[m]);
        if (!topo_.machine_online[m] && series.offline_from < 0) series.offline_from = sample;
    }
    for (size_t b = 0; b < c.buses.size(); ++b) {
        traj_.buses[b].v_mag.push_back(std::abs(net.v(b)));
        traj_.buses[b].v_ang.push_back(std::arg(net.v(b)));
    }
    for (size_t u = 0; u < c.ibr_units.size(); ++u) {
        auto& series = traj_.ibr_units[u];
        series.i_p.push_back(net.i_p[u]);
        series.p_inj.push_back(net.p_inj[u]);
        double soc = c.ibr_units[u].params.energy_mwh / 2.0;
        if (sample > 0) {
            const double p_avg = 0.5 * (series.p_inj[sample - 1] + series.p_inj[sample]);
            soc = series.soc_mwh[sample - 1] -
                  p_avg * c.system.base_mva * (t - traj_.t[sample - 1]) / 3600.0;
        }
        series.soc_mwh.push_back(soc);
        if (!topo_.ibr_online[u] && series.offline_from < 0) series.offline_from = sample;
    }
    for (size_t j = 0; j < controllers_.size(); ++j) {
        traj_.controllers[j].e1.push_back(controllers_[j].last_e1());
        traj_.controllers[j].e2.push_back(controllers_[j].last_e2());
        traj_.controllers[j].p_s.push_back(controllers_[j].last_output());
    }

    std::vector<double> speeds, angles, inertias;
    for (size_t m = 0; m < c.machines.size(); ++m) {
        if (!topo_.machine_online[m]) continue;
        speeds.push_back(x_(layout.machines[m].omega));
        angles.push_back(x_(layout.machines[m].delta));
        inertias.push_back(c.machines[m].params.h);
    }
    if (!speeds.empty()) {
        const CoiState coi = coi_states(speeds, angles, inertias, c.system.f0_hz);
        traj_.coi.delta.push_back(coi.delta);
        traj_.coi.omega.push_back(coi.omega);
        traj_.coi.freq_hz.push_back(coi.freq_hz);
    } else {
        traj_.coi.delta.push_back(sample > 0 ? traj_.coi.delta.back() : 0.0);
        traj_.coi.omega.push_back(sample > 0 ? traj_.coi.omega.back() : 1.0);
        traj_.coi.freq_hz.push_back(sample > 0 ? traj_.coi.freq_hz.back() : c.system.f0_hz);
    }

    if (sample == 0) {
        traj_.coi_delta0 = traj_.coi.delta[0];
        for (size_t m = 0; m < c.machines.size(); ++m) {
            traj_.machine_delta0.push_back(traj_.machines[m].delta[0]);
        }
    }
}

Trajectory Simulator::run() {
    const Case& c = scenario_.case_data;
    const double dt = scenario_.dt();
    const long n_steps = std::llround(scenario_.integration.t_end / dt);
    const int decimate = scenario_.record.decimate;
    const double diverge_rad = scenario_.integration.diverge_angle_deg * kPi / 180.0;

    traj_ = Trajectory{};
    traj_.dt = dt * decimate;
    traj_.f0_hz = c.system.f0_hz;
    traj_.omega_b = c.omega_b();
    traj_.omega0 = c.omega0();
    traj_.machines.resize(c.machines.size());
    traj_.buses.resize(c.buses.size());
    traj_.ibr_units.resize(c.ibr_units.size());
    traj_.controllers.resize(controllers_.size());
    for (size_t m = 0; m < c.machines.size(); ++m) {
        traj_.machines[m].id = c.machines[m].id;
        traj_.machine_h.push_back(c.machines[m].params.h);
    }
    for (size_t b = 0; b < c.buses.size(); ++b) traj_.buses[b].id = c.buses[b].id;
    for (size_t u = 0; u < c.ibr_units.size(); ++u) traj_.ibr_units[u].id = c.ibr_units[u].id;
    for (size_t j = 0; j < controllers_.size(); ++j) {
        traj_.controllers[j].id = c.ibr_units[j].id;
    }

    size_t ev_cursor = 0;
    TerminationStatus status = TerminationStatus::Completed;
    NetworkOut net;

    for (long k = 0;; ++k) {
        const double t = dt * static_cast<double>(k);

        bool topo_changed = false;
        while (ev_cursor < events_.size() && events_[ev_cursor].grid_index == k) {
            topo_ = apply_event(c, topo_, events_[ev_cursor].ev);
            ++ev_cursor;
            topo_changed = true;
        }
        if (topo_changed) plant_->set_topology(topo_);

        if (plant_->solve_network(x_, net) != SolveStatus::Ok) {
            status = TerminationStatus::NetworkSingular;
            break;
        }
        for (size_t s = 0; s < c.sensors.size(); ++s) {
            unwrap_ref_[s] = unwrap_step(std::arg(net.v(c.sensors[s].bus)), unwrap_ref_[s]);
        }
        sample_and_control(t, k);
        if (k % decimate == 0) record_sample(t, net);

        if (k >= n_steps) break;
        if (max_pair_separation_deviation() > diverge_rad) {
            status = TerminationStatus::Diverged;
            break;
        }

        net_start_ = &net;
        const SolveStatus st = integrate_interval(t, dt * static_cast<double>(k + 1), ev_cursor);
        net_start_ = nullptr;
        if (st != SolveStatus::Ok) {
            status = TerminationStatus::NetworkSingular;
            break;
        }
    }

    traj_.status = status;
    return std::move(traj_);
}

Trajectory simulate(const Scenario& scenario) {
    Simulator sim(scenario);
    return sim.run();
}

bool classify_stable(const Trajectory& traj, double threshold_rad) {
    if (traj.status != TerminationStatus::Completed) return false;
    const int nm = traj.machine_count();
    for (int i = 0; i < nm; ++i) {
        for (int j = i + 1; j < nm; ++j) {
            const auto& a = traj.machines[i];
            const auto& b = traj.machines[j];
            const double sep0 = a.delta[0] - b.delta[0];
            const int last_i = a.offline_from < 0 ? traj.n_samples() : a.offline_from;
            const int last_j = b.offline_from < 0 ? traj.n_samples() : b.offline_from;
            const int last = std::min(last_i, last_j);
            for (int n = 1; n < last; ++n) {
                if (std::abs(a.delta[n] - b.delta[n] - sep0) > threshold_rad) return false;
            }
        }
    }
    return true;
}

}  // namespace tsim
