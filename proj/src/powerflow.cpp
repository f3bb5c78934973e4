#include "tsim/powerflow.hpp"

#include <cmath>

#include "tsim/ybus.hpp"

namespace tsim {

namespace {

struct Schedule {
    Eigen::VectorXd p;  // net scheduled injection per bus (generation - load)
    Eigen::VectorXd q;
};

Schedule build_schedule(const Case& c, const Topology& topo) {
    const int n = static_cast<int>(c.buses.size());
    Schedule s{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    for (int b = 0; b < n; ++b) {
        s.p(b) -= c.buses[b].load_p * topo.load_scale[b];
        s.q(b) -= c.buses[b].load_q * topo.load_scale[b];
    }
    for (int m = 0; m < static_cast<int>(c.machines.size()); ++m) {
        if (topo.machine_online[m]) s.p(c.machines[m].bus) += c.machines[m].p_dispatch;
    }
    for (int u = 0; u < static_cast<int>(c.ibr_units.size()); ++u) {
        if (topo.ibr_online[u]) s.p(c.ibr_units[u].bus) += c.ibr_units[u].params.p_ref;
    }
    return s;
}

}  // namespace

PowerFlowSolution solve_powerflow(const Case& c, const Topology& topo,
                                  const PowerFlowOptions& opt) {
    const int n = static_cast<int>(c.buses.size());
    const Eigen::MatrixXcd y = build_ybus(c, topo);
    const Eigen::MatrixXd g = y.real();
    const Eigen::MatrixXd b = y.imag();
    const Schedule sched = build_schedule(c, topo);

    // Flat start.
    Eigen::VectorXd vm(n), va = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        vm(i) = (c.buses[i].type == BusType::PQ) ? 1.0 : c.buses[i].v_set;
    }

    std::vector<int> ang_idx;  // buses with an unknown angle
    std::vector<int> mag_idx;  // buses with an unknown magnitude
    for (int i = 0; i < n; ++i) {
        if (c.buses[i].type != BusType::Slack) ang_idx.push_back(i);
        if (c.buses[i].type == BusType::PQ) mag_idx.push_back(i);
    }
    const int na = static_cast<int>(ang_idx.size());
    const int nm = static_cast<int>(mag_idx.size());

    Eigen::VectorXd p_calc(n), q_calc(n);
    auto compute_injections = [&] {
        for (int i = 0; i < n; ++i) {
            double pi = 0.0, qi = 0.0;
            for (int j = 0; j < n; ++j) {
                const double th = va(i) - va(j);
                const double ct = std::cos(th), st = std::sin(th);
                pi += vm(j) * (g(i, j) * ct + b(i, j) * st);
                qi += vm(j) * (g(i, j) * st - b(i, j) * ct);
            }
            p_calc(i) = vm(i) * pi;
            q_calc(i) = vm(i) * qi;
        }
    };

    PowerFlowSolution sol;
    sol.iterations = 0;
    double max_mis = 0.0;
    bool converged = false;

    for (int it = 0; it <= opt.max_iterations; ++it) {
        compute_injections();
        Eigen::VectorXd mis(na + nm);
        for (int k = 0; k < na; ++k) mis(k) = sched.p(ang_idx[k]) - p_calc(ang_idx[k]);
        for (int k = 0; k < nm; ++k) mis(na + k) = sched.q(mag_idx[k]) - q_calc(mag_idx[k]);
        max_mis = mis.size() > 0 ? mis.cwiseAbs().maxCoeff() : 0.0;
        sol.iterations = it;
        if (!std::isfinite(max_mis)) break;
        if (max_mis < opt.tolerance) {
            converged = true;
            break;
        }
        if (it == opt.max_iterations) break;

        Eigen::MatrixXd jac(na + nm, na + nm);
        for (int r = 0; r < na; ++r) {
            const int i = ang_idx[r];
            for (int cidx = 0; cidx < na; ++cidx) {
                const int j = ang_idx[cidx];
                if (i == j) {
                    jac(r, cidx) = -q_calc(i) - b(i, i) * vm(i) * vm(i);
                } else {
                    const double th = va(i) - va(j);
                    jac(r, cidx) = vm(i) * vm(j) * (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
                }
            }
            for (int cidx = 0; cidx < nm; ++cidx) {
                const int j = mag_idx[cidx];
                if (i == j) {
                    jac(r, na + cidx) = p_calc(i) / vm(i) + g(i, i) * vm(i);
                } else {
                    const double th = va(i) - va(j);
                    jac(r, na + cidx) = vm(i) * (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
                }
            }
        }
        for (int r = 0; r < nm; ++r) {
            const int i = mag_idx[r];
            for (int cidx = 0; cidx < na; ++cidx) {
                const int j = ang_idx[cidx];
                if (i == j) {
                    jac(na + r, cidx) = p_calc(i) - g(i, i) * vm(i) * vm(i);
                } else {
                    const double th = va(i) - va(j);
                    jac(na + r, cidx) = -vm(i) * vm(j) * (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
                }
            }
            for (int cidx = 0; cidx < nm; ++cidx) {
                const int j = mag_idx[cidx];
                if (i == j) {
                    jac(na + r, na + cidx) = q_calc(i) / vm(i) - b(i, i) * vm(i);
                } else {
                    const double th = va(i) - va(j);
                    jac(na + r, na + cidx) = vm(i) * (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
                }
            }
        }

        Eigen::VectorXd dx = jac.partialPivLu().solve(mis);
        if (!dx.allFinite()) break;
        for (int k = 0; k < na; ++k) va(ang_idx[k]) += dx(k);
        for (int k = 0; k < nm; ++k) vm(mag_idx[k]) += dx(na + k);
        if (vm.minCoeff() <= 0.0) break;  // collapsed iterate, no physical solution
    }

    sol.converged = converged;
    sol.max_mismatch = max_mis;
    sol.v.resize(n);
    for (int i = 0; i < n; ++i) sol.v(i) = std::polar(vm(i), va(i));

    // Machine dispatch from the solved network state: generation covers the
    // bus injection plus the local load (IBR setpoint injections netted out).
    compute_injections();
    sol.machine_p.assign(c.machines.size(), 0.0);
    sol.machine_q.assign(c.machines.size(), 0.0);
    sol.ibr_p.assign(c.ibr_units.size(), 0.0);
    Eigen::VectorXd ibr_at_bus = Eigen::VectorXd::Zero(n);
    for (int u = 0; u < static_cast<int>(c.ibr_units.size()); ++u) {
        if (!topo.ibr_online[u]) continue;
        sol.ibr_p[u] = c.ibr_units[u].params.p_ref;
        ibr_at_bus(c.ibr_units[u].bus) += sol.ibr_p[u];
    }
    for (int m = 0; m < static_cast<int>(c.machines.size()); ++m) {
        if (!topo.machine_online[m]) continue;
        const int bus = c.machines[m].bus;
        sol.machine_p[m] = p_calc(bus) + c.buses[bus].load_p * topo.load_scale[bus] - ibr_at_bus(bus);
        sol.machine_q[m] = q_calc(bus) + c.buses[bus].load_q * topo.load_scale[bus];
    }
    return sol;
}

}  // namespace tsim
