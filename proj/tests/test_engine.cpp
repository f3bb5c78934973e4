#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "tsim/engine.hpp"
#include "tsim/ybus.hpp"

using namespace tsim;

namespace {

Scenario load_scenario(const std::string& case_name, const std::string& extra = "{}") {
    std::string doc = R"({"case": ")" + std::string(TSIM_CASE_DIR) + "/" + case_name + R"("})";
    nlohmann::json j = nlohmann::json::parse(doc);
    nlohmann::json patch = nlohmann::json::parse(extra);
    for (auto& item : patch.items()) j[item.key()] = item.value();
    return parse_scenario(j.dump(), ".");
}

double max_speed_deviation(const Trajectory& traj) {
    double worst = 0.0;
    for (const auto& m : traj.machines) {
        for (double w : m.omega) worst = std::max(worst, std::abs(w - 1.0));
    }
    return worst;
}

}  // namespace

TEST_CASE("event-free run preserves the equilibrium") {
    Scenario s = load_scenario("twomach.json", R"({"integration": {"t_end": 10.0}})");
    Trajectory traj = simulate(s);
    REQUIRE(traj.status == TerminationStatus::Completed);
    CHECK(max_speed_deviation(traj) < 1e-9);
    CHECK(classify_stable(traj));
}

TEST_CASE("closed-loop infrastructure stays quiet at equilibrium") {
    Scenario s = load_scenario("twomach.json", R"({
        "integration": {"t_end": 5.0},
        "controller": {"enabled": true, "alpha1": 1.0, "alpha2": 0.01, "gain": 10.0}
    })");
    Trajectory traj = simulate(s);
    REQUIRE(traj.status == TerminationStatus::Completed);
    CHECK(max_speed_deviation(traj) < 1e-9);
    REQUIRE(traj.controllers.size() == 1);
    for (double p : traj.controllers[0].p_s) CHECK(std::abs(p) < 1e-9);
}

TEST_CASE("generator trip: frequency declines then recovers under droop") {
    // Horizon long enough for the lightly damped regulation transient to ring
    // down (the single surviving governor settles over a few minutes).
    Scenario s = load_scenario("twomach.json", R"({
        "integration": {"t_end": 240.0},
        "events": [{"type": "trip_machine", "machine": "g2", "t": 1.0}]
    })");
    Trajectory traj = simulate(s);
    REQUIRE(traj.status == TerminationStatus::Completed);
    const auto& f = traj.coi.omega;
    const double nadir = *std::min_element(f.begin(), f.end());
    CHECK(nadir < 1.0 - 1e-4);              // frequency dips
    CHECK(f.back() > nadir + 1e-4);         // and partially recovers
    CHECK(f.back() < 1.0);                  // droop leaves a steady offset
    // At the settled point the governor equation pins dP = -d_omega / R.
    const double d_omega = traj.machines[0].omega.back() - 1.0;
    const double dp_gov = traj.machines[0].p_m.back() - traj.machines[0].p_m.front();
    CHECK(dp_gov == doctest::Approx(-d_omega / 0.05).epsilon(0.02));
    CHECK(traj.machines[1].offline_from > 0);
}

TEST_CASE("rk4 order: halving dt shrinks the t_end error ~16x") {
    // Smooth interval: a small load loss applied at t = 0 so the whole window
    // integrates one smooth post-event system.
    auto run = [&](double dt) {
        Scenario s = load_scenario("twomach.json", R"({
            "integration": {"t_end": 2.0},
            "events": [{"type": "load_loss", "bus": "bus3", "fraction": 0.1, "t": 0.0}]
        })");
        s.integration.dt = dt;
        return simulate(s);
    };
    Trajectory coarse = run(8e-3);
    Trajectory half = run(4e-3);
    Trajectory ref = run(1e-3);
    auto state_error = [&](const Trajectory& a, const Trajectory& b) {
        double err = 0.0;
        for (int m = 0; m < a.machine_count(); ++m) {
            err = std::max(err, std::abs(a.machines[m].delta.back() - b.machines[m].delta.back()));
            err = std::max(err, std::abs(a.machines[m].omega.back() - b.machines[m].omega.back()));
        }
        return err;
    };
    const double e1 = state_error(coarse, ref);
    const double e2 = state_error(half, ref);
    CHECK(e1 / e2 > 12.0);
    CHECK(e1 / e2 < 22.0);
}

TEST_CASE("fault changes the network at exactly the scheduled sample") {
    Scenario s = load_scenario("twomach.json", R"({
        "integration": {"t_end": 2.0},
        "events": [{"type": "fault", "bus": "bus3", "t": 1.0, "duration_cycles": 6.0}]
    })");
    Trajectory traj = simulate(s);
    REQUIRE(traj.status == TerminationStatus::Completed);
    const double dt = traj.dt;
    const int k_fault = static_cast<int>(std::lround(1.0 / dt));
    const auto& vm = traj.buses[2].v_mag;
    CHECK(vm[k_fault - 1] > 0.9);
    CHECK(vm[k_fault] < 1e-6);  // bolted fault: solved voltage collapses
    // cleared after 6 cycles = 0.1 s = 24 steps at dt = 1/240
    const int k_clear = k_fault + static_cast<int>(std::lround(0.1 / dt));
    CHECK(vm[k_clear - 1] < 1e-6);
    CHECK(vm[k_clear] > 0.5);
}

TEST_CASE("zero gain closed loop matches open loop exactly") {
    const char* events = R"({
        "integration": {"t_end": 5.0},
        "events": [{"type": "fault", "bus": "bus3", "t": 0.5, "duration_cycles": 4.0}]
    })";
    Scenario ol = load_scenario("twomach.json", events).with_protocol(Protocol::OpenLoop);
    Scenario cl = load_scenario("twomach.json", events).with_protocol(Protocol::ClosedLoop);
    cl.controller.gain = 0.0;
    Trajectory a = simulate(ol);
    Trajectory b = simulate(cl);
    REQUIRE(a.n_samples() == b.n_samples());
    for (int m = 0; m < a.machine_count(); ++m) {
        for (int n = 0; n < a.n_samples(); ++n) {
            CHECK(std::abs(a.machines[m].delta[n] - b.machines[m].delta[n]) < 1e-12);
            CHECK(std::abs(a.machines[m].omega[n] - b.machines[m].omega[n]) < 1e-12);
        }
    }
}

TEST_CASE("seeded comms runs are bit-identical") {
    const char* patch = R"({
        "integration": {"t_end": 3.0},
        "events": [{"type": "trip_machine", "machine": "g2", "t": 0.5}],
        "controller": {"enabled": true},
        "comms": {"mode": "statistical", "delay_range_s": [0.067, 0.25]},
        "seed": 99
    })";
    Trajectory a = simulate(load_scenario("twomach.json", patch));
    Trajectory b = simulate(load_scenario("twomach.json", patch));
    REQUIRE(a.n_samples() == b.n_samples());
    for (int n = 0; n < a.n_samples(); ++n) {
        CHECK(a.machines[0].delta[n] == b.machines[0].delta[n]);
        CHECK(a.controllers[0].p_s[n] == b.controllers[0].p_s[n]);
    }
    // A different seed draws different delays, so trajectories differ.
    Scenario c = load_scenario("twomach.json", patch);
    c.seed = 100;
    Trajectory d = simulate(c);
    double diff = 0.0;
    for (int n = 0; n < std::min(a.n_samples(), d.n_samples()); ++n) {
        diff = std::max(diff, std::abs(a.controllers[0].p_s[n] - d.controllers[0].p_s[n]));
    }
    CHECK(diff > 0.0);
}

TEST_CASE("smib fault held past the critical angle loses synchronism") {
    SUBCASE("short fault stays stable") {
        Scenario s = load_scenario("smib.json", R"({
            "integration": {"t_end": 5.0},
            "events": [{"type": "fault", "bus": "bus2", "t": 0.5, "duration_s": 0.05}]
        })");
        Trajectory traj = simulate(s);
        CHECK(traj.status == TerminationStatus::Completed);
        CHECK(classify_stable(traj));
    }
    SUBCASE("long fault goes unstable") {
        Scenario s = load_scenario("smib.json", R"({
            "integration": {"t_end": 5.0},
            "events": [{"type": "fault", "bus": "bus2", "t": 0.5, "duration_s": 0.35}]
        })");
        Trajectory traj = simulate(s);
        CHECK_FALSE(classify_stable(traj));
    }
}

TEST_CASE("network solve matches a dense reassembly oracle") {
    Scenario s = load_scenario("twomach.json");
    Simulator sim(s);
    const PlantModel& plant = sim.plant();
    const Case& c = s.case_data;

    // Independent assembly: ybus + folded loads + machine admittances.
    Eigen::MatrixXcd y = build_ybus(c, base_topology(c));
    for (size_t b = 0; b < c.buses.size(); ++b) {
        const Complex s_load(c.buses[b].load_p, c.buses[b].load_q);
        y(b, b) += std::conj(s_load) / std::norm(plant.powerflow().v(b));
    }
    Eigen::VectorXcd i = Eigen::VectorXcd::Zero(c.buses.size());
    for (size_t m = 0; m < c.machines.size(); ++m) {
        const Complex y_m = 1.0 / Complex(0.0, c.machines[m].params.x_dp);
        y(c.machines[m].bus, c.machines[m].bus) += y_m;
        const auto& slots = plant.layout().machines[m];
        i(c.machines[m].bus) +=
            std::polar(plant.emf()[m], plant.equilibrium_state()(slots.delta)) * y_m;
    }
    const Eigen::VectorXcd v_oracle = y.fullPivLu().solve(i);

    NetworkOut net;
    REQUIRE(plant.solve_network(plant.equilibrium_state(), net) == SolveStatus::Ok);
    for (size_t b = 0; b < c.buses.size(); ++b) {
        CHECK(std::abs(net.v(b) - v_oracle(b)) < 1e-9);
    }
}

TEST_CASE("constant-current load iteration hits the closed form") {
    // One machine behind x' feeding a single load over a line: with a purely
    // active constant-current load, |V|^2 + (x_tot P0 / v_ref)^2 = E^2.
    std::string doc = R"({
      "system": {"base_mva": 100.0, "f0_hz": 60.0},
      "buses": [
        {"id": "b1", "type": "slack", "v_set": 1.0},
        {"id": "b2", "type": "pq", "load_p": 0.8}
      ],
      "branches": [{"id": "l12", "from": "b1", "to": "b2", "x": 0.2}],
      "machines": [{"id": "g1", "bus": "b1", "h": 3.0, "xdp": 0.1}]
    })";
    Scenario s;
    s.case_data = parse_case(doc);
    s.load_model.active_constant_current = true;
    s.integration.t_end = 1.0;
    Simulator sim(s);
    const PlantModel& plant = sim.plant();

    NetworkOut net;
    REQUIRE(plant.solve_network(plant.equilibrium_state(), net) == SolveStatus::Ok);
    CHECK(plant.network().last_iterations() < 10);

    const double e = plant.emf()[0];
    const double x_tot = 0.1 + 0.2;
    const double v_ref = std::abs(plant.powerflow().v(1));
    const double vm_expect = std::sqrt(e * e - std::pow(x_tot * 0.8 / v_ref, 2));
    CHECK(std::abs(net.v(1)) == doctest::Approx(vm_expect).epsilon(1e-8));
}

TEST_CASE("no sources and a shunt load give a zero voltage solution") {
    std::string doc = R"({
      "system": {"base_mva": 100.0, "f0_hz": 60.0},
      "buses": [
        {"id": "b1", "type": "slack", "load_p": 0.1, "load_q": 0.05},
        {"id": "b2", "type": "pq", "load_p": 0.1, "load_q": 0.05}
      ],
      "branches": [{"id": "l12", "from": "b1", "to": "b2", "x": 0.2}],
      "machines": [{"id": "g1", "bus": "b1", "h": 3.0, "xdp": 0.1},
                   {"id": "g2", "bus": "b2", "h": 3.0, "xdp": 0.1}]
    })";
    Case c = parse_case(doc);
    LoadModelConfig lm;
    PowerFlowSolution pf = solve_powerflow(c);
    REQUIRE(pf.converged);
    NetworkSolver solver(c, lm, pf.v);
    Topology topo = base_topology(c);
    solver.set_topology(topo);
    std::vector<Complex> emf{Complex(0.0, 0.0), Complex(0.0, 0.0)};
    std::vector<double> no_ibr;
    Eigen::VectorXcd v = pf.v;
    REQUIRE(solver.solve(emf, no_ibr, v) == SolveStatus::Ok);
    CHECK(v.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("singular network is reported, not crashed") {
    // Two islands: opening the only line leaves bus2 with no path and no shunt.
    std::string doc = R"({
      "system": {"base_mva": 100.0, "f0_hz": 60.0},
      "buses": [
        {"id": "b1", "type": "slack"},
        {"id": "b2", "type": "pq"}
      ],
      "branches": [{"id": "l12", "from": "b1", "to": "b2", "x": 0.2}],
      "machines": [{"id": "g1", "bus": "b1", "h": 3.0, "xdp": 0.1}]
    })";
    Case c = parse_case(doc);
    PowerFlowSolution pf = solve_powerflow(c);
    REQUIRE(pf.converged);
    NetworkSolver solver(c, LoadModelConfig{}, pf.v);
    Topology topo = base_topology(c);
    topo.branch_in_service[0] = false;
    solver.set_topology(topo);
    std::vector<Complex> emf{Complex(1.0, 0.0)};
    std::vector<double> no_ibr;
    Eigen::VectorXcd v = pf.v;
    CHECK(solver.solve(emf, no_ibr, v) == SolveStatus::Singular);
}

TEST_CASE("soc bookkeeping follows the injected energy") {
    Scenario s = load_scenario("twomach.json", R"({
        "integration": {"t_end": 10.0},
        "events": [{"type": "trip_machine", "machine": "g2", "t": 0.5}],
        "controller": {"enabled": true, "alpha1": 1.0, "alpha2": 0.05, "gain": 10.0}
    })");
    Trajectory traj = simulate(s);
    REQUIRE(traj.status == TerminationStatus::Completed);
    const auto& u = traj.ibr_units[0];
    // Trapezoidal re-integration of p_inj should reproduce the recorded SoC.
    double soc = u.soc_mwh[0];
    for (int n = 1; n < traj.n_samples(); ++n) {
        soc -= 0.5 * (u.p_inj[n - 1] + u.p_inj[n]) * 100.0 * traj.dt / 3600.0;
    }
    CHECK(soc == doctest::Approx(u.soc_mwh.back()).epsilon(1e-10));
    // The unit discharged on net after the trip (frequency support).
    CHECK(u.soc_mwh.back() < u.soc_mwh[0]);
}
