#pragma once

#include <Eigen/Dense>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tsim/comms.hpp"
#include "tsim/ibr.hpp"
#include "tsim/machine.hpp"
#include "tsim/powerflow.hpp"
#include "tsim/scenario.hpp"
#include "tsim/wacs.hpp"

namespace tsim {

struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SolveStatus { Ok, Singular, NoConvergence };

/// Index map from model elements into the flat ODE state vector. Machines
/// without governors carry no governor slot.
struct StateLayout {
    struct MachineSlots {
        int delta = -1;
        int omega = -1;
        int gov = -1;
    };
    std::vector<MachineSlots> machines;
    std::vector<int> ibr_lag;
    std::vector<int> sensor_lag;
    int size = 0;
};

StateLayout build_layout(const Case& c);

/// Result of one algebraic network solve.
struct NetworkOut {
    Eigen::VectorXcd v;
    std::vector<double> p_e;    // air-gap power per machine (0 offline)
    std::vector<double> i_p;    // injected current per IBR, post LVPL
    std::vector<double> p_inj;  // injected power per IBR
    SolveStatus status = SolveStatus::Ok;
};

/// Algebraic network layer: Y V = I with machine Norton equivalents, loads
/// folded as admittances (constant-current active part iterated), and IBR
/// boundary current injections.
class NetworkSolver {
  public:
    NetworkSolver(const Case& c, const LoadModelConfig& lm, const Eigen::VectorXcd& v_ref);

    void set_topology(const Topology& topo);

    SolveStatus solve(const std::vector<Complex>& machine_emf,
                      const std::vector<double>& ibr_i_lag, Eigen::VectorXcd& v) const;

    int last_iterations() const { return last_iterations_; }

  private:
    const Case* c_;
    LoadModelConfig load_model_;
    Eigen::VectorXcd v_ref_;  // load-conversion reference voltages
    Topology topo_;
    Eigen::MatrixXcd y_aug_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
    bool singular_ = false;
    mutable int last_iterations_ = 0;
};

/// Machine/governor/IBR/sensor dynamics around the algebraic network. Owns the
/// equilibrium initialization; shared by the simulator and the linear model.
class PlantModel {
  public:
    PlantModel(const Case& c, const LoadModelConfig& lm);

    const StateLayout& layout() const { return layout_; }
    const Case& plant_case() const { return *c_; }
    const PowerFlowSolution& powerflow() const { return pf_; }
    const Eigen::VectorXd& equilibrium_state() const { return x0_; }
    const Eigen::VectorXcd& equilibrium_voltage() const { return v0_; }
    const std::vector<double>& emf() const { return emf_; }
    const std::vector<double>& p_set() const { return p_set_; }
    const Topology& topology() const { return topo_; }
    const NetworkSolver& network() const { return *solver_; }

    void set_topology(const Topology& topo);

    SolveStatus solve_network(const Eigen::VectorXd& x, NetworkOut& net) const;

    /// Fill dxdt given a solved network state. `p_s` is the per-IBR charging
    /// command, `pm_extra` an optional additive mechanical power input, and
    /// `unwrap_ref` the per-sensor continuation reference for bus angles.
    void derivatives_from_net(const Eigen::VectorXd& x, const NetworkOut& net,
                              const std::vector<double>& p_s,
                              const std::vector<double>& pm_extra,
                              const std::vector<double>& unwrap_ref,
                              Eigen::VectorXd& dxdt) const;

    SolveStatus derivatives(const Eigen::VectorXd& x, const std::vector<double>& p_s,
                            const std::vector<double>& pm_extra,
                            const std::vector<double>& unwrap_ref, NetworkOut& net,
                            Eigen::VectorXd& dxdt) const;

  private:
    const Case* c_;
    LoadModelConfig load_model_;
    StateLayout layout_;
    PowerFlowSolution pf_;
    Topology topo_;
    std::unique_ptr<NetworkSolver> solver_;
    std::vector<double> emf_;    // internal voltage magnitude per machine
    std::vector<double> p_set_;  // governor setpoint / fixed mechanical power
    Eigen::VectorXd x0_;
    Eigen::VectorXcd v0_;
    mutable Eigen::VectorXcd v_cache_;  // warm start for successive solves
};

enum class TerminationStatus { Completed, NetworkSingular, Diverged };

std::string termination_name(TerminationStatus s);

struct MachineSeries {
    std::string id;
    std::vector<double> delta, omega, p_m, p_e;
    int offline_from = -1;  // sample index of the trip, -1 if always online
};

struct BusSeries {
    std::string id;
    std::vector<double> v_mag, v_ang;
};

struct IbrSeries {
    std::string id;
    std::vector<double> i_p, p_inj, soc_mwh;
    int offline_from = -1;
};

struct ControllerSeries {
    std::string id;
    std::vector<double> e1, e2, p_s;
};

struct CoiSeries {
    std::vector<double> delta, omega, freq_hz;
};

/// Time-indexed record of a simulation on a uniform grid.
struct Trajectory {
    std::vector<double> t;
    std::vector<MachineSeries> machines;
    std::vector<BusSeries> buses;
    std::vector<IbrSeries> ibr_units;
    std::vector<ControllerSeries> controllers;
    CoiSeries coi;
    TerminationStatus status = TerminationStatus::Completed;

    // Metadata consumed by the analysis layer.
    double dt = 0.0;  // recording step
    double f0_hz = 60.0;
    double omega_b = 0.0;
    double omega0 = 1.0;
    std::vector<double> machine_h;
    std::vector<double> machine_delta0;  // rotor-angle anchors at t0
    double coi_delta0 = 0.0;

    int n_samples() const { return static_cast<int>(t.size()); }
    int machine_count() const { return static_cast<int>(machines.size()); }
};

/// Fixed-step RK4 over the plant with an algebraic network solve per stage,
/// timed switching events (step splitting at event boundaries), discrete
/// controller sampling, and the measurement channel model.
class Simulator {
  public:
    explicit Simulator(Scenario scenario);

    Trajectory run();

    // Hooks for tests and the harness.
    Eigen::VectorXd& state() { return x_; }
    const PlantModel& plant() const { return *plant_; }
    const StateLayout& layout() const { return plant_->layout(); }
    const Scenario& scenario() const { return scenario_; }

  private:
    struct TimedEvent {
        double t;
        long grid_index;  // -1 when between grid points
        Event ev;
    };

    void compile_events();
    void sample_and_control(double t, long k);
    SolveStatus integrate_interval(double t_from, double t_to, size_t& ev_cursor);
    SolveStatus rk4_step(double t, double h, const NetworkOut* net_at_start);
    void record_sample(double t, const NetworkOut& net);
    double max_pair_separation_deviation() const;

    Scenario scenario_;
    std::unique_ptr<PlantModel> plant_;
    Topology topo_;
    Eigen::VectorXd x_;
    std::vector<TimedEvent> events_;
    std::vector<Controller> controllers_;       // one per IBR when enabled
    std::vector<int> colocated_sensor_;         // sensor index per IBR
    std::vector<Channel> channels_;             // one per sensor
    std::vector<double> sensor_value_;          // latest local sample per sensor
    std::vector<double> unwrap_ref_;            // per sensor bus-angle continuation
    std::vector<double> p_s_;                   // ZOH command per IBR
    std::mt19937_64 rng_;
    Trajectory traj_;
    std::vector<double> pair_sep0_;             // initial machine pair separations
    const NetworkOut* net_start_ = nullptr;     // record-time solve reused by k1
};

Trajectory simulate(const Scenario& scenario);

/// First-swing stability classification: unstable when any machine-pair
/// COI-frame separation moves more than `threshold_rad` from its initial
/// value, or when the run did not complete.
bool classify_stable(const Trajectory& traj, double threshold_rad = kPi);

}  // namespace tsim
