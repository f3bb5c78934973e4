#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsim/types.hpp"

namespace tsim {

/// Raised on malformed or inconsistent input documents.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BusType { Slack, PV, PQ };

struct Bus {
    std::string id;
    BusType type = BusType::PQ;
    double v_set = 1.0;   // pu, used for slack/PV buses
    double load_p = 0.0;  // pu on system base
    double load_q = 0.0;  // pu on system base
};

struct Branch {
    std::string id;
    int from = -1;  // bus index, resolved at parse time
    int to = -1;
    double r = 0.0;        // series resistance, pu
    double x = 0.0;        // series reactance, pu
    double b_shunt = 0.0;  // total line charging susceptance, pu
    bool in_service = true;
};

struct GovernorParams {
    bool enabled = false;
    double droop = 0.05;  // pu on system base after conversion
    double t_g = 0.5;     // s
    double p_min = 0.0;   // pu
    double p_max = 10.0;  // pu
};

// All quantities on the system base after parsing.
struct MachineParams {
    double h = 3.0;        // inertia constant, s
    double d = 0.0;        // damping coefficient, pu
    double x_dp = 0.3;     // transient reactance, pu
    GovernorParams governor;
};

struct MachineSpec {
    std::string id;
    int bus = -1;
    double rating_mva = 0.0;   // base the input document used for this unit
    double p_dispatch = 0.0;   // scheduled active power, pu system base
    MachineParams params;
};

struct IbrParams {
    double rating = 0.0;      // power rating, pu system base; L_e = +/- rating
    double p_ref = 0.0;       // baseline injection setpoint, pu
    double v_min = 0.1;       // divisor floor on terminal voltage, pu
    double t_i = 0.02;        // interface time constant, s
    double v_zero = 0.5;      // LVPL zero-current voltage, pu
    double v_break = 0.9;     // LVPL full-current voltage, pu
    double i_limit = 0.0;     // rated current limit, pu (defaults to 1.1 * rating)
    double energy_mwh = 0.0;  // storage capacity for SoC bookkeeping (0 = untracked)
    bool soc_derate = false;  // taper L_e near empty/full state of charge
};

struct IbrSpec {
    std::string id;
    int bus = -1;
    IbrParams params;
};

struct SensorSpec {
    std::string id;
    int bus = -1;
    double t_const = 0.02;  // first-order measurement lag, s
    double weight = 0.0;    // gamma_k, nonnegative, sums to one over the set
    double bias = 0.0;      // constant measurement offset, rad
};

struct SystemParams {
    double base_mva = 100.0;
    double f0_hz = 60.0;
};

/// Static network description. Immutable after construction.
class Case {
  public:
    SystemParams system;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<MachineSpec> machines;
    std::vector<IbrSpec> ibr_units;
    std::vector<SensorSpec> sensors;

    double omega_b() const { return speed_base(system.f0_hz); }
    double omega0() const { return 1.0; }

    int bus_index(const std::string& id) const;
    int branch_index(const std::string& id) const;
    int machine_index(const std::string& id) const;
    int ibr_index(const std::string& id) const;
    int slack_bus() const;

    /// Rebuild lookup tables and check every invariant; throws ParseError.
    void finalize();

  private:
    std::unordered_map<std::string, int> bus_map_;
    std::unordered_map<std::string, int> branch_map_;
    std::unordered_map<std::string, int> machine_map_;
    std::unordered_map<std::string, int> ibr_map_;
    int slack_ = -1;
};

Case parse_case(const std::string& json_text);
Case parse_case_file(const std::string& path);

/// Switching state layered over a Case. Value type; events produce new copies.
struct Topology {
    std::vector<bool> branch_in_service;
    std::vector<bool> machine_online;
    std::vector<bool> ibr_online;
    std::vector<bool> bus_faulted;
    std::vector<double> load_scale;  // multiplier on scheduled bus load

    friend bool operator==(const Topology&, const Topology&) = default;
};

Topology base_topology(const Case& c);

struct Event {
    enum class Kind {
        FaultOn,      // bolted three-phase fault at a bus
        FaultClear,   // remove fault marker, optionally opening a branch
        TripMachine,
        TripIbr,
        OpenBranch,
        CloseBranch,
        ScaleLoad,    // multiply the load scale at a bus by `factor`
    };
    Kind kind;
    std::string element;                     // bus / machine / branch / ibr id
    double factor = 1.0;                     // ScaleLoad only
    std::optional<std::string> open_branch;  // FaultClear only
};

/// Apply one switching event; throws ParseError on unknown element ids.
Topology apply_event(const Case& c, Topology topo, const Event& ev);

}  // namespace tsim
