#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsim/case.hpp"
#include "tsim/comms.hpp"
#include "tsim/wacs.hpp"

namespace tsim {

/// User-facing disturbance description; compiled into switching events by the
/// engine. Times in seconds; fault durations may be given in cycles at f0.
struct ScenarioEvent {
    enum class Type { Fault, TripMachine, TripIbr, LoadLoss, OpenBranch, CloseBranch };
    Type type;
    double t = 0.0;
    std::string element;
    double duration_s = 0.1;                         // Fault
    std::optional<std::string> clear_opens_branch;   // Fault
    double fraction = 0.5;                           // LoadLoss: share of S removed
};

struct IntegrationConfig {
    double dt = 0.0;     // 0 = default 1 / (4 f0)
    double t_end = 20.0;
    double diverge_angle_deg = 720.0;  // COI-frame pair separation abort bound
};

struct RecordConfig {
    int decimate = 1;
};

struct LoadModelConfig {
    bool active_constant_current = false;  // reactive is always constant impedance
};

enum class Protocol { OpenLoop, ClosedLoop, ClosedLoopComms };

std::string protocol_name(Protocol p);
std::optional<Protocol> protocol_from_name(const std::string& name);

struct Scenario {
    Case case_data;
    std::vector<ScenarioEvent> events;
    bool controller_enabled = false;
    ControllerConfig controller;
    CommsConfig comms;
    IntegrationConfig integration;
    RecordConfig record;
    LoadModelConfig load_model;
    std::uint64_t seed = 0;

    double dt() const {
        return integration.dt > 0.0 ? integration.dt : 1.0 / (4.0 * case_data.system.f0_hz);
    }

    /// Copy with the controller/comms arrangement of one protocol variant.
    Scenario with_protocol(Protocol p) const;
};

/// Parse a scenario document. A string `case` field is resolved relative to
/// `base_dir`; an inline object is parsed in place.
Scenario parse_scenario(const std::string& json_text, const std::string& base_dir);
Scenario parse_scenario_file(const std::string& path);

}  // namespace tsim
