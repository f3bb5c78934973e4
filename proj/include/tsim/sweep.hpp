#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "tsim/engine.hpp"

namespace tsim {

enum class ContingencyKind { GenTrip, Fault, LoadLoss };

std::string contingency_class_name(ContingencyKind k);

struct Contingency {
    std::string id;
    ContingencyKind kind;
    ScenarioEvent event;
};

/// One of each class per element: a trip per machine, a three-phase bolted
/// fault per branch end (cleared by removing that branch), and a partial load
/// loss per load bus.
std::vector<Contingency> generate_n1(const Case& c, double t_event = 1.0,
                                     double fault_cycles = 6.0, double load_fraction = 0.5);

struct SweepOptions {
    std::vector<Protocol> protocols{Protocol::OpenLoop, Protocol::ClosedLoop,
                                    Protocol::ClosedLoopComms};
    int jobs = 1;
    std::uint64_t master_seed = 0;
    double t_event = 1.0;
    double fault_cycles = 6.0;
    double load_fraction = 0.5;
    std::string out_dir;             // empty: no files written
    bool save_trajectories = false;  // per-run CSVs (large)
};

struct MachineSwing {
    std::string machine;
    double magnitude_deg = 0.0;
    bool censored = false;
    bool valid = false;  // false for the tripped unit or flat responses
};

struct ContingencyOutcome {
    std::string id;
    ContingencyKind kind;
    std::uint64_t seed = 0;
    // Indexed like SweepOptions::protocols.
    std::vector<bool> stable;
    std::vector<std::string> termination;
    std::vector<std::vector<MachineSwing>> swings;
    std::string error;  // nonempty when the contingency failed to run
};

struct SweepResult {
    std::vector<Contingency> contingencies;
    std::vector<ContingencyOutcome> outcomes;
    nlohmann::json summary;  // first-swing improvement table per event class
};

/// Derive the per-contingency seed from the master seed (splitmix64).
std::uint64_t contingency_seed(std::uint64_t master_seed, std::uint64_t index);

/// Run every (contingency x protocol variant); deterministic for a given
/// master seed regardless of the parallelism degree.
SweepResult run_sweep(const Scenario& base, const SweepOptions& options);

}  // namespace tsim
