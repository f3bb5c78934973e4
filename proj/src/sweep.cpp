#include "tsim/sweep.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "tsim/analysis.hpp"
#include "tsim/csvio.hpp"

namespace tsim {

std::string contingency_class_name(ContingencyKind k) {
    switch (k) {
        case ContingencyKind::GenTrip: return "gen_trip";
        case ContingencyKind::Fault: return "fault_line_clearing";
        case ContingencyKind::LoadLoss: return "loss_of_load";
    }
    return "?";
}

std::vector<Contingency> generate_n1(const Case& c, double t_event, double fault_cycles,
                                     double load_fraction) {
    std::vector<Contingency> out;
    for (const auto& m : c.machines) {
        Contingency con;
        con.id = "trip_" + m.id;
        con.kind = ContingencyKind::GenTrip;
        con.event.type = ScenarioEvent::Type::TripMachine;
        con.event.t = t_event;
        con.event.element = m.id;
        out.push_back(std::move(con));
    }
    for (const auto& br : c.branches) {
        for (int end = 0; end < 2; ++end) {
            const int bus = end == 0 ? br.from : br.to;
            Contingency con;
            con.id = "fault_" + br.id + "_" + c.buses[bus].id;
            con.kind = ContingencyKind::Fault;
            con.event.type = ScenarioEvent::Type::Fault;
            con.event.t = t_event;
            con.event.element = c.buses[bus].id;
            con.event.duration_s = fault_cycles / c.system.f0_hz;
            con.event.clear_opens_branch = br.id;
            out.push_back(std::move(con));
        }
    }
    for (const auto& bus : c.buses) {
        if (bus.load_p == 0.0 && bus.load_q == 0.0) continue;
        Contingency con;
        con.id = "loadloss_" + bus.id;
        con.kind = ContingencyKind::LoadLoss;
        con.event.type = ScenarioEvent::Type::LoadLoss;
        con.event.t = t_event;
        con.event.element = bus.id;
        con.event.fraction = load_fraction;
        out.push_back(std::move(con));
    }
    return out;
}

std::uint64_t contingency_seed(std::uint64_t master_seed, std::uint64_t index) {
    // splitmix64 over the master seed offset by the contingency index
    std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

ContingencyOutcome run_contingency(const Scenario& base, const SweepOptions& options,
                                   const Contingency& con, std::uint64_t seed) {
    ContingencyOutcome outcome;
    outcome.id = con.id;
    outcome.kind = con.kind;
    outcome.seed = seed;
    try {
        for (Protocol protocol : options.protocols) {
            Scenario s = base.with_protocol(protocol);
            s.events.push_back(con.event);
            s.seed = seed;
            Trajectory traj = simulate(s);
            outcome.stable.push_back(classify_stable(traj));
            outcome.termination.push_back(termination_name(traj.status));
            std::vector<MachineSwing> swings;
            for (int m = 0; m < traj.machine_count(); ++m) {
                MachineSwing swing;
                swing.machine = traj.machines[m].id;
                const bool tripped = traj.machines[m].offline_from >= 0;
                if (!tripped) {
                    const FirstSwingResult fs = first_swing(traj, m, options.t_event);
                    swing.magnitude_deg = fs.magnitude_deg;
                    swing.censored = fs.censored;
                    swing.valid = !fs.censored && fs.magnitude_deg > 0.0;
                }
                swings.push_back(std::move(swing));
            }
            outcome.swings.push_back(std::move(swings));
            if (!options.out_dir.empty() && options.save_trajectories) {
                const auto dir = std::filesystem::path(options.out_dir) / con.id;
                std::filesystem::create_directories(dir);
                write_trajectory_csv(traj,
                                     (dir / (protocol_name(protocol) + ".csv")).string());
            }
        }
    } catch (const std::exception& e) {
        outcome.error = e.what();
    }
    return outcome;
}

nlohmann::json swing_comparison(const std::vector<Contingency>& contingencies,
                                const std::vector<ContingencyOutcome>& outcomes,
                                int base_idx, int other_idx) {
    struct Bucket {
        int total = 0;
        int improved = 0;
        double decrease_sum = 0.0;
    };
    std::array<Bucket, 3> buckets;
    auto bucket_of = [](ContingencyKind k) { return static_cast<size_t>(k); };

    for (size_t i = 0; i < outcomes.size(); ++i) {
        const auto& outcome = outcomes[i];
        if (!outcome.error.empty()) continue;
        const auto& ol = outcome.swings[base_idx];
        const auto& cl = outcome.swings[other_idx];
        for (size_t m = 0; m < ol.size(); ++m) {
            if (!ol[m].valid || !cl[m].valid) continue;
            Bucket& b = buckets[bucket_of(contingencies[i].kind)];
            b.total += 1;
            if (cl[m].magnitude_deg < ol[m].magnitude_deg) b.improved += 1;
            b.decrease_sum +=
                (ol[m].magnitude_deg - cl[m].magnitude_deg) / ol[m].magnitude_deg * 100.0;
        }
    }

    nlohmann::json rows = nlohmann::json::array();
    Bucket total;
    const ContingencyKind order[] = {ContingencyKind::LoadLoss, ContingencyKind::GenTrip,
                                     ContingencyKind::Fault};
    for (ContingencyKind kind : order) {
        const Bucket& b = buckets[bucket_of(kind)];
        if (b.total == 0) continue;
        rows.push_back({{"event_class", contingency_class_name(kind)},
                        {"first_swings", b.total},
                        {"improvement_rate_pct", 100.0 * b.improved / b.total},
                        {"mean_decrease_pct", b.decrease_sum / b.total}});
        total.total += b.total;
        total.improved += b.improved;
        total.decrease_sum += b.decrease_sum;
    }
    nlohmann::json out;
    out["classes"] = rows;
    if (total.total > 0) {
        out["total"] = {{"first_swings", total.total},
                        {"improvement_rate_pct", 100.0 * total.improved / total.total},
                        {"mean_decrease_pct", total.decrease_sum / total.total}};
    } else {
        out["total"] = {{"first_swings", 0}};
    }
    return out;
}

}  // namespace

SweepResult run_sweep(const Scenario& base, const SweepOptions& options) {
    SweepResult result;
    result.contingencies =
        generate_n1(base.case_data, options.t_event, options.fault_cycles, options.load_fraction);
    result.outcomes.resize(result.contingencies.size());

    const int jobs = std::max(1, options.jobs);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= result.contingencies.size()) break;
            result.outcomes[i] = run_contingency(base, options, result.contingencies[i],
                                                 contingency_seed(options.master_seed, i));
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Table-shaped first-swing summary per event class, open loop against each
    // closed-loop variant that was simulated.
    nlohmann::json summary;
    summary["contingencies"] = result.contingencies.size();
    summary["protocols"] = nlohmann::json::array();
    for (Protocol p : options.protocols) summary["protocols"].push_back(protocol_name(p));
    int ol_idx = -1, cl_idx = -1, cm_idx = -1;
    for (size_t pi = 0; pi < options.protocols.size(); ++pi) {
        if (options.protocols[pi] == Protocol::OpenLoop) ol_idx = static_cast<int>(pi);
        if (options.protocols[pi] == Protocol::ClosedLoop) cl_idx = static_cast<int>(pi);
        if (options.protocols[pi] == Protocol::ClosedLoopComms) cm_idx = static_cast<int>(pi);
    }
    if (ol_idx >= 0 && cl_idx >= 0) {
        summary["ol_vs_cl"] =
            swing_comparison(result.contingencies, result.outcomes, ol_idx, cl_idx);
    }
    if (ol_idx >= 0 && cm_idx >= 0) {
        summary["ol_vs_cl_comms"] =
            swing_comparison(result.contingencies, result.outcomes, ol_idx, cm_idx);
    }
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& outcome : result.outcomes) {
        if (!outcome.error.empty()) {
            failures.push_back({{"id", outcome.id}, {"error", outcome.error}});
        }
    }
    summary["failures"] = failures;
    result.summary = summary;

    if (!options.out_dir.empty()) {
        std::filesystem::create_directories(options.out_dir);
        for (size_t i = 0; i < result.outcomes.size(); ++i) {
            const auto& outcome = result.outcomes[i];
            const auto dir = std::filesystem::path(options.out_dir) / outcome.id;
            std::filesystem::create_directories(dir);
            nlohmann::json detail;
            detail["id"] = outcome.id;
            detail["event_class"] = contingency_class_name(outcome.kind);
            detail["seed"] = outcome.seed;
            if (!outcome.error.empty()) {
                detail["error"] = outcome.error;
            } else {
                for (size_t pi = 0; pi < options.protocols.size(); ++pi) {
                    nlohmann::json proto;
                    proto["stable"] = outcome.stable[pi];
                    proto["termination"] = outcome.termination[pi];
                    nlohmann::json swings = nlohmann::json::array();
                    for (const auto& swing : outcome.swings[pi]) {
                        swings.push_back({{"machine", swing.machine},
                                          {"first_swing_deg", swing.magnitude_deg},
                                          {"censored", swing.censored},
                                          {"valid", swing.valid}});
                    }
                    proto["first_swings"] = swings;
                    detail[protocol_name(options.protocols[pi])] = proto;
                }
            }
            std::ofstream out(dir / "first_swing.json");
            out << detail.dump(2) << "\n";
        }
        std::ofstream out(std::filesystem::path(options.out_dir) / "summary.json");
        out << result.summary.dump(2) << "\n";
    }
    return result;
}

}  // namespace tsim
