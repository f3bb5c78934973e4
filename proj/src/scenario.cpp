#include "tsim/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tsim {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ParseError(msg); }

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
    for (const auto& item : obj.items()) {
        if (!allowed.contains(item.key())) {
            fail(where + ": unknown key '" + item.key() + "'");
        }
    }
}

WashoutConfig parse_washout(const json& j, const std::string& where) {
    check_keys(j, where, {"order", "corner_hz"});
    WashoutConfig w;
    w.order = j.value("order", 1);
    w.corner_hz = j.value("corner_hz", 0.1);
    if (w.order < 1 || w.order > 4) fail(where + ": order must be in [1, 4]");
    if (w.corner_hz <= 0.0) fail(where + ": corner_hz must be positive");
    return w;
}

std::optional<LeadLagConfig> parse_leadlag(const json& j, const std::string& where) {
    if (j.is_null()) return std::nullopt;
    check_keys(j, where, {"center_hz", "lead_deg", "stages"});
    LeadLagConfig ll;
    ll.center_hz = j.value("center_hz", 0.02);
    ll.lead_deg = j.value("lead_deg", 15.0);
    ll.stages = j.value("stages", 1);
    if (ll.center_hz <= 0.0) fail(where + ": center_hz must be positive");
    if (ll.stages < 1) fail(where + ": stages must be positive");
    return ll;
}

}  // namespace

std::string protocol_name(Protocol p) {
    switch (p) {
        case Protocol::OpenLoop: return "ol";
        case Protocol::ClosedLoop: return "cl";
        case Protocol::ClosedLoopComms: return "cl-comms";
    }
    return "?";
}

std::optional<Protocol> protocol_from_name(const std::string& name) {
    if (name == "ol") return Protocol::OpenLoop;
    if (name == "cl") return Protocol::ClosedLoop;
    if (name == "cl-comms") return Protocol::ClosedLoopComms;
    return std::nullopt;
}

Scenario Scenario::with_protocol(Protocol p) const {
    Scenario out = *this;
    switch (p) {
        case Protocol::OpenLoop:
            out.controller_enabled = false;
            out.comms.ideal = true;
            break;
        case Protocol::ClosedLoop:
            out.controller_enabled = true;
            out.comms.ideal = true;
            break;
        case Protocol::ClosedLoopComms:
            out.controller_enabled = true;
            out.comms.ideal = false;
            break;
    }
    return out;
}

Scenario parse_scenario(const std::string& json_text, const std::string& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    check_keys(doc, "scenario",
               {"case", "events", "controller", "comms", "integration", "record",
                "load_model", "seed"});

    Scenario s;

    if (!doc.contains("case")) fail("scenario: missing 'case'");
    if (doc["case"].is_string()) {
        std::filesystem::path p(doc["case"].get<std::string>());
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        s.case_data = parse_case_file(p.string());
    } else if (doc["case"].is_object()) {
        s.case_data = parse_case(doc["case"].dump());
    } else {
        fail("scenario: 'case' must be a path or an inline object");
    }

    const double f0 = s.case_data.system.f0_hz;
    if (doc.contains("events")) {
        for (const json& je : doc["events"]) {
            const std::string type = je.value("type", std::string());
            const std::string where = "event '" + type + "'";
            ScenarioEvent ev;
            ev.t = je.value("t", 0.0);
            if (ev.t < 0.0) fail(where + ": time must be nonnegative");
            if (type == "fault") {
                check_keys(je, where,
                           {"type", "t", "bus", "duration_s", "duration_cycles",
                            "clear_opens_branch"});
                ev.type = ScenarioEvent::Type::Fault;
                ev.element = je.at("bus").get<std::string>();
                if (je.contains("duration_s") == je.contains("duration_cycles")) {
                    fail(where + ": give exactly one of duration_s, duration_cycles");
                }
                ev.duration_s = je.contains("duration_s")
                                    ? je["duration_s"].get<double>()
                                    : je["duration_cycles"].get<double>() / f0;
                if (ev.duration_s <= 0.0) fail(where + ": duration must be positive");
                if (je.contains("clear_opens_branch") && !je["clear_opens_branch"].is_null()) {
                    ev.clear_opens_branch = je["clear_opens_branch"].get<std::string>();
                }
            } else if (type == "trip_machine") {
                check_keys(je, where, {"type", "t", "machine"});
                ev.type = ScenarioEvent::Type::TripMachine;
                ev.element = je.at("machine").get<std::string>();
            } else if (type == "trip_ibr") {
                check_keys(je, where, {"type", "t", "ibr"});
                ev.type = ScenarioEvent::Type::TripIbr;
                ev.element = je.at("ibr").get<std::string>();
            } else if (type == "load_loss") {
                check_keys(je, where, {"type", "t", "bus", "fraction"});
                ev.type = ScenarioEvent::Type::LoadLoss;
                ev.element = je.at("bus").get<std::string>();
                ev.fraction = je.value("fraction", 0.5);
                if (ev.fraction < 0.0 || ev.fraction > 1.0) {
                    fail(where + ": fraction must lie in [0, 1]");
                }
            } else if (type == "open_branch" || type == "close_branch") {
                check_keys(je, where, {"type", "t", "branch"});
                ev.type = type == "open_branch" ? ScenarioEvent::Type::OpenBranch
                                                : ScenarioEvent::Type::CloseBranch;
                ev.element = je.at("branch").get<std::string>();
            } else {
                fail("scenario: unknown event type '" + type + "'");
            }
            s.events.push_back(std::move(ev));
        }
    }

    if (doc.contains("controller")) {
        const json& jc = doc["controller"];
        check_keys(jc, "controller",
                   {"enabled", "alpha1", "alpha2", "gain", "output_limit", "washout1",
                    "washout2", "leadlag1", "leadlag2"});
        s.controller_enabled = jc.value("enabled", true);
        s.controller.alpha1 = jc.value("alpha1", 1.0);
        s.controller.alpha2 = jc.value("alpha2", 0.01);
        s.controller.gain = jc.value("gain", 10.0);
        s.controller.output_limit = jc.value("output_limit", 1.0);
        if (jc.contains("washout1")) s.controller.washout1 = parse_washout(jc["washout1"], "washout1");
        if (jc.contains("washout2")) s.controller.washout2 = parse_washout(jc["washout2"], "washout2");
        if (jc.contains("leadlag1")) s.controller.leadlag1 = parse_leadlag(jc["leadlag1"], "leadlag1");
        if (jc.contains("leadlag2")) s.controller.leadlag2 = parse_leadlag(jc["leadlag2"], "leadlag2");
        if (s.controller.alpha1 < 0.0 || s.controller.alpha1 > 1.0 ||
            s.controller.alpha2 < 0.0 || s.controller.alpha2 > 1.0) {
            fail("controller: alpha1, alpha2 must lie in [0, 1]");
        }
    }

    if (doc.contains("comms")) {
        const json& jm = doc["comms"];
        check_keys(jm, "comms",
                   {"mode", "delay_range_s", "jitter_s", "noise_std_rad", "sample_every"});
        const std::string mode = jm.value("mode", std::string("ideal"));
        if (mode == "ideal") s.comms.ideal = true;
        else if (mode == "statistical") s.comms.ideal = false;
        else fail("comms: mode must be ideal|statistical");
        if (jm.contains("delay_range_s")) {
            const auto& r = jm["delay_range_s"];
            if (!r.is_array() || r.size() != 2) fail("comms: delay_range_s must be [lo, hi]");
            s.comms.delay_min_s = r[0].get<double>();
            s.comms.delay_max_s = r[1].get<double>();
            if (s.comms.delay_min_s < 0.0 || s.comms.delay_max_s < s.comms.delay_min_s) {
                fail("comms: invalid delay range");
            }
        }
        s.comms.jitter_s = jm.value("jitter_s", s.comms.jitter_s);
        s.comms.noise_std_rad = jm.value("noise_std_rad", s.comms.noise_std_rad);
        s.comms.sample_every = jm.value("sample_every", 1);
        if (s.comms.sample_every < 1) fail("comms: sample_every must be positive");
    }

    if (doc.contains("integration")) {
        const json& ji = doc["integration"];
        check_keys(ji, "integration", {"dt", "t_end", "diverge_angle_deg"});
        s.integration.dt = ji.value("dt", 0.0);
        s.integration.t_end = ji.value("t_end", 20.0);
        s.integration.diverge_angle_deg = ji.value("diverge_angle_deg", 720.0);
        if (s.integration.dt < 0.0) fail("integration: dt must be nonnegative");
        if (s.integration.t_end <= 0.0) fail("integration: t_end must be positive");
    }

    if (doc.contains("record")) {
        const json& jr = doc["record"];
        check_keys(jr, "record", {"decimate"});
        s.record.decimate = jr.value("decimate", 1);
        if (s.record.decimate < 1) fail("record: decimate must be positive");
    }

    if (doc.contains("load_model")) {
        const json& jl = doc["load_model"];
        check_keys(jl, "load_model", {"active", "reactive"});
        const std::string active = jl.value("active", std::string("impedance"));
        if (active == "impedance") s.load_model.active_constant_current = false;
        else if (active == "current") s.load_model.active_constant_current = true;
        else fail("load_model: active must be impedance|current");
        const std::string reactive = jl.value("reactive", std::string("impedance"));
        if (reactive != "impedance") fail("load_model: reactive supports impedance only");
    }

    s.seed = doc.value("seed", 0ULL);

    const double horizon = s.integration.t_end;
    for (const auto& ev : s.events) {
        if (ev.t > horizon) fail("scenario: event scheduled after t_end");
    }
    return s;
}

Scenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), std::filesystem::path(path).parent_path().string());
}

}  // namespace tsim
