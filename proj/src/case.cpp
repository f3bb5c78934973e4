#include "tsim/case.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tsim {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ParseError(msg); }

// Strict mode: any key outside `allowed` is an error.
void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
    for (const auto& item : obj.items()) {
        if (!allowed.contains(item.key())) {
            fail(where + ": unknown key '" + item.key() + "'");
        }
    }
}

double get_num(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key)) fail(where + ": missing '" + key + "'");
    if (!obj[key].is_number()) fail(where + ": '" + key + "' must be a number");
    return obj[key].get<double>();
}

double get_num_or(const json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    return obj[key].get<double>();
}

std::string get_str(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key)) fail(where + ": missing '" + key + "'");
    if (!obj[key].is_string()) fail(where + ": '" + key + "' must be a string");
    return obj[key].get<std::string>();
}

}  // namespace

int Case::bus_index(const std::string& id) const {
    auto it = bus_map_.find(id);
    return it == bus_map_.end() ? -1 : it->second;
}

int Case::branch_index(const std::string& id) const {
    auto it = branch_map_.find(id);
    return it == branch_map_.end() ? -1 : it->second;
}

int Case::machine_index(const std::string& id) const {
    auto it = machine_map_.find(id);
    return it == machine_map_.end() ? -1 : it->second;
}

int Case::ibr_index(const std::string& id) const {
    auto it = ibr_map_.find(id);
    return it == ibr_map_.end() ? -1 : it->second;
}

int Case::slack_bus() const { return slack_; }

void Case::finalize() {
    bus_map_.clear();
    branch_map_.clear();
    machine_map_.clear();
    ibr_map_.clear();
    slack_ = -1;

    if (system.base_mva <= 0.0) fail("system: base_mva must be positive");
    if (system.f0_hz <= 0.0) fail("system: f0_hz must be positive");
    if (buses.empty()) fail("case has no buses");

    for (int i = 0; i < static_cast<int>(buses.size()); ++i) {
        if (!bus_map_.emplace(buses[i].id, i).second) {
            fail("duplicate bus id '" + buses[i].id + "'");
        }
        if (buses[i].type == BusType::Slack) {
            if (slack_ >= 0) fail("more than one slack bus");
            slack_ = i;
        }
    }
    if (slack_ < 0) fail("no slack bus");

    for (int i = 0; i < static_cast<int>(branches.size()); ++i) {
        auto& br = branches[i];
        if (!branch_map_.emplace(br.id, i).second) {
            fail("duplicate branch id '" + br.id + "'");
        }
        if (br.from < 0 || br.from >= static_cast<int>(buses.size()) ||
            br.to < 0 || br.to >= static_cast<int>(buses.size())) {
            fail("branch '" + br.id + "' references a missing bus");
        }
        if (br.from == br.to) fail("branch '" + br.id + "' connects a bus to itself");
        if (br.r == 0.0 && br.x == 0.0) {
            fail("branch '" + br.id + "' has zero series impedance");
        }
    }

    std::set<int> machine_buses;
    for (int i = 0; i < static_cast<int>(machines.size()); ++i) {
        auto& m = machines[i];
        if (!machine_map_.emplace(m.id, i).second) {
            fail("duplicate machine id '" + m.id + "'");
        }
        if (m.bus < 0 || m.bus >= static_cast<int>(buses.size())) {
            fail("machine '" + m.id + "' references a missing bus");
        }
        if (!machine_buses.insert(m.bus).second) {
            fail("machine '" + m.id + "' shares a bus with another machine");
        }
        if (m.params.h <= 0.0) fail("machine '" + m.id + "': H must be positive");
        if (m.params.x_dp <= 0.0) fail("machine '" + m.id + "': X' must be positive");
        if (m.params.governor.enabled) {
            if (m.params.governor.droop <= 0.0) fail("machine '" + m.id + "': droop must be positive");
            if (m.params.governor.t_g <= 0.0) fail("machine '" + m.id + "': T_g must be positive");
        }
    }

    for (int i = 0; i < static_cast<int>(ibr_units.size()); ++i) {
        auto& u = ibr_units[i];
        if (!ibr_map_.emplace(u.id, i).second) {
            fail("duplicate ibr id '" + u.id + "'");
        }
        if (u.bus < 0 || u.bus >= static_cast<int>(buses.size())) {
            fail("ibr '" + u.id + "' references a missing bus");
        }
        auto& p = u.params;
        if (p.rating < 0.0) fail("ibr '" + u.id + "': rating must be nonnegative");
        if (p.t_i <= 0.0) fail("ibr '" + u.id + "': T_i must be positive");
        if (!(p.v_zero > 0.0 && p.v_zero < p.v_break && p.v_break <= 1.0)) {
            fail("ibr '" + u.id + "': LVPL breakpoints must satisfy 0 < V_zero < V_break <= 1");
        }
    }

    if (!sensors.empty()) {
        double weight_sum = 0.0;
        std::set<std::string> ids;
        for (auto& s : sensors) {
            if (!ids.insert(s.id).second) fail("duplicate sensor id '" + s.id + "'");
            if (s.bus < 0 || s.bus >= static_cast<int>(buses.size())) {
                fail("sensor '" + s.id + "' references a missing bus");
            }
            if (s.t_const <= 0.0) fail("sensor '" + s.id + "': time constant must be positive");
            if (s.weight < 0.0) fail("sensor '" + s.id + "': weights must be nonnegative");
            weight_sum += s.weight;
        }
        if (std::abs(weight_sum - 1.0) > 1e-9) {
            std::ostringstream os;
            os << "sensor weights sum to " << weight_sum << ", expected 1";
            fail(os.str());
        }
    }
}

Case parse_case(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) fail("case document must be a JSON object");
    check_keys(doc, "case", {"system", "buses", "branches", "machines", "ibr", "sensors"});

    Case c;

    if (!doc.contains("system")) fail("case: missing 'system'");
    const json& sys = doc["system"];
    check_keys(sys, "system", {"base_mva", "f0_hz"});
    c.system.base_mva = get_num(sys, "system", "base_mva");
    c.system.f0_hz = get_num(sys, "system", "f0_hz");

    if (!doc.contains("buses") || !doc["buses"].is_array()) fail("case: missing 'buses' array");
    for (const json& jb : doc["buses"]) {
        const std::string where = "bus '" + jb.value("id", std::string("?")) + "'";
        check_keys(jb, where, {"id", "type", "v_set", "load_p", "load_q"});
        Bus b;
        b.id = get_str(jb, where, "id");
        std::string type = get_str(jb, where, "type");
        if (type == "slack") b.type = BusType::Slack;
        else if (type == "pv") b.type = BusType::PV;
        else if (type == "pq") b.type = BusType::PQ;
        else fail(where + ": type must be slack|pv|pq");
        b.v_set = get_num_or(jb, "v_set", 1.0);
        b.load_p = get_num_or(jb, "load_p", 0.0);
        b.load_q = get_num_or(jb, "load_q", 0.0);
        c.buses.push_back(std::move(b));
    }

    auto resolve_bus = [&c](const std::string& id, const std::string& where) {
        for (int i = 0; i < static_cast<int>(c.buses.size()); ++i) {
            if (c.buses[i].id == id) return i;
        }
        fail(where + ": unknown bus '" + id + "'");
    };

    if (doc.contains("branches")) {
        for (const json& jb : doc["branches"]) {
            const std::string where = "branch '" + jb.value("id", std::string("?")) + "'";
            check_keys(jb, where, {"id", "from", "to", "r", "x", "b", "status"});
            Branch br;
            br.id = get_str(jb, where, "id");
            br.from = resolve_bus(get_str(jb, where, "from"), where);
            br.to = resolve_bus(get_str(jb, where, "to"), where);
            br.r = get_num_or(jb, "r", 0.0);
            br.x = get_num(jb, where, "x");
            br.b_shunt = get_num_or(jb, "b", 0.0);
            br.in_service = jb.value("status", true);
            c.branches.push_back(std::move(br));
        }
    }

    const double base = c.system.base_mva;
    if (doc.contains("machines")) {
        for (const json& jm : doc["machines"]) {
            const std::string where = "machine '" + jm.value("id", std::string("?")) + "'";
            check_keys(jm, where,
                       {"id", "bus", "rating_mva", "p_dispatch", "h", "d", "xdp", "governor"});
            MachineSpec m;
            m.id = get_str(jm, where, "id");
            m.bus = resolve_bus(get_str(jm, where, "bus"), where);
            m.rating_mva = get_num_or(jm, "rating_mva", base);
            if (m.rating_mva <= 0.0) fail(where + ": rating_mva must be positive");
            m.p_dispatch = get_num_or(jm, "p_dispatch", 0.0);
            // Machine-base parameters converted to the system base here.
            const double to_sys = m.rating_mva / base;
            m.params.h = get_num(jm, where, "h") * to_sys;
            m.params.d = get_num_or(jm, "d", 0.0) * to_sys;
            m.params.x_dp = get_num(jm, where, "xdp") / to_sys;
            if (jm.contains("governor")) {
                const json& jg = jm["governor"];
                check_keys(jg, where + " governor", {"r", "tg", "p_min", "p_max"});
                m.params.governor.enabled = true;
                m.params.governor.droop = get_num(jg, where, "r") / to_sys;
                m.params.governor.t_g = get_num(jg, where, "tg");
                m.params.governor.p_min = get_num_or(jg, "p_min", 0.0) * to_sys;
                m.params.governor.p_max = get_num_or(jg, "p_max", 10.0) * to_sys;
            }
            c.machines.push_back(std::move(m));
        }
    }

    if (doc.contains("ibr")) {
        for (const json& ju : doc["ibr"]) {
            const std::string where = "ibr '" + ju.value("id", std::string("?")) + "'";
            check_keys(ju, where,
                       {"id", "bus", "rating", "p_ref", "v_min", "t_i", "v_zero", "v_break",
                        "i_limit", "energy_mwh", "soc_derate"});
            IbrSpec u;
            u.id = get_str(ju, where, "id");
            u.bus = resolve_bus(get_str(ju, where, "bus"), where);
            u.params.rating = get_num(ju, where, "rating");
            u.params.p_ref = get_num_or(ju, "p_ref", 0.0);
            u.params.v_min = get_num_or(ju, "v_min", 0.1);
            u.params.t_i = get_num_or(ju, "t_i", 0.02);
            u.params.v_zero = get_num_or(ju, "v_zero", 0.5);
            u.params.v_break = get_num_or(ju, "v_break", 0.9);
            u.params.i_limit = get_num_or(ju, "i_limit", 1.1 * u.params.rating);
            u.params.energy_mwh = get_num_or(ju, "energy_mwh", 0.0);
            u.params.soc_derate = ju.value("soc_derate", false);
            c.ibr_units.push_back(std::move(u));
        }
    }

    if (doc.contains("sensors")) {
        const auto& arr = doc["sensors"];
        bool any_weight = false;
        for (const json& js : arr) {
            if (js.contains("weight")) any_weight = true;
        }
        for (const json& js : arr) {
            const std::string where = "sensor '" + js.value("id", std::string("?")) + "'";
            check_keys(js, where, {"id", "bus", "t", "weight", "bias"});
            SensorSpec s;
            s.id = get_str(js, where, "id");
            s.bus = resolve_bus(get_str(js, where, "bus"), where);
            s.t_const = get_num_or(js, "t", 0.02);
            if (any_weight) {
                s.weight = get_num(js, where, "weight");
            } else {
                s.weight = 1.0 / static_cast<double>(arr.size());  // arithmetic mean
            }
            s.bias = get_num_or(js, "bias", 0.0);
            c.sensors.push_back(std::move(s));
        }
    }

    c.finalize();
    return c;
}

Case parse_case_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open case file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_case(buf.str());
}

Topology base_topology(const Case& c) {
    Topology t;
    t.branch_in_service.reserve(c.branches.size());
    for (const auto& br : c.branches) t.branch_in_service.push_back(br.in_service);
    t.machine_online.assign(c.machines.size(), true);
    t.ibr_online.assign(c.ibr_units.size(), true);
    t.bus_faulted.assign(c.buses.size(), false);
    t.load_scale.assign(c.buses.size(), 1.0);
    return t;
}

Topology apply_event(const Case& c, Topology topo, const Event& ev) {
    using Kind = Event::Kind;
    switch (ev.kind) {
        case Kind::FaultOn: {
            int b = c.bus_index(ev.element);
            if (b < 0) throw ParseError("fault: unknown bus '" + ev.element + "'");
            topo.bus_faulted[b] = true;
            break;
        }
        case Kind::FaultClear: {
            int b = c.bus_index(ev.element);
            if (b < 0) throw ParseError("fault clear: unknown bus '" + ev.element + "'");
            topo.bus_faulted[b] = false;
            if (ev.open_branch) {
                int br = c.branch_index(*ev.open_branch);
                if (br < 0) throw ParseError("fault clear: unknown branch '" + *ev.open_branch + "'");
                topo.branch_in_service[br] = false;
            }
            break;
        }
        case Kind::TripMachine: {
            int m = c.machine_index(ev.element);
            if (m < 0) throw ParseError("trip: unknown machine '" + ev.element + "'");
            topo.machine_online[m] = false;
            break;
        }
        case Kind::TripIbr: {
            int u = c.ibr_index(ev.element);
            if (u < 0) throw ParseError("trip: unknown ibr '" + ev.element + "'");
            topo.ibr_online[u] = false;
            break;
        }
        case Kind::OpenBranch:
        case Kind::CloseBranch: {
            int br = c.branch_index(ev.element);
            if (br < 0) throw ParseError("switch: unknown branch '" + ev.element + "'");
            topo.branch_in_service[br] = (ev.kind == Kind::CloseBranch);
            break;
        }
        case Kind::ScaleLoad: {
            int b = c.bus_index(ev.element);
            if (b < 0) throw ParseError("load event: unknown bus '" + ev.element + "'");
            topo.load_scale[b] *= ev.factor;
            break;
        }
    }
    return topo;
}

}  // namespace tsim
