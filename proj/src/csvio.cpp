#include "tsim/csvio.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

namespace tsim {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw EngineError("cannot open '" + path + "' for writing");
    for (size_t i = 0; i < header.size(); ++i) {
        out << (i ? "," : "") << header[i];
    }
    out << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << format_double(row[i]);
        }
        out << "\n";
    }
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::vector<std::string> header{"t"};
    for (const auto& m : traj.machines) {
        header.push_back("delta_" + m.id);
        header.push_back("omega_" + m.id);
        header.push_back("pm_" + m.id);
        header.push_back("pe_" + m.id);
    }
    for (const auto& b : traj.buses) {
        header.push_back("vm_" + b.id);
        header.push_back("va_" + b.id);
    }
    for (const auto& u : traj.ibr_units) {
        header.push_back("ip_" + u.id);
        header.push_back("pinj_" + u.id);
        header.push_back("soc_" + u.id);
    }
    for (const auto& ctl : traj.controllers) {
        header.push_back("e1_" + ctl.id);
        header.push_back("e2_" + ctl.id);
        header.push_back("ps_" + ctl.id);
    }
    header.push_back("coi_delta");
    header.push_back("coi_omega");
    header.push_back("coi_freq_hz");

    std::ofstream out(path);
    if (!out) throw EngineError("cannot open '" + path + "' for writing");
    for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (int n = 0; n < traj.n_samples(); ++n) {
        out << format_double(traj.t[n]);
        for (const auto& m : traj.machines) {
            out << "," << format_double(m.delta[n]) << "," << format_double(m.omega[n]) << ","
                << format_double(m.p_m[n]) << "," << format_double(m.p_e[n]);
        }
        for (const auto& b : traj.buses) {
            out << "," << format_double(b.v_mag[n]) << "," << format_double(b.v_ang[n]);
        }
        for (const auto& u : traj.ibr_units) {
            out << "," << format_double(u.i_p[n]) << "," << format_double(u.p_inj[n]) << ","
                << format_double(u.soc_mwh[n]);
        }
        for (const auto& ctl : traj.controllers) {
            out << "," << format_double(ctl.e1[n]) << "," << format_double(ctl.e2[n]) << ","
                << format_double(ctl.p_s[n]);
        }
        out << "," << format_double(traj.coi.delta[n]) << "," << format_double(traj.coi.omega[n])
            << "," << format_double(traj.coi.freq_hz[n]) << "\n";
    }
}

void write_trajectory_summary(const Trajectory& traj, const std::string& path) {
    nlohmann::json j;
    j["status"] = termination_name(traj.status);
    j["samples"] = traj.n_samples();
    j["dt"] = traj.dt;
    j["t_end"] = traj.t.empty() ? 0.0 : traj.t.back();
    double max_domega = 0.0;
    for (const auto& m : traj.machines) {
        for (double w : m.omega) max_domega = std::max(max_domega, std::abs(w - traj.omega0));
    }
    j["max_speed_deviation"] = max_domega;
    if (!traj.coi.freq_hz.empty()) {
        j["coi_freq_min_hz"] = *std::min_element(traj.coi.freq_hz.begin(), traj.coi.freq_hz.end());
        j["coi_freq_max_hz"] = *std::max_element(traj.coi.freq_hz.begin(), traj.coi.freq_hz.end());
    }
    std::ofstream out(path);
    if (!out) throw EngineError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

}  // namespace tsim
