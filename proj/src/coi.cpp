#include "tsim/coi.hpp"

#include <cmath>
#include <stdexcept>

namespace tsim {

CoiState coi_states(std::span<const double> speeds, std::span<const double> angles,
                    std::span<const double> inertias, double f0_hz, double omega0) {
    if (speeds.empty() || speeds.size() != angles.size() || speeds.size() != inertias.size()) {
        throw std::invalid_argument("coi_states: empty or mismatched machine arrays");
    }
    double h_total = 0.0;
    for (double h : inertias) h_total += h;
    CoiState s;
    s.omega = 0.0;
    s.delta = 0.0;
    for (size_t i = 0; i < speeds.size(); ++i) {
        const double hi = inertias[i] / h_total;
        s.omega += hi * speeds[i];
        s.delta += hi * angles[i];
    }
    s.freq_hz = f0_hz * s.omega / omega0;
    return s;
}

double unwrap_step(double wrapped, double reference) {
    return wrapped + kTwoPi * std::round((reference - wrapped) / kTwoPi);
}

std::vector<double> unwrap_sequence(std::span<const double> wrapped) {
    std::vector<double> out;
    out.reserve(wrapped.size());
    for (size_t i = 0; i < wrapped.size(); ++i) {
        out.push_back(i == 0 ? wrapped[i] : unwrap_step(wrapped[i], out.back()));
    }
    return out;
}

double estimate_coi_angle(std::span<const double> thetas, std::span<const double> weights) {
    if (thetas.size() != weights.size() || thetas.empty()) {
        throw std::invalid_argument("estimate_coi_angle: mismatched sensor arrays");
    }
    double sum = 0.0, wsum = 0.0;
    for (size_t k = 0; k < thetas.size(); ++k) {
        if (weights[k] < 0.0) throw std::invalid_argument("estimate_coi_angle: negative weight");
        sum += weights[k] * thetas[k];
        wsum += weights[k];
    }
    if (std::abs(wsum - 1.0) > 1e-9) {
        throw std::invalid_argument("estimate_coi_angle: weights must sum to 1");
    }
    return sum;
}

std::vector<double> coi_angle_by_integration(std::span<const double> coi_speed, double dt,
                                             double omega_b, double omega0, double c) {
    std::vector<double> out;
    out.reserve(coi_speed.size());
    double acc = c;
    for (size_t i = 0; i < coi_speed.size(); ++i) {
        if (i > 0) {
            acc += 0.5 * dt * omega_b * ((coi_speed[i - 1] - omega0) + (coi_speed[i] - omega0));
        }
        out.push_back(acc);
    }
    return out;
}

double reference_angle(double coi_now, const TrajectoryAnchors& anchors, int element) {
    if (!anchors.initialized) {
        throw std::logic_error("reference_angle: anchors not initialized");
    }
    return coi_now - anchors.coi_at_t0 + anchors.element_at_t0.at(element);
}

}  // namespace tsim
