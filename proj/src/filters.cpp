#include "tsim/filters.hpp"

#include <cmath>
#include <stdexcept>

namespace tsim {

FirstOrderSection::FirstOrderSection(double b0, double b1, double a0, double a1)
    : b0_(b0), b1_(b1), a0_(a0), a1_(a1) {
    if (a1 <= 0.0) throw std::invalid_argument("FirstOrderSection: a1 must be positive");
}

void FirstOrderSection::prepare(double dt) {
    if (dt <= 0.0) throw std::invalid_argument("FirstOrderSection: dt must be positive");
    dt_ = dt;
    const double k = 2.0 / dt;
    const double den = a0_ + a1_ * k;
    g_in_ = (b0_ + b1_ * k) / den;
    g_in_prev_ = (b0_ - b1_ * k) / den;
    g_out_prev_ = -(a0_ - a1_ * k) / den;
}

double FirstOrderSection::step(double input) {
    if (dt_ <= 0.0) throw std::logic_error("FirstOrderSection: step before prepare");
    const double out = g_in_ * input + g_in_prev_ * u_prev_ + g_out_prev_ * y_prev_;
    u_prev_ = input;
    y_prev_ = out;
    return out;
}

void FirstOrderSection::reset(double input0) {
    u_prev_ = input0;
    y_prev_ = (a0_ != 0.0) ? input0 * b0_ / a0_ : 0.0;
}

Complex FirstOrderSection::response(Complex s) const {
    return (b1_ * s + b0_) / (a1_ * s + a0_);
}

double FirstOrderSection::ss_equilibrium_state(double input0) const {
    return (a0_ != 0.0) ? input0 * a1_ / a0_ : 0.0;
}

FirstOrderSection make_washout(double corner_hz) {
    if (corner_hz <= 0.0) throw std::invalid_argument("washout corner must be positive");
    const double t = 1.0 / (kTwoPi * corner_hz);
    return FirstOrderSection(0.0, t, 1.0, t);
}

FirstOrderSection make_leadlag(double center_hz, double lead_deg) {
    if (center_hz <= 0.0) throw std::invalid_argument("lead-lag center must be positive");
    if (std::abs(lead_deg) >= 90.0) throw std::invalid_argument("lead per stage must be below 90 deg");
    const double phi = lead_deg * kPi / 180.0;
    const double ratio = (1.0 + std::sin(phi)) / (1.0 - std::sin(phi));
    const double wc = kTwoPi * center_hz;
    const double t1 = std::sqrt(ratio) / wc;
    const double t2 = 1.0 / (wc * std::sqrt(ratio));
    return FirstOrderSection(1.0, t1, 1.0, t2);
}

void FilterChain::add(FirstOrderSection section) { sections_.push_back(section); }

void FilterChain::prepare(double dt) {
    for (auto& s : sections_) s.prepare(dt);
}

double FilterChain::step(double input) {
    double v = input;
    for (auto& s : sections_) v = s.step(v);
    return v;
}

void FilterChain::reset(double input0) {
    double v = input0;
    for (auto& s : sections_) {
        s.reset(v);
        v *= s.response(Complex(0.0, 0.0)).real();  // dc gain feeds the next section
    }
}

Complex FilterChain::response(Complex s) const {
    Complex h(1.0, 0.0);
    for (const auto& sec : sections_) h *= sec.response(s);
    return h;
}

}  // namespace tsim
