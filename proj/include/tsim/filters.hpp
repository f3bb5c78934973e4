#pragma once

#include <vector>

#include "tsim/types.hpp"

namespace tsim {

/// First-order rational transfer function H(s) = (b1 s + b0) / (a1 s + a0)
/// with a1 > 0. Discrete stepping uses the trapezoidal (bilinear) transform,
/// which maps the washout's zero at s = 0 exactly onto z = 1, so dc rejection
/// is exact regardless of the step size.
class FirstOrderSection {
  public:
    FirstOrderSection(double b0, double b1, double a0, double a1);

    void prepare(double dt);
    double step(double input);
    /// Settle the section at a constant operating point (steady-state output).
    void reset(double input0 = 0.0);

    Complex response(Complex s) const;

    // Continuous state-space realization with a single state:
    //   x_dot = -(a0/a1) x + u,  y = c x + d u
    double ss_a() const { return -a0_ / a1_; }
    double ss_c() const { return (b0_ - b1_ * a0_ / a1_) / a1_; }
    double ss_d() const { return b1_ / a1_; }
    /// State value consistent with a constant input (x = u a1 / a0; 0 if a0 = 0).
    double ss_equilibrium_state(double input0) const;

  private:
    double b0_, b1_, a0_, a1_;
    // Discrete difference equation coefficients.
    double dt_ = 0.0;
    double g_in_ = 0.0, g_in_prev_ = 0.0, g_out_prev_ = 0.0;
    double u_prev_ = 0.0, y_prev_ = 0.0;
};

/// Washout (high-pass) s T / (1 + s T) with corner frequency in Hz.
FirstOrderSection make_washout(double corner_hz);

/// One lead stage (1 + s T1) / (1 + s T2) contributing `lead_deg` of phase at
/// the center frequency. Negative lead_deg yields a lag stage.
FirstOrderSection make_leadlag(double center_hz, double lead_deg);

/// Cascade of first-order sections stepped in sequence.
class FilterChain {
  public:
    void add(FirstOrderSection section);
    void prepare(double dt);
    double step(double input);
    void reset(double input0 = 0.0);
    Complex response(Complex s) const;

    int n_sections() const { return static_cast<int>(sections_.size()); }
    const FirstOrderSection& section(int i) const { return sections_[i]; }

  private:
    std::vector<FirstOrderSection> sections_;
};

}  // namespace tsim
