#pragma once

#include <optional>
#include <utility>

#include "tsim/filters.hpp"

namespace tsim {

struct WashoutConfig {
    int order = 1;           // cascade of identical first-order washouts
    double corner_hz = 0.1;
};

struct LeadLagConfig {
    double center_hz = 0.02;
    double lead_deg = 15.0;  // total phase at the center, split across stages
    int stages = 1;
};

/// Tuning of one wide-area synchronizing controller. The two error paths are
/// weighted by alpha1 (deviation from the tracked trajectory) and alpha2
/// (movement of the wide-area reference away from its predisturbance value).
struct ControllerConfig {
    double alpha1 = 1.0;
    double alpha2 = 0.01;
    double gain = 10.0;
    double output_limit = 1.0;  // |p_s| bound, pu
    WashoutConfig washout1{1, 0.1};
    WashoutConfig washout2{2, 0.01};
    std::optional<LeadLagConfig> leadlag1;                       // none by default
    std::optional<LeadLagConfig> leadlag2 = LeadLagConfig{};     // 15 deg at 0.02 Hz
};

/// Error decomposition: e1 = alpha1 (theta_j - theta_bar_j),
/// e2 = alpha2 (theta_tilde - theta_tilde0). All inputs unwrapped radians.
std::pair<double, double> control_error_components(double theta_j, double theta_bar_j,
                                                   double theta_tilde, double theta_tilde0,
                                                   double alpha1, double alpha2);

/// Build the compensation cascade (washout then lead-lag) for one path.
FilterChain build_compensation(const WashoutConfig& washout,
                               const std::optional<LeadLagConfig>& leadlag);

/// Per-actuator controller state: two compensation paths plus the anchors
/// captured at the predisturbance equilibrium.
class Controller {
  public:
    Controller(const ControllerConfig& config, double dt);

    /// Capture anchors from the equilibrium measurements and settle the filters.
    void anchor(double theta_j0, double theta_tilde0);

    /// One sampling instant: returns the saturated charging command p_s.
    /// Positive output is a charging (power withdrawal) command.
    double step(double theta_j, double theta_tilde);

    bool anchored() const { return anchored_; }
    double theta_j0() const { return theta_j0_; }
    double theta_tilde0() const { return theta_tilde0_; }
    double last_e1() const { return e1_; }
    double last_e2() const { return e2_; }
    double last_output() const { return p_s_; }
    const ControllerConfig& config() const { return config_; }

  private:
    ControllerConfig config_;
    FilterChain path1_;
    FilterChain path2_;
    double theta_j0_ = 0.0;
    double theta_tilde0_ = 0.0;
    bool anchored_ = false;
    double e1_ = 0.0, e2_ = 0.0, p_s_ = 0.0;
};

}  // namespace tsim
