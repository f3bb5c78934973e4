#include "tsim/wacs.hpp"

#include <algorithm>
#include <stdexcept>

namespace tsim {

std::pair<double, double> control_error_components(double theta_j, double theta_bar_j,
                                                   double theta_tilde, double theta_tilde0,
                                                   double alpha1, double alpha2) {
    const double e1 = alpha1 * (theta_j - theta_bar_j);
    const double e2 = alpha2 * (theta_tilde - theta_tilde0);
    return {e1, e2};
}

FilterChain build_compensation(const WashoutConfig& washout,
                               const std::optional<LeadLagConfig>& leadlag) {
    FilterChain chain;
    for (int i = 0; i < washout.order; ++i) {
        chain.add(make_washout(washout.corner_hz));
    }
    if (leadlag) {
        const double per_stage = leadlag->lead_deg / leadlag->stages;
        for (int i = 0; i < leadlag->stages; ++i) {
            chain.add(make_leadlag(leadlag->center_hz, per_stage));
        }
    }
    return chain;
}

Controller::Controller(const ControllerConfig& config, double dt)
    : config_(config),
      path1_(build_compensation(config.washout1, config.leadlag1)),
      path2_(build_compensation(config.washout2, config.leadlag2)) {
    if (!(config.alpha1 >= 0.0 && config.alpha1 <= 1.0 &&
          config.alpha2 >= 0.0 && config.alpha2 <= 1.0)) {
        throw std::invalid_argument("controller: alpha1, alpha2 must lie in [0, 1]");
    }
    if (config.output_limit <= 0.0) {
        throw std::invalid_argument("controller: output limit must be positive");
    }
    path1_.prepare(dt);
    path2_.prepare(dt);
}

void Controller::anchor(double theta_j0, double theta_tilde0) {
    theta_j0_ = theta_j0;
    theta_tilde0_ = theta_tilde0;
    path1_.reset(0.0);
    path2_.reset(0.0);
    anchored_ = true;
}

double Controller::step(double theta_j, double theta_tilde) {
    if (!anchored_) throw std::logic_error("controller: step before anchors were captured");
    const double theta_bar_j = theta_tilde - theta_tilde0_ + theta_j0_;
    std::tie(e1_, e2_) = control_error_components(theta_j, theta_bar_j, theta_tilde,
                                                  theta_tilde0_, config_.alpha1, config_.alpha2);
    const double raw = config_.gain * (path1_.step(e1_) + path2_.step(e2_));
    p_s_ = std::clamp(raw, -config_.output_limit, config_.output_limit);
    return p_s_;
}

}  // namespace tsim
