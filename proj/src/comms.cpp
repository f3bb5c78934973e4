#include "tsim/comms.hpp"

#include <cmath>

namespace tsim {

double channel_delay_draw(std::mt19937_64& rng, double lo, double hi) {
    if (hi < lo) throw std::invalid_argument("channel delay range is inverted");
    if (hi == lo) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Channel::Channel(double expected_delay, double jitter_s)
    : expected_delay_(expected_delay), jitter_s_(jitter_s) {}

void Channel::seed(double t0, double value) {
    last_t_sample_ = t0;
    last_value_ = value;
}

void Channel::push(double t_sample, double value, std::mt19937_64& rng) {
    double jitter = 0.0;
    if (jitter_s_ > 0.0) {
        jitter = std::uniform_real_distribution<double>(-jitter_s_, jitter_s_)(rng);
    }
    pending_.push({t_sample, t_sample + expected_delay_ + jitter, value});
}

double Channel::read(double t_now) {
    while (!pending_.empty() && pending_.top().t_deliver <= t_now) {
        const ChannelSample& s = pending_.top();
        if (s.t_sample >= last_t_sample_) {  // stale data is dropped
            last_t_sample_ = s.t_sample;
            last_value_ = s.value;
        }
        pending_.pop();
    }
    return last_value_;
}

double sensor_step(double& lag_state, double true_angle, double t_const, double dt,
                   double noise_std, double bias, std::mt19937_64& rng) {
    const double decay = std::exp(-dt / t_const);
    lag_state = true_angle + (lag_state - true_angle) * decay;
    double noise = 0.0;
    if (noise_std > 0.0) {
        noise = std::normal_distribution<double>(0.0, noise_std)(rng);
    }
    return lag_state + bias + noise;
}

}  // namespace tsim
