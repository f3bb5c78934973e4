#pragma once

#include <queue>
#include <random>
#include <vector>

#include "tsim/case.hpp"

namespace tsim {

/// Statistical channel parameters between one PMU and the controllers.
struct CommsConfig {
    bool ideal = true;            // transparent channels, no randomness consumed
    double delay_min_s = 0.067;
    double delay_max_s = 0.250;
    double jitter_s = 0.010;      // per-sample uniform jitter, +/- this value
    double noise_std_rad = 1e-3;  // additive Gaussian noise on each sample
    int sample_every = 1;         // sensor reporting decimation, in steps
};

/// One timestamped sample: measured value plus data / delivery timestamps.
struct ChannelSample {
    double t_sample;
    double t_deliver;
    double value;
};

/// Uniform expected delay drawn once per sensor for a scenario.
double channel_delay_draw(std::mt19937_64& rng, double lo, double hi);

/// Delayed measurement stream with zero-order hold. Samples whose data
/// timestamp is older than the last delivered one are dropped, so delivered
/// timestamps are non-decreasing even when jitter reorders arrivals.
class Channel {
  public:
    Channel() = default;
    Channel(double expected_delay, double jitter_s);

    /// Pre-load the equilibrium value so reads before the first delivery hold it.
    void seed(double t0, double value);

    void push(double t_sample, double value, std::mt19937_64& rng);

    /// Newest usable measurement at t_now (zero-order hold).
    double read(double t_now);

    double expected_delay() const { return expected_delay_; }
    double last_delivered_timestamp() const { return last_t_sample_; }

  private:
    struct DeliveryOrder {
        bool operator()(const ChannelSample& a, const ChannelSample& b) const {
            return a.t_deliver > b.t_deliver;
        }
    };
    double expected_delay_ = 0.0;
    double jitter_s_ = 0.0;
    std::priority_queue<ChannelSample, std::vector<ChannelSample>, DeliveryOrder> pending_;
    double last_t_sample_ = -1.0;
    double last_value_ = 0.0;
};

/// First-order sensor lag step with additive Gaussian noise; the lag state is
/// advanced exactly under a zero-order-hold input.
double sensor_step(double& lag_state, double true_angle, double t_const, double dt,
                   double noise_std, double bias, std::mt19937_64& rng);

}  // namespace tsim
