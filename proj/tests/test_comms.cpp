#include <doctest.h>

#include <cmath>
#include <vector>

#include "tsim/comms.hpp"

using namespace tsim;

TEST_CASE("sensor lag step") {
    std::mt19937_64 rng(1);

    SUBCASE("constant input converges to the input") {
        double lag = 0.0;
        double out = 0.0;
        for (int i = 0; i < 5000; ++i) out = sensor_step(lag, 0.4, 0.02, 0.001, 0.0, 0.0, rng);
        CHECK(out == doctest::Approx(0.4).epsilon(1e-9));
    }
    SUBCASE("step response reaches ~63.2% after one time constant") {
        double lag = 0.0;
        const double t_const = 0.02, dt = 1e-4;
        double out = 0.0;
        for (int i = 0; i < 200; ++i) out = sensor_step(lag, 1.0, t_const, dt, 0.0, 0.0, rng);
        CHECK(out == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-6));
    }
    SUBCASE("noise variance matches the configured sigma") {
        const double sigma = 1e-3;
        double lag = 0.5;
        double sum = 0.0, sum2 = 0.0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            const double out = sensor_step(lag, 0.5, 0.02, 0.001, sigma, 0.0, rng);
            const double noise = out - lag;
            sum += noise;
            sum2 += noise * noise;
        }
        const double var = sum2 / n - (sum / n) * (sum / n);
        CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.10));
    }
}

TEST_CASE("channel delay draw") {
    std::mt19937_64 rng(42);
    SUBCASE("draws stay inside the configured range") {
        for (int i = 0; i < 1000; ++i) {
            const double d = channel_delay_draw(rng, 0.067, 0.250);
            CHECK(d >= 0.067);
            CHECK(d <= 0.250);
        }
    }
    SUBCASE("degenerate range returns the point") {
        CHECK(channel_delay_draw(rng, 0.1, 0.1) == doctest::Approx(0.1));
    }
    SUBCASE("equal seeds give identical sequences") {
        std::mt19937_64 a(7), b(7);
        for (int i = 0; i < 100; ++i) {
            CHECK(channel_delay_draw(a, 0.067, 0.25) == channel_delay_draw(b, 0.067, 0.25));
        }
    }
}

TEST_CASE("delayed read semantics") {
    std::mt19937_64 rng(3);

    SUBCASE("holds the seeded equilibrium value before the first delivery") {
        Channel ch(0.1, 0.0);
        ch.seed(0.0, 0.42);
        ch.push(0.0, 0.5, rng);
        CHECK(ch.read(0.0) == doctest::Approx(0.42));
        CHECK(ch.read(0.05) == doctest::Approx(0.42));
        CHECK(ch.read(0.1) == doctest::Approx(0.5));
    }
    SUBCASE("first post-t0 sample arrives after the delay") {
        Channel ch(0.2, 0.0);
        ch.seed(0.0, 1.0);
        ch.push(0.01, 2.0, rng);
        CHECK(ch.read(0.2) == doctest::Approx(1.0));
        CHECK(ch.read(0.211) == doctest::Approx(2.0));
    }
    SUBCASE("zero-delay channel is transparent") {
        Channel ch(0.0, 0.0);
        ch.seed(0.0, 0.0);
        for (int i = 1; i <= 50; ++i) {
            const double t = 0.01 * i;
            ch.push(t, 10.0 + i, rng);
            CHECK(ch.read(t) == doctest::Approx(10.0 + i));
        }
    }
    SUBCASE("jitter reordering never rolls delivered data backwards") {
        Channel ch(0.05, 0.04);  // jitter wide enough to reorder
        ch.seed(0.0, 0.0);
        std::mt19937_64 push_rng(11);
        double last_ts = -1.0;
        int k = 0;
        for (int i = 1; i <= 400; ++i) {
            const double t = 0.005 * i;
            ch.push(t, static_cast<double>(i), push_rng);
            ch.read(t);
            const double ts = ch.last_delivered_timestamp();
            CHECK(ts >= last_ts);
            last_ts = ts;
            // delivered values are the sample index, so monotone too
            if (i > 40) {
                const double v = ch.read(t);
                CHECK(v >= k);
                k = static_cast<int>(v);
            }
        }
    }
}
