#include <doctest.h>

#include <cmath>

#include "tsim/filters.hpp"

using namespace tsim;

TEST_CASE("washout blocks dc exactly") {
    auto w = make_washout(0.1);
    const double dt = 0.01;
    w.prepare(dt);
    w.reset(0.0);
    double y = 0.0;
    // ~12 time constants of a constant input
    for (int i = 0; i < 20000; ++i) y = w.step(1.0);
    CHECK(std::abs(y) < 1e-6);
}

TEST_CASE("washout first sample is near unity") {
    auto w = make_washout(0.1);
    const double dt = 1e-4;
    w.prepare(dt);
    w.reset(0.0);
    CHECK(w.step(1.0) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("washout settled at a constant operating point starts quiet") {
    auto w = make_washout(0.1);
    w.prepare(0.01);
    w.reset(0.7);
    CHECK(w.step(0.7) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("lead-lag phase at the design frequency") {
    auto ll = make_leadlag(0.02, 15.0);

    SUBCASE("analytic response gives the designed lead") {
        const Complex h = ll.response(Complex(0.0, kTwoPi * 0.02));
        CHECK(std::arg(h) * 180.0 / kPi == doctest::Approx(15.0).epsilon(1e-9));
    }
    SUBCASE("sinusoidal steady state matches within half a degree") {
        const double f = 0.02;
        const double dt = 0.02;
        ll.prepare(dt);
        ll.reset(0.0);
        // Settle, then correlate one full cycle against quadrature references.
        const int settle = static_cast<int>(300.0 / dt);
        const int cycle = static_cast<int>(1.0 / (f * dt));
        double t = 0.0;
        for (int i = 0; i < settle; ++i, t += dt) ll.step(std::sin(kTwoPi * f * t));
        double re = 0.0, im = 0.0;
        for (int i = 0; i < cycle; ++i, t += dt) {
            const double y = ll.step(std::sin(kTwoPi * f * t));
            re += y * std::sin(kTwoPi * f * t);
            im += y * std::cos(kTwoPi * f * t);
        }
        const double phase_deg = std::atan2(im, re) * 180.0 / kPi;
        CHECK(phase_deg == doctest::Approx(15.0).epsilon(0.5 / 15.0));
    }
}

TEST_CASE("second-order washout kills ramps in steady state") {
    FilterChain chain;
    chain.add(make_washout(0.01));
    chain.add(make_washout(0.01));
    chain.prepare(0.02);
    chain.reset(0.0);
    double y = 0.0;
    for (int i = 0; i < 300000; ++i) y = chain.step(1e-3 * i);
    CHECK(std::abs(y) < 1e-5);
}

TEST_CASE("chain response is the product of sections") {
    FilterChain chain;
    chain.add(make_washout(0.1));
    chain.add(make_leadlag(0.02, 15.0));
    const Complex s(0.0, 1.0);
    const Complex expect = make_washout(0.1).response(s) * make_leadlag(0.02, 15.0).response(s);
    CHECK(std::abs(chain.response(s) - expect) < 1e-12);
}

TEST_CASE("bilinear step tracks the continuous response of a sinusoid") {
    // Drive the washout at 0.5 Hz and compare the measured gain with |H(jw)|.
    auto w = make_washout(0.1);
    const double f = 0.5, dt = 0.005;
    w.prepare(dt);
    w.reset(0.0);
    double t = 0.0;
    for (int i = 0; i < 4000; ++i, t += dt) w.step(std::sin(kTwoPi * f * t));
    double peak = 0.0;
    for (int i = 0; i < 400; ++i, t += dt) {
        peak = std::max(peak, std::abs(w.step(std::sin(kTwoPi * f * t))));
    }
    const double expect = std::abs(w.response(Complex(0.0, kTwoPi * f)));
    CHECK(peak == doctest::Approx(expect).epsilon(5e-3));
}
