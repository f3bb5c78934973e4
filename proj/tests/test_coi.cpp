#include <doctest.h>

#include <random>
#include <vector>

#include "tsim/coi.hpp"

using namespace tsim;

TEST_CASE("coi states") {
    SUBCASE("equal inertias average the speeds") {
        std::vector<double> w{1.0, 1.01}, d{0.0, 0.0}, h{5.0, 5.0};
        auto s = coi_states(w, d, h, 60.0);
        CHECK(s.omega == doctest::Approx(1.005));
        CHECK(s.freq_hz == doctest::Approx(60.0 * 1.005));
    }
    SUBCASE("single machine is its own center") {
        std::vector<double> w{1.002}, d{0.7}, h{4.0};
        auto s = coi_states(w, d, h, 60.0);
        CHECK(s.omega == doctest::Approx(1.002));
        CHECK(s.delta == doctest::Approx(0.7));
    }
    SUBCASE("inertia-weighted mean of angles") {
        std::vector<double> w{1.0, 1.0}, d{0.0, 0.4}, h{1.0, 3.0};
        auto s = coi_states(w, d, h, 60.0);
        CHECK(s.delta == doctest::Approx(0.3));
    }
    SUBCASE("empty set is an error") {
        std::vector<double> none;
        CHECK_THROWS_AS(static_cast<void>(coi_states(none, none, none, 60.0)), std::invalid_argument);
    }
}

TEST_CASE("unwrap") {
    SUBCASE("2 pi continuity across the branch cut") {
        std::vector<double> seq{3.1, -3.1};
        auto out = unwrap_sequence(seq);
        CHECK(out[0] == doctest::Approx(3.1));
        CHECK(out[1] == doctest::Approx(-3.1 + kTwoPi));
    }
    SUBCASE("constant sequence is unchanged") {
        std::vector<double> seq{0.5, 0.5, 0.5};
        auto out = unwrap_sequence(seq);
        for (double v : out) CHECK(v == doctest::Approx(0.5));
    }
    SUBCASE("random walk recovers after wrapping") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> step(-2.5, 2.5);
        std::vector<double> truth{0.3}, wrapped{wrap_to_pi(0.3)};
        for (int i = 0; i < 500; ++i) {
            truth.push_back(truth.back() + step(rng));
            wrapped.push_back(wrap_to_pi(truth.back()));
        }
        auto rec = unwrap_sequence(wrapped);
        const double offset = rec[0] - truth[0];
        for (size_t i = 0; i < truth.size(); ++i) {
            CHECK(rec[i] - truth[i] == doctest::Approx(offset).epsilon(1e-12));
        }
    }
}

TEST_CASE("estimated coi angle") {
    SUBCASE("uniform weights") {
        std::vector<double> th{0.1, 0.3}, g{0.5, 0.5};
        CHECK(estimate_coi_angle(th, g) == doctest::Approx(0.2));
    }
    SUBCASE("single sensor passes through") {
        std::vector<double> th{0.42}, g{1.0};
        CHECK(estimate_coi_angle(th, g) == doctest::Approx(0.42));
    }
    SUBCASE("weight-sum violation raises") {
        std::vector<double> th{0.1, 0.3}, g{0.5, 0.6};
        CHECK_THROWS_AS(static_cast<void>(estimate_coi_angle(th, g)), std::invalid_argument);
    }
}

TEST_CASE("coi angle by integration") {
    SUBCASE("at synchronous speed the output stays at c") {
        std::vector<double> w(11, 1.0);
        auto d = coi_angle_by_integration(w, 0.1, speed_base(60.0), 1.0, 0.25);
        for (double v : d) CHECK(v == doctest::Approx(0.25));
    }
    SUBCASE("constant offset integrates to the rectangle area") {
        std::vector<double> w(101, 1.001);
        auto d = coi_angle_by_integration(w, 0.01, speed_base(60.0));
        CHECK(d.back() == doctest::Approx(0.12 * kPi).epsilon(1e-9));
    }
}

TEST_CASE("reference trajectories from anchors") {
    TrajectoryAnchors anchors;
    anchors.coi_at_t0 = 0.2;
    anchors.element_at_t0 = {-0.1, 0.05};
    anchors.initialized = true;

    SUBCASE("at t0 the reference equals the anchor") {
        CHECK(reference_angle(0.2, anchors, 0) == doctest::Approx(-0.1));
    }
    SUBCASE("affine in the estimate") {
        const double base = reference_angle(0.5, anchors, 0);
        CHECK(reference_angle(0.5 + 0.3, anchors, 0) == doctest::Approx(base + 0.3));
    }
    SUBCASE("worked substitution") {
        CHECK(reference_angle(0.5, anchors, 0) == doctest::Approx(0.2));
    }
    SUBCASE("uninitialized anchors raise") {
        TrajectoryAnchors blank;
        CHECK_THROWS_AS(static_cast<void>(reference_angle(0.1, blank, 0)), std::logic_error);
    }
}
