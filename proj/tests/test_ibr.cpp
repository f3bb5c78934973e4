#include <doctest.h>

#include "tsim/ibr.hpp"

using namespace tsim;

namespace {

IbrParams params() {
    IbrParams p;
    p.rating = 1.0;
    p.p_ref = 0.5;
    p.v_min = 0.1;
    p.t_i = 0.02;
    p.v_zero = 0.5;
    p.v_break = 0.9;
    p.i_limit = 1.1;
    return p;
}

}  // namespace

TEST_CASE("lvpl limit") {
    auto p = params();
    CHECK(lvpl_limit(0.0, p) == doctest::Approx(0.0));
    CHECK(lvpl_limit(1.0, p) == doctest::Approx(1.1));
    SUBCASE("linear interpolation between the breakpoints") {
        p.i_limit = 1.1;
        // midpoint checks computed from the two-point line through
        // (0.5, 0) and (0.9, 1.1)
        CHECK(lvpl_limit(0.7, p) == doctest::Approx(0.55));
        CHECK(lvpl_limit(0.6, p) == doctest::Approx(0.275));
    }
}

TEST_CASE("steady state injection at unity voltage") {
    auto p = params();
    IbrState st;
    double i_p = 0.0;
    for (int i = 0; i < 200; ++i) i_p = converter_step(st, 0.5, 0.0, 1.0, p, 0.01);
    CHECK(i_p == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("power command saturates at the rating") {
    auto p = params();
    CHECK(current_command(2.0, 0.0, 1.0, p) == doctest::Approx(1.0));
    CHECK(current_command(0.5, 2.0, 1.0, p) == doctest::Approx(-1.0));
}

TEST_CASE("voltage floor and lvpl compose during a deep sag") {
    auto p = params();
    IbrState st;
    st.i_lag = 0.5;
    // Divisor floors at 0.1 so the command is bounded, then the LVPL clamp
    // takes the output to zero at a collapsed bus.
    CHECK(current_command(0.5, 0.0, 0.01, p) == doctest::Approx(0.5 / 0.1));
    CHECK(converter_output(st, 0.01, p) == doctest::Approx(0.0));
}

TEST_CASE("steady-state output is linear in the net command inside limits") {
    auto p = params();
    auto settle = [&](double p_ref, double p_s) {
        IbrState st;
        double i_p = 0.0;
        for (int i = 0; i < 400; ++i) i_p = converter_step(st, p_ref, p_s, 1.0, p, 0.01);
        return i_p;
    };
    const double base = settle(0.2, 0.0);
    CHECK(settle(0.4, 0.0) == doctest::Approx(2.0 * base).epsilon(1e-9));
    CHECK(settle(0.2, 0.1) == doctest::Approx(settle(0.1, 0.0)).epsilon(1e-9));
}

TEST_CASE("positive p_s reduces the injection") {
    auto p = params();
    IbrState st;
    double i_p = 0.0;
    for (int i = 0; i < 400; ++i) i_p = converter_step(st, 0.5, 0.3, 1.0, p, 0.01);
    CHECK(i_p == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("soc derating tapers the power limit at the rails") {
    auto p = params();
    p.energy_mwh = 200.0;
    p.soc_derate = true;
    CHECK(effective_power_limit(p, 100.0) == doctest::Approx(1.0));
    CHECK(effective_power_limit(p, 5.0) == doctest::Approx(0.5));
    CHECK(effective_power_limit(p, 0.0) == doctest::Approx(0.0));
    CHECK(effective_power_limit(p, 200.0) == doctest::Approx(0.0));
    SUBCASE("disabled by default") {
        auto q = params();
        q.energy_mwh = 200.0;
        CHECK(effective_power_limit(q, 0.0) == doctest::Approx(1.0));
    }
}
