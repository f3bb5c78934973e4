#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "tsim/linear.hpp"
#include "tsim/machine.hpp"

using namespace tsim;

namespace {

Scenario case_scenario(const std::string& case_name, const std::string& extra = "{}") {
    nlohmann::json j;
    j["case"] = std::string(TSIM_CASE_DIR) + "/" + case_name;
    nlohmann::json patch = nlohmann::json::parse(extra);
    for (auto& item : patch.items()) j[item.key()] = item.value();
    return parse_scenario(j.dump(), ".");
}

// Classical SMIB vector field used as the linearization target in the tests.
struct SmibModel {
    double e = 1.05, v = 1.0, x = 0.5, h = 3.0, d = 1.2, p_m = 1.0;
    double omega_b = speed_base(60.0);

    std::pair<double, double> swing(double delta, double omega) const {
        MachineParams params;
        params.h = h;
        params.d = d;
        const double p_e = smib_electrical_power(e, v, x, delta);
        const auto der = swing_derivatives(omega, p_m, p_e, params, 1.0, omega_b);
        return {der.delta_dot, der.omega_dot};
    }
};

}  // namespace

TEST_CASE("ltv synchronizing coefficient matches the closed form over the grid") {
    SmibModel m;
    auto swing = [&](double d, double w) { return m.swing(d, w); };
    double worst = 0.0;
    for (int i = 0; i < 32; ++i) {
        const double delta_bar = 3.1 * i / 31.0;
        for (int j = 0; j <= 10; ++j) {
            const double omega_bar = 0.95 + 0.01 * j;
            const auto ltv = ltv_coefficients(swing, m.h, delta_bar, omega_bar);
            const double expect =
                smib_synchronizing_coefficient(m.e, m.v, m.x, delta_bar, omega_bar);
            worst = std::max(worst, std::abs(ltv.synchronizing - expect) /
                                        std::max(std::abs(expect), 1e-9));
        }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("ltv damping coefficient reduces to D at an equilibrium") {
    SmibModel m;
    auto swing = [&](double d, double w) { return m.swing(d, w); };
    const double delta_eq = std::asin(m.p_m * m.x / (m.e * m.v));
    const auto ltv = ltv_coefficients(swing, m.h, delta_eq, 1.0);
    CHECK(ltv.damping == doctest::Approx(m.d).epsilon(1e-7));

    SUBCASE("synchronizing coefficient vanishes at 90 degrees") {
        const auto at_90 = ltv_coefficients(swing, m.h, kPi / 2.0, 1.0);
        CHECK(std::abs(at_90.synchronizing) < 1e-6);
    }
}

TEST_CASE("linearize recovers a linear system exactly") {
    Eigen::MatrixXd m(3, 3);
    m << -1.0, 2.0, 0.5, 0.0, -3.0, 1.0, 0.2, 0.0, -0.7;
    auto f = [&](const Eigen::VectorXd& x, const Eigen::VectorXd&) -> Eigen::VectorXd {
        return m * x;
    };
    auto g = [&](const Eigen::VectorXd& x, const Eigen::VectorXd&) -> Eigen::VectorXd {
        return x.head(1);
    };
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 0.3);
    LinearModel model = linearize(f, g, x0, Eigen::VectorXd::Zero(1));
    CHECK((model.a - m).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("smib linearization has the classical structure") {
    SmibModel m;
    const double delta_eq = std::asin(m.p_m * m.x / (m.e * m.v));
    auto f = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& u) -> Eigen::VectorXd {
        MachineParams params;
        params.h = m.h;
        params.d = m.d;
        const double p_e = smib_electrical_power(m.e, m.v, m.x, x(0));
        const auto der = swing_derivatives(x(1), m.p_m + u(0), p_e, params, 1.0, m.omega_b);
        return Eigen::Vector2d(der.delta_dot, der.omega_dot);
    };
    auto g = [](const Eigen::VectorXd& x, const Eigen::VectorXd&) -> Eigen::VectorXd {
        return x.tail(1);
    };
    LinearModel model =
        linearize(f, g, Eigen::Vector2d(delta_eq, 1.0), Eigen::VectorXd::Zero(1));
    CHECK(model.equilibrium_residual < 1e-8);
    const double t_coeff = smib_synchronizing_coefficient(m.e, m.v, m.x, delta_eq, 1.0);
    CHECK(model.a(0, 0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(model.a(0, 1) == doctest::Approx(m.omega_b));
    CHECK(model.a(1, 0) == doctest::Approx(-t_coeff / (2.0 * m.h)).epsilon(1e-6));
    CHECK(model.a(1, 1) == doctest::Approx(-m.d / (2.0 * m.h)).epsilon(1e-6));
    // Mechanical power input column
    CHECK(model.b(0, 0) == doctest::Approx(0.0));
    CHECK(model.b(1, 0) == doctest::Approx(1.0 / (2.0 * m.h)).epsilon(1e-6));
}

TEST_CASE("freq response basics") {
    SUBCASE("pure integrator at w = 1") {
        LinearModel m;
        m.a = Eigen::MatrixXd::Zero(1, 1);
        m.b = Eigen::MatrixXd::Ones(1, 1);
        m.c = Eigen::MatrixXd::Ones(1, 1);
        m.d = Eigen::MatrixXd::Zero(1, 1);
        auto resp = freq_response(m, 0, 0, {1.0});
        REQUIRE(resp.valid[0]);
        CHECK(resp.magnitude[0] == doctest::Approx(1.0));
        CHECK(resp.phase_deg[0] == doctest::Approx(-90.0));
    }
    SUBCASE("first-order washout at its corner: -3 dB and +45 deg") {
        const double corner_hz = 0.1;
        const double t = 1.0 / (kTwoPi * corner_hz);
        LinearModel m;
        m.a = Eigen::MatrixXd::Constant(1, 1, -1.0 / t);
        m.b = Eigen::MatrixXd::Ones(1, 1);
        m.c = Eigen::MatrixXd::Constant(1, 1, -1.0 / t);
        m.d = Eigen::MatrixXd::Ones(1, 1);
        auto resp = freq_response(m, 0, 0, {kTwoPi * corner_hz});
        REQUIRE(resp.valid[0]);
        CHECK(20.0 * std::log10(resp.magnitude[0]) == doctest::Approx(-3.0103).epsilon(1e-4));
        CHECK(resp.phase_deg[0] == doctest::Approx(45.0).epsilon(1e-6));
    }
    SUBCASE("response at -w is the conjugate of the response at w") {
        LinearModel m;
        m.a = Eigen::MatrixXd::Constant(1, 1, -2.0);
        m.b = Eigen::MatrixXd::Ones(1, 1);
        m.c = Eigen::MatrixXd::Ones(1, 1);
        m.d = Eigen::MatrixXd::Zero(1, 1);
        auto resp = freq_response(m, 0, 0, {3.0, -3.0});
        CHECK(resp.h[0].real() == doctest::Approx(resp.h[1].real()));
        CHECK(resp.h[0].imag() == doctest::Approx(-resp.h[1].imag()));
    }
    SUBCASE("point at an exactly imaginary eigenvalue is skipped") {
        LinearModel m;
        m.a.resize(2, 2);
        m.a << 0.0, 1.0, -4.0, 0.0;  // poles at +/- 2j
        m.b = Eigen::MatrixXd::Ones(2, 1);
        m.c = Eigen::MatrixXd::Ones(1, 2);
        m.d = Eigen::MatrixXd::Zero(1, 1);
        auto resp = freq_response(m, 0, 0, {2.0, 1.0});
        CHECK_FALSE(resp.valid[0]);
        CHECK(resp.valid[1]);
    }
}

TEST_CASE("eig sweep with a synthetic synchronizing gain") {
    // Two-state swing with feedback k adding synchronizing torque:
    // lambda_im = sqrt(omega_b (T + k) / 2H - (D/4H)^2).
    const double omega_b = speed_base(60.0);
    const double h = 3.0, d_coeff = 1.0, t_coeff = 1.2;
    auto builder = [&](double k) {
        LinearModel m;
        m.a.resize(2, 2);
        m.a << 0.0, omega_b, -(t_coeff + k) / (2.0 * h), -d_coeff / (2.0 * h);
        m.b = Eigen::MatrixXd::Zero(2, 1);
        m.c = Eigen::MatrixXd::Zero(1, 2);
        m.d = Eigen::MatrixXd::Zero(1, 1);
        return m;
    };
    std::vector<double> grid{0.0, 0.3, 0.6, 0.9, 1.2};
    auto sweep = eig_sweep(builder, grid, {1});
    REQUIRE(sweep.loci.size() == 1);
    for (size_t gi = 0; gi < grid.size(); ++gi) {
        const double sigma = d_coeff / (4.0 * h);
        const double expect =
            std::sqrt(omega_b * (t_coeff + grid[gi]) / (2.0 * h) - sigma * sigma);
        CHECK(sweep.loci[0].lambda[gi].imag() == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("eig sweep with zero gain leaves the loci constant") {
    Scenario s = case_scenario("twomach.json", R"({"controller": {"enabled": true, "gain": 0.0}})");
    std::vector<double> grid{0.0, 0.5, 1.0};
    auto sweep = controller_param_sweep(s, "alpha1", grid);
    REQUIRE_FALSE(sweep.loci.empty());
    for (const auto& locus : sweep.loci) {
        for (size_t gi = 1; gi < grid.size(); ++gi) {
            CHECK(std::abs(locus.lambda[gi] - locus.lambda[0]) < 1e-6);
        }
    }
}

TEST_CASE("two-area catalog finds the frequency regulation mode") {
    Scenario s = case_scenario("twoarea.json");
    s.controller_enabled = false;
    ClosedLoopModel model(s);
    LinearModel lin = model.linearize();
    CHECK(lin.equilibrium_residual < 1e-8);
    ModeCatalog catalog = catalog_modes(lin.a, model.speed_states());
    REQUIRE(catalog.freq_reg_index >= 0);
    const Mode& fr = catalog.modes[catalog.freq_reg_index];
    MESSAGE("freq-reg mode at ", fr.freq_hz, " Hz, damping ", fr.damping_ratio);
    CHECK(fr.freq_hz < 0.1);
    CHECK(fr.freq_hz > 0.005);
    int electromech = 0;
    for (const auto& mode : catalog.modes) {
        MESSAGE("mode ", mode.freq_hz, " Hz cls=", mode_class_name(mode.cls),
                " part=", mode.speed_participation, " zeta=", mode.damping_ratio);
        if (mode.cls == ModeClass::InterArea || mode.cls == ModeClass::Local) ++electromech;
    }
    CHECK(electromech >= 3);  // inter-area plus two local-group modes
}

TEST_CASE("open-loop break exposes the controller transfer path") {
    Scenario s = case_scenario("twomach.json", R"({
        "controller": {"enabled": true, "alpha1": 1.0, "alpha2": 0.01, "gain": 10.0}
    })");
    ClosedLoopModel model(s, 0);  // break at the only actuator
    LinearModel lin = model.linearize();
    const int iu = lin.input_index("pref_ess3");
    const int iy = lin.output_index("ps_ess3");
    REQUIRE(iu >= 0);
    REQUIRE(iy >= 0);
    auto resp = freq_response(lin, iu, iy, {kTwoPi * 0.5, kTwoPi * 1.5});
    for (size_t i = 0; i < resp.h.size(); ++i) {
        REQUIRE(resp.valid[i]);
        CHECK(std::isfinite(resp.magnitude[i]));
        CHECK(resp.magnitude[i] > 0.0);
    }
}
