#include "tsim/linear.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tsim {

int LinearModel::input_index(const std::string& label) const {
    for (size_t i = 0; i < input_labels.size(); ++i) {
        if (input_labels[i] == label) return static_cast<int>(i);
    }
    return -1;
}

int LinearModel::output_index(const std::string& label) const {
    for (size_t i = 0; i < output_labels.size(); ++i) {
        if (output_labels[i] == label) return static_cast<int>(i);
    }
    return -1;
}

LinearModel linearize(const OdeFn& f, const OutputFn& g, const Eigen::VectorXd& x_op,
                      const Eigen::VectorXd& u_op) {
    const int n = static_cast<int>(x_op.size());
    const int m = static_cast<int>(u_op.size());
    const Eigen::VectorXd f0 = f(x_op, u_op);
    const Eigen::VectorXd y0 = g(x_op, u_op);
    const int p = static_cast<int>(y0.size());

    LinearModel model;
    model.a.resize(n, n);
    model.b.resize(n, m);
    model.c.resize(p, n);
    model.d.resize(p, m);
    model.x_op = x_op;
    model.equilibrium_residual = f0.size() > 0 ? f0.cwiseAbs().maxCoeff() : 0.0;

    auto step_for = [](double v) { return std::max(1e-6, 1e-6 * std::abs(v)); };

    Eigen::VectorXd xp = x_op, xm = x_op;
    for (int i = 0; i < n; ++i) {
        const double h = step_for(x_op(i));
        xp(i) = x_op(i) + h;
        xm(i) = x_op(i) - h;
        const Eigen::VectorXd fp = f(xp, u_op);
        const Eigen::VectorXd fm = f(xm, u_op);
        const Eigen::VectorXd gp = g(xp, u_op);
        const Eigen::VectorXd gm = g(xm, u_op);
        if (!fp.allFinite() || !fm.allFinite()) {
            throw EngineError("linearize: non-finite derivative at state " + std::to_string(i));
        }
        model.a.col(i) = (fp - fm) / (2.0 * h);
        model.c.col(i) = (gp - gm) / (2.0 * h);
        xp(i) = x_op(i);
        xm(i) = x_op(i);
    }
    Eigen::VectorXd up = u_op, um = u_op;
    for (int j = 0; j < m; ++j) {
        const double h = step_for(u_op(j));
        up(j) = u_op(j) + h;
        um(j) = u_op(j) - h;
        const Eigen::VectorXd fp = f(x_op, up);
        const Eigen::VectorXd fm = f(x_op, um);
        const Eigen::VectorXd gp = g(x_op, up);
        const Eigen::VectorXd gm = g(x_op, um);
        if (!fp.allFinite() || !fm.allFinite()) {
            throw EngineError("linearize: non-finite derivative at input " + std::to_string(j));
        }
        model.b.col(j) = (fp - fm) / (2.0 * h);
        model.d.col(j) = (gp - gm) / (2.0 * h);
        up(j) = u_op(j);
        um(j) = u_op(j);
    }
    return model;
}

LtvCoefficients ltv_coefficients(
    const std::function<std::pair<double, double>(double, double)>& swing, double h_inertia,
    double delta_bar, double omega_bar) {
    auto step_for = [](double v) { return std::max(1e-6, 1e-6 * std::abs(v)); };
    const double hd = step_for(delta_bar);
    const double hw = step_for(omega_bar);
    const double dwd_ddelta =
        (swing(delta_bar + hd, omega_bar).second - swing(delta_bar - hd, omega_bar).second) /
        (2.0 * hd);
    const double dwd_domega =
        (swing(delta_bar, omega_bar + hw).second - swing(delta_bar, omega_bar - hw).second) /
        (2.0 * hw);
    return {-2.0 * h_inertia * dwd_domega, -2.0 * h_inertia * dwd_ddelta};
}

double smib_synchronizing_coefficient(double e, double v, double x, double delta_bar,
                                      double omega_bar) {
    return (e * v / x) * std::cos(delta_bar) / omega_bar;
}

std::string mode_class_name(ModeClass c) {
    switch (c) {
        case ModeClass::FrequencyRegulation: return "frequency-regulation";
        case ModeClass::InterArea: return "inter-area";
        case ModeClass::Local: return "local";
        case ModeClass::Other: return "other";
    }
    return "?";
}

namespace {

struct ModeShapes {
    std::vector<Eigen::VectorXcd> speed_shape;  // right eigenvector at speed states
};

ModeCatalog catalog_with_shapes(const Eigen::MatrixXd& a, const std::vector<int>& speed_states,
                                ModeShapes* shapes) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw EngineError("eigen solve failed");
    const Eigen::VectorXcd lambda = es.eigenvalues();
    const Eigen::MatrixXcd v = es.eigenvectors();
    const Eigen::MatrixXcd v_inv = v.inverse();

    ModeCatalog catalog;
    for (int i = 0; i < lambda.size(); ++i) {
        if (lambda(i).imag() <= 1e-6) continue;  // keep one of each conjugate pair

        Mode mode;
        mode.lambda = lambda(i);
        mode.freq_hz = lambda(i).imag() / kTwoPi;
        mode.damping_ratio = -lambda(i).real() / std::abs(lambda(i));

        // Participation factors p_k = V(k,i) * Vinv(i,k); they sum to one over k.
        double speed_part = 0.0;
        bool uniform = true;
        double max_re = 0.0;
        std::vector<Complex> parts;
        parts.reserve(speed_states.size());
        for (int k : speed_states) {
            const Complex p = v(k, i) * v_inv(i, k);
            parts.push_back(p);
            speed_part += std::abs(p);
            if (std::abs(p.real()) > std::abs(max_re)) max_re = p.real();
        }
        for (const Complex& p : parts) {
            if (p.real() * (max_re >= 0.0 ? 1.0 : -1.0) < -0.05 * std::abs(max_re)) {
                uniform = false;
            }
        }
        mode.speed_participation = speed_part;
        if (speed_part > 0.05) {
            mode.cls = uniform ? ModeClass::FrequencyRegulation
                               : (mode.freq_hz < 0.8 ? ModeClass::InterArea : ModeClass::Local);
        }
        catalog.modes.push_back(mode);
        if (shapes) {
            Eigen::VectorXcd shape(speed_states.size());
            for (size_t k = 0; k < speed_states.size(); ++k) shape(k) = v(speed_states[k], i);
            shapes->speed_shape.push_back(shape);
        }
    }

    // Sort ascending in frequency, keeping shapes aligned.
    std::vector<size_t> order(catalog.modes.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
        return catalog.modes[x].freq_hz < catalog.modes[y].freq_hz;
    });
    ModeCatalog sorted;
    ModeShapes sorted_shapes;
    for (size_t i : order) {
        sorted.modes.push_back(catalog.modes[i]);
        if (shapes) sorted_shapes.speed_shape.push_back(shapes->speed_shape[i]);
    }
    if (shapes) *shapes = std::move(sorted_shapes);

    // The frequency-regulation mode is the lowest-frequency uniform-sign mode.
    for (size_t i = 0; i < sorted.modes.size(); ++i) {
        if (sorted.modes[i].cls == ModeClass::FrequencyRegulation) {
            sorted.freq_reg_index = static_cast<int>(i);
            break;
        }
    }
    // Demote any other uniform-sign candidates to their frequency class.
    for (size_t i = 0; i < sorted.modes.size(); ++i) {
        if (static_cast<int>(i) != sorted.freq_reg_index &&
            sorted.modes[i].cls == ModeClass::FrequencyRegulation) {
            sorted.modes[i].cls =
                sorted.modes[i].freq_hz < 0.8 ? ModeClass::InterArea : ModeClass::Local;
        }
    }
    return sorted;
}

}  // namespace

ModeCatalog catalog_modes(const Eigen::MatrixXd& a, const std::vector<int>& speed_states) {
    return catalog_with_shapes(a, speed_states, nullptr);
}

// ---------------------------------------------------------------------------
// ClosedLoopModel
// ---------------------------------------------------------------------------

namespace {

void realize_path(const FilterChain& chain, std::vector<double>& a, std::vector<double>& c,
                  std::vector<double>& d) {
    for (int i = 0; i < chain.n_sections(); ++i) {
        a.push_back(chain.section(i).ss_a());
        c.push_back(chain.section(i).ss_c());
        d.push_back(chain.section(i).ss_d());
    }
}

}  // namespace

ClosedLoopModel::ClosedLoopModel(const Scenario& scenario, int break_actuator)
    : scenario_(scenario), break_actuator_(break_actuator) {
    const Case& c = scenario_.case_data;
    plant_ = std::make_unique<PlantModel>(c, scenario_.load_model);
    n_plant_states_ = plant_->layout().size;

    const bool with_controllers = scenario_.controller_enabled && !c.ibr_units.empty();
    if (with_controllers) {
        if (c.sensors.empty()) throw EngineError("closed-loop model requires sensors");
        colocated_sensor_.assign(c.ibr_units.size(), -1);
        for (size_t u = 0; u < c.ibr_units.size(); ++u) {
            for (size_t s = 0; s < c.sensors.size(); ++s) {
                if (c.sensors[s].bus == c.ibr_units[u].bus) {
                    colocated_sensor_[u] = static_cast<int>(s);
                    break;
                }
            }
            if (colocated_sensor_[u] < 0) {
                throw EngineError("ibr '" + c.ibr_units[u].id + "' has no co-located sensor");
            }
        }
        const FilterChain chain1 =
            build_compensation(scenario_.controller.washout1, scenario_.controller.leadlag1);
        const FilterChain chain2 =
            build_compensation(scenario_.controller.washout2, scenario_.controller.leadlag2);
        realize_path(chain1, path1_.a, path1_.c, path1_.d);
        realize_path(chain2, path2_.a, path2_.c, path2_.d);
        ctrl_block_size_ = static_cast<int>(path1_.a.size() + path2_.a.size());
    }
    const int n_ctrl = with_controllers ? static_cast<int>(c.ibr_units.size()) : 0;
    n_states_ = n_plant_states_ + n_ctrl * ctrl_block_size_;

    x_op_ = Eigen::VectorXd::Zero(n_states_);
    x_op_.head(n_plant_states_) = plant_->equilibrium_state();

    const auto& layout = plant_->layout();
    state_labels_.assign(n_states_, "");
    for (size_t m = 0; m < c.machines.size(); ++m) {
        state_labels_[layout.machines[m].delta] = "delta_" + c.machines[m].id;
        state_labels_[layout.machines[m].omega] = "omega_" + c.machines[m].id;
        if (layout.machines[m].gov >= 0) {
            state_labels_[layout.machines[m].gov] = "pgov_" + c.machines[m].id;
        }
        speed_states_.push_back(layout.machines[m].omega);
    }
    for (size_t u = 0; u < c.ibr_units.size(); ++u) {
        state_labels_[layout.ibr_lag[u]] = "ilag_" + c.ibr_units[u].id;
    }
    for (size_t s = 0; s < c.sensors.size(); ++s) {
        state_labels_[layout.sensor_lag[s]] = "lag_" + c.sensors[s].id;
    }
    for (int j = 0; j < n_ctrl; ++j) {
        for (int i = 0; i < ctrl_block_size_; ++i) {
            state_labels_[n_plant_states_ + j * ctrl_block_size_ + i] =
                "ctl_" + c.ibr_units[j].id + "_s" + std::to_string(i);
        }
    }
    for (const auto& m : c.machines) input_labels_.push_back("pm_" + m.id);
    for (const auto& u : c.ibr_units) input_labels_.push_back("pref_" + u.id);
    if (with_controllers) {
        for (const auto& u : c.ibr_units) output_labels_.push_back("ps_" + u.id);
    }
    for (const auto& m : c.machines) output_labels_.push_back("omega_" + m.id);
}

Eigen::VectorXd ClosedLoopModel::f(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    const Case& c = scenario_.case_data;
    const auto& layout = plant_->layout();
    const size_t nm = c.machines.size();
    const size_t nu = c.ibr_units.size();
    const bool with_controllers = ctrl_block_size_ > 0;

    Eigen::VectorXd dxdt = Eigen::VectorXd::Zero(n_states_);
    const Eigen::VectorXd x_plant = x.head(n_plant_states_);

    // Controller outputs and state derivatives from the sensor-lag deviations.
    std::vector<double> p_s(nu, 0.0);
    if (with_controllers) {
        double d_tilde = 0.0;
        for (size_t s = 0; s < c.sensors.size(); ++s) {
            d_tilde += c.sensors[s].weight *
                       (x(layout.sensor_lag[s]) - x_op_(layout.sensor_lag[s]));
        }
        for (size_t j = 0; j < nu; ++j) {
            const int lag = layout.sensor_lag[colocated_sensor_[j]];
            const double d_theta_j = x(lag) - x_op_(lag);
            const double e1 = scenario_.controller.alpha1 * (d_theta_j - d_tilde);
            const double e2 = scenario_.controller.alpha2 * d_tilde;
            const int base = n_plant_states_ + static_cast<int>(j) * ctrl_block_size_;
            int slot = base;
            double v_sig = e1;
            for (size_t i = 0; i < path1_.a.size(); ++i, ++slot) {
                dxdt(slot) = path1_.a[i] * x(slot) + v_sig;
                v_sig = path1_.c[i] * x(slot) + path1_.d[i] * v_sig;
            }
            const double y1 = v_sig;
            v_sig = e2;
            for (size_t i = 0; i < path2_.a.size(); ++i, ++slot) {
                dxdt(slot) = path2_.a[i] * x(slot) + v_sig;
                v_sig = path2_.c[i] * x(slot) + path2_.d[i] * v_sig;
            }
            const double y2 = v_sig;
            p_s[j] = scenario_.controller.gain * (y1 + y2);
        }
    }

    // External setpoint inputs enter the converter alongside the feedback.
    std::vector<double> p_s_eff(nu, 0.0);
    for (size_t j = 0; j < nu; ++j) {
        const double feedback = (static_cast<int>(j) == break_actuator_) ? 0.0 : p_s[j];
        p_s_eff[j] = feedback - u(nm + j);
    }
    std::vector<double> pm_extra(nm);
    for (size_t m = 0; m < nm; ++m) pm_extra[m] = u(m);

    std::vector<double> unwrap_ref(c.sensors.size());
    for (size_t s = 0; s < c.sensors.size(); ++s) {
        unwrap_ref[s] = x_op_(layout.sensor_lag[s]);
    }

    NetworkOut net;
    Eigen::VectorXd dx_plant(n_plant_states_);
    if (plant_->derivatives(x_plant, p_s_eff, pm_extra, unwrap_ref, net, dx_plant) !=
        SolveStatus::Ok) {
        throw EngineError("network solve failed during linearization");
    }
    dxdt.head(n_plant_states_) = dx_plant;
    return dxdt;
}

Eigen::VectorXd ClosedLoopModel::outputs(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& u) const {
    (void)u;
    const Case& c = scenario_.case_data;
    const auto& layout = plant_->layout();
    const bool with_controllers = ctrl_block_size_ > 0;
    const size_t nu = c.ibr_units.size();

    std::vector<double> out;
    if (with_controllers) {
        double d_tilde = 0.0;
        for (size_t s = 0; s < c.sensors.size(); ++s) {
            d_tilde += c.sensors[s].weight *
                       (x(layout.sensor_lag[s]) - x_op_(layout.sensor_lag[s]));
        }
        for (size_t j = 0; j < nu; ++j) {
            const int lag = layout.sensor_lag[colocated_sensor_[j]];
            const double d_theta_j = x(lag) - x_op_(lag);
            const double e1 = scenario_.controller.alpha1 * (d_theta_j - d_tilde);
            const double e2 = scenario_.controller.alpha2 * d_tilde;
            const int base = n_plant_states_ + static_cast<int>(j) * ctrl_block_size_;
            int slot = base;
            double v_sig = e1;
            for (size_t i = 0; i < path1_.a.size(); ++i, ++slot) {
                v_sig = path1_.c[i] * x(slot) + path1_.d[i] * v_sig;
            }
            const double y1 = v_sig;
            v_sig = e2;
            for (size_t i = 0; i < path2_.a.size(); ++i, ++slot) {
                v_sig = path2_.c[i] * x(slot) + path2_.d[i] * v_sig;
            }
            out.push_back(scenario_.controller.gain * (y1 + v_sig));
        }
    }
    for (size_t m = 0; m < c.machines.size(); ++m) {
        out.push_back(x(layout.machines[m].omega));
    }
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<int>(out.size()));
}

LinearModel ClosedLoopModel::linearize() const {
    const size_t nm = scenario_.case_data.machines.size();
    const size_t nu = scenario_.case_data.ibr_units.size();
    const Eigen::VectorXd u_op = Eigen::VectorXd::Zero(nm + nu);
    LinearModel model = tsim::linearize(
        [this](const Eigen::VectorXd& x, const Eigen::VectorXd& u) { return f(x, u); },
        [this](const Eigen::VectorXd& x, const Eigen::VectorXd& u) { return outputs(x, u); },
        x_op_, u_op);
    model.state_labels = state_labels_;
    model.input_labels = input_labels_;
    model.output_labels = output_labels_;
    return model;
}

// ---------------------------------------------------------------------------
// Sweeps and frequency response
// ---------------------------------------------------------------------------

EigSweepResult eig_sweep(const ModelBuilder& builder, const std::vector<double>& grid,
                         const std::vector<int>& speed_states) {
    EigSweepResult result;
    result.grid = grid;
    result.point_errors.assign(grid.size(), "");
    const Complex nan_lambda(std::nan(""), std::nan(""));

    std::vector<Eigen::VectorXcd> last_shapes;  // per locus
    std::vector<Complex> last_lambda;

    for (size_t gi = 0; gi < grid.size(); ++gi) {
        ModeCatalog catalog;
        ModeShapes shapes;
        try {
            const LinearModel model = builder(grid[gi]);
            catalog = catalog_with_shapes(model.a, speed_states, &shapes);
        } catch (const std::exception& e) {
            result.point_errors[gi] = e.what();
            result.catalogs.push_back({});
            for (auto& locus : result.loci) locus.lambda.push_back(nan_lambda);
            continue;
        }
        result.catalogs.push_back(catalog);

        if (result.loci.empty()) {
            for (size_t i = 0; i < catalog.modes.size(); ++i) {
                ModeLocus locus;
                char label[64];
                std::snprintf(label, sizeof(label), "mode%zu_%.3fHz", i + 1,
                              catalog.modes[i].freq_hz);
                locus.label = label;
                locus.cls = catalog.modes[i].cls;
                locus.lambda.assign(gi, nan_lambda);
                locus.lambda.push_back(catalog.modes[i].lambda);
                result.loci.push_back(std::move(locus));
                last_shapes.push_back(shapes.speed_shape[i]);
                last_lambda.push_back(catalog.modes[i].lambda);
            }
            continue;
        }

        // Nearest-neighbor matching from the previous point; near-ties fall
        // back to speed-shape correlation.
        std::vector<bool> used(catalog.modes.size(), false);
        for (size_t li = 0; li < result.loci.size(); ++li) {
            auto corr = [&](size_t idx) {
                const auto& s_new = shapes.speed_shape[idx];
                return std::abs(last_shapes[li].dot(s_new)) /
                       std::max(1e-300, last_shapes[li].norm() * s_new.norm());
            };
            int best = -1;
            double best_dist = 0.0;
            for (size_t mi = 0; mi < catalog.modes.size(); ++mi) {
                if (used[mi]) continue;
                const double dist = std::abs(catalog.modes[mi].lambda - last_lambda[li]);
                if (best < 0) {
                    best = static_cast<int>(mi);
                    best_dist = dist;
                } else if (dist < 0.99 * best_dist) {
                    best = static_cast<int>(mi);
                    best_dist = dist;
                } else if (dist < 1.01 * best_dist &&
                           corr(mi) > corr(static_cast<size_t>(best))) {
                    best = static_cast<int>(mi);
                    best_dist = dist;
                }
            }
            if (best >= 0) {
                used[best] = true;
                result.loci[li].lambda.push_back(catalog.modes[best].lambda);
                last_lambda[li] = catalog.modes[best].lambda;
                last_shapes[li] = shapes.speed_shape[best];
            } else {
                result.loci[li].lambda.push_back(nan_lambda);
            }
        }
    }
    return result;
}

EigSweepResult controller_param_sweep(const Scenario& scenario, const std::string& param,
                                      const std::vector<double>& grid) {
    Scenario base = scenario;
    base.controller_enabled = true;
    ClosedLoopModel probe(base);
    const std::vector<int> speed_states = probe.speed_states();

    auto builder = [&](double value) {
        Scenario s = base;
        if (param == "alpha1") s.controller.alpha1 = value;
        else if (param == "alpha2") s.controller.alpha2 = value;
        else if (param == "gain") s.controller.gain = value;
        else throw EngineError("unknown sweep parameter '" + param + "'");
        return ClosedLoopModel(s).linearize();
    };
    return eig_sweep(builder, grid, speed_states);
}

FrequencyResponse freq_response(const LinearModel& model, int input, int output,
                                const std::vector<double>& omega_grid) {
    if (input < 0 || input >= model.n_inputs() || output < 0 || output >= model.n_outputs()) {
        throw EngineError("freq_response: input/output index out of range");
    }
    FrequencyResponse resp;
    const int n = model.n_states();
    const Eigen::MatrixXcd a = model.a.cast<Complex>();
    const Eigen::VectorXcd b = model.b.col(input).cast<Complex>();
    const Eigen::RowVectorXcd c = model.c.row(output).cast<Complex>();
    const Complex d(model.d(output, input), 0.0);

    for (double w : omega_grid) {
        Eigen::MatrixXcd m = Complex(0.0, w) * Eigen::MatrixXcd::Identity(n, n) - a;
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
        const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
        const double pmax = pivots.maxCoeff();
        const bool ok = pmax > 0.0 && pivots.minCoeff() > 1e-13 * pmax;
        resp.omega.push_back(w);
        if (!ok) {
            resp.valid.push_back(false);
            resp.h.push_back(Complex(std::nan(""), std::nan("")));
            resp.magnitude.push_back(std::nan(""));
            resp.phase_deg.push_back(std::nan(""));
            continue;
        }
        const Complex h = (c * lu.solve(b))(0) + d;
        resp.valid.push_back(true);
        resp.h.push_back(h);
        resp.magnitude.push_back(std::abs(h));
        resp.phase_deg.push_back(std::arg(h) * 180.0 / kPi);
    }
    return resp;
}

}  // namespace tsim
