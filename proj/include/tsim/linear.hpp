#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tsim/engine.hpp"

namespace tsim {

/// State-space quadruple about an operating point.
struct LinearModel {
    Eigen::MatrixXd a, b, c, d;
    std::vector<std::string> state_labels;
    std::vector<std::string> input_labels;
    std::vector<std::string> output_labels;
    Eigen::VectorXd x_op;  // operating-point snapshot
    double equilibrium_residual = 0.0;

    int n_states() const { return static_cast<int>(a.rows()); }
    int n_inputs() const { return static_cast<int>(b.cols()); }
    int n_outputs() const { return static_cast<int>(c.rows()); }
    int input_index(const std::string& label) const;
    int output_index(const std::string& label) const;
};

using OdeFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;
using OutputFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// Central finite differences with per-component step max(1e-6, 1e-6 |x_i|).
LinearModel linearize(const OdeFn& f, const OutputFn& g, const Eigen::VectorXd& x_op,
                      const Eigen::VectorXd& u_op);

/// LTV swing coefficients about a (possibly nonequilibrium) point:
/// D(t) = -2H d(omega_dot)/d(omega), T(t) = -2H d(omega_dot)/d(delta).
struct LtvCoefficients {
    double damping;
    double synchronizing;
};

/// Finite-difference route, applicable to any two-state swing model
/// f(delta, omega) -> (delta_dot, omega_dot).
LtvCoefficients ltv_coefficients(
    const std::function<std::pair<double, double>(double, double)>& swing, double h_inertia,
    double delta_bar, double omega_bar);

/// Closed-form fast path for the single-machine-infinite-bus model:
/// T = (E V / X) cos(delta_bar) / omega_bar.
double smib_synchronizing_coefficient(double e, double v, double x, double delta_bar,
                                      double omega_bar);

enum class ModeClass { FrequencyRegulation, InterArea, Local, Other };

std::string mode_class_name(ModeClass c);

struct Mode {
    Complex lambda;
    double freq_hz = 0.0;
    double damping_ratio = 0.0;
    ModeClass cls = ModeClass::Other;
    double speed_participation = 0.0;  // |participation| summed over machine speeds
};

struct ModeCatalog {
    std::vector<Mode> modes;        // oscillatory modes, Im > 0, sorted by frequency
    int freq_reg_index = -1;        // index into modes, -1 if not identified
};

/// Eigenanalysis of A with participation-based classification. `speed_states`
/// are the machine-speed rows of the state vector.
ModeCatalog catalog_modes(const Eigen::MatrixXd& a, const std::vector<int>& speed_states);

/// Continuous-time closed-loop model of a scenario: the plant plus one
/// controller per IBR realized in state-space form (saturations excluded;
/// valid in a neighborhood of the equilibrium). Inputs are the per-machine
/// mechanical powers and the per-IBR power setpoints; outputs are the
/// controller commands and the machine speeds.
class ClosedLoopModel {
  public:
    /// `break_actuator` >= 0 opens the loop at that actuator: its converter
    /// follows the external setpoint input only, while the controller output
    /// stays observable. Used for open-loop frequency response.
    ClosedLoopModel(const Scenario& scenario, int break_actuator = -1);

    LinearModel linearize() const;
    const std::vector<int>& speed_states() const { return speed_states_; }
    int n_states() const { return n_states_; }

  private:
    Eigen::VectorXd f(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    Eigen::VectorXd outputs(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

    Scenario scenario_;
    std::unique_ptr<PlantModel> plant_;
    int break_actuator_;
    int n_states_ = 0;
    int n_plant_states_ = 0;
    std::vector<int> speed_states_;
    std::vector<int> colocated_sensor_;
    // Controller path realizations (shared tuning, per-actuator state blocks).
    struct PathRealization {
        std::vector<double> a, c, d;  // per section
    };
    PathRealization path1_, path2_;
    int ctrl_block_size_ = 0;
    Eigen::VectorXd x_op_;
    std::vector<std::string> state_labels_;
    std::vector<std::string> input_labels_;
    std::vector<std::string> output_labels_;

    friend LinearModel linearize_closed_loop(const ClosedLoopModel&);
};

/// One tracked oscillatory mode across a parameter grid.
struct ModeLocus {
    std::string label;
    ModeClass cls = ModeClass::Other;
    std::vector<Complex> lambda;  // per grid point; NaN when lost
};

struct EigSweepResult {
    std::vector<double> grid;
    std::vector<ModeLocus> loci;
    std::vector<ModeCatalog> catalogs;       // per grid point
    std::vector<std::string> point_errors;   // empty string when the point solved
};

using ModelBuilder = std::function<LinearModel(double)>;

/// Eigenvalue loci over a parameter grid with nearest-neighbor mode tracking.
EigSweepResult eig_sweep(const ModelBuilder& builder, const std::vector<double>& grid,
                         const std::vector<int>& speed_states);

/// Convenience: sweep one controller parameter ("alpha1" | "alpha2" | "gain")
/// of a scenario's closed loop.
EigSweepResult controller_param_sweep(const Scenario& scenario, const std::string& param,
                                      const std::vector<double>& grid);

struct FrequencyResponse {
    std::vector<double> omega;  // rad/s
    std::vector<double> magnitude;
    std::vector<double> phase_deg;
    std::vector<Complex> h;
    std::vector<bool> valid;  // false where (jwI - A) was singular
};

FrequencyResponse freq_response(const LinearModel& model, int input, int output,
                                const std::vector<double>& omega_grid);

}  // namespace tsim
