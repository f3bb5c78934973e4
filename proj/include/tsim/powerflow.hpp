#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tsim/case.hpp"

namespace tsim {

struct PowerFlowOptions {
    double tolerance = 1e-8;  // max |mismatch|, pu
    int max_iterations = 50;
};

struct PowerFlowSolution {
    Eigen::VectorXcd v;             // complex voltage per bus
    std::vector<double> machine_p;  // dispatch at the solution, pu
    std::vector<double> machine_q;
    std::vector<double> ibr_p;      // injection at the solution, pu
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;
};

/// Newton-Raphson power flow from a flat start. Non-convergence is reported in
/// the result rather than thrown; the transfer-limit search relies on it.
PowerFlowSolution solve_powerflow(const Case& c, const Topology& topo,
                                  const PowerFlowOptions& opt = {});

inline PowerFlowSolution solve_powerflow(const Case& c, const PowerFlowOptions& opt = {}) {
    return solve_powerflow(c, base_topology(c), opt);
}

}  // namespace tsim
