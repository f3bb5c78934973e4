#pragma once

#include <Eigen/Dense>

#include "tsim/case.hpp"

namespace tsim {

/// Bolted three-phase faults enter as a large shunt admittance so the matrix
/// dimension stays fixed across switching events.
inline constexpr double kFaultAdmittance = 1e7;

/// Bus admittance matrix for the in-service network, including branch charging
/// shunts and fault shunts. Loads and machine source admittances are not folded
/// in here; the dynamic network layer adds them.
Eigen::MatrixXcd build_ybus(const Case& c, const Topology& topo);

}  // namespace tsim
