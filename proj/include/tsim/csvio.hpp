#pragma once

#include <string>
#include <vector>

#include "tsim/engine.hpp"

namespace tsim {

/// Fixed "%.12g" formatting so identical doubles always serialize identically.
std::string format_double(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// One column per recorded signal, header row first.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

/// Compact run metadata (status, horizon, extremes) for batch outputs.
void write_trajectory_summary(const Trajectory& traj, const std::string& path);

}  // namespace tsim
