#pragma once

// Manufactured-solution and self-convergence studies.

#include <string>
#include <vector>

#include "fsi/coupled_stepper.hpp"

namespace fsi {

struct ConvergenceRow {
  double h = 0.0;       // mesh size or time step
  double error = 0.0;
  double order = 0.0;   // against the previous row; 0 for the first
};

struct ConvergenceTable {
  std::string quantity;
  std::vector<ConvergenceRow> rows;

  /// Order between the two finest rows.
  double final_order() const;
  double min_order() const;
  std::string to_text() const;
};

/// Fills the order column from consecutive (h, error) pairs.
void compute_orders(ConvergenceTable& table);

/// Standalone wave equation on the disc of radius 1 with exact solution
/// cos(sqrt2 t + phase) sin(x1 + shift) cos(x2) per component, Neumann flux
/// data on the circle, G = I, beta = 1. Ring counts base * 2^l; dt = h^2/2
/// so the time error stays below the spatial one; final time 0.5.
ConvergenceTable wave_mms(int levels, int base_rings = 4);

/// Stokes (a = I, viscosity 1) on the annulus 1 < r < 2 with the stream
/// function sin(x1) sin(x2) and pressure cos(x1) sin(x2): Dirichlet data on
/// the outer circle, traction on the inner one. Returns {velocity, pressure}.
std::vector<ConvergenceTable> stokes_mms(int levels, int base_rings = 4);

/// Frozen coupled runs of `base` (initial state from its preset) to `t_end`
/// with each step in `dts`; errors are energy-norm differences between
/// consecutive step sizes.
ConvergenceTable coupled_temporal_study(const SimulationConfig& base, const std::vector<double>& dts, double t_end);

}  // namespace fsi
