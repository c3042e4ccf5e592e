#pragma once

// Closed-form initial data presets: "zero", "elastic-pulse", "shear", "combined".

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

#include "fsi/lagrangian_fluid.hpp"

namespace fsi {

struct InitialData {
  std::function<Eigen::Vector2d(const Point&)> w0;
  std::function<Eigen::Matrix2d(const Point&)> w0_gradient;  // (i, j) = d_j w0^i
  std::function<Eigen::Vector2d(const Point&)> w1;
  AnalyticVectorField v0;
};

const std::vector<std::string>& preset_names();

/// Throws std::invalid_argument for an unknown name.
InitialData make_initial_data(const std::string& preset, double amplitude, double r0, double r1);

/// Smooth bump (1 - |x|^2/rho^2)^4 supported in |x| < rho, with its gradient.
double bump(const Point& x, double rho);
Eigen::Vector2d bump_gradient(const Point& x, double rho);

/// Azimuthal shear velocity f(r) e_theta with f = C (r - r0)^2 (r1 - r)^3
/// normalised to max f = 1. Divergence-free; vanishes to second order at r0
/// and third order at r1.
AnalyticVectorField shear_field(double r0, double r1);

}  // namespace fsi
