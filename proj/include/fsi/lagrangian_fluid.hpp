#pragma once

// Lagrangian Stokes operators with the coefficient matrix a = (grad eta)^{-1},
// the flow-map update, and the initial-pressure problem.

#include <Eigen/Core>
#include <Eigen/Dense>

#include <array>
#include <functional>
#include <vector>

#include "fsi/assembly.hpp"
#include "fsi/elastic_wave.hpp"
#include "fsi/fe_space.hpp"

namespace fsi {

/// a at every fluid quadrature point: field[cell][q].
using AField = std::vector<std::array<Eigen::Matrix2d, kCellQuad>>;

AField identity_a_field(const FeDiscretization& disc);

struct FluidState {
  Eigen::VectorXd v;    // component-blocked P2 velocity
  Eigen::VectorXd q;    // P1 pressure
  Eigen::VectorXd xi;   // eta - x, component-blocked P2
  AField a;

  static FluidState zero(const FeDiscretization& disc);
};

struct StokesOperators {
  SpMat M;    // scalar P2 mass
  SpMat K;    // scalar viscous form with A = a a^T
  SpMat B;    // (psi, a^{ki} d_k phi^i), rows P1, cols component-blocked P2
  SpMat Mp;   // P1 mass
  double ellipticity_min = 0.0;
};

/// Throws DegenerateCoefficient when the smallest eigenvalue of a a^T is
/// below `ellipticity_floor` at some quadrature point.
StokesOperators assemble_variable_stokes(const FeDiscretization& disc, const AField& a,
                                         double ellipticity_floor = 0.0);

/// Discrete divergence norm: r = Mp^{-1} B v measured in L2. This is the
/// quantity the weak constraint drives to zero.
double divergence_residual(const Eigen::VectorXd& v, const AField& a, const FeDiscretization& disc);
/// L2 norm over the fluid annulus of tr(a grad v) evaluated pointwise.
double divergence_residual_pointwise(const Eigen::VectorXd& v, const AField& a, const FeDiscretization& disc);

/// Velocity degrees of freedom (component-blocked) fixed by no-slip.
std::vector<int> outer_velocity_dofs(const FeDiscretization& disc);

/// Smooth vector field with first and second derivatives.
struct AnalyticVectorField {
  std::function<Eigen::Vector2d(const Point&)> value;
  std::function<Eigen::Matrix2d(const Point&)> gradient;  // (i, j) = d_j f^i
  std::function<Eigen::Vector2d(const Point&)> laplacian;

  static AnalyticVectorField zero();
};

/// P2 velocity load (f, phi) for a vector source.
Eigen::VectorXd velocity_load(const FeDiscretization& disc, const std::function<Eigen::Vector2d(const Point&)>& f);

/// Discretely divergence-free projection with no-slip: solves
/// [M -B^T; -B 0][v; p] = [(f, phi); 0] (a = I).
Eigen::VectorXd project_divergence_free(const FeDiscretization& disc, const StokesOperators& ops,
                                        const std::function<Eigen::Vector2d(const Point&)>& f);

/// P1 solve of Laplace q = source with d_n q = neumann on the outer circle
/// (n outward from the annulus) and q = dirichlet on the interface.
Eigen::VectorXd solve_mixed_poisson(const FeDiscretization& disc, const std::function<double(const Point&)>& source,
                                    const std::function<double(const Point&, const Point&)>& neumann,
                                    const std::function<double(const Point&)>& dirichlet);

/// Initial pressure from the velocity v0 and the normal component of the
/// conormal trace of w0 on the interface, (w0)_{nu_Lambda} . nu.
Eigen::VectorXd solve_initial_pressure(const AnalyticVectorField& v0,
                                       const std::function<double(const Point&, const Point&)>& w0_conormal_normal,
                                       const FeDiscretization& disc);

/// L2 error over the annulus of a P1 field.
double pressure_l2_error(const FeDiscretization& disc, const Eigen::VectorXd& q,
                         const std::function<double(const Point&)>& exact);
/// L2 error over the annulus of a component-blocked P2 velocity.
double velocity_l2_error(const FeDiscretization& disc, const Eigen::VectorXd& v,
                         const std::function<Eigen::Vector2d(const Point&)>& exact);

struct FlowMapUpdate {
  Eigen::VectorXd xi;
  AField a;
  double det_deviation = 0.0;   // max |det(grad eta) - 1|
  double det_min = 1.0;
  double ellipticity_min = 1.0; // min eigenvalue of a a^T
};

/// grad eta at every fluid quadrature point for eta = x + xi.
std::vector<std::array<Eigen::Matrix2d, kCellQuad>> flow_map_gradient(const FeDiscretization& disc,
                                                                      const Eigen::VectorXd& xi);

/// Advances eta by eta^{n+1} = eta^n + dt v_mid, where v_mid = (v^n + v^{n+1})/2,
/// and recomputes a = (grad eta)^{-1}. Throws MapDegenerate when
/// det(grad eta) < det_floor or the ellipticity of a a^T drops below its floor.
FlowMapUpdate update_flow_map(const FeDiscretization& disc, const Eigen::VectorXd& xi, const Eigen::VectorXd& v_mid,
                              double dt, double det_floor = 0.5, double ellipticity_floor = 0.5);

/// Velocity gradient (i, k) = d_k v^i at every fluid quadrature point.
std::vector<std::array<Eigen::Matrix2d, kCellQuad>> velocity_gradient(const FeDiscretization& disc,
                                                                      const Eigen::VectorXd& v);

/// One trapezoidal step of a_t = -a (grad v) a, solved by fixed-point
/// iteration. Kept as a cross-check of the direct inverse.
Eigen::Matrix2d a_ode_step(const Eigen::Matrix2d& a, const Eigen::Matrix2d& grad_v_old,
                           const Eigen::Matrix2d& grad_v_new, double dt);

}  // namespace fsi
