#pragma once

// Componentwise wave operator w_tt - div(G grad w) + beta w on the disc.

#include <Eigen/Core>

#include <functional>
#include <vector>

#include "fsi/assembly.hpp"
#include "fsi/fe_space.hpp"
#include "fsi/metric_geometry.hpp"

namespace fsi {

/// Component-blocked P2 coefficients on the elastic cells.
struct WaveState {
  Eigen::VectorXd w;
  Eigen::VectorXd wt;

  static WaveState zero(const FeDiscretization& disc);
  /// Throws std::invalid_argument on wrong length or non-finite entries.
  void validate(const FeDiscretization& disc) const;
};

struct WaveOperators {
  double beta = 1.0;
  SpMat M;          // scalar mass
  SpMat stiffness;  // scalar (G grad, grad) without the beta term
  SpMat K;          // stiffness + beta M
  SpMat T;          // interface trace mass on wave dofs
};

/// Throws NotPositiveDefinite if G fails at a quadrature point.
WaveOperators assemble_wave_operators(const FeDiscretization& disc, const MetricField& metric, double beta);

/// Values of a vector field at interface quadrature points, facet-major
/// (facet f, point q) -> index f * kEdgeQuad + q.
using InterfaceValues = std::vector<Eigen::Vector2d>;

/// (w^i)_{nu_Lambda} = nu^T G grad w^i from the elastic side.
InterfaceValues conormal_trace(const WaveState& state, const MetricField& metric, const FeDiscretization& disc);
InterfaceValues conormal_trace(const Eigen::VectorXd& w, const MetricField& metric, const FeDiscretization& disc);

/// Trace of a P2 field (wave or velocity space) at interface quadrature points.
InterfaceValues interface_trace_wave(const Eigen::VectorXd& w, const FeDiscretization& disc);
InterfaceValues interface_trace_velocity(const Eigen::VectorXd& v, const FeDiscretization& disc);

double interface_l2_norm(const InterfaceValues& f, const FeDiscretization& disc);

/// Load vector (f, phi) over elastic cells for a scalar source.
Eigen::VectorXd wave_load(const FeDiscretization& disc, const std::function<double(const Point&)>& f);
/// Boundary load (g, phi) over the interface for scalar data g(x, nu).
Eigen::VectorXd wave_interface_load(const FeDiscretization& disc,
                                    const std::function<double(const Point&, const Point&)>& g);

/// L2 norm over the elastic disc of (P2 field - exact).
double wave_l2_error(const FeDiscretization& disc, const Eigen::VectorXd& u,
                     const std::function<double(const Point&)>& exact);

}  // namespace fsi
