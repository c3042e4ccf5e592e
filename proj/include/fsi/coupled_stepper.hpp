#pragma once

// Monolithic implicit-midpoint step of the coupled fluid / wave system and
// the simulation driver.

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fsi/diagnostics.hpp"
#include "fsi/elastic_wave.hpp"
#include "fsi/initial_data.hpp"
#include "fsi/lagrangian_fluid.hpp"
#include "fsi/metric_geometry.hpp"

namespace fsi {

enum class CouplingMode { Frozen, Ale };

std::string to_string(CouplingMode mode);

struct EscapeConfig {
  std::string field = "radial";  // radial | scaled-radial | polynomial
  double alpha = 1.0;
  std::vector<double> center{0.0, 0.0};
  std::vector<Polynomial> components;  // polynomial field only
  bool negate = false;
  double radius = 0.0;                 // 0 means geometry.r0
  int interior_samples = 41;           // per axis
  int boundary_samples = 256;
  EscapeThresholds thresholds;
};

struct IdentityConfig {
  int samples = 64;
  double exact_tolerance = 1e-8;
  double min_order = 1.8;
  std::vector<double> steps{0.02, 0.01, 0.005, 0.0025};
};

struct SimulationConfig {
  struct Geometry {
    double r0 = 1.0;
    double r1 = 2.0;
    double h = 0.15;
  } geometry;
  struct Physics {
    double gamma = 1.0;
    double beta = 1.0;
    double viscosity = 1.0;
    MetricSpec metric;
    CouplingMode mode = CouplingMode::Frozen;
  } physics;
  struct Time {
    double dt = 0.01;
    double t_end = 1.0;
  } time;
  struct Initial {
    std::string preset = "elastic-pulse";
    double amplitude = 1e-2;
  } initial_data;
  struct Diagnostics {
    double eps_hat1 = 0.01;
    int stride = 1;
    double fit_fraction = 0.6;  // fit over the last fraction of the run
    double fit_floor = 1e-300;
    bool higher_levels = true;  // E1, E2, R1, R2 and X
  } diagnostics;
  struct Tolerances {
    double coupling = 1e-8;
    double det_floor = 0.5;
    double ellipticity = 0.5;
    double solver = 1e-10;  // relative residual of each linear solve
  } tolerances;
  struct Output {
    bool write_mesh = false;
  } output;
  EscapeConfig escape;
  IdentityConfig identities;

  /// Every violated invariant as "key: reason".
  std::vector<std::string> violations() const;
  /// Throws ValidationError listing all violations.
  void validate() const;
};

struct CoupledState {
  FluidState fluid;
  WaveState wave;
  double t = 0.0;
  int step = 0;
};

/// Per-step quantities of one accepted step.
struct StepReport {
  double dissipation = 0.0;          // D at the midpoint
  double energy_before = 0.0;
  double energy_after = 0.0;
  double interface_residual = 0.0;
  double det_deviation = 0.0;
  double ellipticity_min = 1.0;
  double solver_residual = 0.0;
  double divergence_residual = 0.0;  // discrete norm of B v at the new level
};

/// Owns the operators of one discretization and advances states. In frozen
/// mode the system matrix is factorized once. In ALE mode it is rebuilt every
/// step with the lagged a and solved by iterative refinement on the previous
/// factors, refactorizing when the refinement stops contracting.
class CoupledStepper {
 public:
  CoupledStepper(const SimulationConfig& cfg, const FeDiscretization& disc, const MetricField& metric);

  /// One implicit-midpoint step; advances `state` in place. Throws
  /// SolverFailure, MapDegenerate or CouplingResidualExceeded, leaving `state`
  /// untouched on failure.
  StepReport step(CoupledState& state);

  const EnergyOperators& energy_operators() const { return energy_; }
  const WaveOperators& wave_operators() const { return wave_; }
  const StokesOperators& stokes_operators() const { return stokes_; }
  const SimulationConfig& config() const { return cfg_; }
  const FeDiscretization& discretization() const { return disc_; }

  double energy(const CoupledState& s) const;
  /// Midpoint dissipation for midpoint values (V, Z) and the current operators.
  double dissipation(const Eigen::VectorXd& V, const Eigen::VectorXd& Z) const;

  /// sqrt(r^T Mp r) with r = Mp^{-1} B v for the current B.
  double divergence_norm(const Eigen::VectorXd& v) const;

 private:
  void build_system(const AField& a);
  void factorize();
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs);
  double interface_residual(const Eigen::VectorXd& V, const Eigen::VectorXd& Z, const Eigen::VectorXd& z_old,
                            const Eigen::VectorXd& w_old) const;

  SimulationConfig cfg_;
  const FeDiscretization& disc_;
  const MetricField& metric_;
  int nv_ = 0, ne_ = 0, np_ = 0;
  WaveOperators wave_;
  StokesOperators stokes_;
  EnergyOperators energy_;
  SpMat Me2_, Ke2_, Mf2_, Kf2_;
  std::vector<char> fixed_;
  std::vector<int> wave_iface_dofs_;
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  SpMat system_;
  bool pattern_ready_ = false;
  bool factor_current_ = false;
  Eigen::SimplicialLDLT<SpMat> mp_solver_;
  Eigen::SimplicialLDLT<SpMat> trace_solver_;  // interface block of the wave trace mass
};

/// Functional form of CoupledStepper::step.
CoupledState monolithic_step(const CoupledState& state, CoupledStepper& stepper);

/// Initial state of a preset: w0, w1 interpolated, v0 projected onto discretely
/// divergence-free fields, a = I, eta = x.
CoupledState initial_state(const InitialData& data, const FeDiscretization& disc, const StokesOperators& identity_ops);

struct CompatibilityReport {
  double transmission = 0.0;     // ||w1 - v0 + gamma (w0)_nuLambda|| on the interface
  double stress_normal = 0.0;    // ||(w0)_nuLambda - dv0/dnu|| on the interface
  double no_slip = 0.0;          // ||v0|| on the outer boundary
  double pressure_balance = 0.0; // ||Laplace v0 - grad q0|| on the outer boundary
};

/// Residuals of the zeroth and first order compatibility conditions, by
/// facet quadrature. q0 is a P1 pressure on the fluid cells.
CompatibilityReport compatibility_report(const InitialData& data, const FeDiscretization& disc,
                                         const MetricField& metric, double gamma, const Eigen::VectorXd& q0);

struct RunResult {
  std::vector<EnergyRecord> records;
  CoupledState final_state;
  double E0 = 0.0;
  double max_identity_violation = 0.0;  // max_n |E^{n+1} - E^n + dt D^{n+1/2}|
  double max_energy_increase = 0.0;     // max_n (E^{n+1} - E^n), clipped at 0
  double max_interface_residual = 0.0;
  double max_det_deviation = 0.0;
  double min_ellipticity = 1.0;
  double max_divergence_residual = 0.0;
  int steps = 0;
  CompatibilityReport compatibility;
  Eigen::VectorXd initial_pressure;
};

/// Observer called with every finished record (in time order).
using RecordSink = std::function<void(const EnergyRecord&)>;

RunResult run_simulation(const SimulationConfig& cfg, const RecordSink& sink = {});
/// Same, filling `out` as it goes so that an aborted run (the error is
/// rethrown) still leaves its records and running maxima in `out`.
void run_simulation(const SimulationConfig& cfg, RunResult& out, const RecordSink& sink = {});

/// Mesh of the configured geometry.
Mesh build_mesh(const SimulationConfig& cfg);

}  // namespace fsi
