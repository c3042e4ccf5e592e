#pragma once

// Energy functionals, dissipations, perturbation integrals, the total
// functional X, energy-inequality checks, multiplier-identity residuals and
// decay-rate fits.

#include <Eigen/Core>

#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fsi/assembly.hpp"
#include "fsi/lagrangian_fluid.hpp"
#include "fsi/metric_geometry.hpp"

namespace fsi {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct EnergyRecord {
  double t = 0.0;
  double E = 0.0;
  double D = 0.0;
  double E1 = kNaN;
  double D1 = kNaN;
  double E2 = kNaN;
  double D2 = kNaN;
  double X = kNaN;
  double R1 = kNaN;
  double R2 = kNaN;
  double interface_residual = 0.0;
  double det_deviation = 0.0;
  double ellipticity_min = 1.0;
  // not part of the CSV schema
  double D_cumulative = 0.0;  // exact running integral of D over [0, t]
  double grad_v_sq = kNaN;    // ||grad v||^2
  double grad_vt_sq = kNaN;   // ||grad v_t||^2
};

/// Matrices defining the discrete energies. Vector quantities are
/// component-blocked; every matrix here is the scalar version.
struct EnergyOperators {
  SpMat Mf;    // fluid P2 mass
  SpMat Me;    // elastic P2 mass
  SpMat Ke;    // (G grad, grad) + beta mass
  SpMat Tff;   // interface trace mass, velocity x velocity
  SpMat Tfe;   // velocity x wave
  SpMat Tee;   // wave x wave
  double gamma = 1.0;
  double viscosity = 1.0;
};

/// 1/2 (v.Mf v + z.Me z + w.Ke w).
double energy_form(const EnergyOperators& ops, const Eigen::VectorXd& v, const Eigen::VectorXd& z,
                   const Eigen::VectorXd& w);
/// (1/gamma) ||v - z||^2 on the interface, i.e. gamma ||flux||^2 with
/// flux = (v - z)/gamma from the transmission condition.
double interface_dissipation(const EnergyOperators& ops, const Eigen::VectorXd& v, const Eigen::VectorXd& z);

/// First-level energy of a state.
double energy_E(const EnergyOperators& ops, const FluidState& fluid, const WaveState& wave);

/// Viscous part nu * integral of A grad v : grad v with A = a a^T, plus
/// gamma ||flux||^2 for the given interface flux values.
double dissipation_D(const FeDiscretization& disc, const Eigen::VectorXd& v, const AField& a,
                     const InterfaceValues& flux, double gamma, double viscosity = 1.0);

/// integral over the fluid of A grad u : grad w.
double viscous_form(const FeDiscretization& disc, const AField& A, const Eigen::VectorXd& u, const Eigen::VectorXd& w);
/// ||grad u||^2 over the fluid.
double gradient_norm_sq(const FeDiscretization& disc, const Eigen::VectorXd& u);

/// Finite-difference weights (Fornberg) for derivatives 0..max_order at x0.
/// weights[m][k] multiplies the value at nodes[k] for the m-th derivative.
std::vector<std::vector<double>> fd_weights(const std::vector<double>& nodes, double x0, int max_order);

/// One stored time level.
struct Snapshot {
  int index = 0;
  double t = 0.0;
  Eigen::VectorXd v, z, w;
  bool has_pressure = false;
  double pressure_time = 0.0;  // q lives at half steps
  Eigen::VectorXd q;
  AField a;
};

/// Time derivatives at a snapshot reconstructed from neighbours.
struct TimeDerivatives {
  double t = 0.0;
  Eigen::VectorXd v, v_t, v_tt;
  Eigen::VectorXd z, z_t, z_tt;
  Eigen::VectorXd q, q_t, q_tt;
  AField a, a_t, a_tt;
  AField A, A_t, A_tt;
};

/// Uses up to four snapshots nearest to `center` (at least three are
/// required; throws InsufficientHistory otherwise). Differences are formed
/// against the central value so that time-constant data give exactly zero.
TimeDerivatives time_derivatives(const std::deque<Snapshot>& history, std::size_t center);

struct HigherEnergies {
  double E1 = kNaN, D1 = kNaN, E2 = kNaN, D2 = kNaN;
  double R1 = kNaN, R2 = kNaN;
  double grad_v_sq = kNaN, grad_vt_sq = kNaN;
};

HigherEnergies energy_E1_E2(const FeDiscretization& disc, const EnergyOperators& ops, const TimeDerivatives& d);

/// Instantaneous (R1, v_t) and (R2, v_tt) integrands.
double perturbation_R1(const FeDiscretization& disc, const TimeDerivatives& d);
double perturbation_R2(const FeDiscretization& disc, const TimeDerivatives& d);

/// E + E1 + E2 + eps_hat1 (||grad v||^2 + ||grad v_t||^2).
double total_X(double E, double E1, double E2, double grad_v_sq, double grad_vt_sq, double eps_hat1);

struct InequalityReport {
  int level = 0;
  double max_violation = 0.0;  // max_n of E_l(t_n) + int D_l - E_l(0) - int R_l
  double e0 = 0.0;
  double cumulative_dissipation = 0.0;
  std::size_t records_used = 0;
};

/// Level 0 uses the exact per-step dissipation integral; levels 1 and 2
/// integrate D_l and R_l by the trapezoidal rule over records with finite
/// values.
InequalityReport check_energy_inequality(const std::vector<EnergyRecord>& series, int level);

struct DecayFit {
  double rate = 0.0;
  double amplitude = 0.0;
  double r_squared = 0.0;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::size_t count = 0;
};

/// Least squares of log X against t over [t_begin, t_end]; records with
/// X <= floor or non-finite X are skipped. Throws InsufficientData with
/// fewer than 10 usable records.
DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& X, double t_begin, double t_end,
                        double floor = 1e-300);
DecayFit fit_decay_rate(const std::vector<EnergyRecord>& series, double t_begin, double t_end,
                        double floor = 1e-300);

// ---------------------------------------------------------------------------
// Multiplier identities for w_tt - div(G grad w) = f.

struct ResidualStats {
  double max_abs = 0.0;
  double rms = 0.0;
  std::size_t count = 0;
};

enum class IdentityPath { Exact, FiniteDifference };

/// u_hat is a polynomial in (x1, x2, x3, t) with no x3 dependence; f is
/// u_tt - div(G grad u) evaluated exactly. Samples are (x1, x2, t) triples.
/// `step` is the difference step of the finite-difference path, which
/// replaces every derivative of a composite quantity by nested central
/// differences.
ResidualStats multiplier_residual_A(const MetricField& metric, const VectorFieldH& H, const Polynomial& u_hat,
                                    const std::vector<Eigen::Vector3d>& samples, IdentityPath path,
                                    double step = 1e-3);
/// Second identity with weight p (a polynomial in x1, x2).
ResidualStats multiplier_residual_B(const MetricField& metric, const Polynomial& p, const Polynomial& u_hat,
                                    const std::vector<Eigen::Vector3d>& samples, IdentityPath path,
                                    double step = 1e-3);

/// Deterministic space-time samples in the disc of radius r and t in [0, 1].
std::vector<Eigen::Vector3d> identity_samples(double radius, int n);

}  // namespace fsi
