#include "fsi/coupled_stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "fsi/error.hpp"

namespace fsi {

std::string to_string(CouplingMode mode) { return mode == CouplingMode::Frozen ? "frozen" : "ale"; }

std::vector<std::string> SimulationConfig::violations() const {
  std::vector<std::string> v;
  auto require = [&](bool ok, const char* key, const char* why) {
    if (!ok) v.push_back(std::string(key) + ": " + why);
  };
  require(std::isfinite(geometry.r0) && geometry.r0 > 0.0, "geometry.r0", "must be > 0");
  require(std::isfinite(geometry.r1) && geometry.r1 > geometry.r0, "geometry.r1", "must be > geometry.r0");
  require(std::isfinite(geometry.h) && geometry.h > 0.0 && geometry.h < geometry.r0, "geometry.h",
          "must satisfy 0 < h < r0");
  require(physics.gamma > 0.0 && std::isfinite(physics.gamma), "physics.gamma", "must be > 0");
  require(physics.beta > 0.0 && std::isfinite(physics.beta), "physics.beta", "must be > 0");
  require(physics.viscosity >= 0.0 && std::isfinite(physics.viscosity), "physics.viscosity", "must be >= 0");
  require(physics.metric.dim == 2, "physics.metric", "only dim = 2 is supported by the solver");
  if (physics.metric.kind == MetricSpec::Kind::Diagonal) {
    bool ok = physics.metric.diagonal.size() == 2;
    for (double d : physics.metric.diagonal) ok = ok && d > 0.0 && std::isfinite(d);
    require(ok, "physics.metric.diagonal", "needs two positive entries");
  }
  require(time.dt > 0.0 && std::isfinite(time.dt), "time.dt", "must be > 0");
  require(time.t_end >= 0.0 && std::isfinite(time.t_end), "time.t_end", "must be >= 0");
  require(std::find(preset_names().begin(), preset_names().end(), initial_data.preset) != preset_names().end(),
          "initial_data.preset", "unknown preset");
  require(initial_data.amplitude >= 0.0 && std::isfinite(initial_data.amplitude), "initial_data.amplitude",
          "must be >= 0");
  require(diagnostics.eps_hat1 > 0.0 && std::isfinite(diagnostics.eps_hat1), "diagnostics.eps_hat1", "must be > 0");
  require(diagnostics.stride >= 1, "diagnostics.stride", "must be >= 1");
  require(diagnostics.fit_fraction > 0.0 && diagnostics.fit_fraction <= 1.0, "diagnostics.fit_fraction",
          "must be in (0, 1]");
  require(diagnostics.fit_floor >= 0.0, "diagnostics.fit_floor", "must be >= 0");
  require(tolerances.coupling > 0.0, "tolerances.coupling", "must be > 0");
  require(tolerances.det_floor > 0.0 && tolerances.det_floor < 1.0, "tolerances.det_floor", "must be in (0, 1)");
  require(tolerances.ellipticity > 0.0 && tolerances.ellipticity <= 1.0, "tolerances.ellipticity",
          "must be in (0, 1]");
  require(tolerances.solver > 0.0, "tolerances.solver", "must be > 0");
  require(escape.field == "radial" || escape.field == "scaled-radial" || escape.field == "polynomial", "escape.field",
          "must be radial, scaled-radial or polynomial");
  require(escape.center.size() == 2, "escape.center", "needs two entries");
  require(escape.radius >= 0.0, "escape.radius", "must be >= 0");
  require(escape.interior_samples >= 2, "escape.interior_samples", "must be >= 2");
  require(escape.boundary_samples >= 1, "escape.boundary_samples", "must be >= 1");
  require(escape.field != "polynomial" || escape.components.size() == 2, "escape.components",
          "polynomial field needs two components");
  require(identities.samples >= 1, "identities.samples", "must be >= 1");
  require(identities.steps.size() >= 2, "identities.steps", "needs at least two steps");
  for (double s : identities.steps) {
    if (!(s > 0.0)) {
      v.push_back("identities.steps: entries must be > 0");
      break;
    }
  }
  return v;
}

void SimulationConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg;
  for (const auto& s : v) msg += (msg.empty() ? "" : "; ") + s;
  throw Error(ErrorCode::ValidationError, msg);
}

Mesh build_mesh(const SimulationConfig& cfg) {
  return build_disc_annulus(cfg.geometry.r0, cfg.geometry.r1, cfg.geometry.h);
}

namespace {

void append_vector_block(std::vector<Triplet>& trips, const SpMat& a, int row_offset, int col_offset, double scale) {
  for (int c = 0; c < 2; ++c) {
    append_block(trips, a, row_offset + c * static_cast<int>(a.rows()), col_offset + c * static_cast<int>(a.cols()),
                 scale);
  }
}

SpMat transpose(const SpMat& a) { return SpMat(a.transpose()); }

}  // namespace

CoupledStepper::CoupledStepper(const SimulationConfig& cfg, const FeDiscretization& disc, const MetricField& metric)
    : cfg_(cfg), disc_(disc), metric_(metric) {
  nv_ = disc.vel.ndofs();
  ne_ = disc.wave.ndofs();
  np_ = disc.pres.ndofs();
  wave_ = assemble_wave_operators(disc, metric, cfg.physics.beta);
  stokes_ = assemble_variable_stokes(disc, identity_a_field(disc));

  std::vector<Triplet> tff;
  std::vector<Triplet> tfe;
  for (const auto& f : disc.interface) {
    for (std::size_t q = 0; q < kEdgeQuad; ++q) {
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
          const double m = f.weights[q] * f.phi[q][i] * f.phi[q][j];
          tff.emplace_back(f.vel_dofs[i], f.vel_dofs[j], m);
          tfe.emplace_back(f.vel_dofs[i], f.wave_dofs[j], m);
        }
      }
    }
  }
  energy_.Tff.resize(nv_, nv_);
  energy_.Tff.setFromTriplets(tff.begin(), tff.end());
  energy_.Tfe.resize(nv_, ne_);
  energy_.Tfe.setFromTriplets(tfe.begin(), tfe.end());
  energy_.Tee = wave_.T;
  energy_.Mf = stokes_.M;
  energy_.Me = wave_.M;
  energy_.Ke = wave_.K;
  energy_.gamma = cfg.physics.gamma;
  energy_.viscosity = cfg.physics.viscosity;

  Me2_ = block_diagonal(wave_.M, 2);
  Ke2_ = block_diagonal(wave_.K, 2);
  Mf2_ = block_diagonal(stokes_.M, 2);

  const int n = 2 * nv_ + 2 * ne_ + np_;
  fixed_.assign(static_cast<std::size_t>(n), 0);
  for (int d : outer_velocity_dofs(disc)) fixed_[static_cast<std::size_t>(d)] = 1;

  wave_iface_dofs_ = disc.wave.boundary_dofs(disc.mesh, EdgeTag::Interface);
  std::sort(wave_iface_dofs_.begin(), wave_iface_dofs_.end());
  std::vector<int> local(static_cast<std::size_t>(ne_), -1);
  for (std::size_t k = 0; k < wave_iface_dofs_.size(); ++k) local[static_cast<std::size_t>(wave_iface_dofs_[k])] = static_cast<int>(k);
  std::vector<Triplet> tgg;
  for (int k = 0; k < wave_.T.outerSize(); ++k) {
    for (SpMat::InnerIterator it(wave_.T, k); it; ++it) {
      const int r = local[static_cast<std::size_t>(it.row())];
      const int c = local[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) tgg.emplace_back(r, c, it.value());
    }
  }
  const auto ng = static_cast<int>(wave_iface_dofs_.size());
  SpMat Tgg(ng, ng);
  Tgg.setFromTriplets(tgg.begin(), tgg.end());
  trace_solver_.compute(Tgg);
  if (trace_solver_.info() != Eigen::Success) throw Error(ErrorCode::SolverFailure, "interface trace mass");
  mp_solver_.compute(stokes_.Mp);
  if (mp_solver_.info() != Eigen::Success) throw Error(ErrorCode::SolverFailure, "pressure mass");

  build_system(identity_a_field(disc));
  factorize();
}

void CoupledStepper::build_system(const AField& a) {
  if (cfg_.physics.mode == CouplingMode::Ale) {
    stokes_ = assemble_variable_stokes(disc_, a);
  }
  Kf2_ = block_diagonal(stokes_.K, 2);
  const double dt = cfg_.time.dt;
  const double g = 1.0 / cfg_.physics.gamma;
  const double nu = cfg_.physics.viscosity;
  const int ov = 0;
  const int oz = 2 * nv_;
  const int oq = 2 * nv_ + 2 * ne_;
  std::vector<Triplet> trips;
  append_vector_block(trips, stokes_.M, ov, ov, 2.0 / dt);
  append_vector_block(trips, stokes_.K, ov, ov, nu);
  append_vector_block(trips, energy_.Tff, ov, ov, g);
  append_vector_block(trips, energy_.Tfe, ov, oz, -g);
  append_vector_block(trips, transpose(energy_.Tfe), oz, ov, -g);
  append_vector_block(trips, wave_.M, oz, oz, 2.0 / dt);
  append_vector_block(trips, wave_.K, oz, oz, 0.5 * dt);
  append_vector_block(trips, wave_.T, oz, oz, g);
  append_block(trips, transpose(stokes_.B), ov, oq, -1.0);
  append_block(trips, stokes_.B, oq, ov, -1.0);
  const int n = oq + np_;
  system_ = build_constrained(trips, n, fixed_);
  factor_current_ = false;
}

void CoupledStepper::factorize() {
  if (!pattern_ready_) {
    lu_.analyzePattern(system_);
    pattern_ready_ = true;
  }
  lu_.factorize(system_);
  if (lu_.info() != Eigen::Success) throw Error(ErrorCode::SolverFailure, "coupled system factorization failed");
  factor_current_ = true;
}

Eigen::VectorXd CoupledStepper::solve(const Eigen::VectorXd& rhs) {
  if (!factor_current_ && !pattern_ready_) factorize();
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return Eigen::VectorXd::Zero(rhs.size());
  Eigen::VectorXd x = lu_.solve(rhs);
  if (!factor_current_) {
    // refinement with the factors of an earlier (nearby) matrix
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 40; ++it) {
      const Eigen::VectorXd r = rhs - system_ * x;
      const double rn = r.norm();
      if (!std::isfinite(rn) || rn > 0.5 * prev) {
        factorize();
        x = lu_.solve(rhs);
        break;
      }
      if (rn <= 1e-14 * bnorm) break;
      x += lu_.solve(r);
      prev = rn;
    }
  }
  if (lu_.info() != Eigen::Success || !x.allFinite()) throw Error(ErrorCode::SolverFailure, "coupled solve failed");
  return x;
}

double CoupledStepper::energy(const CoupledState& s) const { return energy_form(energy_, s.fluid.v, s.wave.wt, s.wave.w); }

double CoupledStepper::dissipation(const Eigen::VectorXd& V, const Eigen::VectorXd& Z) const {
  return cfg_.physics.viscosity * V.dot(Kf2_ * V) + interface_dissipation(energy_, V, Z);
}

double CoupledStepper::divergence_norm(const Eigen::VectorXd& v) const {
  const Eigen::VectorXd bv = stokes_.B * v;
  const Eigen::VectorXd r = mp_solver_.solve(bv);
  return std::sqrt(std::max(0.0, r.dot(bv)));
}

double CoupledStepper::interface_residual(const Eigen::VectorXd& V, const Eigen::VectorXd& Z,
                                          const Eigen::VectorXd& z_old, const Eigen::VectorXd& w_old) const {
  const double dt = cfg_.time.dt;
  // wave-side flux load: the boundary term the wave equation actually saw
  const Eigen::VectorXd r = (2.0 / dt) * (Me2_ * (Z - z_old)) + Ke2_ * (w_old + 0.5 * dt * Z);
  const auto ng = static_cast<Eigen::Index>(wave_iface_dofs_.size());
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(2 * ne_);
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd rg(ng);
    for (Eigen::Index k = 0; k < ng; ++k) rg(k) = r(c * ne_ + wave_iface_dofs_[static_cast<std::size_t>(k)]);
    const Eigen::VectorXd lg = trace_solver_.solve(rg);
    for (Eigen::Index k = 0; k < ng; ++k) lambda(c * ne_ + wave_iface_dofs_[static_cast<std::size_t>(k)]) = lg(k);
  }
  const double gamma = cfg_.physics.gamma;
  const InterfaceValues vt = interface_trace_velocity(V, disc_);
  const InterfaceValues zt = interface_trace_wave(Z, disc_);
  const InterfaceValues lt = interface_trace_wave(lambda, disc_);
  InterfaceValues res(vt.size());
  for (std::size_t k = 0; k < vt.size(); ++k) res[k] = zt[k] - vt[k] + gamma * lt[k];
  const double value = interface_l2_norm(res, disc_);
  const double scale = interface_l2_norm(vt, disc_) + interface_l2_norm(zt, disc_) + gamma * interface_l2_norm(lt, disc_);
  if (value > cfg_.tolerances.coupling * scale) {
    std::ostringstream os;
    os << "interface residual " << value << " exceeds " << cfg_.tolerances.coupling << " x " << scale;
    throw Error(ErrorCode::CouplingResidualExceeded, os.str());
  }
  return value;
}

StepReport CoupledStepper::step(CoupledState& state) {
  const double dt = cfg_.time.dt;
  const bool ale = cfg_.physics.mode == CouplingMode::Ale;
  if (ale && state.step > 0) build_system(state.fluid.a);

  const Eigen::VectorXd& vn = state.fluid.v;
  const Eigen::VectorXd& zn = state.wave.wt;
  const Eigen::VectorXd& wn = state.wave.w;
  const int oz = 2 * nv_;
  const int oq = 2 * nv_ + 2 * ne_;
  Eigen::VectorXd rhs(oq + np_);
  rhs.segment(0, oz) = (2.0 / dt) * (Mf2_ * vn);
  rhs.segment(oz, 2 * ne_) = (2.0 / dt) * (Me2_ * zn) - Ke2_ * wn;
  rhs.segment(oq, np_) = -0.5 * (stokes_.B * vn);
  for (std::size_t i = 0; i < fixed_.size(); ++i) {
    if (fixed_[i]) rhs(static_cast<Eigen::Index>(i)) = 0.0;
  }

  const Eigen::VectorXd x = solve(rhs);
  StepReport rep;
  const double bnorm = rhs.norm();
  rep.solver_residual = (system_ * x - rhs).norm() / (bnorm > 0.0 ? bnorm : 1.0);
  if (rep.solver_residual > cfg_.tolerances.solver) {
    std::ostringstream os;
    os << "relative residual " << rep.solver_residual << " exceeds " << cfg_.tolerances.solver;
    throw Error(ErrorCode::SolverFailure, os.str());
  }
  const Eigen::VectorXd V = x.segment(0, oz);
  const Eigen::VectorXd Z = x.segment(oz, 2 * ne_);
  const Eigen::VectorXd Q = x.segment(oq, np_);

  rep.interface_residual = interface_residual(V, Z, zn, wn);
  rep.dissipation = dissipation(V, Z);
  rep.energy_before = energy(state);

  FlowMapUpdate up;
  if (ale) {
    up = update_flow_map(disc_, state.fluid.xi, V, dt, cfg_.tolerances.det_floor, cfg_.tolerances.ellipticity);
  } else {
    // a stays I; eta is advanced for the det diagnostic only
    const double off = -std::numeric_limits<double>::infinity();
    up = update_flow_map(disc_, state.fluid.xi, V, dt, off, off);
    up.ellipticity_min = 1.0;
  }

  state.fluid.v = 2.0 * V - vn;
  state.wave.wt = 2.0 * Z - zn;
  state.wave.w = wn + dt * Z;
  state.fluid.q = Q;
  state.fluid.xi = std::move(up.xi);
  if (ale) state.fluid.a = std::move(up.a);
  state.step += 1;
  state.t = state.step * dt;

  rep.energy_after = energy(state);
  rep.det_deviation = up.det_deviation;
  rep.ellipticity_min = up.ellipticity_min;
  rep.divergence_residual = divergence_norm(state.fluid.v);
  return rep;
}

CoupledState monolithic_step(const CoupledState& state, CoupledStepper& stepper) {
  CoupledState next = state;
  stepper.step(next);
  return next;
}

CoupledState initial_state(const InitialData& data, const FeDiscretization& disc, const StokesOperators& identity_ops) {
  CoupledState s;
  s.fluid = FluidState::zero(disc);
  s.wave.w = disc.wave.interpolate(data.w0);
  s.wave.wt = disc.wave.interpolate(data.w1);
  s.fluid.v = project_divergence_free(disc, identity_ops, data.v0.value);
  return s;
}

CompatibilityReport compatibility_report(const InitialData& data, const FeDiscretization& disc,
                                         const MetricField& metric, double gamma, const Eigen::VectorXd& q0) {
  CompatibilityReport rep;
  auto conormal = [&](const Point& x, const Point& nu) -> Eigen::Vector2d {
    SmallVec xs(2);
    xs << x.x(), x.y();
    const Eigen::Matrix2d G = metric.G(xs).topLeftCorner(2, 2);
    return data.w0_gradient(x) * (G * nu);
  };
  double s211 = 0.0;
  double s214 = 0.0;
  for (const auto& f : disc.interface) {
    for (std::size_t q = 0; q < kEdgeQuad; ++q) {
      const Point& x = f.points[q];
      const Eigen::Vector2d wn = conormal(x, f.normal);
      const Eigen::Vector2d r1 = data.w1(x) - data.v0.value(x) + gamma * wn;
      const Eigen::Vector2d r2 = wn - data.v0.gradient(x) * f.normal;
      s211 += f.weights[q] * r1.squaredNorm();
      s214 += f.weights[q] * r2.squaredNorm();
    }
  }
  rep.transmission = std::sqrt(s211);
  rep.stress_normal = std::sqrt(s214);

  // fluid cell of each outer edge, for the P1 pressure gradient
  std::map<std::pair<int, int>, std::size_t> edge_cell;
  for (std::size_t c = 0; c < disc.fluid_quad.size(); ++c) {
    const auto& tri = disc.mesh.cells[static_cast<std::size_t>(disc.vel.cells()[c])];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[static_cast<std::size_t>(k)];
      const int b = tri[static_cast<std::size_t>((k + 1) % 3)];
      edge_cell[{std::min(a, b), std::max(a, b)}] = c;
    }
  }
  double s217 = 0.0;
  double s218 = 0.0;
  for (const auto& f : disc.outer) {
    const auto& e = disc.mesh.boundary_edges[static_cast<std::size_t>(f.edge)];
    const std::size_t c = edge_cell.at({std::min(e[0], e[1]), std::max(e[0], e[1])});
    const auto& pd = disc.pres.cell_dofs(c);
    const auto& dL = disc.fluid_quad[c].dL;
    const Point gq = q0(pd[0]) * dL[0] + q0(pd[1]) * dL[1] + q0(pd[2]) * dL[2];
    for (std::size_t q = 0; q < kEdgeQuad; ++q) {
      const Point& x = f.points[q];
      s217 += f.weights[q] * data.v0.value(x).squaredNorm();
      s218 += f.weights[q] * (data.v0.laplacian(x) - gq).squaredNorm();
    }
  }
  rep.no_slip = std::sqrt(s217);
  rep.pressure_balance = std::sqrt(s218);
  return rep;
}

namespace {

constexpr std::size_t kHistory = 5;
constexpr int kLag = 3;

Snapshot snapshot_of(const CoupledState& s, bool has_pressure, double dt) {
  Snapshot snap;
  snap.index = s.step;
  snap.t = s.t;
  snap.v = s.fluid.v;
  snap.z = s.wave.wt;
  snap.w = s.wave.w;
  snap.has_pressure = has_pressure;
  snap.pressure_time = s.t - 0.5 * dt;
  if (has_pressure) snap.q = s.fluid.q;
  snap.a = s.fluid.a;
  return snap;
}

}  // namespace

RunResult run_simulation(const SimulationConfig& cfg, const RecordSink& sink) {
  RunResult result;
  run_simulation(cfg, result, sink);
  return result;
}

void run_simulation(const SimulationConfig& cfg, RunResult& result, const RecordSink& sink) {
  result = RunResult{};
  cfg.validate();
  const FeDiscretization disc(build_mesh(cfg));
  const MetricField metric(cfg.physics.metric);
  CoupledStepper stepper(cfg, disc, metric);
  const InitialData data =
      make_initial_data(cfg.initial_data.preset, cfg.initial_data.amplitude, cfg.geometry.r0, cfg.geometry.r1);

  CoupledState state = initial_state(data, disc, stepper.stokes_operators());
  result.initial_pressure = solve_initial_pressure(
      data.v0,
      [&](const Point& x, const Point& nu) {
        SmallVec xs(2);
        xs << x.x(), x.y();
        const Eigen::Matrix2d G = metric.G(xs).topLeftCorner(2, 2);
        return nu.dot(data.w0_gradient(x) * (G * nu));
      },
      disc);
  result.compatibility = compatibility_report(data, disc, metric, cfg.physics.gamma, result.initial_pressure);

  const double dt = cfg.time.dt;
  const int nsteps = static_cast<int>(std::ceil(cfg.time.t_end / dt - 1e-9));
  const int stride = cfg.diagnostics.stride;
  const EnergyOperators& eops = stepper.energy_operators();

  result.E0 = stepper.energy(state);
  result.max_divergence_residual = stepper.divergence_norm(state.fluid.v);

  std::deque<Snapshot> history;
  std::map<int, EnergyRecord> pending;
  auto finalize = [&](int index) {
    auto it = pending.find(index);
    if (it == pending.end()) return;
    EnergyRecord rec = it->second;
    pending.erase(it);
    if (cfg.diagnostics.higher_levels) {
      std::size_t center = history.size();
      for (std::size_t k = 0; k < history.size(); ++k) {
        if (history[k].index == index) center = k;
      }
      const std::size_t with_q =
          static_cast<std::size_t>(std::count_if(history.begin(), history.end(), [](const Snapshot& s) { return s.has_pressure; }));
      if (center < history.size() && history.size() >= 3 && with_q >= 3) {
        const TimeDerivatives d = time_derivatives(history, center);
        const HigherEnergies h = energy_E1_E2(disc, eops, d);
        rec.E1 = h.E1;
        rec.D1 = h.D1;
        rec.E2 = h.E2;
        rec.D2 = h.D2;
        rec.R1 = h.R1;
        rec.R2 = h.R2;
        rec.grad_v_sq = h.grad_v_sq;
        rec.grad_vt_sq = h.grad_vt_sq;
        rec.X = total_X(rec.E, h.E1, h.E2, h.grad_v_sq, h.grad_vt_sq, cfg.diagnostics.eps_hat1);
      }
    }
    result.records.push_back(rec);
    if (sink) sink(rec);
  };
  auto flush = [&]() {
    while (!pending.empty()) finalize(pending.begin()->first);
  };

  EnergyRecord r0;
  r0.t = 0.0;
  r0.E = result.E0;
  r0.D = stepper.dissipation(state.fluid.v, state.wave.wt);
  r0.interface_residual = result.compatibility.transmission;
  pending[0] = r0;
  history.push_back(snapshot_of(state, false, dt));

  double D_cum = 0.0;
  try {
    for (int n = 0; n < nsteps; ++n) {
      const StepReport rep = stepper.step(state);
      D_cum += dt * rep.dissipation;
      result.max_identity_violation = std::max(
          result.max_identity_violation, std::abs(rep.energy_after - rep.energy_before + dt * rep.dissipation));
      result.max_energy_increase = std::max(result.max_energy_increase, rep.energy_after - rep.energy_before);
      result.max_interface_residual = std::max(result.max_interface_residual, rep.interface_residual);
      result.max_det_deviation = std::max(result.max_det_deviation, rep.det_deviation);
      result.min_ellipticity = std::min(result.min_ellipticity, rep.ellipticity_min);
      result.max_divergence_residual = std::max(result.max_divergence_residual, rep.divergence_residual);
      result.steps = state.step;

      if (state.step % stride == 0 || state.step == nsteps) {
        EnergyRecord rec;
        rec.t = state.t;
        rec.E = rep.energy_after;
        rec.D = rep.dissipation;
        rec.interface_residual = rep.interface_residual;
        rec.det_deviation = rep.det_deviation;
        rec.ellipticity_min = rep.ellipticity_min;
        rec.D_cumulative = D_cum;
        pending[state.step] = rec;
      }
      history.push_back(snapshot_of(state, true, dt));
      if (history.size() > kHistory) history.pop_front();
      finalize(state.step - kLag);
    }
  } catch (...) {
    flush();
    result.final_state = std::move(state);
    throw;
  }
  flush();
  result.final_state = std::move(state);
}

}  // namespace fsi
