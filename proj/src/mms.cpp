#include "fsi/mms.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "fsi/error.hpp"

namespace fsi {

double ConvergenceTable::final_order() const { return rows.size() < 2 ? 0.0 : rows.back().order; }

double ConvergenceTable::min_order() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < rows.size(); ++i) m = std::min(m, rows[i].order);
  return rows.size() < 2 ? 0.0 : m;
}

std::string ConvergenceTable::to_text() const {
  std::string out = quantity + "\n";
  char buf[128];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i == 0) {
      std::snprintf(buf, sizeof buf, "  h=%.6e  error=%.6e\n", rows[i].h, rows[i].error);
    } else {
      std::snprintf(buf, sizeof buf, "  h=%.6e  error=%.6e  order=%.3f\n", rows[i].h, rows[i].error, rows[i].order);
    }
    out += buf;
  }
  return out;
}

void compute_orders(ConvergenceTable& table) {
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (i == 0) {
      table.rows[i].order = 0.0;
      continue;
    }
    const auto& a = table.rows[i - 1];
    const auto& b = table.rows[i];
    table.rows[i].order = std::log(a.error / b.error) / std::log(a.h / b.h);
  }
}

namespace {

using LU = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;

void factor(LU& lu, const SpMat& A, const char* what) {
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::SolverFailure, std::string(what) + ": factorization failed");
}

// Longest edge over cells with the given tag.
double cell_size(const Mesh& mesh, CellTag tag) {
  double h = 0.0;
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    if (mesh.cell_tags[c] != tag) continue;
    for (int k = 0; k < 3; ++k) {
      const Point& a = mesh.nodes[static_cast<std::size_t>(mesh.cells[c][static_cast<std::size_t>(k)])];
      const Point& b = mesh.nodes[static_cast<std::size_t>(mesh.cells[c][static_cast<std::size_t>((k + 1) % 3)])];
      h = std::max(h, (a - b).norm());
    }
  }
  return h;
}

constexpr double kSqrt2 = 1.4142135623730951;

struct WaveExact {
  double phase;
  double shift;
  double u(const Point& x, double t) const { return std::cos(kSqrt2 * t + phase) * std::sin(x.x() + shift) * std::cos(x.y()); }
  double ut(const Point& x, double t) const {
    return -kSqrt2 * std::sin(kSqrt2 * t + phase) * std::sin(x.x() + shift) * std::cos(x.y());
  }
  Point grad(const Point& x, double t) const {
    const double c = std::cos(kSqrt2 * t + phase);
    return c * Point(std::cos(x.x() + shift) * std::cos(x.y()), -std::sin(x.x() + shift) * std::sin(x.y()));
  }
  Point grad_t(const Point& x, double t) const {
    const double c = -kSqrt2 * std::sin(kSqrt2 * t + phase);
    return c * Point(std::cos(x.x() + shift) * std::cos(x.y()), -std::sin(x.x() + shift) * std::sin(x.y()));
  }
};

}  // namespace

ConvergenceTable wave_mms(int levels, int base_rings) {
  if (levels < 2) throw std::invalid_argument("wave_mms: at least two levels");
  const double beta = 1.0;
  const double T = 0.5;
  const WaveExact ex[2] = {{0.3, 0.2}, {-0.4, 0.7}};
  ConvergenceTable table;
  table.quantity = "wave displacement L2";
  for (int l = 0; l < levels; ++l) {
    const int rings = base_rings << l;
    const FeDiscretization disc(build_disc_annulus_rings(1.0, 2.0, rings, 1));
    const WaveOperators ops = assemble_wave_operators(disc, MetricField::identity(2), beta);
    const int n = disc.wave.ndofs();
    const double h = cell_size(disc.mesh, CellTag::Elastic);
    const int nsteps = static_cast<int>(std::ceil(T / (0.5 * h * h)));
    const double dt = T / nsteps;

    // -Laplace u = 2u for every component, so u_tt - Laplace u + beta u = beta u
    auto load = [&](int c, double t) {
      return Eigen::VectorXd(wave_load(disc, [&](const Point& x) { return beta * ex[c].u(x, t); }) +
                             wave_interface_load(disc, [&](const Point& x, const Point& nu) {
                               return ex[c].grad(x, t).dot(nu);
                             }));
    };
    LU ritz;
    factor(ritz, ops.K, "wave Ritz projection");
    LU step;
    factor(step, SpMat((2.0 / dt) * ops.M + (0.5 * dt) * ops.K), "wave midpoint");
    double err2 = 0.0;
    for (int c = 0; c < 2; ++c) {
      const Eigen::VectorXd b0 =
          wave_load(disc, [&](const Point& x) { return (2.0 + beta) * ex[c].u(x, 0.0); }) +
          wave_interface_load(disc, [&](const Point& x, const Point& nu) { return ex[c].grad(x, 0.0).dot(nu); });
      const Eigen::VectorXd b1 =
          wave_load(disc, [&](const Point& x) { return (2.0 + beta) * ex[c].ut(x, 0.0); }) +
          wave_interface_load(disc, [&](const Point& x, const Point& nu) { return ex[c].grad_t(x, 0.0).dot(nu); });
      Eigen::VectorXd w = ritz.solve(b0);
      Eigen::VectorXd z = ritz.solve(b1);
      for (int k = 0; k < nsteps; ++k) {
        const Eigen::VectorXd rhs = (2.0 / dt) * (ops.M * z) - ops.K * w + load(c, (k + 0.5) * dt);
        const Eigen::VectorXd Z = step.solve(rhs);
        z = 2.0 * Z - z;
        w += dt * Z;
      }
      if (!w.allFinite() || w.size() != n) throw Error(ErrorCode::SolverFailure, "wave MMS solve");
      const double e = wave_l2_error(disc, w, [&](const Point& x) { return ex[c].u(x, T); });
      err2 += e * e;
    }
    table.rows.push_back({h, std::sqrt(err2), 0.0});
  }
  compute_orders(table);
  return table;
}

std::vector<ConvergenceTable> stokes_mms(int levels, int base_rings) {
  if (levels < 2) throw std::invalid_argument("stokes_mms: at least two levels");
  // psi = sin x1 sin x2, v = (d2 psi, -d1 psi), q = cos x1 sin x2, viscosity 1
  auto v_exact = [](const Point& x) -> Eigen::Vector2d {
    return {std::sin(x.x()) * std::cos(x.y()), -std::cos(x.x()) * std::sin(x.y())};
  };
  auto v_grad = [](const Point& x) -> Eigen::Matrix2d {
    Eigen::Matrix2d g;
    g << std::cos(x.x()) * std::cos(x.y()), -std::sin(x.x()) * std::sin(x.y()), std::sin(x.x()) * std::sin(x.y()),
        -std::cos(x.x()) * std::cos(x.y());
    return g;
  };
  auto q_exact = [](const Point& x) { return std::cos(x.x()) * std::sin(x.y()); };
  auto q_grad = [](const Point& x) -> Eigen::Vector2d {
    return {-std::sin(x.x()) * std::sin(x.y()), std::cos(x.x()) * std::cos(x.y())};
  };
  // -Laplace v = 2 v
  auto force = [&](const Point& x) -> Eigen::Vector2d { return 2.0 * v_exact(x) + q_grad(x); };

  ConvergenceTable vel;
  vel.quantity = "Stokes velocity L2";
  ConvergenceTable pre;
  pre.quantity = "Stokes pressure L2";
  for (int l = 0; l < levels; ++l) {
    const int rings = base_rings << l;
    const FeDiscretization disc(build_disc_annulus_rings(1.0, 2.0, rings, rings));
    const StokesOperators ops = assemble_variable_stokes(disc, identity_a_field(disc));
    const int nv = disc.vel.ndofs();
    const int np = disc.pres.ndofs();
    const int n = 2 * nv + np;

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs.head(2 * nv) = velocity_load(disc, force);
    // traction nu dv/dn - q n on the inner circle, n outward from the annulus
    for (const auto& f : disc.interface) {
      const Point nrm = -f.normal;
      for (std::size_t q = 0; q < kEdgeQuad; ++q) {
        const Point& x = f.points[q];
        const Eigen::Vector2d t = v_grad(x) * nrm - q_exact(x) * nrm;
        for (std::size_t i = 0; i < 3; ++i) {
          rhs(f.vel_dofs[i]) += f.weights[q] * f.phi[q][i] * t.x();
          rhs(nv + f.vel_dofs[i]) += f.weights[q] * f.phi[q][i] * t.y();
        }
      }
    }
    std::vector<Triplet> trips;
    for (int c = 0; c < 2; ++c) append_block(trips, ops.K, c * nv, c * nv);
    append_block(trips, SpMat(ops.B.transpose()), 0, 2 * nv, -1.0);
    append_block(trips, ops.B, 2 * nv, 0, -1.0);
    SpMat full(n, n);
    full.setFromTriplets(trips.begin(), trips.end());

    // Dirichlet lifting on the outer circle
    std::vector<char> fixed(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd lift = Eigen::VectorXd::Zero(n);
    for (int d : disc.vel.boundary_dofs(disc.mesh, EdgeTag::Outer)) {
      const Eigen::Vector2d val = v_exact(disc.vel.dof_point(d));
      fixed[static_cast<std::size_t>(d)] = 1;
      fixed[static_cast<std::size_t>(nv + d)] = 1;
      lift(d) = val.x();
      lift(nv + d) = val.y();
    }
    rhs -= full * lift;
    for (int i = 0; i < n; ++i) {
      if (fixed[static_cast<std::size_t>(i)]) rhs(i) = 0.0;
    }
    LU lu;
    factor(lu, build_constrained(trips, n, fixed), "Stokes MMS");
    const Eigen::VectorXd x = Eigen::VectorXd(lu.solve(rhs)) + lift;
    if (!x.allFinite()) throw Error(ErrorCode::SolverFailure, "Stokes MMS solve");
    const double h = disc.mesh.h_max;
    vel.rows.push_back({h, velocity_l2_error(disc, x.head(2 * nv), v_exact), 0.0});
    pre.rows.push_back({h, pressure_l2_error(disc, x.tail(np), q_exact), 0.0});
  }
  compute_orders(vel);
  compute_orders(pre);
  return {vel, pre};
}

ConvergenceTable coupled_temporal_study(const SimulationConfig& base, const std::vector<double>& dts, double t_end) {
  if (dts.size() < 3) throw std::invalid_argument("coupled_temporal_study: needs three step sizes");
  const FeDiscretization disc(build_mesh(base));
  const MetricField metric(base.physics.metric);
  const InitialData data =
      make_initial_data(base.initial_data.preset, base.initial_data.amplitude, base.geometry.r0, base.geometry.r1);
  std::vector<CoupledState> finals;
  for (double dt : dts) {
    SimulationConfig cfg = base;
    cfg.physics.mode = CouplingMode::Frozen;
    cfg.time.dt = dt;
    cfg.time.t_end = t_end;
    cfg.validate();
    CoupledStepper stepper(cfg, disc, metric);
    CoupledState s = initial_state(data, disc, stepper.stokes_operators());
    const int nsteps = static_cast<int>(std::lround(t_end / dt));
    if (std::abs(nsteps * dt - t_end) > 1e-9 * std::max(1.0, t_end))
      throw std::invalid_argument("coupled_temporal_study: t_end must be a multiple of every dt");
    for (int k = 0; k < nsteps; ++k) stepper.step(s);
    finals.push_back(std::move(s));
  }
  SimulationConfig cfg = base;
  cfg.physics.mode = CouplingMode::Frozen;
  const CoupledStepper ref(cfg, disc, metric);
  ConvergenceTable table;
  table.quantity = "coupled self-convergence (energy norm)";
  for (std::size_t i = 0; i + 1 < finals.size(); ++i) {
    const Eigen::VectorXd dv = finals[i].fluid.v - finals[i + 1].fluid.v;
    const Eigen::VectorXd dz = finals[i].wave.wt - finals[i + 1].wave.wt;
    const Eigen::VectorXd dw = finals[i].wave.w - finals[i + 1].wave.w;
    const double e = std::sqrt(2.0 * energy_form(ref.energy_operators(), dv, dz, dw));
    table.rows.push_back({dts[i], e, 0.0});
  }
  compute_orders(table);
  return table;
}

}  // namespace fsi
