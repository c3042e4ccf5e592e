// Randomized and sweep checks of structural properties.

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fsi/coupled_stepper.hpp"
#include "fsi/initial_data.hpp"
#include "fsi/quadrature.hpp"

using namespace fsi;

namespace {

SmallVec pt(double x, double y) {
  SmallVec v(2);
  v << x, y;
  return v;
}

std::vector<MetricField> builtin_metrics() {
  std::vector<MetricField> out{MetricField::identity(2)};
  MetricSpec d;
  d.kind = MetricSpec::Kind::Diagonal;
  d.diagonal = {2.0, 0.7};
  out.emplace_back(d);
  MetricSpec c;
  c.kind = MetricSpec::Kind::Conformal;
  c.phi = Polynomial(2);
  c.phi.add_term({1, 0, 0, 0}, 0.3).add_term({0, 2, 0, 0}, -0.2);
  out.emplace_back(c);
  MetricSpec p;
  p.kind = MetricSpec::Kind::PolynomialPerturbation;
  MatrixTerm t;
  t.coef = 0.15;
  t.powers = {1, 1, 0, 0};
  t.matrix = SmallMat(2, 2);
  t.matrix << 1.0, 0.4, 0.4, 0.5;
  p.terms.push_back(t);
  t.powers = {2, 0, 0, 0};
  t.matrix << 0.0, 0.3, 0.3, 1.0;
  p.terms.push_back(t);
  out.emplace_back(p);
  return out;
}

}  // namespace

TEST_CASE("metric inverse consistency and Christoffel symmetry at random points") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& m : builtin_metrics()) {
    double inv = 0.0, asym = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const SmallVec x = pt(u(rng), u(rng));
      inv = std::max(inv, (m.g(x) * m.G(x) - SmallMat::Identity(2, 2)).cwiseAbs().maxCoeff());
      if (k % 10 == 0) {
        const Christoffel c = christoffel_symbols(m, x, 1e-4);
        for (int i = 0; i < 2; ++i) asym = std::max(asym, (c.upper[i] - c.upper[i].transpose()).cwiseAbs().maxCoeff());
      }
    }
    CHECK(inv <= 1e-10);
    CHECK(asym <= 1e-12);
  }
}

TEST_CASE("difference path for Christoffel symbols is second order") {
  const MetricField m = builtin_metrics()[3];
  const SmallVec x = pt(0.35, -0.6);
  const Christoffel exact = christoffel_symbols(m, x, 1e-3);
  auto err = [&](double h) {
    const Christoffel fd = christoffel_symbols(m, x, h, DerivativeMode::FiniteDifference);
    double e = 0.0;
    for (int k = 0; k < 2; ++k) e = std::max(e, (fd.upper[k] - exact.upper[k]).cwiseAbs().maxCoeff());
    return e;
  };
  // the perturbation is quadratic, so central differences of G are exact;
  // the error comes from differencing g = G^{-1}
  MetricSpec c;
  c.kind = MetricSpec::Kind::Conformal;
  c.phi = Polynomial(2);
  c.phi.add_term({2, 0, 0, 0}, 0.4).add_term({0, 1, 0, 0}, 0.3);
  const MetricField conf(c);
  const Christoffel ce = christoffel_symbols(conf, x, 1e-3);
  auto cerr = [&](double h) {
    const Christoffel fd = christoffel_symbols(conf, x, h, DerivativeMode::FiniteDifference);
    double e = 0.0;
    for (int k = 0; k < 2; ++k) e = std::max(e, (fd.upper[k] - ce.upper[k]).cwiseAbs().maxCoeff());
    return e;
  };
  for (const auto& f : {std::function<double(double)>(err), std::function<double(double)>(cerr)}) {
    const double e1 = f(0.02), e2 = f(0.01);
    CHECK((e2 < 1e-12 || e1 / e2 >= 3.5));
  }
  CHECK(cerr(0.02) > 1e-10);
}

TEST_CASE("flat metric: covariant differential is the symmetrized Jacobian") {
  std::vector<Polynomial> comps(2, Polynomial(2));
  comps[0].add_term({1, 0, 0, 0}, 1.0).add_term({1, 1, 0, 0}, 0.3).add_term({0, 2, 0, 0}, -0.2);
  comps[1].add_term({0, 1, 0, 0}, 2.0).add_term({2, 0, 0, 0}, 0.5);
  const VectorFieldH H = VectorFieldH::polynomial(comps);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const SmallVec x = pt(u(rng), u(rng));
    const SmallMat J = H.jacobian(x);
    const SmallMat S = covariant_differential(MetricField::identity(2), H, x, 1e-4);
    CHECK((S - 0.5 * (J + J.transpose())).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("escape certificate scales with the field") {
  for (const auto& m : builtin_metrics()) {
    const auto interior = disc_interior_samples(pt(0, 0), 0.8, 21);
    const auto boundary = disc_boundary_samples(pt(0, 0), 0.8, 64);
    const VectorFieldH H = VectorFieldH::radial(pt(0.05, 0.0));
    const auto base = certify_escape(m, H, interior, boundary, {});
    for (double alpha : {0.5, 3.0}) {
      const auto s = certify_escape(m, H.scaled(alpha), interior, boundary, {});
      CHECK(s.rho0 == doctest::Approx(alpha * base.rho0).epsilon(1e-10));
      CHECK(s.gamma0 == doctest::Approx(alpha * base.gamma0).epsilon(1e-10));
    }
  }
}

TEST_CASE("interface pairs share their nodes and meshes are deterministic") {
  const Mesh m = build_disc_annulus(1.0, 2.0, 0.2);
  for (const auto& p : m.interface_pairs) {
    const auto& e = m.boundary_edges[static_cast<std::size_t>(p.edge)];
    for (int cell : {p.elastic_cell, p.fluid_cell}) {
      const auto& c = m.cells[static_cast<std::size_t>(cell)];
      for (int n : e) CHECK(std::count(c.begin(), c.end(), n) == 1);
    }
  }
  std::ostringstream a, b;
  write_mesh_text(m, a);
  write_mesh_text(build_disc_annulus(1.0, 2.0, 0.2), b);
  CHECK(a.str() == b.str());
}

TEST_CASE("wave operators: symmetry and coercivity") {
  const FeDiscretization d(build_disc_annulus(1.0, 2.0, 0.25));
  std::mt19937 rng(9);
  std::normal_distribution<double> n01;
  for (const auto& m : builtin_metrics()) {
    const WaveOperators ops = assemble_wave_operators(d, m, 0.5);
    for (const SpMat* A : {&ops.K, &ops.M, &ops.T}) {
      const SpMat diff = *A - SpMat(A->transpose());
      CHECK((diff.nonZeros() == 0 || Eigen::MatrixXd(diff).cwiseAbs().maxCoeff() <= 1e-12));
    }
    double c = 1e300;
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd x(d.wave.ndofs());
      for (auto& v : x) v = n01(rng);
      x.array() -= x.mean();
      c = std::min(c, x.dot(ops.K * x) / x.squaredNorm());
    }
    CHECK(c > 0.0);
  }
}

TEST_CASE("identity coefficient reproduces the standard Stokes forms") {
  const FeDiscretization d(build_disc_annulus(1.0, 2.0, 0.25));
  const auto ops = assemble_variable_stokes(d, identity_a_field(d));
  // u = x^2 + x y: integral of |grad u|^2 is integrated exactly by the rule
  const Eigen::VectorXd u = d.vel.interpolate([](const Point& p) { return p.x() * p.x() + p.x() * p.y(); });
  const double exact = integrate_domain(d.mesh, CellTag::Fluid, [](const Point& p) {
    return std::pow(2.0 * p.x() + p.y(), 2) + p.x() * p.x();
  });
  CHECK(u.dot(ops.K * u) == doctest::Approx(exact).epsilon(1e-12));
  // (psi, div v) with psi = x1 and v = (x1^2, x2)
  const Eigen::VectorXd psi = d.pres.interpolate([](const Point& p) { return p.x(); });
  const Eigen::VectorXd v = d.vel.interpolate([](const Point& p) -> Eigen::Vector2d { return {p.x() * p.x(), p.y()}; });
  const double div = integrate_domain(d.mesh, CellTag::Fluid, [](const Point& p) { return p.x() * (2.0 * p.x() + 1.0); });
  CHECK(psi.dot(ops.B * v) == doctest::Approx(div).epsilon(1e-12));
}

TEST_CASE("direct and ODE coefficient agree to second order in dt") {
  const FeDiscretization d(build_disc_annulus(1.0, 2.0, 0.4));
  // Lagrangian velocity L(t) x with L(t) = L0 + t L1
  Eigen::Matrix2d L0, L1;
  L0 << 0.3, 0.4, -0.2, -0.3;
  L1 << 0.0, 0.5, -0.5, 0.1;
  auto gap = [&](double dt) {
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(2 * d.vel.ndofs());
    Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
    AField direct;
    const int n = static_cast<int>(std::lround(1.0 / dt));
    for (int k = 0; k < n; ++k) {
      const Eigen::Matrix2d La = L0 + k * dt * L1, Lb = L0 + (k + 1) * dt * L1;
      const Eigen::VectorXd vm =
          d.vel.interpolate([&](const Point& x) -> Eigen::Vector2d { return 0.5 * (La + Lb) * x; });
      const FlowMapUpdate up = update_flow_map(d, xi, vm, dt, 0.1, 0.05);
      xi = up.xi;
      direct = up.a;
      a = a_ode_step(a, La, Lb, dt);
    }
    return (direct[0][0] - a).norm();
  };
  const double e1 = gap(0.02), e2 = gap(0.01);
  CHECK(e1 > 0.0);
  CHECK(e1 / e2 >= 3.5);
}

TEST_CASE("energies and dissipations are nonnegative for random states") {
  SimulationConfig cfg;
  cfg.geometry.h = 0.3;
  const FeDiscretization d(build_mesh(cfg));
  const MetricField metric(cfg.physics.metric);
  CoupledStepper st(cfg, d, metric);
  std::mt19937 rng(4);
  std::normal_distribution<double> n01;
  auto rnd = [&](Eigen::Index n) {
    Eigen::VectorXd x(n);
    for (auto& v : x) v = n01(rng);
    return x;
  };
  const auto& ops = st.energy_operators();
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd v = rnd(2 * d.vel.ndofs()), z = rnd(2 * d.wave.ndofs()), w = rnd(2 * d.wave.ndofs());
    CHECK(energy_form(ops, v, z, w) >= 0.0);
    CHECK(interface_dissipation(ops, v, z) >= 0.0);
    CHECK(st.dissipation(v, z) >= 0.0);
  }
}

TEST_CASE("ALE run monitors: ellipticity, Jacobian, divergence") {
  SimulationConfig cfg;
  cfg.geometry.h = 0.3;
  cfg.time = {0.02, 1.0};
  cfg.physics.mode = CouplingMode::Ale;
  cfg.initial_data = {"combined", 0.05};
  const RunResult r = run_simulation(cfg);
  for (const auto& rec : r.records) {
    CHECK(rec.ellipticity_min >= cfg.tolerances.ellipticity);
    CHECK(rec.det_deviation <= 1e-2);
    CHECK(rec.interface_residual <= cfg.tolerances.coupling);
  }
  CHECK(r.max_divergence_residual <= cfg.tolerances.solver * std::max(1.0, r.final_state.fluid.v.norm()));
  for (const auto& rec : r.records) {
    for (double x : {rec.E, rec.D, rec.E1, rec.D1, rec.E2, rec.D2, rec.X}) {
      if (std::isfinite(x)) CHECK(x >= 0.0);
    }
  }
}
