#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fsi/elastic_wave.hpp"
#include "fsi/error.hpp"
#include "fsi/quadrature.hpp"

using namespace fsi;

namespace {

const FeDiscretization& disc() {
  static const FeDiscretization d(build_disc_annulus(1.0, 2.0, 0.3));
  return d;
}

double area(CellTag tag) { return integrate_domain(disc().mesh, tag, [](const Point&) { return 1.0; }); }

}  // namespace

TEST_CASE("P2 shape functions form a partition of unity with zero total gradient") {
  const Bary l{0.2, 0.3, 0.5};
  const auto N = p2_values(l);
  double s = 0.0;
  for (double v : N) s += v;
  CHECK(s == doctest::Approx(1.0));
  const CellGeometry g = cell_geometry(disc().mesh, 0);
  Point gs = Point::Zero();
  for (const auto& d : p2_gradients(l, g.grad_lambda)) gs += d;
  CHECK(gs.norm() < 1e-12);
  const auto e = p2_edge_values(0.5);
  CHECK(e[2] == doctest::Approx(1.0));
}

TEST_CASE("P2 interpolation reproduces quadratics exactly") {
  auto q = [](const Point& x) { return 1.0 + 2.0 * x.x() - x.y() + 0.5 * x.x() * x.y() - 0.3 * x.y() * x.y(); };
  const Eigen::VectorXd u = disc().wave.interpolate(q);
  CHECK(wave_l2_error(disc(), u, q) < 1e-13);
}

TEST_CASE("space dimensions") {
  const auto& d = disc();
  CHECK(d.vel.ndofs() > d.pres.ndofs());
  CHECK(d.pres.ndofs() == d.pres.ndofs());
  // interface nodes and edge midpoints are shared by both P2 spaces
  const auto iface_w = d.wave.boundary_dofs(d.mesh, EdgeTag::Interface);
  const auto iface_v = d.vel.boundary_dofs(d.mesh, EdgeTag::Interface);
  CHECK(iface_w.size() == iface_v.size());
  CHECK(iface_w.size() == 2 * d.interface.size());
}

TEST_CASE("wave mass and stiffness reproduce exact integrals") {
  const auto& d = disc();
  const WaveOperators ops = assemble_wave_operators(d, MetricField::identity(2), 1.0);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(d.wave.ndofs());
  CHECK(one.dot(ops.M * one) == doctest::Approx(area(CellTag::Elastic)).epsilon(1e-12));
  CHECK((ops.stiffness * one).norm() < 1e-11);
  const Eigen::VectorXd x = d.wave.interpolate([](const Point& p) { return p.x(); });
  CHECK(x.dot(ops.stiffness * x) == doctest::Approx(area(CellTag::Elastic)).epsilon(1e-12));
  CHECK((ops.K - ops.stiffness - ops.M).norm() < 1e-13);
  CHECK((SpMat(ops.K.transpose()) - ops.K).norm() < 1e-13);
  // trace mass integrates 1 over the interface polygon
  double perimeter = 0.0;
  for (const auto& f : d.interface) perimeter += f.length;
  CHECK(one.dot(ops.T * one) == doctest::Approx(perimeter).epsilon(1e-12));
}

TEST_CASE("conformal stiffness equals the weighted integral") {
  MetricSpec s;
  s.kind = MetricSpec::Kind::Conformal;
  s.phi = Polynomial(2);
  s.phi.add_term({1, 0, 0, 0}, 0.3).add_term({0, 1, 0, 0}, -0.2);
  const MetricField m(s);
  const auto& d = disc();
  const WaveOperators ops = assemble_wave_operators(d, m, 2.0);
  const Eigen::VectorXd x = d.wave.interpolate([](const Point& p) { return p.x(); });
  // exp(2 phi) is not polynomial, so both sides share the quadrature error
  const double expect =
      integrate_domain(d.mesh, CellTag::Elastic, [](const Point& p) { return std::exp(0.6 * p.x() - 0.4 * p.y()); });
  CHECK(x.dot(ops.stiffness * x) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(ops.beta == 2.0);
  CHECK((ops.K - ops.stiffness - 2.0 * ops.M).norm() < 1e-12);
}

TEST_CASE("conormal trace of a linear field is G n") {
  const auto& d = disc();
  WaveState s = WaveState::zero(d);
  s.w = d.wave.interpolate([](const Point& p) -> Eigen::Vector2d { return {p.x(), 2.0 * p.y()}; });
  const InterfaceValues tr = conormal_trace(s, MetricField::identity(2), d);
  REQUIRE(tr.size() == d.interface.size() * kEdgeQuad);
  for (std::size_t f = 0; f < d.interface.size(); ++f) {
    const Point n = d.interface[f].normal;
    for (int q = 0; q < kEdgeQuad; ++q) {
      CHECK((tr[f * kEdgeQuad + q] - Eigen::Vector2d(n.x(), 2.0 * n.y())).norm() < 1e-12);
    }
  }
}

TEST_CASE("wave state validation") {
  WaveState s = WaveState::zero(disc());
  CHECK_NOTHROW(s.validate(disc()));
  s.w[0] = std::nan("");
  CHECK_THROWS_AS(s.validate(disc()), std::invalid_argument);
  s.w.resize(3);
  CHECK_THROWS_AS(s.validate(disc()), std::invalid_argument);
}

TEST_CASE("Green identity for the wave operators") {
  // (grad u, grad phi) + (u, phi) = (-Lap u + u, phi) + (du/dn, phi)_interface
  const auto& d = disc();
  const WaveOperators ops = assemble_wave_operators(d, MetricField::identity(2), 1.0);
  auto u = [](const Point& p) { return p.x() * p.x() + p.y(); };
  const Eigen::VectorXd U = d.wave.interpolate(u);
  const Eigen::VectorXd rhs = wave_load(d, [&](const Point& p) { return -2.0 + u(p); }) +
                              wave_interface_load(d, [](const Point& p, const Point& n) {
                                return 2.0 * p.x() * n.x() + n.y();
                              });
  CHECK((ops.K * U - rhs).norm() < 1e-12 * rhs.norm());
}
