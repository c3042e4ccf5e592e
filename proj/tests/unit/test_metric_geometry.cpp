#include <cmath>
#include <random>

#include "doctest.h"
#include "fsi/error.hpp"
#include "fsi/metric_geometry.hpp"

using namespace fsi;

namespace {

SmallVec pt(double x, double y) {
  SmallVec v(2);
  v << x, y;
  return v;
}

MetricSpec conformal_spec(double a, double b) {
  MetricSpec s;
  s.kind = MetricSpec::Kind::Conformal;
  s.phi = Polynomial(2);
  s.phi.add_term({1, 0, 0, 0}, a).add_term({0, 1, 0, 0}, b);
  return s;
}

}  // namespace

TEST_CASE("polynomial derivatives and evaluation") {
  Polynomial p(2);
  p.add_term({3, 1, 0, 0}, 2.0).add_term({0, 2, 0, 0}, -1.0).add_term({0, 0, 0, 0}, 5.0);
  const double x[] = {1.5, -0.5};
  CHECK(p(x) == doctest::Approx(2.0 * 3.375 * -0.5 - 0.25 + 5.0));
  const Polynomial dx = p.derivative(0);
  CHECK(dx(x) == doctest::Approx(6.0 * 2.25 * -0.5));
  const Polynomial dy = p.derivative(1);
  CHECK(dy(x) == doctest::Approx(2.0 * 3.375 + 1.0));
  CHECK(p.degree() == 4);
  CHECK(p.derivative(0).derivative(0).derivative(0).derivative(0).is_zero());
}

TEST_CASE("polynomial product matches pointwise product") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Polynomial a(2), b(2);
  a.add_term({1, 0, 0, 0}, u(rng)).add_term({0, 2, 0, 0}, u(rng)).add_term({0, 0, 0, 0}, u(rng));
  b.add_term({2, 1, 0, 0}, u(rng)).add_term({0, 1, 0, 0}, u(rng));
  const Polynomial c = a * b;
  for (int k = 0; k < 20; ++k) {
    const double x[] = {u(rng), u(rng)};
    CHECK(c(x) == doctest::Approx(a(x) * b(x)).epsilon(1e-13));
  }
}

TEST_CASE("identity and diagonal metrics") {
  const MetricField id = MetricField::identity(2);
  CHECK((id.G(pt(0.3, 0.1)) - SmallMat::Identity(2, 2)).norm() == 0.0);
  MetricSpec d;
  d.kind = MetricSpec::Kind::Diagonal;
  d.diagonal = {2.0, 0.5};
  const MetricField m(d);
  const SmallMat g = m.g(pt(0.0, 0.0));
  CHECK(g(0, 0) == doctest::Approx(0.5));
  CHECK(g(1, 1) == doctest::Approx(2.0));
  for (const auto& dG : m.dG(pt(0.2, 0.2), 1e-4)) CHECK(dG.norm() == 0.0);
}

TEST_CASE("indefinite metric is rejected") {
  MetricSpec d;
  d.kind = MetricSpec::Kind::Diagonal;
  d.diagonal = {1.0, -1.0};
  bool thrown = false;
  try {
    const MetricField m(d);
    (void)m.g(pt(0.0, 0.0));
  } catch (const Error& e) {
    thrown = e.code() == ErrorCode::NotPositiveDefinite || e.code() == ErrorCode::ValidationError;
  }
  CHECK(thrown);
}

TEST_CASE("conformal metric Christoffel symbols match the closed form") {
  // g = exp(-2 phi) I = exp(2 psi) I with psi = -phi:
  // Gamma^k_ij = delta_ki d_j psi + delta_kj d_i psi - delta_ij d_k psi
  const double a = 0.3, b = -0.2;
  const MetricField m(conformal_spec(a, b));
  const double dpsi[] = {-a, -b};
  for (const auto mode : {DerivativeMode::Auto, DerivativeMode::FiniteDifference}) {
    const Christoffel c = christoffel_symbols(m, pt(0.4, -0.3), 1e-4, mode);
    const double tol = mode == DerivativeMode::Auto ? 1e-13 : 1e-7;
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          const double expect = (k == i) * dpsi[j] + (k == j) * dpsi[i] - (i == j) * dpsi[k];
          CHECK(std::abs(c(k, i, j) - expect) <= tol);
        }
      }
    }
  }
}

TEST_CASE("metric derivatives: closed form agrees with differences") {
  MetricSpec s;
  s.kind = MetricSpec::Kind::PolynomialPerturbation;
  MatrixTerm t;
  t.coef = 0.1;
  t.powers = {1, 1, 0, 0};
  t.matrix = SmallMat(2, 2);
  t.matrix << 1.0, 0.5, 0.5, -1.0;
  s.terms.push_back(t);
  const MetricField m(s);
  const auto exact = m.dG(pt(0.3, 0.7), 1e-5);
  const auto fd = m.dG(pt(0.3, 0.7), 1e-5, DerivativeMode::FiniteDifference);
  for (int k = 0; k < 2; ++k) CHECK((exact[k] - fd[k]).norm() < 1e-9);
  const auto dg = m.dg(pt(0.3, 0.7), 1e-5);
  const auto dg_fd = m.dg(pt(0.3, 0.7), 1e-5, DerivativeMode::FiniteDifference);
  for (int k = 0; k < 2; ++k) CHECK((dg[k] - dg_fd[k]).norm() < 1e-8);
}

TEST_CASE("inverse metric property over random SPD matrices") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    SmallMat B(2, 2);
    B << u(rng), u(rng), u(rng), u(rng);
    const SmallMat G = B * B.transpose() + 0.1 * SmallMat::Identity(2, 2);
    CHECK((invert_metric(G) * G - SmallMat::Identity(2, 2)).norm() < 1e-10);
    CHECK(min_eigenvalue(G) >= 0.1 - 1e-12);
  }
}

TEST_CASE("generalized eigenvalue") {
  SmallMat S(2, 2), g(2, 2);
  S << 2.0, 0.0, 0.0, 3.0;
  g << 1.0, 0.0, 0.0, 2.0;
  CHECK(min_generalized_eigenvalue(S, g) == doctest::Approx(1.5));
}

TEST_CASE("radial field: DH = g for the Euclidean metric") {
  const MetricField id = MetricField::identity(2);
  const VectorFieldH H = VectorFieldH::radial(pt(0.1, -0.2));
  const SmallMat S = covariant_differential(id, H, pt(0.3, 0.4), 1e-4);
  CHECK((S - SmallMat::Identity(2, 2)).norm() < 1e-14);
  CHECK(H.divergence(pt(0.5, 0.5)) == doctest::Approx(2.0));
  CHECK(H(pt(1.1, 0.8))(0) == doctest::Approx(1.0));
}

TEST_CASE("escape certificate on the unit disc") {
  const MetricField id = MetricField::identity(2);
  const auto interior = disc_interior_samples(pt(0, 0), 1.0, 21);
  const auto boundary = disc_boundary_samples(pt(0, 0), 1.0, 64);
  for (const auto& b : boundary) {
    CHECK(b.normal.norm() == doctest::Approx(1.0));
    CHECK(b.point.norm() == doctest::Approx(1.0));
  }
  const auto cert = certify_escape(id, VectorFieldH::radial(pt(0, 0)), interior, boundary, {});
  CHECK(cert.certified());
  CHECK(cert.rho0 == doctest::Approx(1.0));
  CHECK(cert.gamma0 == doctest::Approx(1.0));
  const auto neg = certify_escape(id, VectorFieldH::radial(pt(0, 0)).scaled(-1.0), interior, boundary, {});
  CHECK_FALSE(neg.certified());
  CHECK(neg.to_report().find("verdict=refuted") != std::string::npos);
}

TEST_CASE("escape certificate rejects empty sample sets") {
  const MetricField id = MetricField::identity(2);
  CHECK_THROWS_AS(certify_escape(id, VectorFieldH::radial(pt(0, 0)), {}, {}, {}), Error);
}
