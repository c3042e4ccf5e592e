#include <cmath>
#include <random>

#include "doctest.h"
#include "fsi/diagnostics.hpp"
#include "fsi/error.hpp"
#include "fsi/parallel.hpp"

using namespace fsi;

TEST_CASE("finite-difference weights") {
  const auto w = fd_weights({-1.0, 0.0, 1.0}, 0.0, 2);
  CHECK(w[0][1] == doctest::Approx(1.0));
  CHECK(w[1][0] == doctest::Approx(-0.5));
  CHECK(w[1][2] == doctest::Approx(0.5));
  CHECK(w[2][0] == doctest::Approx(1.0));
  CHECK(w[2][1] == doctest::Approx(-2.0));
  // four uneven nodes differentiate cubics exactly
  const std::vector<double> nodes{0.0, 0.3, 0.7, 1.5};
  const auto w4 = fd_weights(nodes, 0.7, 2);
  auto f = [](double t) { return 2.0 - t + 3.0 * t * t - 0.5 * t * t * t; };
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    d1 += w4[1][k] * f(nodes[k]);
    d2 += w4[2][k] * f(nodes[k]);
  }
  CHECK(d1 == doctest::Approx(-1.0 + 6.0 * 0.7 - 1.5 * 0.49));
  CHECK(d2 == doctest::Approx(6.0 - 3.0 * 0.7));
}

TEST_CASE("time derivatives of polynomial-in-time snapshots") {
  const FeDiscretization disc(build_disc_annulus(1.0, 2.0, 0.5));
  const int nv = 2 * disc.vel.ndofs();
  const int ne = 2 * disc.wave.ndofs();
  const int np = disc.pres.ndofs();
  std::mt19937 rng(3);
  std::normal_distribution<double> n01;
  auto rnd = [&](int n) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = n01(rng);
    return x;
  };
  // discretely divergence-free, as every computed velocity is
  const auto ops = assemble_variable_stokes(disc, identity_a_field(disc));
  auto solenoidal = [&](double k) {
    return project_divergence_free(disc, ops, [k](const Point& x) -> Eigen::Vector2d {
      return {std::sin(k * x.y()), x.x() * x.x() - k * x.y()};
    });
  };
  const Eigen::VectorXd v0 = solenoidal(1.0), v1 = solenoidal(2.0), v2 = solenoidal(-1.5);
  REQUIRE(v0.size() == nv);
  const Eigen::VectorXd q0 = rnd(np), q1 = rnd(np);
  const double dt = 0.01;
  std::deque<Snapshot> hist;
  for (int k = 0; k < 5; ++k) {
    Snapshot s;
    s.index = k;
    s.t = k * dt;
    s.v = v0 + s.t * v1 + s.t * s.t * v2;
    s.z = Eigen::VectorXd::Zero(ne);
    s.w = Eigen::VectorXd::Zero(ne);
    s.has_pressure = true;
    s.pressure_time = s.t - dt / 2;
    s.q = q0 + s.pressure_time * q1;
    s.a = identity_a_field(disc);
    hist.push_back(s);
  }
  const TimeDerivatives d = time_derivatives(hist, 2);
  const double t = 2 * dt;
  CHECK((d.v_t - (v1 + 2.0 * t * v2)).norm() < 1e-9 * v1.norm());
  CHECK((d.v_tt - 2.0 * v2).norm() < 1e-6 * v2.norm());
  CHECK((d.q - (q0 + t * q1)).norm() < 1e-10 * q0.norm());
  CHECK((d.q_t - q1).norm() < 1e-8 * q1.norm());
  // a constant in time: exactly zero, which frozen-mode nullity relies on
  for (const auto& c : d.a_t) {
    for (const auto& m : c) CHECK(m.norm() == 0.0);
  }
  CHECK(perturbation_R1(disc, d) == 0.0);
  // only (q_tt, div v_tt) survives, which vanishes up to the solver residual
  CHECK(std::abs(perturbation_R2(disc, d)) < 1e-12 * q1.norm() * v2.norm());

  std::deque<Snapshot> two(hist.begin(), hist.begin() + 2);
  CHECK_THROWS_AS(time_derivatives(two, 0), Error);
}

TEST_CASE("decay fit recovers an exact exponential") {
  std::vector<double> t, X;
  for (int k = 0; k <= 40; ++k) {
    t.push_back(0.25 * k);
    X.push_back(3.0 * std::exp(-0.4 * t.back()));
  }
  const DecayFit f = fit_decay_rate(t, X, 4.0, 10.0);
  CHECK(f.rate == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(f.amplitude == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(f.count == 25);
  CHECK_THROWS_AS(fit_decay_rate(t, X, 9.0, 10.0), Error);
}

TEST_CASE("decay fit of a growing series has negative rate") {
  std::vector<double> t, X;
  for (int k = 0; k < 20; ++k) {
    t.push_back(k);
    X.push_back(std::exp(0.1 * k) * (1.0 + 0.01 * (k % 3)));
  }
  const DecayFit f = fit_decay_rate(t, X, 0.0, 19.0);
  CHECK(f.rate < 0.0);
  CHECK(f.r_squared <= 1.0);
}

TEST_CASE("energy inequality checks on synthetic series") {
  std::vector<EnergyRecord> s;
  double cum = 0.0;
  for (int k = 0; k <= 20; ++k) {
    EnergyRecord r;
    r.t = 0.1 * k;
    r.D = 0.5 * std::exp(-r.t);
    if (k > 0) cum += 0.5 * (std::exp(-(r.t - 0.1)) - std::exp(-r.t));
    r.D_cumulative = cum;
    r.E = 1.0 - cum;
    r.E1 = 2.0;
    r.D1 = 0.0;
    r.R1 = 0.0;
    r.E2 = 1.0;
    r.D2 = 0.0;
    r.R2 = 0.0;
    s.push_back(r);
  }
  CHECK(check_energy_inequality(s, 0).max_violation <= 1e-15);
  CHECK(check_energy_inequality(s, 1).max_violation <= 0.0);
  s.back().E1 = 2.5;
  CHECK(check_energy_inequality(s, 1).max_violation == doctest::Approx(0.5));
  s[5].E2 = kNaN;
  const auto lvl2 = check_energy_inequality(s, 2);
  CHECK(lvl2.records_used == s.size() - 1);
}

TEST_CASE("total functional") {
  CHECK(total_X(1.0, 2.0, 3.0, 4.0, 5.0, 0.1) == doctest::Approx(6.9));
}

TEST_CASE("deterministic sum does not depend on the thread count") {
  auto term = [](std::size_t i) { return std::sin(0.37 * static_cast<double>(i)) * 1e3 + 1e-7 * i; };
  setenv("FSI_THREADS", "1", 1);
  const double a = deterministic_sum(100000, term);
  setenv("FSI_THREADS", "7", 1);
  const double b = deterministic_sum(100000, term);
  unsetenv("FSI_THREADS");
  CHECK(a == b);
  std::vector<double> out(5000);
  parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<double>(i * i); });
  CHECK(out[4999] == 4999.0 * 4999.0);
}

TEST_CASE("multiplier identities: exact path is at roundoff") {
  Polynomial u(4);
  u.add_term({2, 1, 0, 0}, 1.0).add_term({0, 0, 0, 2}, -0.5).add_term({1, 0, 0, 1}, 0.3);
  const auto samples = identity_samples(1.0, 16);
  CHECK(samples.size() == 16);
  for (const auto& s : samples) CHECK(s.head<2>().norm() < 1.0);
  const MetricField id = MetricField::identity(2);
  const VectorFieldH H = VectorFieldH::radial(SmallVec::Zero(2));
  CHECK(multiplier_residual_A(id, H, u, samples, IdentityPath::Exact).max_abs < 1e-12);
  Polynomial p(2);
  p.add_term({0, 0, 0, 0}, 1.0);
  CHECK(multiplier_residual_B(id, p, u, samples, IdentityPath::Exact).max_abs < 1e-12);
}

TEST_CASE("multiplier identity B: weight div(H)/2 and the constant 1 agree for H = x") {
  Polynomial u(4);
  u.add_term({3, 0, 0, 0}, 1.0).add_term({0, 1, 0, 1}, 1.0);
  const auto samples = identity_samples(1.0, 8);
  const MetricField id = MetricField::identity(2);
  Polynomial half = VectorFieldH::radial(SmallVec::Zero(2)).divergence_polynomial();
  half *= 0.5;
  Polynomial one(2);
  one.add_term({0, 0, 0, 0}, 1.0);
  const auto a = multiplier_residual_B(id, half, u, samples, IdentityPath::FiniteDifference, 0.01);
  const auto b = multiplier_residual_B(id, one, u, samples, IdentityPath::FiniteDifference, 0.01);
  CHECK(a.max_abs == doctest::Approx(b.max_abs).epsilon(1e-12));
}
