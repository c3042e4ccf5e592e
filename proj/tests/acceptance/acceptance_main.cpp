// One line per acceptance criterion; exit status 1 if any fails.
// Optional arguments select criteria by number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include "fsi/cli_io.hpp"
#include "fsi/mms.hpp"

using namespace fsi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SimulationConfig base_run(double t_end) {
  SimulationConfig c;
  c.geometry = {1.0, 2.0, 0.15};
  c.time = {0.01, t_end};
  c.physics.gamma = 1.0;
  c.initial_data.preset = "elastic-pulse";
  return c;
}

// shared by criteria 2 and 6
const RunResult& frozen_t10() {
  static const RunResult r = run_simulation(base_run(10.0));
  return r;
}

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("fsi_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome c1_energy_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult r = run_simulation(base_run(5.0));
  const double wall = seconds_since(t0);
  const double per_step = r.max_identity_violation / r.E0;
  const double cumulative = check_energy_inequality(r.records, 0).max_violation / r.E0;
  return {per_step <= 1e-8 && cumulative <= 1e-7 && wall <= 120.0,
          fmt("per-step violation %.2e E0 (<= 1e-8), cumulative %.2e E0 (<= 1e-7), %.1f s", per_step, cumulative,
              wall)};
}

Outcome c2_decay() {
  const RunResult& r = frozen_t10();
  const double ratio = r.records.back().E / r.E0;
  const double x_ratio = r.records.back().X / r.records.front().X;
  const DecayFit f = fit_decay_rate(r.records, 4.0, 10.0);
  return {ratio <= 0.5 && x_ratio <= 0.5 && f.rate > 0.0 && f.r_squared >= 0.95,
          fmt("E(10)/E(0) = %.3e (<= 0.5), X(10)/X(0) = %.3e (<= 0.5), rate %.4f (> 0), r^2 %.4f (>= 0.95)", ratio,
              x_ratio, f.rate, f.r_squared)};
}

Outcome c3_identities() {
  const auto t0 = std::chrono::steady_clock::now();
  MetricSpec conformal;
  conformal.kind = MetricSpec::Kind::Conformal;
  conformal.phi = Polynomial(2);
  conformal.phi.add_term({1, 0, 0, 0}, 0.3).add_term({0, 1, 0, 0}, -0.2);
  const MetricField metrics[] = {MetricField::identity(2), MetricField(conformal)};
  const VectorFieldH H = VectorFieldH::radial(SmallVec::Zero(2));
  Polynomial u(4);  // degree 3 in (x1, x2, t)
  u.add_term({3, 0, 0, 0}, 1.0).add_term({1, 2, 0, 0}, -2.0).add_term({0, 1, 0, 1}, 1.0);
  u.add_term({1, 1, 0, 1}, -1.0).add_term({0, 0, 0, 3}, 0.5).add_term({2, 0, 0, 0}, 0.7);
  Polynomial p(2);
  p.add_term({0, 0, 0, 0}, 1.0).add_term({1, 0, 0, 0}, 0.5).add_term({0, 2, 0, 0}, -0.25);
  const auto samples = identity_samples(1.0, 64);
  const double steps[] = {0.02, 0.01, 0.005, 0.0025};
  double worst_exact = 0.0;
  double worst_order = 1e9;
  for (const auto& m : metrics) {
    using Run = std::function<ResidualStats(IdentityPath, double)>;
    const Run runs[] = {
        [&](IdentityPath path, double s) { return multiplier_residual_A(m, H, u, samples, path, s); },
        [&](IdentityPath path, double s) { return multiplier_residual_B(m, p, u, samples, path, s); },
    };
    for (const auto& run : runs) {
      worst_exact = std::max(worst_exact, run(IdentityPath::Exact, 0.01).max_abs);
      double prev = run(IdentityPath::FiniteDifference, steps[0]).max_abs;
      for (int k = 1; k < 4; ++k) {
        const double cur = run(IdentityPath::FiniteDifference, steps[k]).max_abs;
        worst_order = std::min(worst_order, std::log2(prev / cur));
        prev = cur;
      }
    }
  }
  const double wall = seconds_since(t0);
  return {worst_exact <= 1e-8 && worst_order >= 1.8 && wall <= 10.0,
          fmt("exact max residual %.2e (<= 1e-8), min difference order %.3f (>= 1.8), %.2f s", worst_exact,
              worst_order, wall)};
}

Outcome c4_escape() {
  const auto t0 = std::chrono::steady_clock::now();
  const MetricField id = MetricField::identity(2);
  const SmallVec origin = SmallVec::Zero(2);
  const double r0 = 1.0;
  const auto interior = disc_interior_samples(origin, r0, 41);
  const auto boundary = disc_boundary_samples(origin, r0, 256);
  const VectorFieldH H = VectorFieldH::radial(origin);
  const auto cert = certify_escape(id, H, interior, boundary, {});
  const auto neg = certify_escape(id, H.scaled(-1.0), interior, boundary, {});
  const double wall = seconds_since(t0);
  const bool ok = cert.certified() && cert.rho0 >= 1.0 - 1e-9 && cert.rho0 <= 1.0 && cert.gamma0 >= r0 - 1e-9 &&
                  cert.gamma0 <= r0 && !neg.certified() && wall <= 1.0;
  return {ok, fmt("rho0 %.17g, gamma0 %.17g, negated %s, %.3f s", cert.rho0, cert.gamma0,
                  neg.certified() ? "certified" : "refuted", wall)};
}

// Affine isochoric flow map eta = R(t) x, R = rotation(w t) diag(e^{s t}, e^{-s t}).
Eigen::Matrix2d flow_matrix(double t, bool derivative) {
  const double w = 1.0, s = 0.5;
  Eigen::Matrix2d rot, d;
  rot << std::cos(w * t), -std::sin(w * t), std::sin(w * t), std::cos(w * t);
  d << std::exp(s * t), 0.0, 0.0, std::exp(-s * t);
  if (!derivative) return rot * d;
  Eigen::Matrix2d drot, dd;
  drot << -w * std::sin(w * t), -w * std::cos(w * t), w * std::cos(w * t), -w * std::sin(w * t);
  dd << s * std::exp(s * t), 0.0, 0.0, -s * std::exp(-s * t);
  return drot * d + rot * dd;
}

double prescribed_det_error(const FeDiscretization& disc, double dt, double t_end) {
  auto velocity = [&](double t) {
    const Eigen::Matrix2d L = flow_matrix(t, true);
    return disc.vel.interpolate([&](const Point& x) -> Eigen::Vector2d { return L * x; });
  };
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(2 * disc.vel.ndofs());
  double worst = 0.0;
  const int n = static_cast<int>(std::lround(t_end / dt));
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd v_mid = 0.5 * (velocity(k * dt) + velocity((k + 1) * dt));
    const FlowMapUpdate up = update_flow_map(disc, xi, v_mid, dt, 0.1, 0.05);
    worst = std::max(worst, up.det_deviation);
    xi = up.xi;
  }
  return worst;
}

Outcome c5_flow_map() {
  const auto t0 = std::chrono::steady_clock::now();
  SimulationConfig cfg = base_run(1.0);
  cfg.physics.mode = CouplingMode::Ale;
  cfg.initial_data.preset = "zero";
  const RunResult r = run_simulation(cfg);
  double a_dev = 0.0;
  for (const auto& c : r.final_state.fluid.a) {
    for (const auto& m : c) a_dev = std::max(a_dev, (m - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff());
  }
  const double xi_max = r.final_state.fluid.xi.cwiseAbs().maxCoeff();
  const FeDiscretization disc(build_mesh(cfg));
  const double e1 = prescribed_det_error(disc, 0.01, 1.0);
  const double e2 = prescribed_det_error(disc, 0.005, 1.0);
  const double wall = seconds_since(t0);
  const bool ok = a_dev == 0.0 && xi_max == 0.0 && r.max_det_deviation == 0.0 && e1 <= 1e-2 && e1 / e2 >= 3.5 &&
                  wall <= 60.0;
  return {ok, fmt("v=0: max|a-I| %.1e, max|eta-x| %.1e; prescribed flow det error %.3e at dt=0.01 (<= 1e-2), "
                  "%.3e at dt=0.005, ratio %.2f (>= 3.5), %.1f s",
                  a_dev, xi_max, e1, e2, e1 / e2, wall)};
}

Outcome c6_frozen_nullity() {
  const RunResult& r = frozen_t10();
  double rmax = 0.0, scale = 0.0;
  std::size_t finite = 0;
  for (const auto& rec : r.records) {
    if (!std::isfinite(rec.R1) || !std::isfinite(rec.R2)) continue;
    ++finite;
    rmax = std::max({rmax, std::abs(rec.R1), std::abs(rec.R2)});
    scale = std::max(scale, rec.E1 + rec.E2 + rec.D1 + rec.D2);
  }
  const bool ok = finite + 3 >= r.records.size() && rmax <= 1e-12 * scale;
  return {ok, fmt("max |R1|,|R2| = %.2e over %zu records (<= 1e-12 x %.3e)", rmax, finite, scale)};
}

Outcome c7_mms() {
  const auto t0 = std::chrono::steady_clock::now();
  const ConvergenceTable wave = wave_mms(4);
  const auto stokes = stokes_mms(4);
  SimulationConfig base;
  base.geometry.h = 0.2;
  base.initial_data.amplitude = 1.0;
  const ConvergenceTable temporal = coupled_temporal_study(base, {0.02, 0.01, 0.005}, 0.4);
  const double wall = seconds_since(t0);
  const bool ok = wave.final_order() >= 2.7 && stokes[0].final_order() >= 2.7 && stokes[1].final_order() >= 1.8 &&
                  temporal.final_order() >= 1.8 && wall <= 300.0;
  return {ok, fmt("wave %.3f (>= 2.7), Stokes velocity %.3f (>= 2.7), pressure %.3f (>= 1.8), temporal %.3f "
                  "(>= 1.8), %.1f s",
                  wave.final_order(), stokes[0].final_order(), stokes[1].final_order(), temporal.final_order(),
                  wall)};
}

Outcome c8_compatibility() {
  const SimulationConfig cfg = base_run(1.0);
  const FeDiscretization disc(build_mesh(cfg));
  const MetricField id = MetricField::identity(2);
  const InitialData pulse = make_initial_data("elastic-pulse", cfg.initial_data.amplitude, 1.0, 2.0);
  const auto p = compatibility_report(pulse, disc, id, 1.0, Eigen::VectorXd::Zero(disc.pres.ndofs()));
  const double worst = std::max({p.transmission, p.stress_normal, p.no_slip, p.pressure_balance});

  // w0 = eps x, w1 = 0, v0 = c: closed forms on the circles of radius r0 and r1
  const double eps = 0.2, gamma = 1.5, pi = std::numbers::pi;
  const Eigen::Vector2d c(0.3, -0.1);
  InitialData bad;
  bad.w0 = [&](const Point& x) -> Eigen::Vector2d { return eps * x; };
  bad.w0_gradient = [&](const Point&) -> Eigen::Matrix2d { return eps * Eigen::Matrix2d::Identity(); };
  bad.w1 = [](const Point&) -> Eigen::Vector2d { return Eigen::Vector2d::Zero(); };
  bad.v0.value = [&](const Point&) -> Eigen::Vector2d { return c; };
  bad.v0.gradient = [](const Point&) -> Eigen::Matrix2d { return Eigen::Matrix2d::Zero(); };
  bad.v0.laplacian = [](const Point&) -> Eigen::Vector2d { return Eigen::Vector2d::Zero(); };
  const auto b = compatibility_report(bad, disc, id, gamma, Eigen::VectorXd::Zero(disc.pres.ndofs()));
  const double exp_tr = std::sqrt(2.0 * pi * (gamma * gamma * eps * eps + c.squaredNorm()));
  const double exp_sn = eps * std::sqrt(2.0 * pi);
  const double exp_ns = c.norm() * std::sqrt(4.0 * pi);
  const double rel = std::max({std::abs(b.transmission / exp_tr - 1.0), std::abs(b.stress_normal / exp_sn - 1.0),
                               std::abs(b.no_slip / exp_ns - 1.0)});
  return {worst <= 1e-10 && rel <= 0.01,
          fmt("elastic-pulse max residual %.2e (<= 1e-10); incompatible datum max relative deviation %.2e (<= 1e-2)",
              worst, rel)};
}

Outcome c9_ellipticity() {
  const auto t0 = std::chrono::steady_clock::now();
  SimulationConfig cfg = base_run(10.0);
  cfg.physics.mode = CouplingMode::Ale;
  cfg.initial_data.preset = "combined";
  cfg.initial_data.amplitude = 1e-2;
  const RunResult r = run_simulation(cfg);
  const bool reached = r.records.back().t >= 10.0 - 1e-9;

  const fs::path conf = scratch() / "large.json";
  std::ofstream(conf) << R"({"geometry": {"r0": 1, "r1": 2, "h": 0.15}, "physics": {"mode": "ale"},
    "time": {"dt": 0.01, "t_end": 10}, "initial_data": {"preset": "combined", "amplitude": 10}})";
  std::ostringstream log;
  const int code = cmd_run(conf.string(), (scratch() / "large").string(), log);
  const double wall = seconds_since(t0);
  return {reached && r.min_ellipticity >= 0.9 && code == 2,
          fmt("eps=1e-2: min eigenvalue of a a^T %.5f through t=%.2f (>= 0.9); eps=10: exit code %d (== 2), %.1f s",
              r.min_ellipticity, r.records.back().t, code, wall)};
}

Outcome c10_reproducibility() {
  const fs::path conf = scratch() / "repro.json";
  std::ofstream(conf) << R"({"geometry": {"h": 0.15}, "physics": {"mode": "ale"},
    "time": {"dt": 0.01, "t_end": 1}, "initial_data": {"preset": "combined", "amplitude": 0.05}})";
  std::ostringstream log;
  std::string csv[3];
  const char* threads[] = {"1", "4", "4"};
  for (int k = 0; k < 3; ++k) {
    setenv("FSI_THREADS", threads[k], 1);
    const fs::path out = scratch() / ("repro" + std::to_string(k));
    if (cmd_run(conf.string(), out.string(), log) != 0) return {false, "run failed: " + log.str()};
    csv[k] = slurp(out / "energies.csv");
  }
  unsetenv("FSI_THREADS");
  const bool ok = !csv[0].empty() && csv[0] == csv[1] && csv[1] == csv[2];
  return {ok, fmt("energies.csv (%zu bytes) identical for FSI_THREADS=1,4,4: %s", csv[0].size(), ok ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"first-level energy identity", c1_energy_identity},
      {"exponential decay", c2_decay},
      {"multiplier identity residuals", c3_identities},
      {"escape certification", c4_escape},
      {"flow-map fidelity", c5_flow_map},
      {"frozen-mode nullity of R1, R2", c6_frozen_nullity},
      {"MMS convergence", c7_mms},
      {"compatibility residuals", c8_compatibility},
      {"ellipticity monitor", c9_ellipticity},
      {"reproducibility", c10_reproducibility},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (int k = 0; k < 10; ++k) {
    if (!only.empty() && !only.count(k + 1)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(scratch());
  return failed == 0 ? 0 : 1;
}
