#include "fsi/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fsi/error.hpp"

namespace fsi {

namespace {

// Applies a scalar operator to each component block of u and dots with w.
double block_form(const SpMat& A, const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
  const Eigen::Index nr = A.rows();
  const Eigen::Index nc = A.cols();
  double s = 0.0;
  for (Eigen::Index c = 0; c < 2; ++c) s += w.segment(c * nr, nr).dot(A * u.segment(c * nc, nc));
  return s;
}

}  // namespace

double energy_form(const EnergyOperators& ops, const Eigen::VectorXd& v, const Eigen::VectorXd& z,
                   const Eigen::VectorXd& w) {
  return 0.5 * (block_form(ops.Mf, v, v) + block_form(ops.Me, z, z) + block_form(ops.Ke, w, w));
}

double interface_dissipation(const EnergyOperators& ops, const Eigen::VectorXd& v, const Eigen::VectorXd& z) {
  const double s = block_form(ops.Tff, v, v) - 2.0 * block_form(ops.Tfe, z, v) + block_form(ops.Tee, z, z);
  return std::max(0.0, s) / ops.gamma;
}

double energy_E(const EnergyOperators& ops, const FluidState& fluid, const WaveState& wave) {
  return energy_form(ops, fluid.v, wave.wt, wave.w);
}

double viscous_form(const FeDiscretization& disc, const AField& A, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& w) {
  const auto gu = velocity_gradient(disc, u);
  const auto gw = velocity_gradient(disc, w);
  return deterministic_sum(disc.fluid_quad.size(), [&](std::size_t c) {
    double acc = 0.0;
    for (std::size_t q = 0; q < kCellQuad; ++q)
      acc += disc.fluid_quad[c].weights[q] * (gw[c][q] * A[c][q] * gu[c][q].transpose()).trace();
    return acc;
  });
}

double gradient_norm_sq(const FeDiscretization& disc, const Eigen::VectorXd& u) {
  const auto gu = velocity_gradient(disc, u);
  return deterministic_sum(disc.fluid_quad.size(), [&](std::size_t c) {
    double acc = 0.0;
    for (std::size_t q = 0; q < kCellQuad; ++q) acc += disc.fluid_quad[c].weights[q] * gu[c][q].squaredNorm();
    return acc;
  });
}

double dissipation_D(const FeDiscretization& disc, const Eigen::VectorXd& v, const AField& a,
                     const InterfaceValues& flux, double gamma, double viscosity) {
  AField A(a.size());
  for (std::size_t c = 0; c < a.size(); ++c) {
    for (std::size_t q = 0; q < kCellQuad; ++q) A[c][q] = a[c][q] * a[c][q].transpose();
  }
  const double f = interface_l2_norm(flux, disc);
  return viscosity * viscous_form(disc, A, v, v) + gamma * f * f;
}

std::vector<std::vector<double>> fd_weights(const std::vector<double>& x, double x0, int m) {
  const std::size_t n = x.size();
  if (n == 0) throw std::invalid_argument("fd_weights: no nodes");
  std::vector<std::vector<double>> c(static_cast<std::size_t>(m) + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const int mn = std::min(static_cast<int>(i), m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) {
          const auto kk = static_cast<std::size_t>(k);
          c[kk][i] = c1 * (k * c[kk - 1][i - 1] - c5 * c[kk][i - 1]) / c2;
        }
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) {
        const auto kk = static_cast<std::size_t>(k);
        c[kk][j] = (c4 * c[kk][j] - k * c[kk - 1][j]) / c3;
      }
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

namespace {

// Picks up to four of `times` nearest to t0 as a contiguous index window.
std::vector<std::size_t> window(const std::vector<double>& times, double t0) {
  const std::size_t n = times.size();
  const std::size_t len = std::min<std::size_t>(4, n);
  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s + len <= n; ++s) {
    double cost = 0.0;
    for (std::size_t k = s; k < s + len; ++k) cost = std::max(cost, std::abs(times[k] - t0));
    // ties go to the earlier window
    if (cost < best_cost - 1e-12 * (1.0 + std::abs(t0))) {
      best_cost = cost;
      best = s;
    }
  }
  std::vector<std::size_t> idx(len);
  for (std::size_t k = 0; k < len; ++k) idx[k] = best + k;
  return idx;
}

template <class Get>
Eigen::VectorXd combine(const std::vector<double>& w, const std::vector<std::size_t>& nodes, std::size_t ref,
                        Get get) {
  const Eigen::VectorXd& r = get(ref);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(r.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (w[k] != 0.0) out += w[k] * (get(nodes[k]) - r);
  }
  return out;
}

AField combine_field(const std::vector<double>& w, const std::vector<const AField*>& f, std::size_t ref) {
  AField out(f[ref]->size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
      for (std::size_t k = 0; k < f.size(); ++k) s += w[k] * ((*f[k])[c][q] - (*f[ref])[c][q]);
      out[c][q] = s;
    }
  }
  return out;
}

AField outer_product(const AField& a) {
  AField A(a.size());
  for (std::size_t c = 0; c < a.size(); ++c) {
    for (std::size_t q = 0; q < kCellQuad; ++q) A[c][q] = a[c][q] * a[c][q].transpose();
  }
  return A;
}

}  // namespace

TimeDerivatives time_derivatives(const std::deque<Snapshot>& history, std::size_t center) {
  if (center >= history.size()) throw std::out_of_range("time_derivatives: center outside history");
  if (history.size() < 3) throw Error(ErrorCode::InsufficientHistory, "at least three stored states are required");
  const double t0 = history[center].t;
  TimeDerivatives d;
  d.t = t0;

  std::vector<double> times;
  for (const auto& s : history) times.push_back(s.t);
  const auto idx = window(times, t0);
  std::vector<double> nodes;
  std::size_t ref = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    nodes.push_back(times[idx[k]]);
    if (idx[k] == center) ref = k;
  }
  if (std::find(idx.begin(), idx.end(), center) == idx.end())
    throw Error(ErrorCode::InsufficientHistory, "center not inside difference window");
  const auto w = fd_weights(nodes, t0, 2);

  auto get_v = [&](std::size_t k) -> const Eigen::VectorXd& { return history[idx[k]].v; };
  auto get_z = [&](std::size_t k) -> const Eigen::VectorXd& { return history[idx[k]].z; };
  d.v = history[center].v;
  d.z = history[center].z;
  std::vector<std::size_t> pos(idx.size());
  for (std::size_t k = 0; k < pos.size(); ++k) pos[k] = k;
  d.v_t = combine(w[1], pos, ref, get_v);
  d.v_tt = combine(w[2], pos, ref, get_v);
  d.z_t = combine(w[1], pos, ref, get_z);
  d.z_tt = combine(w[2], pos, ref, get_z);

  std::vector<const AField*> af;
  std::vector<AField> Af;
  for (std::size_t k : idx) af.push_back(&history[k].a);
  for (std::size_t k : idx) Af.push_back(outer_product(history[k].a));
  std::vector<const AField*> Afp;
  for (const auto& f : Af) Afp.push_back(&f);
  d.a = history[center].a;
  d.a_t = combine_field(w[1], af, ref);
  d.a_tt = combine_field(w[2], af, ref);
  d.A = Af[ref];
  d.A_t = combine_field(w[1], Afp, ref);
  d.A_tt = combine_field(w[2], Afp, ref);

  // pressure nodes sit at half steps
  std::vector<std::size_t> pidx_all;
  std::vector<double> ptimes;
  for (std::size_t k = 0; k < history.size(); ++k) {
    if (history[k].has_pressure) {
      pidx_all.push_back(k);
      ptimes.push_back(history[k].pressure_time);
    }
  }
  if (ptimes.size() < 3) throw Error(ErrorCode::InsufficientHistory, "at least three stored pressures are required");
  const auto pwin = window(ptimes, t0);
  std::vector<double> pnodes;
  std::size_t pref = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < pwin.size(); ++k) {
    pnodes.push_back(ptimes[pwin[k]]);
    const double dist = std::abs(ptimes[pwin[k]] - t0);
    if (dist < best) {
      best = dist;
      pref = k;
    }
  }
  const auto pw = fd_weights(pnodes, t0, 2);
  auto get_q = [&](std::size_t k) -> const Eigen::VectorXd& { return history[pidx_all[pwin[k]]].q; };
  std::vector<std::size_t> ppos(pwin.size());
  for (std::size_t k = 0; k < ppos.size(); ++k) ppos[k] = k;
  d.q = get_q(pref) + combine(pw[0], ppos, pref, get_q);
  d.q_t = combine(pw[1], ppos, pref, get_q);
  d.q_tt = combine(pw[2], ppos, pref, get_q);
  return d;
}

namespace {

using GradField = std::vector<std::array<Eigen::Matrix2d, kCellQuad>>;

double pressure_at(const FeDiscretization& disc, const Eigen::VectorXd& q, std::size_t c, std::size_t k) {
  const auto& dofs = disc.pres.cell_dofs(c);
  const auto& L = disc.fluid_quad[c].L[k];
  return L[0] * q(dofs[0]) + L[1] * q(dofs[1]) + L[2] * q(dofs[2]);
}

}  // namespace

double perturbation_R1(const FeDiscretization& disc, const TimeDerivatives& d) {
  const GradField gv = velocity_gradient(disc, d.v);
  const GradField gvt = velocity_gradient(disc, d.v_t);
  return deterministic_sum(disc.fluid_quad.size(), [&](std::size_t c) {
    double acc = 0.0;
    for (std::size_t k = 0; k < kCellQuad; ++k) {
      const double q = pressure_at(disc, d.q, c, k);
      const double qt = pressure_at(disc, d.q_t, c, k);
      const double t1 = -(gvt[c][k] * d.A_t[c][k] * gv[c][k].transpose()).trace();
      const double t2 = q * (d.a_t[c][k] * gvt[c][k]).trace();
      const double t3 = -qt * (d.a_t[c][k] * gv[c][k]).trace();
      acc += disc.fluid_quad[c].weights[k] * (t1 + t2 + t3);
    }
    return acc;
  });
}

double perturbation_R2(const FeDiscretization& disc, const TimeDerivatives& d) {
  const GradField gv = velocity_gradient(disc, d.v);
  const GradField gvt = velocity_gradient(disc, d.v_t);
  const GradField gvtt = velocity_gradient(disc, d.v_tt);
  return deterministic_sum(disc.fluid_quad.size(), [&](std::size_t c) {
    double acc = 0.0;
    for (std::size_t k = 0; k < kCellQuad; ++k) {
      const double q = pressure_at(disc, d.q, c, k);
      const double qt = pressure_at(disc, d.q_t, c, k);
      const double qtt = pressure_at(disc, d.q_tt, c, k);
      const double t1 = -2.0 * (gvtt[c][k] * d.A_t[c][k] * gvt[c][k].transpose()).trace();
      const double t2 = -(gvtt[c][k] * d.A_tt[c][k] * gv[c][k].transpose()).trace();
      const Eigen::Matrix2d aq = d.a_tt[c][k] * q + 2.0 * d.a_t[c][k] * qt + d.a[c][k] * qtt;
      const double t3 = (aq * gvtt[c][k]).trace();
      acc += disc.fluid_quad[c].weights[k] * (t1 + t2 + t3);
    }
    return acc;
  });
}

HigherEnergies energy_E1_E2(const FeDiscretization& disc, const EnergyOperators& ops, const TimeDerivatives& d) {
  HigherEnergies h;
  h.E1 = energy_form(ops, d.v_t, d.z_t, d.z);
  h.E2 = energy_form(ops, d.v_tt, d.z_tt, d.z_t);
  h.D1 = ops.viscosity * viscous_form(disc, d.A, d.v_t, d.v_t) + interface_dissipation(ops, d.v_t, d.z_t);
  h.D2 = ops.viscosity * viscous_form(disc, d.A, d.v_tt, d.v_tt) + interface_dissipation(ops, d.v_tt, d.z_tt);
  h.R1 = perturbation_R1(disc, d);
  h.R2 = perturbation_R2(disc, d);
  h.grad_v_sq = gradient_norm_sq(disc, d.v);
  h.grad_vt_sq = gradient_norm_sq(disc, d.v_t);
  return h;
}

double total_X(double E, double E1, double E2, double grad_v_sq, double grad_vt_sq, double eps_hat1) {
  return E + E1 + E2 + eps_hat1 * (grad_v_sq + grad_vt_sq);
}

InequalityReport check_energy_inequality(const std::vector<EnergyRecord>& series, int level) {
  if (series.empty()) throw std::invalid_argument("check_energy_inequality: empty series");
  if (level < 0 || level > 2) throw std::invalid_argument("check_energy_inequality: level must be 0, 1 or 2");
  InequalityReport rep;
  rep.level = level;
  if (level == 0) {
    rep.e0 = series.front().E;
    for (const auto& r : series) {
      const double v = r.E + (r.D_cumulative - series.front().D_cumulative) - rep.e0;
      rep.max_violation = std::max(rep.max_violation, v);
      rep.cumulative_dissipation = r.D_cumulative - series.front().D_cumulative;
      ++rep.records_used;
    }
    return rep;
  }
  auto E = [level](const EnergyRecord& r) { return level == 1 ? r.E1 : r.E2; };
  auto D = [level](const EnergyRecord& r) { return level == 1 ? r.D1 : r.D2; };
  auto R = [level](const EnergyRecord& r) { return level == 1 ? r.R1 : r.R2; };
  const EnergyRecord* prev = nullptr;
  double intD = 0.0;
  double intR = 0.0;
  for (const auto& r : series) {
    if (!std::isfinite(E(r)) || !std::isfinite(D(r)) || !std::isfinite(R(r))) continue;
    if (prev == nullptr) {
      rep.e0 = E(r);
    } else {
      const double dt = r.t - prev->t;
      intD += 0.5 * dt * (D(r) + D(*prev));
      intR += 0.5 * dt * (R(r) + R(*prev));
    }
    rep.max_violation = std::max(rep.max_violation, E(r) + intD - rep.e0 - intR);
    rep.cumulative_dissipation = intD;
    ++rep.records_used;
    prev = &r;
  }
  return rep;
}

DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& X, double t_begin, double t_end,
                        double floor) {
  if (t.size() != X.size()) throw std::invalid_argument("fit_decay_rate: size mismatch");
  std::vector<double> ts;
  std::vector<double> ys;
  const double eps = 1e-9 * (1.0 + std::abs(t_end));
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_begin - eps || t[i] > t_end + eps) continue;
    if (!std::isfinite(X[i]) || !(X[i] > floor)) continue;
    ts.push_back(t[i]);
    ys.push_back(std::log(X[i]));
  }
  if (ts.size() < 10) throw Error(ErrorCode::InsufficientData, "fewer than 10 usable records in the fit window");
  const auto n = static_cast<double>(ts.size());
  double mt = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    my += ys[i];
  }
  mt /= n;
  my /= n;
  double stt = 0.0;
  double sty = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    sty += (ts[i] - mt) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(stt > 0.0)) throw Error(ErrorCode::InsufficientData, "fit window has no time spread");
  const double slope = sty / stt;
  DecayFit fit;
  fit.rate = -slope;
  fit.amplitude = std::exp(my - slope * mt);
  fit.r_squared = syy > 0.0 ? std::clamp(sty * sty / (stt * syy), 0.0, 1.0) : 1.0;
  fit.t_begin = ts.front();
  fit.t_end = ts.back();
  fit.count = ts.size();
  return fit;
}

DecayFit fit_decay_rate(const std::vector<EnergyRecord>& series, double t_begin, double t_end, double floor) {
  std::vector<double> t;
  std::vector<double> X;
  for (const auto& r : series) {
    t.push_back(r.t);
    X.push_back(r.X);
  }
  return fit_decay_rate(t, X, t_begin, t_end, floor);
}

// ---------------------------------------------------------------------------
// Multiplier identities

namespace {

struct PolyDerivs {
  Polynomial u, ux, uy, ut, uxx, uxy, uyy, utt, uxt, uyt;
  explicit PolyDerivs(const Polynomial& p)
      : u(p),
        ux(p.derivative(0)),
        uy(p.derivative(1)),
        ut(p.derivative(3)),
        uxx(ux.derivative(0)),
        uxy(ux.derivative(1)),
        uyy(uy.derivative(1)),
        utt(ut.derivative(3)),
        uxt(ux.derivative(3)),
        uyt(uy.derivative(3)) {}
};

double ev(const Polynomial& p, double x1, double x2, double t) {
  if (p.nvars() == 0) return 0.0;
  const std::array<double, 4> a{x1, x2, 0.0, t};
  return p(std::span<const double>(a.data(), 4));
}

SmallVec pt(double x1, double x2) {
  SmallVec x(2);
  x << x1, x2;
  return x;
}

Eigen::Vector2d to2(const SmallVec& v) { return {v(0), v(1)}; }
Eigen::Matrix2d to22(const SmallMat& m) { return m.topLeftCorner(2, 2); }

// div(G grad u) with exact metric derivatives.
double div_G_grad(const MetricField& metric, const SmallVec& x, const Eigen::Vector2d& grad,
                  const Eigen::Matrix2d& hess, double step) {
  const auto dG = metric.dG(x, step);
  const Eigen::Matrix2d G = to22(metric.G(x));
  double s = (G.array() * hess.array()).sum();
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 2; ++k) s += dG[static_cast<std::size_t>(j)](j, k) * grad(k);
  }
  return s;
}

// f = u_tt - div(G grad u), always exact.
double forcing(const MetricField& metric, const PolyDerivs& u, double x1, double x2, double t, double step) {
  const Eigen::Vector2d grad(ev(u.ux, x1, x2, t), ev(u.uy, x1, x2, t));
  Eigen::Matrix2d hess;
  hess << ev(u.uxx, x1, x2, t), ev(u.uxy, x1, x2, t), ev(u.uxy, x1, x2, t), ev(u.uyy, x1, x2, t);
  return ev(u.utt, x1, x2, t) - div_G_grad(metric, pt(x1, x2), grad, hess, step);
}

Eigen::Vector2d fd_grad(const Polynomial& p, double x1, double x2, double t, double s) {
  return {(ev(p, x1 + s, x2, t) - ev(p, x1 - s, x2, t)) / (2.0 * s),
          (ev(p, x1, x2 + s, t) - ev(p, x1, x2 - s, t)) / (2.0 * s)};
}

double fd_dt(const Polynomial& p, double x1, double x2, double t, double s) {
  return (ev(p, x1, x2, t + s) - ev(p, x1, x2, t - s)) / (2.0 * s);
}

template <class F>
double fd_div(const F& field, double x1, double x2, double t, double s) {
  return (field(x1 + s, x2, t)(0) - field(x1 - s, x2, t)(0)) / (2.0 * s) +
         (field(x1, x2 + s, t)(1) - field(x1, x2 - s, t)(1)) / (2.0 * s);
}

void accumulate(ResidualStats& st, double r) {
  st.max_abs = std::max(st.max_abs, std::abs(r));
  st.rms += r * r;
  ++st.count;
}

void finish(ResidualStats& st) {
  if (st.count > 0) st.rms = std::sqrt(st.rms / static_cast<double>(st.count));
}

void require_planar(const MetricField& metric, const std::vector<Eigen::Vector3d>& samples) {
  if (metric.dim() != 2) throw std::invalid_argument("multiplier identities are implemented for dim = 2");
  if (samples.empty()) throw Error(ErrorCode::EmptySampleSet, "no identity samples");
}

}  // namespace

ResidualStats multiplier_residual_A(const MetricField& metric, const VectorFieldH& H, const Polynomial& u_hat,
                                    const std::vector<Eigen::Vector3d>& samples, IdentityPath path, double step) {
  require_planar(metric, samples);
  const PolyDerivs u(u_hat);
  std::vector<double> res(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const double x1 = samples[i](0);
    const double x2 = samples[i](1);
    const double t = samples[i](2);
    const SmallVec x = pt(x1, x2);
    const Eigen::Vector2d Hx = to2(H(x));
    const double divH = H.divergence(x);
    const double f = forcing(metric, u, x1, x2, t, step);
    const Eigen::Matrix2d G = to22(metric.G(x));
    double lhs = 0.0;
    double rhs = 0.0;
    if (path == IdentityPath::Exact) {
      const Eigen::Vector2d grad(ev(u.ux, x1, x2, t), ev(u.uy, x1, x2, t));
      Eigen::Matrix2d hess;
      hess << ev(u.uxx, x1, x2, t), ev(u.uxy, x1, x2, t), ev(u.uxy, x1, x2, t), ev(u.uyy, x1, x2, t);
      const double ut = ev(u.ut, x1, x2, t);
      const double utt = ev(u.utt, x1, x2, t);
      const Eigen::Vector2d grad_t(ev(u.uxt, x1, x2, t), ev(u.uyt, x1, x2, t));
      const Eigen::Matrix2d J = to22(H.jacobian(x));
      const auto dG = metric.dG(x, step);
      const Eigen::Vector2d X = G * grad;
      const double h = Hx.dot(grad);
      const double Q = grad.dot(X);
      const Eigen::Vector2d grad_h = J.transpose() * grad + hess * Hx;
      Eigen::Vector2d grad_Q;
      for (int l = 0; l < 2; ++l) {
        grad_Q(l) = 2.0 * hess.row(l).dot(X) + grad.dot(to22(dG[static_cast<std::size_t>(l)]) * grad);
      }
      const Eigen::Vector2d grad_ut2 = 2.0 * ut * grad_t;
      const double divX = div_G_grad(metric, x, grad, hess, step);
      const double divF = 2.0 * grad_h.dot(X) + 2.0 * h * divX - (grad_Q - grad_ut2).dot(Hx) - (Q - ut * ut) * divH;
      const Eigen::Matrix2d S = to22(covariant_differential(metric, H, x, step));
      lhs = divF + 2.0 * f * h;
      rhs = 2.0 * (utt * h + ut * Hx.dot(grad_t)) + 2.0 * X.dot(S * X) + (ut * ut - Q) * divH;
    } else {
      const double s = step;
      auto Hat = [&](double y1, double y2) { return to2(H(pt(y1, y2))); };
      auto Gat = [&](double y1, double y2) { return to22(metric.G(pt(y1, y2))); };
      auto F = [&](double y1, double y2, double tt) -> Eigen::Vector2d {
        const Eigen::Vector2d gr = fd_grad(u.u, y1, y2, tt, s);
        const double ut = fd_dt(u.u, y1, y2, tt, s);
        const Eigen::Vector2d Hy = Hat(y1, y2);
        const Eigen::Vector2d X = Gat(y1, y2) * gr;
        return 2.0 * Hy.dot(gr) * X - (gr.dot(X) - ut * ut) * Hy;
      };
      auto P = [&](double tt) { return 2.0 * fd_dt(u.u, x1, x2, tt, s) * Hx.dot(fd_grad(u.u, x1, x2, tt, s)); };
      const Eigen::Vector2d gr = fd_grad(u.u, x1, x2, t, s);
      const double ut = fd_dt(u.u, x1, x2, t, s);
      const Eigen::Vector2d X = G * gr;
      const double Q = gr.dot(X);
      const Eigen::Matrix2d S = to22(covariant_differential(metric, H, x, s, DerivativeMode::FiniteDifference));
      lhs = fd_div(F, x1, x2, t, s) + 2.0 * f * Hx.dot(gr);
      rhs = (P(t + s) - P(t - s)) / (2.0 * s) + 2.0 * X.dot(S * X) + (ut * ut - Q) * divH;
    }
    res[i] = lhs - rhs;
  });
  ResidualStats st;
  for (double r : res) accumulate(st, r);
  finish(st);
  return st;
}

ResidualStats multiplier_residual_B(const MetricField& metric, const Polynomial& p, const Polynomial& u_hat,
                                    const std::vector<Eigen::Vector3d>& samples, IdentityPath path, double step) {
  require_planar(metric, samples);
  const PolyDerivs u(u_hat);
  const Polynomial px = p.derivative(0);
  const Polynomial py = p.derivative(1);
  const Polynomial pxx = px.derivative(0);
  const Polynomial pxy = px.derivative(1);
  const Polynomial pyy = py.derivative(1);
  std::vector<double> res(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const double x1 = samples[i](0);
    const double x2 = samples[i](1);
    const double t = samples[i](2);
    const SmallVec x = pt(x1, x2);
    const double f = forcing(metric, u, x1, x2, t, step);
    const Eigen::Matrix2d G = to22(metric.G(x));
    const double pv = ev(p, x1, x2, t);
    const double uv = ev(u.u, x1, x2, t);
    double lhs = 0.0;
    double rhs = 0.0;
    if (path == IdentityPath::Exact) {
      const Eigen::Vector2d grad(ev(u.ux, x1, x2, t), ev(u.uy, x1, x2, t));
      Eigen::Matrix2d hess;
      hess << ev(u.uxx, x1, x2, t), ev(u.uxy, x1, x2, t), ev(u.uxy, x1, x2, t), ev(u.uyy, x1, x2, t);
      const Eigen::Vector2d gp(ev(px, x1, x2, t), ev(py, x1, x2, t));
      Eigen::Matrix2d hp;
      hp << ev(pxx, x1, x2, t), ev(pxy, x1, x2, t), ev(pxy, x1, x2, t), ev(pyy, x1, x2, t);
      const double ut = ev(u.ut, x1, x2, t);
      const double utt = ev(u.utt, x1, x2, t);
      const Eigen::Vector2d X = G * grad;
      const double Q = grad.dot(X);
      const double divX = div_G_grad(metric, x, grad, hess, step);
      const double divGp = div_G_grad(metric, x, gp, hp, step);
      const Eigen::Vector2d grad_pu = uv * gp + pv * grad;
      lhs = 2.0 * grad_pu.dot(X) + 2.0 * pv * uv * divX - 2.0 * uv * grad.dot(G * gp) - uv * uv * divGp +
            2.0 * f * pv * uv;
      rhs = 2.0 * pv * (ut * ut + uv * utt) + 2.0 * pv * (Q - ut * ut) - uv * uv * divGp;
    } else {
      const double s = step;
      auto Gat = [&](double y1, double y2) { return to22(metric.G(pt(y1, y2))); };
      auto V = [&](double y1, double y2, double tt) -> Eigen::Vector2d {
        const double py_ = ev(p, y1, y2, tt);
        const double uy_ = ev(u.u, y1, y2, tt);
        const Eigen::Matrix2d Gy = Gat(y1, y2);
        return 2.0 * py_ * uy_ * (Gy * fd_grad(u.u, y1, y2, tt, s)) - uy_ * uy_ * (Gy * fd_grad(p, y1, y2, tt, s));
      };
      auto Gp = [&](double y1, double y2, double tt) -> Eigen::Vector2d {
        return Gat(y1, y2) * fd_grad(p, y1, y2, tt, s);
      };
      auto T = [&](double tt) { return 2.0 * pv * ev(u.u, x1, x2, tt) * fd_dt(u.u, x1, x2, tt, s); };
      const Eigen::Vector2d gr = fd_grad(u.u, x1, x2, t, s);
      const double ut = fd_dt(u.u, x1, x2, t, s);
      const double Q = gr.dot(G * gr);
      lhs = fd_div(V, x1, x2, t, s) + 2.0 * f * pv * uv;
      rhs = (T(t + s) - T(t - s)) / (2.0 * s) + 2.0 * pv * (Q - ut * ut) - uv * uv * fd_div(Gp, x1, x2, t, s);
    }
    res[i] = lhs - rhs;
  });
  ResidualStats st;
  for (double r : res) accumulate(st, r);
  finish(st);
  return st;
}

std::vector<Eigen::Vector3d> identity_samples(double radius, int n) {
  if (n <= 0) throw Error(ErrorCode::EmptySampleSet, "identity_samples: n must be positive");
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double frac = 0.5 * (std::sqrt(5.0) - 1.0);
  std::vector<Eigen::Vector3d> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double r = 0.9 * radius * std::sqrt((k + 0.5) / n);
    const double th = golden * k;
    const double t = std::fmod(0.5 + frac * k, 1.0);
    out.emplace_back(r * std::cos(th), r * std::sin(th), t);
  }
  return out;
}

}  // namespace fsi
