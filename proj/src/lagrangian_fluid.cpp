#include "fsi/lagrangian_fluid.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fsi/error.hpp"

namespace fsi {

namespace {

double min_eig_sym(const Eigen::Matrix2d& S) {
  const double m = 0.5 * (S(0, 0) + S(1, 1));
  const double d = 0.5 * (S(0, 0) - S(1, 1));
  const double o = 0.5 * (S(0, 1) + S(1, 0));
  return m - std::hypot(d, o);
}

Eigen::Matrix2d inverse2(const Eigen::Matrix2d& F, double det) {
  Eigen::Matrix2d a;
  a << F(1, 1) / det, -F(0, 1) / det, -F(1, 0) / det, F(0, 0) / det;
  return a;
}

std::array<int, 12> vector_dofs(const std::array<int, 6>& d, int n) {
  std::array<int, 12> out{};
  for (std::size_t i = 0; i < 6; ++i) {
    out[i] = d[i];
    out[6 + i] = n + d[i];
  }
  return out;
}

Eigen::VectorXd solve_sparse(const SpMat& A, const Eigen::VectorXd& b, const char* what) {
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::SolverFailure, std::string(what) + ": factorization failed");
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite())
    throw Error(ErrorCode::SolverFailure, std::string(what) + ": solve failed");
  return x;
}

}  // namespace

AField identity_a_field(const FeDiscretization& disc) {
  AField a(disc.fluid_quad.size());
  for (auto& cell : a) cell.fill(Eigen::Matrix2d::Identity());
  return a;
}

FluidState FluidState::zero(const FeDiscretization& disc) {
  FluidState s;
  s.v = Eigen::VectorXd::Zero(2 * disc.vel.ndofs());
  s.q = Eigen::VectorXd::Zero(disc.pres.ndofs());
  s.xi = Eigen::VectorXd::Zero(2 * disc.vel.ndofs());
  s.a = identity_a_field(disc);
  return s;
}

StokesOperators assemble_variable_stokes(const FeDiscretization& disc, const AField& a, double ellipticity_floor) {
  const std::size_t nc = disc.fluid_quad.size();
  if (a.size() != nc) throw std::invalid_argument("assemble_variable_stokes: a field has wrong size");
  StokesOperators ops;
  const int nv = disc.vel.ndofs();
  const int np = disc.pres.ndofs();

  std::vector<std::array<Eigen::Matrix2d, kCellQuad>> A(nc);
  double emin = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      const Eigen::Matrix2d& aq = a[c][q];
      if (!aq.allFinite()) throw Error(ErrorCode::DegenerateCoefficient, "non-finite coefficient matrix");
      A[c][q] = aq * aq.transpose();
      const double e = min_eig_sym(A[c][q]);
      emin = std::min(emin, e);
      if (e < ellipticity_floor) {
        std::ostringstream os;
        os << "ellipticity " << e << " below floor " << ellipticity_floor << " at (" << disc.fluid_quad[c].points[q].x()
           << ", " << disc.fluid_quad[c].points[q].y() << ")";
        throw Error(ErrorCode::DegenerateCoefficient, os.str());
      }
    }
  }
  ops.ellipticity_min = emin;

  auto vdofs = [&](std::size_t c) { return disc.vel.cell_dofs(c); };
  auto vvdofs = [&](std::size_t c) { return vector_dofs(disc.vel.cell_dofs(c), nv); };
  auto pdofs = [&](std::size_t c) { return disc.pres.cell_dofs(c); };

  ops.M = assemble_cells<6, 6>(nv, nv, nc, vdofs, vdofs, [&](std::size_t c, Eigen::Matrix<double, 6, 6>& L) {
    const CellQuadrature& cq = disc.fluid_quad[c];
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j)
          L(static_cast<int>(i), static_cast<int>(j)) += cq.weights[q] * cq.N[q][i] * cq.N[q][j];
      }
    }
  });
  ops.K = assemble_cells<6, 6>(nv, nv, nc, vdofs, vdofs, [&](std::size_t c, Eigen::Matrix<double, 6, 6>& L) {
    const CellQuadrature& cq = disc.fluid_quad[c];
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      for (std::size_t i = 0; i < 6; ++i) {
        const Point Ai = A[c][q] * cq.dN[q][i];
        for (std::size_t j = 0; j < 6; ++j)
          L(static_cast<int>(i), static_cast<int>(j)) += cq.weights[q] * Ai.dot(cq.dN[q][j]);
      }
    }
  });
  ops.B = assemble_cells<3, 12>(np, 2 * nv, nc, pdofs, vvdofs, [&](std::size_t c, Eigen::Matrix<double, 3, 12>& L) {
    const CellQuadrature& cq = disc.fluid_quad[c];
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      const Eigen::Matrix2d at = a[c][q].transpose();
      for (std::size_t j = 0; j < 6; ++j) {
        // sum_k a^{ki} d_k phi for component i
        const Point t = at * cq.dN[q][j];
        for (std::size_t p = 0; p < 3; ++p) {
          const double w = cq.weights[q] * cq.L[q][p];
          L(static_cast<int>(p), static_cast<int>(j)) += w * t.x();
          L(static_cast<int>(p), static_cast<int>(6 + j)) += w * t.y();
        }
      }
    }
  });
  ops.Mp = assemble_cells<3, 3>(np, np, nc, pdofs, pdofs, [&](std::size_t c, Eigen::Matrix<double, 3, 3>& L) {
    const CellQuadrature& cq = disc.fluid_quad[c];
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j)
          L(static_cast<int>(i), static_cast<int>(j)) += cq.weights[q] * cq.L[q][i] * cq.L[q][j];
      }
    }
  });
  return ops;
}

double divergence_residual(const Eigen::VectorXd& v, const AField& a, const FeDiscretization& disc) {
  const StokesOperators ops = assemble_variable_stokes(disc, a);
  const Eigen::VectorXd bv = ops.B * v;
  Eigen::SimplicialLDLT<SpMat> llt(ops.Mp);
  const Eigen::VectorXd r = llt.solve(bv);
  return std::sqrt(std::max(0.0, r.dot(bv)));
}

double divergence_residual_pointwise(const Eigen::VectorXd& v, const AField& a, const FeDiscretization& disc) {
  const auto grads = velocity_gradient(disc, v);
  const double s = deterministic_sum(disc.fluid_quad.size(), [&](std::size_t c) {
    double acc = 0.0;
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      const double d = (a[c][q] * grads[c][q]).trace();
      acc += disc.fluid_quad[c].weights[q] * d * d;
    }
    return acc;
  });
  return std::sqrt(s);
}

std::vector<int> outer_velocity_dofs(const FeDiscretization& disc) {
  const int nv = disc.vel.ndofs();
  std::vector<int> out;
  for (int d : disc.vel.boundary_dofs(disc.mesh, EdgeTag::Outer)) {
    out.push_back(d);
    out.push_back(nv + d);
  }
  std::sort(out.begin(), out.end());
  return out;
}

AnalyticVectorField AnalyticVectorField::zero() {
  return {[](const Point&) -> Eigen::Vector2d { return Eigen::Vector2d::Zero(); },
          [](const Point&) -> Eigen::Matrix2d { return Eigen::Matrix2d::Zero(); },
          [](const Point&) -> Eigen::Vector2d { return Eigen::Vector2d::Zero(); }};
}

Eigen::VectorXd velocity_load(const FeDiscretization& disc, const std::function<Eigen::Vector2d(const Point&)>& f) {
  const int nv = disc.vel.ndofs();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * nv);
  for (std::size_t c = 0; c < disc.fluid_quad.size(); ++c) {
    const CellQuadrature& cq = disc.fluid_quad[c];
    const auto& dofs = disc.vel.cell_dofs(c);
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      const Eigen::Vector2d fq = cq.weights[q] * f(cq.points[q]);
      for (std::size_t i = 0; i < 6; ++i) {
        b(dofs[i]) += fq.x() * cq.N[q][i];
        b(nv + dofs[i]) += fq.y() * cq.N[q][i];
      }
    }
  }
  return b;
}

Eigen::VectorXd project_divergence_free(const FeDiscretization& disc, const StokesOperators& ops,
                                        const std::function<Eigen::Vector2d(const Point&)>& f) {
  const int nv2 = 2 * disc.vel.ndofs();
  const int np = disc.pres.ndofs();
  const int n = nv2 + np;
  std::vector<Triplet> trips;
  append_block(trips, block_diagonal(ops.M, 2), 0, 0);
  append_block(trips, SpMat(ops.B.transpose()), 0, nv2, -1.0);
  append_block(trips, ops.B, nv2, 0, -1.0);
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  for (int d : outer_velocity_dofs(disc)) fixed[static_cast<std::size_t>(d)] = 1;
  const SpMat A = build_constrained(trips, n, fixed);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs.head(nv2) = velocity_load(disc, f);
  for (int i = 0; i < n; ++i) {
    if (fixed[static_cast<std::size_t>(i)]) rhs(i) = 0.0;
  }
  const Eigen::VectorXd x = solve_sparse(A, rhs, "divergence-free projection");
  return x.head(nv2);
}

Eigen::VectorXd solve_mixed_poisson(const FeDiscretization& disc, const std::function<double(const Point&)>& source,
                                    const std::function<double(const Point&, const Point&)>& neumann,
                                    const std::function<double(const Point&)>& dirichlet) {
  const int np = disc.pres.ndofs();
  const std::size_t nc = disc.fluid_quad.size();
  auto pdofs = [&](std::size_t c) { return disc.pres.cell_dofs(c); };
  const SpMat K = assemble_cells<3, 3>(np, np, nc, pdofs, pdofs, [&](std::size_t c, Eigen::Matrix<double, 3, 3>& L) {
    const CellQuadrature& cq = disc.fluid_quad[c];
    double area = 0.0;
    for (std::size_t q = 0; q < kCellQuad; ++q) area += cq.weights[q];
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) L(static_cast<int>(i), static_cast<int>(j)) = area * cq.dL[i].dot(cq.dL[j]);
    }
  });
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(np);
  for (std::size_t c = 0; c < nc; ++c) {
    const CellQuadrature& cq = disc.fluid_quad[c];
    const auto& dofs = disc.pres.cell_dofs(c);
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      const double s = cq.weights[q] * source(cq.points[q]);
      for (std::size_t i = 0; i < 3; ++i) rhs(dofs[i]) -= s * cq.L[q][i];
    }
  }
  for (const auto& f : disc.outer) {
    for (std::size_t q = 0; q < kEdgeQuad; ++q) {
      const double g = f.weights[q] * neumann(f.points[q], f.normal);
      const double s = edge_rule().points[q];
      rhs(f.pres_dofs[0]) += g * (1 - s);
      rhs(f.pres_dofs[1]) += g * s;
    }
  }
  std::vector<char> fixed(static_cast<std::size_t>(np), 0);
  Eigen::VectorXd qd = Eigen::VectorXd::Zero(np);
  for (int d : disc.pres.boundary_dofs(disc.mesh, EdgeTag::Interface)) {
    fixed[static_cast<std::size_t>(d)] = 1;
    qd(d) = dirichlet(disc.pres.dof_point(d));
  }
  std::vector<Triplet> trips;
  for (int k = 0; k < K.outerSize(); ++k) {
    for (SpMat::InnerIterator it(K, k); it; ++it) {
      const auto r = static_cast<std::size_t>(it.row());
      const auto col = static_cast<std::size_t>(it.col());
      if (!fixed[r] && fixed[col]) rhs(it.row()) -= it.value() * qd(it.col());
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  const SpMat A = build_constrained(trips, np, fixed);
  for (int i = 0; i < np; ++i) {
    if (fixed[static_cast<std::size_t>(i)]) rhs(i) = qd(i);
  }
  return solve_sparse(A, rhs, "mixed Poisson");
}

Eigen::VectorXd solve_initial_pressure(const AnalyticVectorField& v0,
                                       const std::function<double(const Point&, const Point&)>& w0_conormal_normal,
                                       const FeDiscretization& disc) {
  auto source = [&](const Point& x) {
    const Eigen::Matrix2d g = v0.gradient(x);
    return -(g * g).trace();
  };
  auto neumann = [&](const Point& x, const Point& n) { return v0.laplacian(x).dot(n); };
  auto dirichlet = [&](const Point& x) {
    const Point nu = x.normalized();
    return nu.dot(v0.gradient(x) * nu) - w0_conormal_normal(x, nu);
  };
  return solve_mixed_poisson(disc, source, neumann, dirichlet);
}

double pressure_l2_error(const FeDiscretization& disc, const Eigen::VectorXd& q,
                         const std::function<double(const Point&)>& exact) {
  const double s = deterministic_sum(disc.fluid_quad.size(), [&](std::size_t c) {
    const CellQuadrature& cq = disc.fluid_quad[c];
    const auto& dofs = disc.pres.cell_dofs(c);
    double acc = 0.0;
    for (std::size_t k = 0; k < kCellQuad; ++k) {
      double qh = 0.0;
      for (std::size_t i = 0; i < 3; ++i) qh += cq.L[k][i] * q(dofs[i]);
      const double e = qh - exact(cq.points[k]);
      acc += cq.weights[k] * e * e;
    }
    return acc;
  });
  return std::sqrt(s);
}

double velocity_l2_error(const FeDiscretization& disc, const Eigen::VectorXd& v,
                         const std::function<Eigen::Vector2d(const Point&)>& exact) {
  const int nv = disc.vel.ndofs();
  const double s = deterministic_sum(disc.fluid_quad.size(), [&](std::size_t c) {
    const CellQuadrature& cq = disc.fluid_quad[c];
    const auto& dofs = disc.vel.cell_dofs(c);
    double acc = 0.0;
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      Eigen::Vector2d vh = Eigen::Vector2d::Zero();
      for (std::size_t i = 0; i < 6; ++i) {
        vh.x() += cq.N[q][i] * v(dofs[i]);
        vh.y() += cq.N[q][i] * v(nv + dofs[i]);
      }
      acc += cq.weights[q] * (vh - exact(cq.points[q])).squaredNorm();
    }
    return acc;
  });
  return std::sqrt(s);
}

std::vector<std::array<Eigen::Matrix2d, kCellQuad>> velocity_gradient(const FeDiscretization& disc,
                                                                      const Eigen::VectorXd& v) {
  const int nv = disc.vel.ndofs();
  std::vector<std::array<Eigen::Matrix2d, kCellQuad>> out(disc.fluid_quad.size());
  parallel_for(out.size(), [&](std::size_t c) {
    const CellQuadrature& cq = disc.fluid_quad[c];
    const auto& dofs = disc.vel.cell_dofs(c);
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
      for (std::size_t i = 0; i < 6; ++i) {
        const Point& d = cq.dN[q][i];
        g.row(0) += v(dofs[i]) * d.transpose();
        g.row(1) += v(nv + dofs[i]) * d.transpose();
      }
      out[c][q] = g;
    }
  });
  return out;
}

std::vector<std::array<Eigen::Matrix2d, kCellQuad>> flow_map_gradient(const FeDiscretization& disc,
                                                                      const Eigen::VectorXd& xi) {
  auto out = velocity_gradient(disc, xi);
  for (auto& cell : out) {
    for (auto& F : cell) F += Eigen::Matrix2d::Identity();
  }
  return out;
}

FlowMapUpdate update_flow_map(const FeDiscretization& disc, const Eigen::VectorXd& xi, const Eigen::VectorXd& v_mid,
                              double dt, double det_floor, double ellipticity_floor) {
  if (!(dt > 0.0)) throw std::invalid_argument("update_flow_map: dt must be positive");
  FlowMapUpdate up;
  up.xi = xi + dt * v_mid;
  const auto F = flow_map_gradient(disc, up.xi);
  up.a.resize(F.size());
  up.det_deviation = 0.0;
  up.det_min = std::numeric_limits<double>::infinity();
  up.ellipticity_min = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < F.size(); ++c) {
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      const Eigen::Matrix2d& Fq = F[c][q];
      const double det = Fq(0, 0) * Fq(1, 1) - Fq(0, 1) * Fq(1, 0);
      up.det_min = std::min(up.det_min, det);
      up.det_deviation = std::max(up.det_deviation, std::abs(det - 1.0));
      if (!(det >= det_floor)) {
        std::ostringstream os;
        os << "det(grad eta) = " << det << " below floor " << det_floor;
        throw Error(ErrorCode::MapDegenerate, os.str());
      }
      up.a[c][q] = inverse2(Fq, det);
      const double e = min_eig_sym(up.a[c][q] * up.a[c][q].transpose());
      up.ellipticity_min = std::min(up.ellipticity_min, e);
      if (!(e >= ellipticity_floor)) {
        std::ostringstream os;
        os << "ellipticity of a a^T = " << e << " below floor " << ellipticity_floor;
        throw Error(ErrorCode::MapDegenerate, os.str());
      }
    }
  }
  return up;
}

Eigen::Matrix2d a_ode_step(const Eigen::Matrix2d& a, const Eigen::Matrix2d& grad_v_old,
                           const Eigen::Matrix2d& grad_v_new, double dt) {
  const Eigen::Matrix2d explicit_part = a - 0.5 * dt * a * grad_v_old * a;
  Eigen::Matrix2d next = a;
  for (int it = 0; it < 100; ++it) {
    const Eigen::Matrix2d upd = explicit_part - 0.5 * dt * next * grad_v_new * next;
    const double change = (upd - next).cwiseAbs().maxCoeff();
    next = upd;
    if (change <= 1e-16 * (1.0 + next.cwiseAbs().maxCoeff())) break;
  }
  return next;
}

}  // namespace fsi
