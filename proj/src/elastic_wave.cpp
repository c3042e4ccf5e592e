#include "fsi/elastic_wave.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fsi/error.hpp"

namespace fsi {

namespace {

SmallVec as_small(const Point& x) {
  SmallVec s(2);
  s << x.x(), x.y();
  return s;
}

Eigen::Matrix2d checked_G(const MetricField& metric, const Point& x) {
  const SmallMat G = metric.G(as_small(x));
  const double lmin = min_eigenvalue(0.5 * (G + G.transpose()));
  if (!(lmin > 1e-12)) {
    std::ostringstream os;
    os << "coefficient matrix not positive definite at (" << x.x() << ", " << x.y() << ")";
    throw Error(ErrorCode::NotPositiveDefinite, os.str());
  }
  return G.topLeftCorner(2, 2);
}

}  // namespace

WaveState WaveState::zero(const FeDiscretization& disc) {
  const int n = 2 * disc.wave.ndofs();
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
}

void WaveState::validate(const FeDiscretization& disc) const {
  const auto n = 2 * disc.wave.ndofs();
  if (w.size() != n || wt.size() != n) throw std::invalid_argument("WaveState: wrong vector length");
  if (!w.allFinite() || !wt.allFinite()) throw std::invalid_argument("WaveState: non-finite entries");
}

WaveOperators assemble_wave_operators(const FeDiscretization& disc, const MetricField& metric, double beta) {
  if (metric.dim() != 2) throw std::invalid_argument("assemble_wave_operators: metric must be 2-dimensional");
  WaveOperators ops;
  ops.beta = beta;
  const int n = disc.wave.ndofs();
  const std::size_t nc = disc.elastic_quad.size();
  auto dofs = [&](std::size_t c) { return disc.wave.cell_dofs(c); };

  // G at quadrature points, evaluated once
  std::vector<std::array<Eigen::Matrix2d, kCellQuad>> G(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t q = 0; q < kCellQuad; ++q) G[c][q] = checked_G(metric, disc.elastic_quad[c].points[q]);
  }

  ops.M = assemble_cells<6, 6>(n, n, nc, dofs, dofs, [&](std::size_t c, Eigen::Matrix<double, 6, 6>& A) {
    const CellQuadrature& cq = disc.elastic_quad[c];
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j)
          A(static_cast<int>(i), static_cast<int>(j)) += cq.weights[q] * cq.N[q][i] * cq.N[q][j];
      }
    }
  });
  ops.stiffness = assemble_cells<6, 6>(n, n, nc, dofs, dofs, [&](std::size_t c, Eigen::Matrix<double, 6, 6>& A) {
    const CellQuadrature& cq = disc.elastic_quad[c];
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      for (std::size_t i = 0; i < 6; ++i) {
        const Point Gi = G[c][q] * cq.dN[q][i];
        for (std::size_t j = 0; j < 6; ++j)
          A(static_cast<int>(i), static_cast<int>(j)) += cq.weights[q] * Gi.dot(cq.dN[q][j]);
      }
    }
  });
  ops.K = ops.stiffness + beta * ops.M;

  std::vector<Triplet> trips;
  for (const auto& f : disc.interface) {
    for (std::size_t q = 0; q < kEdgeQuad; ++q) {
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j)
          trips.emplace_back(f.wave_dofs[i], f.wave_dofs[j], f.weights[q] * f.phi[q][i] * f.phi[q][j]);
      }
    }
  }
  ops.T.resize(n, n);
  ops.T.setFromTriplets(trips.begin(), trips.end());
  return ops;
}

InterfaceValues conormal_trace(const Eigen::VectorXd& w, const MetricField& metric, const FeDiscretization& disc) {
  const int n = disc.wave.ndofs();
  InterfaceValues out(disc.interface.size() * kEdgeQuad);
  for (std::size_t fi = 0; fi < disc.interface.size(); ++fi) {
    const InterfaceFacet& f = disc.interface[fi];
    const auto& dofs = disc.wave.cell_dofs(static_cast<std::size_t>(f.elastic_cell));
    for (std::size_t q = 0; q < kEdgeQuad; ++q) {
      const Eigen::Matrix2d G = checked_G(metric, f.points[q]);
      const Point Gn = G * f.normal;  // G symmetric: nu^T G grad = (G nu) . grad
      Eigen::Vector2d val = Eigen::Vector2d::Zero();
      for (int comp = 0; comp < 2; ++comp) {
        Point grad = Point::Zero();
        for (std::size_t i = 0; i < 6; ++i) grad += w(comp * n + dofs[i]) * f.elastic_dN[q][i];
        val(comp) = Gn.dot(grad);
      }
      out[fi * kEdgeQuad + q] = val;
    }
  }
  return out;
}

InterfaceValues conormal_trace(const WaveState& state, const MetricField& metric, const FeDiscretization& disc) {
  return conormal_trace(state.w, metric, disc);
}

namespace {

InterfaceValues facet_trace(const Eigen::VectorXd& u, int n, const FeDiscretization& disc, bool wave_side) {
  InterfaceValues out(disc.interface.size() * kEdgeQuad);
  for (std::size_t fi = 0; fi < disc.interface.size(); ++fi) {
    const InterfaceFacet& f = disc.interface[fi];
    const auto& dofs = wave_side ? f.wave_dofs : f.vel_dofs;
    for (std::size_t q = 0; q < kEdgeQuad; ++q) {
      Eigen::Vector2d val = Eigen::Vector2d::Zero();
      for (int comp = 0; comp < 2; ++comp) {
        for (std::size_t i = 0; i < 3; ++i) val(comp) += f.phi[q][i] * u(comp * n + dofs[i]);
      }
      out[fi * kEdgeQuad + q] = val;
    }
  }
  return out;
}

}  // namespace

InterfaceValues interface_trace_wave(const Eigen::VectorXd& w, const FeDiscretization& disc) {
  return facet_trace(w, disc.wave.ndofs(), disc, true);
}

InterfaceValues interface_trace_velocity(const Eigen::VectorXd& v, const FeDiscretization& disc) {
  return facet_trace(v, disc.vel.ndofs(), disc, false);
}

double interface_l2_norm(const InterfaceValues& f, const FeDiscretization& disc) {
  double s = 0.0;
  for (std::size_t fi = 0; fi < disc.interface.size(); ++fi) {
    for (std::size_t q = 0; q < kEdgeQuad; ++q) s += disc.interface[fi].weights[q] * f[fi * kEdgeQuad + q].squaredNorm();
  }
  return std::sqrt(s);
}

Eigen::VectorXd wave_load(const FeDiscretization& disc, const std::function<double(const Point&)>& f) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(disc.wave.ndofs());
  for (std::size_t c = 0; c < disc.elastic_quad.size(); ++c) {
    const CellQuadrature& cq = disc.elastic_quad[c];
    const auto& dofs = disc.wave.cell_dofs(c);
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      const double fq = cq.weights[q] * f(cq.points[q]);
      for (std::size_t i = 0; i < 6; ++i) b(dofs[i]) += fq * cq.N[q][i];
    }
  }
  return b;
}

Eigen::VectorXd wave_interface_load(const FeDiscretization& disc,
                                    const std::function<double(const Point&, const Point&)>& g) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(disc.wave.ndofs());
  for (const auto& f : disc.interface) {
    for (std::size_t q = 0; q < kEdgeQuad; ++q) {
      const double gq = f.weights[q] * g(f.points[q], f.normal);
      for (std::size_t i = 0; i < 3; ++i) b(f.wave_dofs[i]) += gq * f.phi[q][i];
    }
  }
  return b;
}

double wave_l2_error(const FeDiscretization& disc, const Eigen::VectorXd& u,
                     const std::function<double(const Point&)>& exact) {
  const double s = deterministic_sum(disc.elastic_quad.size(), [&](std::size_t c) {
    const CellQuadrature& cq = disc.elastic_quad[c];
    const auto& dofs = disc.wave.cell_dofs(c);
    double acc = 0.0;
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      double uh = 0.0;
      for (std::size_t i = 0; i < 6; ++i) uh += cq.N[q][i] * u(dofs[i]);
      const double e = uh - exact(cq.points[q]);
      acc += cq.weights[q] * e * e;
    }
    return acc;
  });
  return std::sqrt(s);
}

}  // namespace fsi
