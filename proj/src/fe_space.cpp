#include "fsi/fe_space.hpp"

#include <algorithm>
#include <set>

#include "fsi/error.hpp"

namespace fsi {

Bary CellGeometry::barycentric(const Point& x) const {
  const Point d = x - vertices[0];
  const double l1 = grad_lambda[1].dot(d);
  const double l2 = grad_lambda[2].dot(d);
  return {1.0 - l1 - l2, l1, l2};
}

CellGeometry cell_geometry(const Mesh& mesh, int cell) {
  const auto& t = mesh.cells[static_cast<std::size_t>(cell)];
  CellGeometry g;
  for (std::size_t i = 0; i < 3; ++i) g.vertices[i] = mesh.nodes[static_cast<std::size_t>(t[i])];
  const Point e1 = g.vertices[1] - g.vertices[0];
  const Point e2 = g.vertices[2] - g.vertices[0];
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  if (!(det > 0.0)) throw Error(ErrorCode::BadGeometry, "cell with non-positive orientation");
  g.area = 0.5 * det;
  // rows of J^{-1} with J = [e1 e2]
  g.grad_lambda[1] = Point(e2.y(), -e2.x()) / det;
  g.grad_lambda[2] = Point(-e1.y(), e1.x()) / det;
  g.grad_lambda[0] = -g.grad_lambda[1] - g.grad_lambda[2];
  return g;
}

std::array<double, 6> p2_values(const Bary& l) {
  return {l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1),
          4 * l[0] * l[1],       4 * l[1] * l[2],       4 * l[2] * l[0]};
}

std::array<Point, 6> p2_gradients(const Bary& l, const std::array<Point, 3>& gl) {
  return {(4 * l[0] - 1) * gl[0],
          (4 * l[1] - 1) * gl[1],
          (4 * l[2] - 1) * gl[2],
          4 * (l[0] * gl[1] + l[1] * gl[0]),
          4 * (l[1] * gl[2] + l[2] * gl[1]),
          4 * (l[2] * gl[0] + l[0] * gl[2])};
}

std::array<double, 3> p2_edge_values(double s) {
  return {(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)};
}

namespace {

std::pair<int, int> key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

constexpr std::array<std::array<int, 2>, 3> kLocalEdges{{{0, 1}, {1, 2}, {2, 0}}};

}  // namespace

P2Space::P2Space(const Mesh& mesh, CellTag tag) {
  vertex_dof_.assign(mesh.num_nodes(), -1);
  local_of_cell_.assign(mesh.num_cells(), -1);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    if (mesh.cell_tags[c] != tag) continue;
    local_of_cell_[c] = static_cast<int>(cells_.size());
    cells_.push_back(static_cast<int>(c));
    const auto& t = mesh.cells[c];
    std::array<int, 6> dofs{};
    for (std::size_t i = 0; i < 3; ++i) {
      const auto n = static_cast<std::size_t>(t[i]);
      if (vertex_dof_[n] < 0) {
        vertex_dof_[n] = static_cast<int>(points_.size());
        points_.push_back(mesh.nodes[n]);
      }
      dofs[i] = vertex_dof_[n];
    }
    for (std::size_t e = 0; e < 3; ++e) {
      const int a = t[static_cast<std::size_t>(kLocalEdges[e][0])];
      const int b = t[static_cast<std::size_t>(kLocalEdges[e][1])];
      auto [it, inserted] = edge_dof_.try_emplace(key(a, b), static_cast<int>(points_.size()));
      if (inserted)
        points_.push_back(0.5 * (mesh.nodes[static_cast<std::size_t>(a)] + mesh.nodes[static_cast<std::size_t>(b)]));
      dofs[3 + e] = it->second;
    }
    cell_dofs_.push_back(dofs);
  }
}

int P2Space::vertex_dof(int node) const { return vertex_dof_[static_cast<std::size_t>(node)]; }

int P2Space::edge_dof(int a, int b) const {
  const auto it = edge_dof_.find(key(a, b));
  return it == edge_dof_.end() ? -1 : it->second;
}

std::array<int, 3> P2Space::facet_dofs(const std::array<int, 2>& edge) const {
  return {vertex_dof(edge[0]), vertex_dof(edge[1]), edge_dof(edge[0], edge[1])};
}

std::vector<int> P2Space::boundary_dofs(const Mesh& mesh, EdgeTag tag) const {
  std::set<int> s;
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    if (mesh.edge_tags[e] != tag) continue;
    for (int d : facet_dofs(mesh.boundary_edges[e])) {
      if (d >= 0) s.insert(d);
    }
  }
  return {s.begin(), s.end()};
}

Eigen::VectorXd P2Space::interpolate(const std::function<double(const Point&)>& f) const {
  Eigen::VectorXd u(ndofs());
  for (int i = 0; i < ndofs(); ++i) u(i) = f(points_[static_cast<std::size_t>(i)]);
  return u;
}

Eigen::VectorXd P2Space::interpolate(const std::function<Eigen::Vector2d(const Point&)>& f) const {
  const int n = ndofs();
  Eigen::VectorXd u(2 * n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d v = f(points_[static_cast<std::size_t>(i)]);
    u(i) = v.x();
    u(n + i) = v.y();
  }
  return u;
}

P1Space::P1Space(const Mesh& mesh, CellTag tag) {
  vertex_dof_.assign(mesh.num_nodes(), -1);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    if (mesh.cell_tags[c] != tag) continue;
    const auto& t = mesh.cells[c];
    std::array<int, 3> dofs{};
    for (std::size_t i = 0; i < 3; ++i) {
      const auto n = static_cast<std::size_t>(t[i]);
      if (vertex_dof_[n] < 0) {
        vertex_dof_[n] = static_cast<int>(points_.size());
        points_.push_back(mesh.nodes[n]);
      }
      dofs[i] = vertex_dof_[n];
    }
    cell_dofs_.push_back(dofs);
  }
}

std::vector<int> P1Space::boundary_dofs(const Mesh& mesh, EdgeTag tag) const {
  std::set<int> s;
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    if (mesh.edge_tags[e] != tag) continue;
    for (int n : mesh.boundary_edges[e]) {
      const int d = vertex_dof(n);
      if (d >= 0) s.insert(d);
    }
  }
  return {s.begin(), s.end()};
}

Eigen::VectorXd P1Space::interpolate(const std::function<double(const Point&)>& f) const {
  Eigen::VectorXd u(ndofs());
  for (int i = 0; i < ndofs(); ++i) u(i) = f(points_[static_cast<std::size_t>(i)]);
  return u;
}

namespace {

std::vector<CellQuadrature> build_cell_quadrature(const Mesh& mesh, const std::vector<int>& cells) {
  const QuadratureRule& rule = triangle_rule();
  std::vector<CellQuadrature> out(cells.size());
  for (std::size_t lc = 0; lc < cells.size(); ++lc) {
    const CellGeometry g = cell_geometry(mesh, cells[lc]);
    CellQuadrature& cq = out[lc];
    cq.dL = g.grad_lambda;
    for (std::size_t q = 0; q < kCellQuad; ++q) {
      const Bary& l = rule.points[q];
      cq.points[q] = g.map(l);
      cq.weights[q] = rule.weights[q] * 2.0 * g.area;
      cq.N[q] = p2_values(l);
      cq.dN[q] = p2_gradients(l, g.grad_lambda);
      cq.L[q] = l;
    }
  }
  return out;
}

void fill_facet(const Mesh& mesh, std::size_t e, FacetQuadrature& f) {
  const EdgeRule& rule = edge_rule();
  const auto& be = mesh.boundary_edges[e];
  const Point& a = mesh.nodes[static_cast<std::size_t>(be[0])];
  const Point& b = mesh.nodes[static_cast<std::size_t>(be[1])];
  f.edge = static_cast<int>(e);
  f.normal = mesh.edge_normal(e);
  f.length = (b - a).norm();
  for (std::size_t q = 0; q < kEdgeQuad; ++q) {
    const double s = rule.points[q];
    f.points[q] = (1 - s) * a + s * b;
    f.weights[q] = rule.weights[q] * f.length;
    f.phi[q] = p2_edge_values(s);
  }
}

}  // namespace

FeDiscretization::FeDiscretization(Mesh m)
    : mesh(std::move(m)),
      wave(mesh, CellTag::Elastic),
      vel(mesh, CellTag::Fluid),
      pres(mesh, CellTag::Fluid) {
  elastic_quad = build_cell_quadrature(mesh, wave.cells());
  fluid_quad = build_cell_quadrature(mesh, vel.cells());

  for (const auto& pair : mesh.interface_pairs) {
    InterfaceFacet f;
    fill_facet(mesh, static_cast<std::size_t>(pair.edge), f);
    const auto& be = mesh.boundary_edges[static_cast<std::size_t>(pair.edge)];
    f.wave_dofs = wave.facet_dofs(be);
    f.vel_dofs = vel.facet_dofs(be);
    f.pres_dofs = {pres.vertex_dof(be[0]), pres.vertex_dof(be[1])};
    f.elastic_cell = wave.local_cell(pair.elastic_cell);
    f.fluid_cell = vel.local_cell(pair.fluid_cell);
    f.fluid_cell_dofs = vel.cell_dofs(static_cast<std::size_t>(f.fluid_cell));
    const CellGeometry ge = cell_geometry(mesh, pair.elastic_cell);
    const CellGeometry gf = cell_geometry(mesh, pair.fluid_cell);
    for (std::size_t q = 0; q < kEdgeQuad; ++q) {
      f.elastic_dN[q] = p2_gradients(ge.barycentric(f.points[q]), ge.grad_lambda);
      f.fluid_L[q] = gf.barycentric(f.points[q]);
      f.fluid_dN[q] = p2_gradients(f.fluid_L[q], gf.grad_lambda);
    }
    interface.push_back(f);
  }
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    if (mesh.edge_tags[e] != EdgeTag::Outer) continue;
    OuterFacet f;
    fill_facet(mesh, e, f);
    f.vel_dofs = vel.facet_dofs(mesh.boundary_edges[e]);
    f.pres_dofs = {pres.vertex_dof(mesh.boundary_edges[e][0]), pres.vertex_dof(mesh.boundary_edges[e][1])};
    outer.push_back(f);
  }
}

}  // namespace fsi
