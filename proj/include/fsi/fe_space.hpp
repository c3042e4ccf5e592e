#pragma once

// Lagrange P1/P2 spaces on one subdomain of the disc/annulus mesh and the
// precomputed quadrature tables shared by all assemblers.

#include <Eigen/Core>

#include <array>
#include <functional>
#include <map>
#include <vector>

#include "fsi/mesh.hpp"
#include "fsi/quadrature.hpp"

namespace fsi {

using Bary = std::array<double, 3>;

struct CellGeometry {
  std::array<Point, 3> vertices;
  double area = 0.0;
  std::array<Point, 3> grad_lambda;

  Point map(const Bary& l) const { return l[0] * vertices[0] + l[1] * vertices[1] + l[2] * vertices[2]; }
  Bary barycentric(const Point& x) const;
};

CellGeometry cell_geometry(const Mesh& mesh, int cell);

/// P2 shape functions; local order v0, v1, v2, e01, e12, e20.
std::array<double, 6> p2_values(const Bary& l);
std::array<Point, 6> p2_gradients(const Bary& l, const std::array<Point, 3>& grad_lambda);
/// Restriction of P2 to an edge, s in [0, 1]; order (start, end, midpoint).
std::array<double, 3> p2_edge_values(double s);

class P2Space {
 public:
  P2Space() = default;
  P2Space(const Mesh& mesh, CellTag tag);

  int ndofs() const { return static_cast<int>(points_.size()); }
  const std::vector<int>& cells() const { return cells_; }
  const std::array<int, 6>& cell_dofs(std::size_t local) const { return cell_dofs_[local]; }
  const Point& dof_point(int dof) const { return points_[static_cast<std::size_t>(dof)]; }
  /// -1 when the node or edge is not part of this subdomain.
  int vertex_dof(int node) const;
  int edge_dof(int a, int b) const;
  int local_cell(int mesh_cell) const { return local_of_cell_[static_cast<std::size_t>(mesh_cell)]; }
  /// Degrees of freedom of a boundary edge: (start, end, midpoint).
  std::array<int, 3> facet_dofs(const std::array<int, 2>& edge) const;
  /// Sorted degrees of freedom lying on edges with the given tag.
  std::vector<int> boundary_dofs(const Mesh& mesh, EdgeTag tag) const;

  Eigen::VectorXd interpolate(const std::function<double(const Point&)>& f) const;
  /// Component-blocked vector interpolant: [f_x dofs..., f_y dofs...].
  Eigen::VectorXd interpolate(const std::function<Eigen::Vector2d(const Point&)>& f) const;

 private:
  std::vector<int> cells_;
  std::vector<int> local_of_cell_;
  std::vector<std::array<int, 6>> cell_dofs_;
  std::vector<Point> points_;
  std::vector<int> vertex_dof_;
  std::map<std::pair<int, int>, int> edge_dof_;
};

class P1Space {
 public:
  P1Space() = default;
  P1Space(const Mesh& mesh, CellTag tag);

  int ndofs() const { return static_cast<int>(points_.size()); }
  const std::array<int, 3>& cell_dofs(std::size_t local) const { return cell_dofs_[local]; }
  const Point& dof_point(int dof) const { return points_[static_cast<std::size_t>(dof)]; }
  int vertex_dof(int node) const { return vertex_dof_[static_cast<std::size_t>(node)]; }
  std::vector<int> boundary_dofs(const Mesh& mesh, EdgeTag tag) const;
  Eigen::VectorXd interpolate(const std::function<double(const Point&)>& f) const;

 private:
  std::vector<std::array<int, 3>> cell_dofs_;
  std::vector<Point> points_;
  std::vector<int> vertex_dof_;
};

inline constexpr int kCellQuad = 6;
inline constexpr int kEdgeQuad = 3;

/// Quadrature data of one cell for the degree-4 rule.
struct CellQuadrature {
  std::array<Point, kCellQuad> points;
  std::array<double, kCellQuad> weights;  // already scaled by the cell Jacobian
  std::array<std::array<double, 6>, kCellQuad> N;
  std::array<std::array<Point, 6>, kCellQuad> dN;
  std::array<Bary, kCellQuad> L;  // P1 shape values
  std::array<Point, 3> dL;        // P1 shape gradients (constant per cell)
};

/// Quadrature data of one boundary edge.
struct FacetQuadrature {
  int edge = -1;
  Point normal;
  double length = 0.0;
  std::array<Point, kEdgeQuad> points;
  std::array<double, kEdgeQuad> weights;  // scaled by the edge length
  std::array<std::array<double, 3>, kEdgeQuad> phi;
};

struct InterfaceFacet : FacetQuadrature {
  std::array<int, 3> wave_dofs;
  std::array<int, 3> vel_dofs;
  std::array<int, 2> pres_dofs;
  int elastic_cell = -1;  // local index in the wave space
  int fluid_cell = -1;    // local index in the velocity space
  std::array<std::array<Point, 6>, kEdgeQuad> elastic_dN;
  std::array<std::array<Point, 6>, kEdgeQuad> fluid_dN;
  std::array<int, 6> fluid_cell_dofs;
  std::array<Bary, kEdgeQuad> fluid_L;
};

struct OuterFacet : FacetQuadrature {
  std::array<int, 3> vel_dofs;
  std::array<int, 2> pres_dofs;
};

/// Mesh, spaces and quadrature tables used by every solver.
struct FeDiscretization {
  Mesh mesh;
  P2Space wave;  // P2 on elastic cells
  P2Space vel;   // P2 on fluid cells
  P1Space pres;  // P1 on fluid cells
  std::vector<CellQuadrature> elastic_quad;
  std::vector<CellQuadrature> fluid_quad;
  std::vector<InterfaceFacet> interface;
  std::vector<OuterFacet> outer;

  explicit FeDiscretization(Mesh m);
};

}  // namespace fsi
