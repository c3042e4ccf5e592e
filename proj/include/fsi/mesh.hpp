#pragma once

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fsi {

using Point = Eigen::Vector2d;

enum class CellTag { Fluid, Elastic };
enum class EdgeTag { Interface, Outer };

std::string_view to_string(CellTag tag);
std::string_view to_string(EdgeTag tag);
/// Throws UnknownTag.
CellTag parse_cell_tag(std::string_view name);
EdgeTag parse_edge_tag(std::string_view name);

/// An interface facet together with the two cells that share it.
struct InterfacePair {
  int edge = -1;
  int elastic_cell = -1;
  int fluid_cell = -1;
};

/// Triangulation of the disc r < r0 (elastic) and the annulus r0 < r < r1
/// (fluid). Boundary edges run counter-clockwise, so (dy, -dx)/L is the
/// outward normal of the disc on the interface and of the annulus on the
/// outer circle.
struct Mesh {
  int dim = 2;
  double r0 = 0.0;
  double r1 = 0.0;
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> cells;
  std::vector<CellTag> cell_tags;
  std::vector<std::array<int, 2>> boundary_edges;
  std::vector<EdgeTag> edge_tags;
  std::vector<InterfacePair> interface_pairs;
  double h_max = 0.0;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_cells() const { return cells.size(); }
  double signed_area(std::size_t cell) const;
  Point edge_normal(std::size_t edge) const;
  double edge_length(std::size_t edge) const;
};

/// Polar ring mesh with ceil(r0/h) rings in the disc and ceil((r1-r0)/h)
/// rings in the annulus. Throws BadGeometry unless 0 < r0 < r1 and 0 < h < r0.
Mesh build_disc_annulus(double r0, double r1, double h);

/// Same construction with explicit ring counts (used for nested refinement
/// studies).
Mesh build_disc_annulus_rings(double r0, double r1, int elastic_rings, int fluid_rings);

/// Plain-text dump: `node i x y`, `cell i n1 n2 n3 tag`, `edge i n1 n2 tag`.
void write_mesh_text(const Mesh& mesh, std::ostream& os);

}  // namespace fsi
