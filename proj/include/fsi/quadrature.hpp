#pragma once

#include <array>
#include <functional>
#include <string_view>
#include <vector>

#include "fsi/mesh.hpp"

namespace fsi {

/// Triangle rule in barycentric coordinates; weights sum to 1/2, the area of
/// the reference triangle.
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;
};

/// Rule on [0, 1]; weights sum to 1.
struct EdgeRule {
  std::vector<double> points;
  std::vector<double> weights;
  int degree = 0;
};

/// Six-point symmetric rule, exact for degree 4.
const QuadratureRule& triangle_rule();
/// Three-point Gauss-Legendre, exact for degree 5.
const EdgeRule& edge_rule();

double integrate_domain(const Mesh& mesh, CellTag tag, const std::function<double(const Point&)>& f,
                        const QuadratureRule& rule = triangle_rule());
double integrate_domain(const Mesh& mesh, std::string_view tag, const std::function<double(const Point&)>& f,
                        const QuadratureRule& rule = triangle_rule());

/// f receives the quadrature point and the unit normal (outward from the
/// disc on the interface, outward from the annulus on the outer circle).
double integrate_boundary(const Mesh& mesh, EdgeTag tag,
                          const std::function<double(const Point&, const Point&)>& f,
                          const EdgeRule& rule = edge_rule());
double integrate_boundary(const Mesh& mesh, std::string_view tag,
                          const std::function<double(const Point&, const Point&)>& f,
                          const EdgeRule& rule = edge_rule());

}  // namespace fsi
