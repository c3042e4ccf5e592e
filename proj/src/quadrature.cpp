#include "fsi/quadrature.hpp"

#include <cmath>

#include "fsi/parallel.hpp"

namespace fsi {

const QuadratureRule& triangle_rule() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    constexpr double a = 0.445948490915964886318329253883;
    constexpr double wa = 0.223381589678011465944827405341 / 2.0;
    constexpr double b = 0.091576213509770743459571463402;
    constexpr double wb = (1.0 / 3.0 - 0.223381589678011465944827405341) / 2.0;
    r.points = {{1 - 2 * a, a, a}, {a, 1 - 2 * a, a}, {a, a, 1 - 2 * a},
                {1 - 2 * b, b, b}, {b, 1 - 2 * b, b}, {b, b, 1 - 2 * b}};
    r.weights = {wa, wa, wa, wb, wb, wb};
    r.degree = 4;
    return r;
  }();
  return rule;
}

const EdgeRule& edge_rule() {
  static const EdgeRule rule = [] {
    EdgeRule r;
    const double s = std::sqrt(0.6);
    r.points = {0.5 * (1 - s), 0.5, 0.5 * (1 + s)};
    r.weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    r.degree = 5;
    return r;
  }();
  return rule;
}

double integrate_domain(const Mesh& mesh, CellTag tag, const std::function<double(const Point&)>& f,
                        const QuadratureRule& rule) {
  return deterministic_sum(mesh.num_cells(), [&](std::size_t c) {
    if (mesh.cell_tags[c] != tag) return 0.0;
    const auto& t = mesh.cells[c];
    const Point& p0 = mesh.nodes[static_cast<std::size_t>(t[0])];
    const Point& p1 = mesh.nodes[static_cast<std::size_t>(t[1])];
    const Point& p2 = mesh.nodes[static_cast<std::size_t>(t[2])];
    const double jac = 2.0 * std::abs(mesh.signed_area(c));
    double s = 0.0;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& l = rule.points[q];
      s += rule.weights[q] * f(l[0] * p0 + l[1] * p1 + l[2] * p2);
    }
    return s * jac;
  });
}

double integrate_domain(const Mesh& mesh, std::string_view tag, const std::function<double(const Point&)>& f,
                        const QuadratureRule& rule) {
  return integrate_domain(mesh, parse_cell_tag(tag), f, rule);
}

double integrate_boundary(const Mesh& mesh, EdgeTag tag,
                          const std::function<double(const Point&, const Point&)>& f, const EdgeRule& rule) {
  return deterministic_sum(mesh.boundary_edges.size(), [&](std::size_t e) {
    if (mesh.edge_tags[e] != tag) return 0.0;
    const auto& be = mesh.boundary_edges[e];
    const Point& a = mesh.nodes[static_cast<std::size_t>(be[0])];
    const Point& b = mesh.nodes[static_cast<std::size_t>(be[1])];
    const Point n = mesh.edge_normal(e);
    const double len = (b - a).norm();
    double s = 0.0;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const double t = rule.points[q];
      s += rule.weights[q] * f((1 - t) * a + t * b, n);
    }
    return s * len;
  });
}

double integrate_boundary(const Mesh& mesh, std::string_view tag,
                          const std::function<double(const Point&, const Point&)>& f, const EdgeRule& rule) {
  return integrate_boundary(mesh, parse_edge_tag(tag), f, rule);
}

}  // namespace fsi
