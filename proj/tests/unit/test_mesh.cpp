#include <cmath>
#include <numbers>
#include <map>
#include <sstream>

#include "doctest.h"
#include "fsi/error.hpp"
#include "fsi/quadrature.hpp"

using namespace fsi;

TEST_CASE("mesh cells are positively oriented and tagged by radius") {
  const Mesh m = build_disc_annulus(1.0, 2.0, 0.25);
  REQUIRE(m.num_cells() == m.cell_tags.size());
  for (std::size_t c = 0; c < m.num_cells(); ++c) {
    CHECK(m.signed_area(c) > 0.0);
    Point centroid = (m.nodes[m.cells[c][0]] + m.nodes[m.cells[c][1]] + m.nodes[m.cells[c][2]]) / 3.0;
    CHECK((centroid.norm() < 1.0) == (m.cell_tags[c] == CellTag::Elastic));
  }
}

TEST_CASE("boundary edges lie on their circles with outward normals") {
  const Mesh m = build_disc_annulus(1.0, 2.0, 0.25);
  std::size_t interface = 0;
  for (std::size_t e = 0; e < m.boundary_edges.size(); ++e) {
    const double r = m.edge_tags[e] == EdgeTag::Interface ? 1.0 : 2.0;
    const Point a = m.nodes[m.boundary_edges[e][0]];
    const Point b = m.nodes[m.boundary_edges[e][1]];
    CHECK(a.norm() == doctest::Approx(r));
    CHECK(b.norm() == doctest::Approx(r));
    // outward from the disc on the interface, from the annulus on the outer circle
    CHECK(m.edge_normal(e).dot((a + b) / 2.0) > 0.0);
    if (m.edge_tags[e] == EdgeTag::Interface) ++interface;
  }
  CHECK(m.interface_pairs.size() == interface);
  for (const auto& p : m.interface_pairs) {
    CHECK(m.cell_tags[static_cast<std::size_t>(p.elastic_cell)] == CellTag::Elastic);
    CHECK(m.cell_tags[static_cast<std::size_t>(p.fluid_cell)] == CellTag::Fluid);
  }
}

TEST_CASE("mesh is conforming: every interior edge is shared by two cells") {
  const Mesh m = build_disc_annulus(1.0, 2.0, 0.3);
  std::map<std::pair<int, int>, int> count;
  for (const auto& c : m.cells) {
    for (int k = 0; k < 3; ++k) {
      int a = c[k], b = c[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++count[{a, b}];
    }
  }
  std::size_t once = 0;
  for (const auto& [e, n] : count) {
    CHECK(n <= 2);
    if (n == 1) ++once;
  }
  // only the outer circle is a true boundary of the whole triangulation
  std::size_t outer = 0;
  for (auto t : m.edge_tags) outer += t == EdgeTag::Outer;
  CHECK(once == outer);
}

TEST_CASE("bad geometry is rejected") {
  CHECK_THROWS_AS(build_disc_annulus(2.0, 1.0, 0.1), Error);
  CHECK_THROWS_AS(build_disc_annulus(1.0, 2.0, 0.0), Error);
  CHECK_THROWS_AS(build_disc_annulus(1.0, 2.0, 1.5), Error);
}

TEST_CASE("tag names round trip and unknown tags throw") {
  CHECK(parse_cell_tag(to_string(CellTag::Fluid)) == CellTag::Fluid);
  CHECK(parse_edge_tag(to_string(EdgeTag::Interface)) == EdgeTag::Interface);
  try {
    parse_cell_tag("solid");
    FAIL("expected UnknownTag");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownTag);
  }
}

TEST_CASE("mesh text dump lists every entity") {
  const Mesh m = build_disc_annulus(1.0, 2.0, 0.5);
  std::ostringstream os;
  write_mesh_text(m, os);
  std::istringstream is(os.str());
  std::string line;
  std::size_t nodes = 0, cells = 0, edges = 0;
  while (std::getline(is, line)) {
    nodes += line.rfind("node ", 0) == 0;
    cells += line.rfind("cell ", 0) == 0;
    edges += line.rfind("edge ", 0) == 0;
  }
  CHECK(nodes == m.num_nodes());
  CHECK(cells == m.num_cells());
  CHECK(edges == m.boundary_edges.size());
}

TEST_CASE("triangle rule is exact for monomials up to degree 4") {
  // integral over the reference triangle of x^a y^b = a! b! / (a + b + 2)!
  const auto& rule = triangle_rule();
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; a + b <= 4; ++b) {
      double q = 0.0;
      for (std::size_t i = 0; i < rule.points.size(); ++i) {
        q += rule.weights[i] * std::pow(rule.points[i][1], a) * std::pow(rule.points[i][2], b);
      }
      const double exact = std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3);
      CHECK(q == doctest::Approx(exact).epsilon(1e-13));
    }
  }
}

TEST_CASE("edge rule is exact up to degree 5") {
  const auto& rule = edge_rule();
  for (int k = 0; k <= 5; ++k) {
    double q = 0.0;
    for (std::size_t i = 0; i < rule.points.size(); ++i) q += rule.weights[i] * std::pow(rule.points[i], k);
    CHECK(q == doctest::Approx(1.0 / (k + 1)).epsilon(1e-14));
  }
}

TEST_CASE("domain and boundary integrals converge to the continuous values") {
  const double pi = std::numbers::pi;
  double prev = 1.0;
  for (double h : {0.2, 0.1, 0.05}) {
    const Mesh m = build_disc_annulus(1.0, 2.0, h);
    const double disc_area = integrate_domain(m, CellTag::Elastic, [](const Point&) { return 1.0; });
    const double ann_area = integrate_domain(m, "fluid", [](const Point&) { return 1.0; });
    CHECK(std::abs(disc_area + ann_area - 4.0 * pi) < 0.5 * h * h * 4.0 * pi);
    const double err = std::abs(disc_area - pi);
    CHECK(err < prev);
    prev = err;
    // divergence theorem for x on the disc: integral of x.n = 2 |disc|
    const double flux = integrate_boundary(m, EdgeTag::Interface, [](const Point& x, const Point& n) { return x.dot(n); });
    CHECK(flux == doctest::Approx(2.0 * disc_area).epsilon(1e-12));
  }
}
