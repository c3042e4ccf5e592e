#include "fsi/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>

#include "fsi/error.hpp"

namespace fsi {

std::string_view to_string(CellTag tag) { return tag == CellTag::Fluid ? "fluid" : "elastic"; }

std::string_view to_string(EdgeTag tag) { return tag == EdgeTag::Interface ? "interface" : "outer"; }

CellTag parse_cell_tag(std::string_view name) {
  if (name == "fluid") return CellTag::Fluid;
  if (name == "elastic") return CellTag::Elastic;
  throw Error(ErrorCode::UnknownTag, "cell tag '" + std::string(name) + "'");
}

EdgeTag parse_edge_tag(std::string_view name) {
  if (name == "interface") return EdgeTag::Interface;
  if (name == "outer") return EdgeTag::Outer;
  throw Error(ErrorCode::UnknownTag, "edge tag '" + std::string(name) + "'");
}

double Mesh::signed_area(std::size_t cell) const {
  const auto& c = cells[cell];
  const Point e1 = nodes[static_cast<std::size_t>(c[1])] - nodes[static_cast<std::size_t>(c[0])];
  const Point e2 = nodes[static_cast<std::size_t>(c[2])] - nodes[static_cast<std::size_t>(c[0])];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

Point Mesh::edge_normal(std::size_t edge) const {
  const auto& e = boundary_edges[edge];
  const Point d = nodes[static_cast<std::size_t>(e[1])] - nodes[static_cast<std::size_t>(e[0])];
  return Point(d.y(), -d.x()) / d.norm();
}

double Mesh::edge_length(std::size_t edge) const {
  const auto& e = boundary_edges[edge];
  return (nodes[static_cast<std::size_t>(e[1])] - nodes[static_cast<std::size_t>(e[0])]).norm();
}

namespace {

int ring_size(double r, double h) {
  const int k = static_cast<int>(std::ceil(r / h - 1e-9));
  return 6 * std::max(1, k);
}

// Triangulates the strip between two concentric rings by walking both
// angle sequences in increasing order.
void zip_rings(const std::vector<int>& a, const std::vector<int>& b, CellTag tag, Mesh& m) {
  const auto na = static_cast<long>(a.size());
  const auto nb = static_cast<long>(b.size());
  long i = 0;
  long j = 0;
  while (i < na || j < nb) {
    const bool advance_a = j == nb || (i < na && (i + 1) * nb <= (j + 1) * na);
    std::array<int, 3> tri;
    if (advance_a) {
      tri = {a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>((i + 1) % na)],
             b[static_cast<std::size_t>(j % nb)]};
      ++i;
    } else {
      tri = {a[static_cast<std::size_t>(i % na)], b[static_cast<std::size_t>((j + 1) % nb)],
             b[static_cast<std::size_t>(j)]};
      ++j;
    }
    m.cells.push_back(tri);
    m.cell_tags.push_back(tag);
  }
}

}  // namespace

Mesh build_disc_annulus_rings(double r0, double r1, int elastic_rings, int fluid_rings) {
  if (!(r0 > 0.0) || !(r1 > r0)) throw Error(ErrorCode::BadGeometry, "need 0 < r0 < r1");
  if (elastic_rings < 1 || fluid_rings < 1) throw Error(ErrorCode::BadGeometry, "ring counts must be positive");

  Mesh m;
  m.r0 = r0;
  m.r1 = r1;
  const double he = r0 / elastic_rings;
  const double hf = (r1 - r0) / fluid_rings;
  const double href = std::min(he, hf);

  m.nodes.emplace_back(0.0, 0.0);
  std::vector<std::vector<int>> rings;
  rings.push_back({0});
  const int total = elastic_rings + fluid_rings;
  for (int k = 1; k <= total; ++k) {
    double r = k <= elastic_rings ? k * he : r0 + (k - elastic_rings) * hf;
    if (k == elastic_rings) r = r0;
    if (k == total) r = r1;
    const int n = ring_size(r, href);
    std::vector<int> ring;
    ring.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double th = 2.0 * std::numbers::pi * i / n;
      ring.push_back(static_cast<int>(m.nodes.size()));
      m.nodes.emplace_back(r * std::cos(th), r * std::sin(th));
    }
    rings.push_back(std::move(ring));
  }

  // center fan
  const auto& first = rings[1];
  for (std::size_t i = 0; i < first.size(); ++i) {
    m.cells.push_back({0, first[i], first[(i + 1) % first.size()]});
    m.cell_tags.push_back(CellTag::Elastic);
  }
  for (int k = 1; k < total; ++k) {
    const CellTag tag = k + 1 <= elastic_rings ? CellTag::Elastic : CellTag::Fluid;
    zip_rings(rings[static_cast<std::size_t>(k)], rings[static_cast<std::size_t>(k + 1)], tag, m);
  }
  for (std::size_t c = 0; c < m.cells.size(); ++c) {
    if (m.signed_area(c) < 0.0) std::swap(m.cells[c][1], m.cells[c][2]);
  }

  auto add_ring_edges = [&m](const std::vector<int>& ring, EdgeTag tag) {
    for (std::size_t i = 0; i < ring.size(); ++i) {
      m.boundary_edges.push_back({ring[i], ring[(i + 1) % ring.size()]});
      m.edge_tags.push_back(tag);
    }
  };
  add_ring_edges(rings[static_cast<std::size_t>(elastic_rings)], EdgeTag::Interface);
  add_ring_edges(rings[static_cast<std::size_t>(total)], EdgeTag::Outer);

  std::map<std::pair<int, int>, std::vector<int>> edge_cells;
  for (std::size_t c = 0; c < m.cells.size(); ++c) {
    const auto& t = m.cells[c];
    for (int e = 0; e < 3; ++e) {
      const int p = t[static_cast<std::size_t>(e)];
      const int q = t[static_cast<std::size_t>((e + 1) % 3)];
      edge_cells[{std::min(p, q), std::max(p, q)}].push_back(static_cast<int>(c));
    }
    for (int e = 0; e < 3; ++e) {
      const Point d = m.nodes[static_cast<std::size_t>(t[static_cast<std::size_t>((e + 1) % 3)])] -
                      m.nodes[static_cast<std::size_t>(t[static_cast<std::size_t>(e)])];
      m.h_max = std::max(m.h_max, d.norm());
    }
  }
  for (std::size_t e = 0; e < m.boundary_edges.size(); ++e) {
    if (m.edge_tags[e] != EdgeTag::Interface) continue;
    const auto& be = m.boundary_edges[e];
    InterfacePair pair;
    pair.edge = static_cast<int>(e);
    for (int c : edge_cells.at({std::min(be[0], be[1]), std::max(be[0], be[1])})) {
      if (m.cell_tags[static_cast<std::size_t>(c)] == CellTag::Elastic)
        pair.elastic_cell = c;
      else
        pair.fluid_cell = c;
    }
    if (pair.elastic_cell < 0 || pair.fluid_cell < 0)
      throw Error(ErrorCode::BadGeometry, "interface facet not shared by both subdomains");
    m.interface_pairs.push_back(pair);
  }
  return m;
}

Mesh build_disc_annulus(double r0, double r1, double h) {
  if (!(r0 > 0.0) || !(r1 > r0)) throw Error(ErrorCode::BadGeometry, "need 0 < r0 < r1");
  if (!(h > 0.0) || !(h < r0)) throw Error(ErrorCode::BadGeometry, "need 0 < h < r0");
  const int ne = static_cast<int>(std::ceil(r0 / h - 1e-9));
  const int nf = static_cast<int>(std::ceil((r1 - r0) / h - 1e-9));
  return build_disc_annulus_rings(r0, r1, ne, nf);
}

void write_mesh_text(const Mesh& mesh, std::ostream& os) {
  char buf[128];
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "node %zu %.17g %.17g\n", i, mesh.nodes[i].x(), mesh.nodes[i].y());
    os << buf;
  }
  for (std::size_t i = 0; i < mesh.cells.size(); ++i) {
    const auto& c = mesh.cells[i];
    os << "cell " << i << ' ' << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << to_string(mesh.cell_tags[i]) << '\n';
  }
  for (std::size_t i = 0; i < mesh.boundary_edges.size(); ++i) {
    const auto& e = mesh.boundary_edges[i];
    os << "edge " << i << ' ' << e[0] << ' ' << e[1] << ' ' << to_string(mesh.edge_tags[i]) << '\n';
  }
}

}  // namespace fsi
