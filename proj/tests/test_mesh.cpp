#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "vemlump/error.hpp"
#include "vemlump/mesh.hpp"

using namespace vemlump;

TEST_SUITE("mesh") {

TEST_CASE("geometry of simple cells") {
  const std::vector<Point2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CellGeometry g = compute_geometry(square);
  CHECK(g.area == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g.centroid.x == doctest::Approx(0.5));
  CHECK(g.centroid.y == doctest::Approx(0.5));
  CHECK(g.diameter == doctest::Approx(std::sqrt(2.0)));

  g = compute_geometry(std::vector<Point2>{{0, 0}, {1, 0}, {0, 1}});
  CHECK(g.area == doctest::Approx(0.5));
  CHECK(g.centroid.x == doctest::Approx(1.0 / 3.0));
  CHECK(g.centroid.y == doctest::Approx(1.0 / 3.0));
  CHECK(g.diameter == doctest::Approx(std::sqrt(2.0)));

  std::vector<Point2> hex;
  for (int i = 0; i < 6; ++i) hex.push_back({std::cos(i * std::numbers::pi / 3), std::sin(i * std::numbers::pi / 3)});
  // six equilateral triangles of side 1
  CHECK(compute_geometry(hex).area == doctest::Approx(6.0 * std::sqrt(3.0) / 4.0).epsilon(1e-14));
  CHECK(compute_geometry(hex).diameter == doctest::Approx(2.0));

  CHECK_THROWS_AS(compute_geometry(std::vector<Point2>{{0, 0}, {0, 1}, {1, 0}}), MeshError);
  CHECK_THROWS_AS(compute_geometry(std::vector<Point2>{{0, 0}, {1, 0}, {2, 0}}), MeshError);
}

TEST_CASE("mesh construction rejects bad input") {
  std::vector<Point2> v{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK_THROWS_AS(Mesh(v, {{{0, 1, 5}}}), MeshError);
  CHECK_THROWS_AS(Mesh(v, {{{0, 3, 2, 1}}}), MeshError);
  CHECK_THROWS_AS(Mesh(v, {{{0, 1}}}), MeshError);
  // the same directed edge used by two cells
  CHECK_THROWS_AS(Mesh(v, {{{0, 1, 2}}, {{0, 1, 3}}}), MeshError);
}

TEST_CASE("single unit-square cell") {
  std::istringstream in("vem-mesh 1\nvertices 4\n0 0\n1 0\n1 1\n0 1\ncells 1\n4 0 1 2 3\n");
  const Mesh m = read_mesh(in);
  CHECK(m.n_cells() == 1);
  CHECK(m.n_edges() == 4);
  CHECK(m.boundary_edges().size() == 4);
  for (std::size_t v = 0; v < 4; ++v) CHECK(m.is_boundary_vertex(v));
}

TEST_CASE("mesh file errors carry line numbers") {
  {
    std::istringstream in("vem-mesh 1\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n3 0 1 3\n");
    try {
      read_mesh(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 7);
      CHECK(std::string(e.what()).find("out of range") != std::string::npos);
    }
  }
  {
    std::istringstream in("vem-mesh 1\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n3 0 2 1\n");
    try {
      read_mesh(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 7);
    }
  }
  {
    std::istringstream in("not-a-mesh\n");
    try {
      read_mesh(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
    }
  }
}

TEST_CASE("uniform grid without distortion") {
  const Mesh m = generate_mesh({MeshFamily::DistortedQuad, 4, 0.0, 0, 0});
  CHECK(m.n_cells() == 16);
  for (std::size_t c = 0; c < m.n_cells(); ++c) CHECK(m.geometry(c).area == doctest::Approx(0.0625).epsilon(1e-14));
  const MeshStats s = mesh_stats(m);
  CHECK(s.h_max == doctest::Approx(0.25 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(s.h_min == doctest::Approx(0.25 * std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("distorted quads keep the boundary and the cell count") {
  const Mesh m = generate_mesh({MeshFamily::DistortedQuad, 12, 0.3, 0, 7});
  CHECK(m.n_cells() == 144);
  const MeshStats s = mesh_stats(m);
  CHECK(s.total_area == doctest::Approx(1.0).epsilon(1e-12));
  // jitter of at most 0.3/12 per component around 1/12 spacing
  CHECK(s.h_max <= std::sqrt(2.0) * (1.0 + 0.6) / 12.0 + 1e-12);
  CHECK(s.h_max > std::sqrt(2.0) / 12.0);
  for (std::size_t v = 0; v < m.n_vertices(); ++v) {
    const Point2 p = m.vertices()[v];
    const bool on_side = p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0;
    CHECK(on_side == m.is_boundary_vertex(v));
  }
  CHECK_THROWS_AS(generate_mesh({MeshFamily::DistortedQuad, 4, 0.5, 0, 0}), Error);
}

TEST_CASE("serendipity cells have eight collinear-midpoint vertices") {
  const Mesh m = generate_mesh({MeshFamily::SerendipityQ8, 12, 0.2, 0, 3});
  const MeshStats s = mesh_stats(m);
  CHECK(s.max_vertices_per_cell == 8);
  CHECK(s.mean_vertices_per_cell == doctest::Approx(8.0));
  CHECK(s.total_area == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t c = 0; c < m.n_cells(); ++c) {
    const auto poly = m.cell_polygon(c);
    for (std::size_t i = 1; i < 8; i += 2) {
      const Point2 a = poly[i - 1], mid = poly[i], b = poly[(i + 1) % 8];
      CHECK(std::abs(mid.x - 0.5 * (a.x + b.x)) < 1e-15);
      CHECK(std::abs(mid.y - 0.5 * (a.y + b.y)) < 1e-15);
    }
  }
}

TEST_CASE("voronoi meshes partition the square") {
  const Mesh m = generate_mesh({MeshFamily::Voronoi, 12, 0.0, 3, 1});
  const MeshStats s = mesh_stats(m);
  CHECK(s.n_cells == 144);
  CHECK(std::abs(s.total_area - 1.0) < 1e-12);
  CHECK(s.mean_vertices_per_cell >= 5.0);
  CHECK(s.mean_vertices_per_cell <= 7.0);
}

TEST_CASE("edge incidence and a closed boundary loop") {
  for (MeshFamily f : {MeshFamily::DistortedQuad, MeshFamily::SerendipityQ8, MeshFamily::Voronoi}) {
    const Mesh m = generate_mesh({f, 6, f == MeshFamily::Voronoi ? 0.0 : 0.25, 5, 11});
    for (std::size_t e = 0; e < m.n_edges(); ++e) {
      CHECK(m.edge_cell_count(e) >= 1);
      CHECK(m.edge_cell_count(e) <= 2);
    }
    // every boundary vertex touches exactly two boundary edges
    std::vector<int> degree(m.n_vertices(), 0);
    double perimeter = 0.0;
    for (const Edge& e : m.boundary_edges()) {
      ++degree[e.a];
      ++degree[e.b];
      const Point2 a = m.vertices()[e.a], b = m.vertices()[e.b];
      perimeter += std::hypot(a.x - b.x, a.y - b.y);
    }
    for (std::size_t v = 0; v < m.n_vertices(); ++v) CHECK(degree[v] == (m.is_boundary_vertex(v) ? 2 : 0));
    CHECK(perimeter == doctest::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("generation is deterministic and survives a file round trip") {
  for (MeshFamily f : {MeshFamily::DistortedQuad, MeshFamily::SerendipityQ8, MeshFamily::Voronoi}) {
    const MeshSpec spec{f, 7, f == MeshFamily::Voronoi ? 0.0 : 0.3, 4, 42};
    std::ostringstream a, b, c;
    write_mesh(generate_mesh(spec), a);
    write_mesh(generate_mesh(spec), b);
    CHECK(a.str() == b.str());
    std::istringstream in(a.str());
    const Mesh back = read_mesh(in);
    write_mesh(back, c);
    CHECK(a.str() == c.str());
    for (std::size_t cell = 0; cell < back.n_cells(); ++cell) CHECK(back.geometry(cell).area > 0.0);
  }
  std::ostringstream x, y;
  write_mesh(generate_mesh({MeshFamily::Voronoi, 7, 0.0, 4, 1}), x);
  write_mesh(generate_mesh({MeshFamily::Voronoi, 7, 0.0, 4, 2}), y);
  CHECK(x.str() != y.str());
}

TEST_CASE("family names") {
  CHECK(parse_mesh_family("voronoi") == MeshFamily::Voronoi);
  CHECK(to_string(MeshFamily::SerendipityQ8) == "serendipity-q8");
  CHECK_THROWS_AS(parse_mesh_family("hexagons"), Error);
}

}
