#pragma once

// Polygonal meshes of the unit square: storage, derived geometry and
// topology, the three generator families, statistics and text I/O.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace vemlump {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Ordered CCW vertex indices of one polygonal cell.
struct Cell {
  std::vector<std::size_t> vertex_ids;
};

struct CellGeometry {
  double area = 0.0;
  Point2 centroid;
  double diameter = 0.0;
  std::vector<double> edge_lengths;
};

/// Undirected edge, stored with a < b.
struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
};

/// Signed shoelace area of a closed polygon (positive for CCW).
double signed_area(std::span<const Point2> polygon);

/// Area, centroid, diameter and edge lengths of a simple polygon.
/// Throws MeshError when the signed area is not positive.
CellGeometry compute_geometry(std::span<const Point2> polygon);

/// Immutable polygonal mesh with cached geometry and edge topology.
///
/// Construction validates every cell (>= 3 vertices, indices in range,
/// positive signed area) and the edge incidence (each undirected edge is
/// used by one or two cells, once per cell orientation). Boundary edges are
/// exactly the edges with a single incident cell.
class Mesh {
 public:
  Mesh(std::vector<Point2> vertices, std::vector<Cell> cells);

  std::size_t n_vertices() const noexcept { return vertices_.size(); }
  std::size_t n_cells() const noexcept { return cells_.size(); }
  std::size_t n_edges() const noexcept { return edges_.size(); }

  const std::vector<Point2>& vertices() const noexcept { return vertices_; }
  const std::vector<Cell>& cells() const noexcept { return cells_; }
  const Cell& cell(std::size_t c) const { return cells_.at(c); }
  const CellGeometry& geometry(std::size_t c) const { return geometry_.at(c); }

  /// Vertex coordinates of cell c in CCW order.
  std::vector<Point2> cell_polygon(std::size_t c) const;

  /// Global edges sorted by (a, b).
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// Global edge id of local edge i (vertex i to vertex i+1) of cell c.
  const std::vector<std::size_t>& cell_edges(std::size_t c) const { return cell_edges_.at(c); }
  /// Number of cells sharing edge e (1 on the boundary, 2 inside).
  int edge_cell_count(std::size_t e) const { return edge_cells_.at(e); }
  bool is_boundary_edge(std::size_t e) const { return edge_cells_.at(e) == 1; }
  bool is_boundary_vertex(std::size_t v) const { return boundary_vertex_.at(v); }
  std::vector<Edge> boundary_edges() const;

 private:
  std::vector<Point2> vertices_;
  std::vector<Cell> cells_;
  std::vector<CellGeometry> geometry_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> cell_edges_;
  std::vector<int> edge_cells_;
  std::vector<bool> boundary_vertex_;
};

enum class MeshFamily { DistortedQuad, SerendipityQ8, Voronoi };

std::string to_string(MeshFamily family);
/// Parses "distorted-quad", "serendipity-q8" or "voronoi".
MeshFamily parse_mesh_family(const std::string& name);

struct MeshSpec {
  MeshFamily family = MeshFamily::DistortedQuad;
  int n = 4;
  /// Jitter amplitude as a fraction of the grid spacing, in [0, 0.5).
  double distortion = 0.0;
  int lloyd_iters = 0;
  std::uint64_t seed = 0;
};

/// Generates a mesh of the unit square. Deterministic for a fixed spec.
Mesh generate_mesh(const MeshSpec& spec);

CellGeometry cell_geometry(const Mesh& mesh, std::size_t cell_id);

struct MeshStats {
  double h_max = 0.0;
  double h_min = 0.0;
  std::size_t n_cells = 0;
  std::size_t max_vertices_per_cell = 0;
  double mean_vertices_per_cell = 0.0;
  double total_area = 0.0;
};

MeshStats mesh_stats(const Mesh& mesh);

void write_mesh(const Mesh& mesh, std::ostream& out);
void write_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh read_mesh(std::istream& in);
Mesh read_mesh(const std::filesystem::path& path);

}  // namespace vemlump
