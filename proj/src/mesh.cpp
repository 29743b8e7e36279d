#include "vemlump/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <utility>

#include "vemlump/error.hpp"

namespace vemlump {

double signed_area(std::span<const Point2> polygon) {
  const std::size_t n = polygon.size();
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = polygon[i];
    const Point2& q = polygon[(i + 1) % n];
    twice += p.x * q.y - q.x * p.y;
  }
  return 0.5 * twice;
}

CellGeometry compute_geometry(std::span<const Point2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) throw MeshError("polygon has fewer than 3 vertices");

  // Shift to the first vertex so the centroid sums do not lose digits far
  // from the origin.
  const Point2 o = polygon[0];
  double twice_area = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double px = polygon[i].x - o.x, py = polygon[i].y - o.y;
    const double qx = polygon[(i + 1) % n].x - o.x, qy = polygon[(i + 1) % n].y - o.y;
    const double cross = px * qy - qx * py;
    twice_area += cross;
    cx += (px + qx) * cross;
    cy += (py + qy) * cross;
  }
  CellGeometry g;
  g.area = 0.5 * twice_area;
  if (!(g.area > 0.0)) throw MeshError("polygon has non-positive signed area");
  g.centroid = {o.x + cx / (3.0 * twice_area), o.y + cy / (3.0 * twice_area)};

  g.edge_lengths.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = polygon[i];
    const Point2& q = polygon[(i + 1) % n];
    g.edge_lengths[i] = std::hypot(q.x - p.x, q.y - p.y);
    for (std::size_t j = i + 1; j < n; ++j) {
      g.diameter = std::max(g.diameter, std::hypot(polygon[j].x - p.x, polygon[j].y - p.y));
    }
  }
  return g;
}

Mesh::Mesh(std::vector<Point2> vertices, std::vector<Cell> cells)
    : vertices_(std::move(vertices)), cells_(std::move(cells)) {
  for (const Point2& p : vertices_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw MeshError("non-finite vertex coordinate");
  }

  geometry_.reserve(cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& ids = cells_[c].vertex_ids;
    if (ids.size() < 3) throw MeshError("cell " + std::to_string(c) + " has fewer than 3 vertices");
    for (std::size_t v : ids) {
      if (v >= vertices_.size()) throw MeshError("cell " + std::to_string(c) + " references missing vertex");
    }
    try {
      geometry_.push_back(compute_geometry(cell_polygon(c)));
    } catch (const MeshError&) {
      throw MeshError("cell " + std::to_string(c) + " is not counter-clockwise or is degenerate");
    }
  }

  // Edge table. Each directed edge may appear at most once; an interior
  // edge appears once in each direction.
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> directed;
  std::map<std::pair<std::size_t, std::size_t>, int> incidence;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& ids = cells_[c].vertex_ids;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const std::size_t a = ids[i], b = ids[(i + 1) % ids.size()];
      if (a == b) throw MeshError("cell " + std::to_string(c) + " repeats a vertex");
      if (!directed.emplace(std::pair{a, b}, c).second) {
        throw MeshError("directed edge (" + std::to_string(a) + "," + std::to_string(b) +
                        ") used twice; cells overlap or orientation is inconsistent");
      }
      ++incidence[{std::min(a, b), std::max(a, b)}];
    }
  }
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_id;
  for (const auto& [key, count] : incidence) {
    edge_id.emplace(key, edges_.size());
    edges_.push_back({key.first, key.second});
    edge_cells_.push_back(count);
  }
  cell_edges_.resize(cells_.size());
  boundary_vertex_.assign(vertices_.size(), false);
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& ids = cells_[c].vertex_ids;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const std::size_t a = ids[i], b = ids[(i + 1) % ids.size()];
      cell_edges_[c].push_back(edge_id.at({std::min(a, b), std::max(a, b)}));
    }
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edge_cells_[e] == 1) {
      boundary_vertex_[edges_[e].a] = true;
      boundary_vertex_[edges_[e].b] = true;
    }
  }
}

std::vector<Point2> Mesh::cell_polygon(std::size_t c) const {
  std::vector<Point2> poly;
  poly.reserve(cells_.at(c).vertex_ids.size());
  for (std::size_t v : cells_[c].vertex_ids) poly.push_back(vertices_[v]);
  return poly;
}

std::vector<Edge> Mesh::boundary_edges() const {
  std::vector<Edge> out;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edge_cells_[e] == 1) out.push_back(edges_[e]);
  }
  return out;
}

std::string to_string(MeshFamily family) {
  switch (family) {
    case MeshFamily::DistortedQuad: return "distorted-quad";
    case MeshFamily::SerendipityQ8: return "serendipity-q8";
    case MeshFamily::Voronoi: return "voronoi";
  }
  return "unknown";
}

MeshFamily parse_mesh_family(const std::string& name) {
  if (name == "distorted-quad") return MeshFamily::DistortedQuad;
  if (name == "serendipity-q8") return MeshFamily::SerendipityQ8;
  if (name == "voronoi") return MeshFamily::Voronoi;
  throw Error("unknown mesh family '" + name + "'");
}

CellGeometry cell_geometry(const Mesh& mesh, std::size_t cell_id) {
  if (cell_id >= mesh.n_cells()) throw MeshError("cell id out of range");
  return mesh.geometry(cell_id);
}

MeshStats mesh_stats(const Mesh& mesh) {
  MeshStats s;
  s.n_cells = mesh.n_cells();
  s.h_min = mesh.n_cells() ? mesh.geometry(0).diameter : 0.0;
  std::size_t total_vertices = 0;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const CellGeometry& g = mesh.geometry(c);
    s.h_max = std::max(s.h_max, g.diameter);
    s.h_min = std::min(s.h_min, g.diameter);
    s.total_area += g.area;
    const std::size_t nv = mesh.cell(c).vertex_ids.size();
    s.max_vertices_per_cell = std::max(s.max_vertices_per_cell, nv);
    total_vertices += nv;
  }
  if (s.n_cells) s.mean_vertices_per_cell = static_cast<double>(total_vertices) / static_cast<double>(s.n_cells);
  return s;
}

// ---------------------------------------------------------------------------
// Text I/O

void write_mesh(const Mesh& mesh, std::ostream& out) {
  out << "vem-mesh 1\n";
  out << "vertices " << mesh.n_vertices() << '\n';
  out << std::setprecision(17);
  for (const Point2& p : mesh.vertices()) out << p.x << ' ' << p.y << '\n';
  out << "cells " << mesh.n_cells() << '\n';
  for (const Cell& c : mesh.cells()) {
    out << c.vertex_ids.size();
    for (std::size_t v : c.vertex_ids) out << ' ' << v;
    out << '\n';
  }
}

void write_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_mesh(mesh, out);
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-blank line with '#' comments stripped. Throws at end of input.
  std::istringstream next(const char* expecting) {
    std::string line;
    while (std::getline(in_, line)) {
      ++number_;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      return std::istringstream(line);
    }
    throw ParseError(number_ + 1, std::string("unexpected end of file, expecting ") + expecting);
  }

  std::size_t line() const noexcept { return number_; }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

bool at_end(std::istringstream& ss) {
  ss >> std::ws;
  return ss.eof();
}

std::size_t read_count(LineReader& reader, const std::string& keyword) {
  auto ss = reader.next(keyword.c_str());
  std::string word;
  long long count = -1;
  if (!(ss >> word) || word != keyword || !(ss >> count) || count < 0 || !at_end(ss)) {
    throw ParseError(reader.line(), "expected '" + keyword + " <count>'");
  }
  return static_cast<std::size_t>(count);
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  LineReader reader(in);
  {
    auto ss = reader.next("header");
    std::string magic;
    int version = 0;
    if (!(ss >> magic >> version) || magic != "vem-mesh" || version != 1 || !at_end(ss)) {
      throw ParseError(reader.line(), "malformed header, expected 'vem-mesh 1'");
    }
  }
  const std::size_t nv = read_count(reader, "vertices");
  std::vector<Point2> vertices(nv);
  for (auto& p : vertices) {
    auto ss = reader.next("vertex");
    if (!(ss >> p.x >> p.y) || !at_end(ss)) throw ParseError(reader.line(), "malformed vertex line");
  }
  const std::size_t nc = read_count(reader, "cells");
  std::vector<Cell> cells(nc);
  for (auto& cell : cells) {
    auto ss = reader.next("cell");
    long long n = 0;
    if (!(ss >> n) || n < 3) throw ParseError(reader.line(), "cell needs a vertex count >= 3");
    std::vector<Point2> poly;
    for (long long i = 0; i < n; ++i) {
      long long v = -1;
      if (!(ss >> v)) throw ParseError(reader.line(), "missing vertex index");
      if (v < 0 || static_cast<std::size_t>(v) >= nv) {
        throw ParseError(reader.line(), "vertex index " + std::to_string(v) + " out of range [0, " +
                                            std::to_string(nv) + ")");
      }
      cell.vertex_ids.push_back(static_cast<std::size_t>(v));
      poly.push_back(vertices[static_cast<std::size_t>(v)]);
    }
    if (!at_end(ss)) throw ParseError(reader.line(), "trailing tokens after cell indices");
    if (!(signed_area(poly) > 0.0)) throw ParseError(reader.line(), "cell is not counter-clockwise");
  }
  return Mesh(std::move(vertices), std::move(cells));
}

Mesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_mesh(in);
}

}  // namespace vemlump
