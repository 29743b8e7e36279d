#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "vemlump/error.hpp"
#include "vemlump/mesh.hpp"

namespace vemlump {
namespace {

using Polygon = std::vector<Point2>;

// Jittered (n+1)x(n+1) lattice of the unit square; boundary vertices fixed.
std::vector<Point2> jittered_lattice(int n, double distortion, std::mt19937_64& rng) {
  const double spacing = 1.0 / n;
  std::uniform_real_distribution<double> jitter(-distortion * spacing, distortion * spacing);
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      Point2 p{i * spacing, j * spacing};
      // Draw both offsets for every vertex so the stream does not depend on
      // which vertices are interior.
      const double dx = jitter(rng), dy = jitter(rng);
      if (i > 0 && i < n && j > 0 && j < n) {
        p.x += dx;
        p.y += dy;
      }
      pts.push_back(p);
    }
  }
  return pts;
}

Mesh build_checked(std::vector<Point2> vertices, std::vector<Cell> cells, double distortion) {
  try {
    return Mesh(std::move(vertices), std::move(cells));
  } catch (const MeshError& e) {
    throw MeshError("distortion " + std::to_string(distortion) + " produced an invalid mesh: " + e.what());
  }
}

Mesh distorted_quad(const MeshSpec& spec, std::mt19937_64& rng) {
  const int n = spec.n;
  auto vertices = jittered_lattice(n, spec.distortion, rng);
  auto id = [n](int i, int j) { return static_cast<std::size_t>(j * (n + 1) + i); };
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(n * n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      cells.push_back({{id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)}});
    }
  }
  return build_checked(std::move(vertices), std::move(cells), spec.distortion);
}

Mesh serendipity_q8(const MeshSpec& spec, std::mt19937_64& rng) {
  const int n = spec.n;
  auto vertices = jittered_lattice(n, spec.distortion, rng);
  auto corner = [n](int i, int j) { return static_cast<std::size_t>(j * (n + 1) + i); };
  const std::size_t n_corner = vertices.size();
  // Midpoints of horizontal edges (i,j)-(i+1,j), then of vertical edges
  // (i,j)-(i,j+1). Midpoints stay exactly collinear with their edge.
  const std::size_t horizontal = n_corner;
  const std::size_t vertical = horizontal + static_cast<std::size_t>(n * (n + 1));
  auto h_mid = [=](int i, int j) { return horizontal + static_cast<std::size_t>(j * n + i); };
  auto v_mid = [=](int i, int j) { return vertical + static_cast<std::size_t>(j * (n + 1) + i); };
  auto midpoint = [&](std::size_t a, std::size_t b) {
    return Point2{0.5 * (vertices[a].x + vertices[b].x), 0.5 * (vertices[a].y + vertices[b].y)};
  };
  std::vector<Point2> mids;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i < n; ++i) mids.push_back(midpoint(corner(i, j), corner(i + 1, j)));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= n; ++i) mids.push_back(midpoint(corner(i, j), corner(i, j + 1)));
  vertices.insert(vertices.end(), mids.begin(), mids.end());

  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(n * n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      cells.push_back({{corner(i, j), h_mid(i, j), corner(i + 1, j), v_mid(i + 1, j), corner(i + 1, j + 1),
                        h_mid(i, j + 1), corner(i, j + 1), v_mid(i, j)}});
    }
  }
  return build_checked(std::move(vertices), std::move(cells), spec.distortion);
}

// Keeps the part of `poly` where dot(normal, x) <= offset.
Polygon clip_half_plane(const Polygon& poly, Point2 normal, double offset) {
  const double scale = std::max(std::abs(offset), std::hypot(normal.x, normal.y));
  const double eps = 1e-14 * scale;
  Polygon out;
  out.reserve(poly.size() + 1);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % poly.size()];
    const double dp = normal.x * p.x + normal.y * p.y - offset;
    const double dq = normal.x * q.x + normal.y * q.y - offset;
    const bool p_in = dp <= eps;
    if (p_in) out.push_back(p);
    if ((dp < -eps && dq > eps) || (dp > eps && dq < -eps)) {
      const double t = dp / (dp - dq);
      out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
    }
  }
  return out;
}

std::vector<Polygon> voronoi_cells(const std::vector<Point2>& seeds) {
  const Polygon square{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  std::vector<Polygon> cells(seeds.size());
  std::vector<std::size_t> order(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const Point2 s = seeds[i];
    auto dist2 = [&](std::size_t j) {
      return (seeds[j].x - s.x) * (seeds[j].x - s.x) + (seeds[j].y - s.y) * (seeds[j].y - s.y);
    };
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double da = dist2(a), db = dist2(b);
      return da != db ? da < db : a < b;
    });
    Polygon poly = square;
    for (std::size_t j : order) {
      if (j == i) continue;
      double reach2 = 0.0;
      for (const Point2& p : poly) reach2 = std::max(reach2, (p.x - s.x) * (p.x - s.x) + (p.y - s.y) * (p.y - s.y));
      // Bisectors farther than twice the cell radius cannot cut the cell.
      if (dist2(j) > 4.0 * reach2) break;
      const Point2 normal{seeds[j].x - s.x, seeds[j].y - s.y};
      const Point2 mid{0.5 * (seeds[j].x + s.x), 0.5 * (seeds[j].y + s.y)};
      poly = clip_half_plane(poly, normal, normal.x * mid.x + normal.y * mid.y);
    }
    cells[i] = std::move(poly);
  }
  return cells;
}

double snap_unit(double v) {
  if (std::abs(v) < 1e-12) return 0.0;
  if (std::abs(v - 1.0) < 1e-12) return 1.0;
  return v;
}

// Merges coincident polygon corners (within `tol`) into shared vertices.
Mesh weld(const std::vector<Polygon>& polys, double tol) {
  std::vector<Point2> vertices;
  std::unordered_map<long long, std::vector<std::size_t>> buckets;
  auto key = [tol](long long ix, long long iy) { return ix * 1000003LL + iy; };
  auto find_or_add = [&](Point2 p) {
    p = {snap_unit(p.x), snap_unit(p.y)};
    const auto ix = static_cast<long long>(std::floor(p.x / tol));
    const auto iy = static_cast<long long>(std::floor(p.y / tol));
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = buckets.find(key(ix + dx, iy + dy));
        if (it == buckets.end()) continue;
        for (std::size_t v : it->second) {
          if (std::abs(vertices[v].x - p.x) <= tol && std::abs(vertices[v].y - p.y) <= tol) return v;
        }
      }
    }
    vertices.push_back(p);
    buckets[key(ix, iy)].push_back(vertices.size() - 1);
    return vertices.size() - 1;
  };

  std::vector<Cell> cells;
  cells.reserve(polys.size());
  for (const Polygon& poly : polys) {
    Cell cell;
    for (const Point2& p : poly) {
      const std::size_t v = find_or_add(p);
      if (cell.vertex_ids.empty() || cell.vertex_ids.back() != v) cell.vertex_ids.push_back(v);
    }
    while (cell.vertex_ids.size() > 1 && cell.vertex_ids.front() == cell.vertex_ids.back()) cell.vertex_ids.pop_back();
    cells.push_back(std::move(cell));
  }
  return Mesh(std::move(vertices), std::move(cells));
}

Mesh voronoi(const MeshSpec& spec, std::mt19937_64& rng) {
  const std::size_t count = static_cast<std::size_t>(spec.n) * static_cast<std::size_t>(spec.n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point2> seeds;
  seeds.reserve(count);
  while (seeds.size() < count) {
    const Point2 p{unit(rng), unit(rng)};
    const bool too_close = std::any_of(seeds.begin(), seeds.end(), [&](const Point2& q) {
      return std::hypot(p.x - q.x, p.y - q.y) < 1e-9;
    });
    if (!too_close) seeds.push_back(p);
  }
  auto cells = voronoi_cells(seeds);
  for (int it = 0; it < spec.lloyd_iters; ++it) {
    for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = compute_geometry(cells[i]).centroid;
    cells = voronoi_cells(seeds);
  }
  return weld(cells, 1e-10);
}

}  // namespace

Mesh generate_mesh(const MeshSpec& spec) {
  if (spec.n < 2) throw MeshError("mesh resolution n must be >= 2");
  if (!(spec.distortion >= 0.0 && spec.distortion < 0.5)) throw MeshError("distortion must lie in [0, 0.5)");
  if (spec.lloyd_iters < 0) throw MeshError("lloyd_iters must be >= 0");
  std::mt19937_64 rng(spec.seed);
  switch (spec.family) {
    case MeshFamily::DistortedQuad: return distorted_quad(spec, rng);
    case MeshFamily::SerendipityQ8: return serendipity_q8(spec, rng);
    case MeshFamily::Voronoi: return voronoi(spec, rng);
  }
  throw MeshError("unknown mesh family");
}

}  // namespace vemlump
