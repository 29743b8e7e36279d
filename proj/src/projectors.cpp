#include "vemlump/projectors.hpp"

#include <cmath>
#include <string>

#include "vemlump/error.hpp"

namespace vemlump {

namespace {

Eigen::MatrixXd solve_checked(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::MatrixXd x = lu.solve(b);
  const double rhs = b.norm();
  const double residual = (a * x - b).norm();
  if (!x.allFinite() || residual > 1e-10 * std::max(rhs, 1e-300)) {
    throw NumericalError(std::string(what) + ": local solve failed (residual " + std::to_string(residual) + ")");
  }
  return x;
}

Point2 lerp(Point2 a, Point2 b, double t) {
  const double s = 0.5 * (t + 1.0);
  return {a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
}

// Maps the edge trace data [v(-1), v(+1), mom_0, ..., mom_{k-2}] to the
// coefficients of the trace in the orthonormal Legendre basis L_0..L_k.
Eigen::MatrixXd trace_reconstruction(int k) {
  const auto n = static_cast<Eigen::Index>(k + 1);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    v(0, j) = edge_legendre(static_cast<int>(j), -1.0);
    v(1, j) = edge_legendre(static_cast<int>(j), 1.0);
  }
  for (Eigen::Index j = 0; j + 2 < n; ++j) v(j + 2, j) = 1.0;
  return v.inverse();
}

}  // namespace

Element Element::from_polygon(std::vector<Point2> polygon) {
  Element e;
  e.geometry = compute_geometry(polygon);
  e.edge_reversed.assign(polygon.size(), false);
  e.vertices = std::move(polygon);
  return e;
}

Element Element::from_mesh(const Mesh& mesh, std::size_t cell) {
  Element e;
  e.vertices = mesh.cell_polygon(cell);
  e.geometry = mesh.geometry(cell);
  const auto& ids = mesh.cell(cell).vertex_ids;
  e.edge_reversed.resize(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) e.edge_reversed[i] = ids[i] > ids[(i + 1) % ids.size()];
  return e;
}

std::pair<Point2, Point2> Element::edge_endpoints(std::size_t i) const {
  const Point2 a = vertices[i];
  const Point2 b = vertices[(i + 1) % vertices.size()];
  return edge_reversed[i] ? std::pair{b, a} : std::pair{a, b};
}

std::size_t dof_count(std::size_t n_vertices, int k) {
  const auto kk = static_cast<std::size_t>(k);
  return n_vertices + n_vertices * (kk - 1) + (kk - 1) * kk / 2;
}

DofLayout build_dof_layout(std::size_t n_vertices, int k) {
  if (k < 1) throw Error("polynomial order k must be >= 1");
  if (n_vertices < 3) throw Error("an element needs at least 3 vertices");
  DofLayout layout;
  layout.k = k;
  layout.n_vertices = n_vertices;
  for (std::size_t v = 0; v < n_vertices; ++v) layout.slots.push_back({DofKind::Vertex, v, 0});
  for (std::size_t e = 0; e < n_vertices; ++e) {
    for (std::size_t j = 0; j + 1 < static_cast<std::size_t>(k); ++j) layout.slots.push_back({DofKind::EdgeMoment, e, j});
  }
  for (std::size_t p = 0; p < polynomial_dim(k - 2); ++p) layout.slots.push_back({DofKind::InteriorMoment, 0, p});
  return layout;
}

Eigen::MatrixXd build_dof_matrix(const Element& element, const MonomialBasis& basis, const DofLayout& layout) {
  const auto nk = static_cast<Eigen::Index>(basis.size());
  const auto ndof = static_cast<Eigen::Index>(layout.size());
  const GaussRule& rule = gauss_legendre(layout.k + 1);
  const double area = element.geometry.area;
  Eigen::MatrixXd d(nk, ndof);
  for (Eigen::Index i = 0; i < ndof; ++i) {
    const DofSlot& slot = layout.slots[static_cast<std::size_t>(i)];
    switch (slot.kind) {
      case DofKind::Vertex:
        d.col(i) = basis.values(element.vertices[slot.entity]);
        break;
      case DofKind::EdgeMoment: {
        const auto [a, b] = element.edge_endpoints(slot.entity);
        Eigen::VectorXd col = Eigen::VectorXd::Zero(nk);
        for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
          const double t = rule.nodes[g];
          col += 0.5 * rule.weights[g] * edge_legendre(static_cast<int>(slot.order), t) * basis.values(lerp(a, b, t));
        }
        d.col(i) = col;
        break;
      }
      case DofKind::InteriorMoment: {
        const MultiIndex beta = basis.index(slot.order);
        for (Eigen::Index r = 0; r < nk; ++r) {
          const MultiIndex alpha = basis.index(static_cast<std::size_t>(r));
          d(r, i) = polygon_moment(element.vertices, basis.centroid(), basis.diameter(),
                                   {alpha.a1 + beta.a1, alpha.a2 + beta.a2}) /
                    area;
        }
        break;
      }
    }
  }
  return d;
}

Eigen::MatrixXd energy_rhs(const Element& element, const MonomialBasis& basis, const DofLayout& layout) {
  const int k = layout.k;
  const auto nk = static_cast<Eigen::Index>(basis.size());
  const double h = basis.diameter();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nk, static_cast<Eigen::Index>(layout.size()));

  // Interior part: -int_E lap(m_alpha) psi_i, where lap(m_alpha) is a
  // combination of degree <= k-2 monomials whose moments are DOFs.
  if (k >= 2) {
    const double area = element.geometry.area;
    for (Eigen::Index r = 0; r < nk; ++r) {
      const MultiIndex a = basis.index(static_cast<std::size_t>(r));
      if (a.a1 >= 2) {
        b(r, static_cast<Eigen::Index>(layout.interior_slot(monomial_position({a.a1 - 2, a.a2})))) -=
            area * a.a1 * (a.a1 - 1) / (h * h);
      }
      if (a.a2 >= 2) {
        b(r, static_cast<Eigen::Index>(layout.interior_slot(monomial_position({a.a1, a.a2 - 2})))) -=
            area * a.a2 * (a.a2 - 1) / (h * h);
      }
    }
  }

  // Boundary part: int_{dE} (grad m_alpha . n) psi_i, with the trace of
  // psi_i on each edge rebuilt from its endpoint values and edge moments.
  const Eigen::MatrixXd rebuild = trace_reconstruction(k);
  const GaussRule& rule = gauss_legendre(k + 1);
  const std::size_t nv = element.n_vertices();
  for (std::size_t e = 0; e < nv; ++e) {
    const Point2 p = element.vertices[e];
    const Point2 q = element.vertices[(e + 1) % nv];
    const double len = std::hypot(q.x - p.x, q.y - p.y);
    const double nx = (q.y - p.y) / len, ny = -(q.x - p.x) / len;
    const auto [start, end] = element.edge_endpoints(e);
    // Local slots carrying the trace data, in reconstruction order.
    std::vector<std::size_t> data_slots;
    data_slots.push_back(layout.vertex_slot(element.edge_reversed[e] ? (e + 1) % nv : e));
    data_slots.push_back(layout.vertex_slot(element.edge_reversed[e] ? e : (e + 1) % nv));
    for (std::size_t j = 0; j + 1 < static_cast<std::size_t>(k); ++j) data_slots.push_back(layout.edge_slot(e, j));

    for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
      const double t = rule.nodes[g];
      const Point2 x = lerp(start, end, t);
      const double w = 0.5 * len * rule.weights[g];
      Eigen::VectorXd legendre(k + 1);
      for (int n = 0; n <= k; ++n) legendre[n] = edge_legendre(n, t);
      // Value at t of the trace generated by each unit data vector.
      const Eigen::VectorXd shape = rebuild.transpose() * legendre;
      for (Eigen::Index r = 0; r < nk; ++r) {
        const MonomialValue mv = basis.eval(basis.index(static_cast<std::size_t>(r)), x);
        const double flux = mv.gradient[0] * nx + mv.gradient[1] * ny;
        if (flux == 0.0) continue;
        for (std::size_t s = 0; s < data_slots.size(); ++s) {
          b(r, static_cast<Eigen::Index>(data_slots[s])) += w * flux * shape[static_cast<Eigen::Index>(s)];
        }
      }
    }
  }
  return b;
}

Eigen::MatrixXd build_energy_projector(const Element& element, const MonomialBasis& basis, const DofLayout& layout,
                                       const Eigen::MatrixXd& dof_matrix, const MonomialGrams& grams) {
  Eigen::MatrixXd g = grams.stiffness;
  Eigen::MatrixXd b = energy_rhs(element, basis, layout);
  // The constant mode is fixed by matching the mean: the vertex average for
  // k = 1, the cell average (constant interior moment) for k >= 2.
  b.row(0).setZero();
  if (layout.k == 1) {
    const double nv = static_cast<double>(layout.n_vertices);
    g.row(0) = dof_matrix.leftCols(static_cast<Eigen::Index>(layout.n_vertices)).rowwise().sum().transpose() / nv;
    b.row(0).head(static_cast<Eigen::Index>(layout.n_vertices)).setConstant(1.0 / nv);
  } else {
    const auto constant_slot = static_cast<Eigen::Index>(layout.interior_slot(0));
    g.row(0) = dof_matrix.col(constant_slot).transpose();
    b(0, constant_slot) = 1.0;
  }
  return solve_checked(g, b, "energy projector");
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_l2_projector(const DofLayout& layout, const Eigen::MatrixXd& energy,
                                                               const MonomialGrams& grams, double area) {
  // Moments of degree <= k-2 are DOFs; degrees k-1 and k come from the
  // enhancement property int psi m = int (Pi^grad psi) m.
  Eigen::MatrixXd c = grams.mass * energy;
  const std::size_t low = polynomial_dim(layout.k - 2);
  for (std::size_t r = 0; r < low; ++r) {
    c.row(static_cast<Eigen::Index>(r)).setZero();
    c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(layout.interior_slot(r))) = area;
  }
  // Solve for the correction to Pi^grad: its right-hand side vanishes
  // identically on the enhanced rows.
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(c.rows(), c.cols());
  const Eigen::Index nlow = static_cast<Eigen::Index>(low);
  r.topRows(nlow) = c.topRows(nlow) - grams.mass.topRows(nlow) * energy;
  Eigen::MatrixXd p = energy;
  if (nlow > 0) p += solve_checked(grams.mass, r, "L2 projector");
  return {std::move(p), std::move(c)};
}

ProjectorPack build_projectors(const Element& element, int k) {
  DofLayout layout = build_dof_layout(element.n_vertices(), k);
  MonomialBasis basis(k, element.geometry.centroid, element.geometry.diameter);
  Eigen::MatrixXd d = build_dof_matrix(element, basis, layout);
  MonomialGrams grams = monomial_grams(element.vertices, basis);
  Eigen::MatrixXd energy = build_energy_projector(element, basis, layout, d, grams);
  auto [l2, moments] = build_l2_projector(layout, energy, grams, element.geometry.area);
  return ProjectorPack{std::move(layout),
                       std::move(basis),
                       std::move(d),
                       std::move(grams.mass),
                       std::move(grams.stiffness),
                       std::move(energy),
                       std::move(l2),
                       std::move(moments),
                       element.geometry.area};
}

DofNumbering::DofNumbering(const Mesh& mesh, int k)
    : mesh_(&mesh),
      k_(k),
      per_edge_(static_cast<std::size_t>(k - 1)),
      per_cell_(polynomial_dim(k - 2)) {
  if (k < 1) throw Error("polynomial order k must be >= 1");
  edge_offset_ = mesh.n_vertices();
  interior_offset_ = edge_offset_ + mesh.n_edges() * per_edge_;
  total_ = interior_offset_ + mesh.n_cells() * per_cell_;
  boundary_.assign(total_, false);
  for (std::size_t v = 0; v < mesh.n_vertices(); ++v) boundary_[v] = mesh.is_boundary_vertex(v);
  for (std::size_t e = 0; e < mesh.n_edges(); ++e) {
    if (!mesh.is_boundary_edge(e)) continue;
    for (std::size_t j = 0; j < per_edge_; ++j) boundary_[edge_dof(e, j)] = true;
  }
}

std::vector<std::size_t> DofNumbering::cell_dofs(std::size_t c) const {
  const auto& ids = mesh_->cell(c).vertex_ids;
  const auto& edges = mesh_->cell_edges(c);
  std::vector<std::size_t> out;
  out.reserve(dof_count(ids.size(), k_));
  for (std::size_t v : ids) out.push_back(vertex_dof(v));
  for (std::size_t e : edges) {
    for (std::size_t j = 0; j < per_edge_; ++j) out.push_back(edge_dof(e, j));
  }
  for (std::size_t p = 0; p < per_cell_; ++p) out.push_back(interior_dof(c, p));
  return out;
}

std::vector<double> interpolate_dofs(const Mesh& mesh, int k, const ScalarField& u) {
  const DofNumbering numbering(mesh, k);
  std::vector<double> dofs(numbering.size(), 0.0);
  for (std::size_t v = 0; v < mesh.n_vertices(); ++v) {
    dofs[numbering.vertex_dof(v)] = u(mesh.vertices()[v].x, mesh.vertices()[v].y);
  }
  if (k >= 2) {
    const GaussRule& rule = gauss_legendre(k + 5);
    for (std::size_t e = 0; e < mesh.n_edges(); ++e) {
      const Point2 a = mesh.vertices()[mesh.edges()[e].a];
      const Point2 b = mesh.vertices()[mesh.edges()[e].b];
      for (int j = 0; j <= k - 2; ++j) {
        double sum = 0.0;
        for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
          const Point2 x = lerp(a, b, rule.nodes[g]);
          sum += 0.5 * rule.weights[g] * u(x.x, x.y) * edge_legendre(j, rule.nodes[g]);
        }
        dofs[numbering.edge_dof(e, static_cast<std::size_t>(j))] = sum;
      }
    }
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
      const CellGeometry& g = mesh.geometry(c);
      const MonomialBasis basis(k - 2, g.centroid, g.diameter);
      const auto poly = mesh.cell_polygon(c);
      for (std::size_t p = 0; p < basis.size(); ++p) {
        const MultiIndex alpha = basis.index(p);
        const double moment = integrate_polygon(
            [&](double x, double y) { return u(x, y) * basis.value(alpha, {x, y}); }, poly, g.centroid, 2 * k + 8);
        dofs[numbering.interior_dof(c, p)] = moment / g.area;
      }
    }
  }
  return dofs;
}

}  // namespace vemlump
