#pragma once

// Degrees of freedom and the computable polynomial projections of the
// virtual element space: the DOF matrix D, the energy projector and the
// enhanced L2 projector, stored as monomial coefficient matrices.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vemlump/mesh.hpp"
#include "vemlump/poly.hpp"

namespace vemlump {

/// One polygon with the data the local constructions need.
///
/// Edge i joins vertex i and vertex i+1. Edge moments are parametrised by
/// t in [-1, 1]; `edge_reversed[i]` is true when t = -1 sits at vertex i+1,
/// which lets neighbouring cells agree on a global edge direction.
struct Element {
  std::vector<Point2> vertices;
  std::vector<bool> edge_reversed;
  CellGeometry geometry;

  static Element from_polygon(std::vector<Point2> polygon);
  /// Edge direction runs from the lower to the higher global vertex id.
  static Element from_mesh(const Mesh& mesh, std::size_t cell);

  std::size_t n_vertices() const noexcept { return vertices.size(); }
  /// Endpoints of edge i in parameter order (t = -1 first).
  std::pair<Point2, Point2> edge_endpoints(std::size_t i) const;
};

enum class DofKind { Vertex, EdgeMoment, InteriorMoment };

struct DofSlot {
  DofKind kind = DofKind::Vertex;
  /// Local vertex or edge index; unused for interior moments.
  std::size_t entity = 0;
  /// Legendre degree j for edge moments, monomial position for interior moments.
  std::size_t order = 0;
};

/// Local DOF ordering: vertices (CCW), then edge moments edge by edge with
/// ascending j, then interior moments in graded lexicographic order.
struct DofLayout {
  int k = 1;
  std::size_t n_vertices = 0;
  std::vector<DofSlot> slots;

  std::size_t size() const noexcept { return slots.size(); }
  std::size_t edge_moments_per_edge() const noexcept { return static_cast<std::size_t>(k - 1); }
  std::size_t n_interior() const noexcept { return static_cast<std::size_t>((k - 1) * k / 2); }
  std::size_t vertex_slot(std::size_t v) const noexcept { return v; }
  std::size_t edge_slot(std::size_t e, std::size_t j) const noexcept {
    return n_vertices + e * edge_moments_per_edge() + j;
  }
  std::size_t interior_slot(std::size_t position) const noexcept {
    return n_vertices * static_cast<std::size_t>(k) + position;
  }
};

/// N_V + N_V (k - 1) + (k - 1) k / 2.
std::size_t dof_count(std::size_t n_vertices, int k);

DofLayout build_dof_layout(std::size_t n_vertices, int k);

/// D(alpha, i) = chi_i(m_alpha).
Eigen::MatrixXd build_dof_matrix(const Element& element, const MonomialBasis& basis, const DofLayout& layout);

/// Per-element projection data. Columns index local DOFs.
struct ProjectorPack {
  DofLayout layout;
  MonomialBasis basis;
  Eigen::MatrixXd dof_matrix;      // D: N_k x N_dof
  Eigen::MatrixXd mass_gram;       // H: N_k x N_k
  Eigen::MatrixXd stiffness_gram;  // G: N_k x N_k
  Eigen::MatrixXd energy;          // coefficients of Pi^grad psi_i
  Eigen::MatrixXd l2;              // coefficients of Pi^0 psi_i
  Eigen::MatrixXd l2_moments;      // C(alpha, i) = int_E psi_i m_alpha
  double area = 0.0;
};

/// b(alpha, i) = int_E grad m_alpha . grad psi_i, from DOFs only.
Eigen::MatrixXd energy_rhs(const Element& element, const MonomialBasis& basis, const DofLayout& layout);

Eigen::MatrixXd build_energy_projector(const Element& element, const MonomialBasis& basis, const DofLayout& layout,
                                       const Eigen::MatrixXd& dof_matrix, const MonomialGrams& grams);

/// Returns (P_zero, C) with H P_zero = C.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_l2_projector(const DofLayout& layout, const Eigen::MatrixXd& energy,
                                                               const MonomialGrams& grams, double area);

/// Builds every local operator of one element.
ProjectorPack build_projectors(const Element& element, int k);

/// Global DOF numbering: vertex DOFs by vertex id, then edge moments by
/// global edge id (ascending j), then interior moments by cell id.
class DofNumbering {
 public:
  DofNumbering(const Mesh& mesh, int k);

  int degree() const noexcept { return k_; }
  std::size_t size() const noexcept { return total_; }
  std::size_t vertex_dof(std::size_t v) const noexcept { return v; }
  std::size_t edge_dof(std::size_t e, std::size_t j) const noexcept { return edge_offset_ + e * per_edge_ + j; }
  std::size_t interior_dof(std::size_t cell, std::size_t position) const noexcept {
    return interior_offset_ + cell * per_cell_ + position;
  }
  /// Global ids of the local DOFs of cell c, in local layout order.
  std::vector<std::size_t> cell_dofs(std::size_t c) const;
  /// True for DOFs carried by boundary vertices or boundary edges.
  const std::vector<bool>& boundary_mask() const noexcept { return boundary_; }

 private:
  const Mesh* mesh_;
  int k_;
  std::size_t per_edge_, per_cell_;
  std::size_t edge_offset_, interior_offset_, total_;
  std::vector<bool> boundary_;
};

/// Applies every global DOF functional to u. Edge moments use Gauss with
/// k + 5 points, interior moments the fan rule of order 2k + 8.
std::vector<double> interpolate_dofs(const Mesh& mesh, int k, const ScalarField& u);

}  // namespace vemlump
