#pragma once

// Scaled monomials on a polygon, exact polygon moments, Gauss-Legendre
// rules, orthonormal edge Legendre polynomials and polygon quadrature.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vemlump/mesh.hpp"

namespace vemlump {

struct MultiIndex {
  int a1 = 0;
  int a2 = 0;

  constexpr int degree() const noexcept { return a1 + a2; }
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// Dimension of P_k in two variables.
constexpr std::size_t polynomial_dim(int k) {
  return k < 0 ? 0 : static_cast<std::size_t>((k + 1) * (k + 2) / 2);
}

/// Position of alpha in the graded lexicographic ordering
/// (0,0),(1,0),(0,1),(2,0),(1,1),(0,2),...
constexpr std::size_t monomial_position(MultiIndex alpha) {
  const int d = alpha.degree();
  return static_cast<std::size_t>(d * (d + 1) / 2 + alpha.a2);
}

/// All multi-indices of degree <= k in graded lexicographic order.
std::vector<MultiIndex> monomial_indices(int k);

struct MonomialValue {
  double value = 0.0;
  std::array<double, 2> gradient{0.0, 0.0};
};

/// Scaled monomials ((x - xc)/h)^a1 ((y - yc)/h)^a2 of degree <= k.
class MonomialBasis {
 public:
  MonomialBasis(int k, Point2 centroid, double diameter);

  constexpr int degree() const noexcept { return k_; }
  std::size_t size() const noexcept { return indices_.size(); }
  Point2 centroid() const noexcept { return centroid_; }
  double diameter() const noexcept { return h_; }
  const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
  MultiIndex index(std::size_t i) const { return indices_.at(i); }

  MonomialValue eval(MultiIndex alpha, Point2 p) const;
  double value(MultiIndex alpha, Point2 p) const;
  /// Values of all basis members at p, in basis order.
  Eigen::VectorXd values(Point2 p) const;

 private:
  int k_;
  Point2 centroid_;
  double h_;
  std::vector<MultiIndex> indices_;
};

/// Gauss-Legendre nodes and weights on [-1, 1]; n points, exact to degree 2n-1.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int n);

/// Orthonormal Legendre polynomial for the averaged inner product
/// (1/2) * integral_{-1}^{1} L_i L_j dt = delta_ij, i.e. sqrt(2j+1) P_j.
double edge_legendre(int j, double t);

/// Exact integral over the polygon of the scaled monomial m_alpha defined
/// by (centroid, h). Uses the homogeneous-function divergence identity, so
/// only edge integrals (Gauss, exact) are needed.
double polygon_moment(std::span<const Point2> polygon, Point2 centroid, double h, MultiIndex alpha);

/// Monomial mass Gram H and stiffness Gram G on a polygon.
struct MonomialGrams {
  Eigen::MatrixXd mass;
  Eigen::MatrixXd stiffness;
};
MonomialGrams monomial_grams(std::span<const Point2> polygon, const MonomialBasis& basis);

/// Quadrature on the reference triangle (0,0),(1,0),(0,1); weights sum to 1/2.
struct TriangleRule {
  std::vector<Point2> points;
  std::vector<double> weights;
};
/// Collapsed (Duffy) Gauss rule exact for polynomials of total degree <= order.
const TriangleRule& triangle_rule(int order);

using ScalarField = std::function<double(double, double)>;

/// Integral of f over a star-shaped polygon: centroid fan, one triangle rule
/// of the requested polynomial order per fan triangle. Throws MeshError when
/// a fan triangle has non-positive area.
double integrate_polygon(const ScalarField& f, std::span<const Point2> polygon, Point2 centroid, int order);

/// Calls visit(point, weight) for every quadrature point of the fan rule.
void for_each_polygon_point(std::span<const Point2> polygon, Point2 centroid, int order,
                            const std::function<void(Point2, double)>& visit);

}  // namespace vemlump
