#include "vemlump/poly.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "vemlump/error.hpp"

namespace vemlump {

std::vector<MultiIndex> monomial_indices(int k) {
  std::vector<MultiIndex> out;
  out.reserve(polynomial_dim(k));
  for (int d = 0; d <= k; ++d) {
    for (int a2 = 0; a2 <= d; ++a2) out.push_back({d - a2, a2});
  }
  return out;
}

MonomialBasis::MonomialBasis(int k, Point2 centroid, double diameter)
    : k_(k), centroid_(centroid), h_(diameter), indices_(monomial_indices(k)) {
  if (k < 0) throw Error("monomial degree must be >= 0");
  if (!(diameter > 0.0)) throw Error("monomial scaling diameter must be positive");
}

MonomialValue MonomialBasis::eval(MultiIndex alpha, Point2 p) const {
  const double x = (p.x - centroid_.x) / h_;
  const double y = (p.y - centroid_.y) / h_;
  MonomialValue out;
  const double xa = std::pow(x, alpha.a1), yb = std::pow(y, alpha.a2);
  out.value = xa * yb;
  if (alpha.a1 > 0) out.gradient[0] = alpha.a1 * std::pow(x, alpha.a1 - 1) * yb / h_;
  if (alpha.a2 > 0) out.gradient[1] = alpha.a2 * xa * std::pow(y, alpha.a2 - 1) / h_;
  return out;
}

double MonomialBasis::value(MultiIndex alpha, Point2 p) const {
  return std::pow((p.x - centroid_.x) / h_, alpha.a1) * std::pow((p.y - centroid_.y) / h_, alpha.a2);
}

Eigen::VectorXd MonomialBasis::values(Point2 p) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) v[static_cast<Eigen::Index>(i)] = value(indices_[i], p);
  return v;
}

namespace {

GaussRule compute_gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton on P_n from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int m = 2; m <= n; ++m) {
        const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (int m = 2; m <= n; ++m) {
      const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i), hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

std::mutex& rule_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  if (n < 1) throw Error("Gauss rule needs at least one point");
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(rule_mutex());
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

double edge_legendre(int j, double t) {
  if (j < 0) throw Error("Legendre degree must be >= 0");
  double p0 = 1.0, p1 = t;
  if (j == 0) return 1.0;
  for (int m = 2; m <= j; ++m) {
    const double p2 = ((2.0 * m - 1.0) * t * p1 - (m - 1.0) * p0) / m;
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * j + 1.0) * p1;
}

double polygon_moment(std::span<const Point2> polygon, Point2 centroid, double h, MultiIndex alpha) {
  // m_alpha is homogeneous of degree |alpha| in z = (x - xc)/h, so
  // div(m_alpha * (x - xc)) = (|alpha| + 2) m_alpha and
  //   int_E m_alpha = h/(|alpha|+2) * sum_e int_e m_alpha (z . n) ds.
  // On each edge, z . n is constant.
  const int deg = alpha.degree();
  const GaussRule& rule = gauss_legendre((deg + 2 + 1) / 2);
  const std::size_t n = polygon.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = polygon[i];
    const Point2& q = polygon[(i + 1) % n];
    const double ex = q.x - p.x, ey = q.y - p.y;
    // Outward normal times edge length for a CCW polygon: (ey, -ex).
    const double zx = (p.x - centroid.x) / h, zy = (p.y - centroid.y) / h;
    const double z_dot_n_len = zx * ey - zy * ex;
    if (z_dot_n_len == 0.0) continue;
    double edge = 0.0;
    for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
      const double s = 0.5 * (rule.nodes[g] + 1.0);
      const double x = (p.x + s * ex - centroid.x) / h;
      const double y = (p.y + s * ey - centroid.y) / h;
      edge += 0.5 * rule.weights[g] * std::pow(x, alpha.a1) * std::pow(y, alpha.a2);
    }
    total += edge * z_dot_n_len;
  }
  if (alpha == MultiIndex{0, 0} && !(total > 0.0)) throw MeshError("degenerate polygon in moment evaluation");
  return h * total / (deg + 2);
}

MonomialGrams monomial_grams(std::span<const Point2> polygon, const MonomialBasis& basis) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  const double h = basis.diameter();
  const Point2 c = basis.centroid();
  // Cache moments up to degree 2k.
  const auto product_indices = monomial_indices(2 * basis.degree());
  std::vector<double> moments(product_indices.size());
  for (std::size_t i = 0; i < product_indices.size(); ++i) {
    moments[i] = polygon_moment(polygon, c, h, product_indices[i]);
  }
  auto moment = [&](int a1, int a2) { return moments[monomial_position({a1, a2})]; };

  MonomialGrams g{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const MultiIndex a = basis.index(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j <= i; ++j) {
      const MultiIndex b = basis.index(static_cast<std::size_t>(j));
      g.mass(i, j) = g.mass(j, i) = moment(a.a1 + b.a1, a.a2 + b.a2);
      double s = 0.0;
      if (a.a1 > 0 && b.a1 > 0) s += a.a1 * b.a1 * moment(a.a1 + b.a1 - 2, a.a2 + b.a2);
      if (a.a2 > 0 && b.a2 > 0) s += a.a2 * b.a2 * moment(a.a1 + b.a1, a.a2 + b.a2 - 2);
      g.stiffness(i, j) = g.stiffness(j, i) = s / (h * h);
    }
  }
  return g;
}

namespace {

TriangleRule collapsed_rule(int order) {
  // Tensor Gauss on the square mapped by (u, v) -> (u, v (1 - u)); the
  // Jacobian adds one degree in u.
  const int n = (order + 2) / 2 + 1;
  const GaussRule& g = gauss_legendre(n);
  TriangleRule rule;
  for (int i = 0; i < n; ++i) {
    const double u = 0.5 * (g.nodes[static_cast<std::size_t>(i)] + 1.0);
    const double wu = 0.5 * g.weights[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      const double v = 0.5 * (g.nodes[static_cast<std::size_t>(j)] + 1.0);
      const double wv = 0.5 * g.weights[static_cast<std::size_t>(j)];
      rule.points.push_back({u, v * (1.0 - u)});
      rule.weights.push_back(wu * wv * (1.0 - u));
    }
  }
  return rule;
}

}  // namespace

const TriangleRule& triangle_rule(int order) {
  if (order < 1) throw Error("triangle rule order must be >= 1");
  static std::map<int, TriangleRule> cache;
  static std::mutex m;
  std::lock_guard lock(m);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, collapsed_rule(order)).first;
  return it->second;
}

void for_each_polygon_point(std::span<const Point2> polygon, Point2 centroid, int order,
                            const std::function<void(Point2, double)>& visit) {
  const TriangleRule& rule = triangle_rule(order);
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = polygon[i];
    const Point2& b = polygon[(i + 1) % n];
    const double e1x = a.x - centroid.x, e1y = a.y - centroid.y;
    const double e2x = b.x - centroid.x, e2y = b.y - centroid.y;
    const double jac = e1x * e2y - e1y * e2x;
    if (!(jac > 0.0)) {
      throw MeshError("fan triangle " + std::to_string(i) + " has non-positive area; polygon is not star-shaped "
                      "with respect to its centroid");
    }
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point2 r = rule.points[q];
      visit({centroid.x + r.x * e1x + r.y * e2x, centroid.y + r.x * e1y + r.y * e2y}, rule.weights[q] * jac);
    }
  }
}

double integrate_polygon(const ScalarField& f, std::span<const Point2> polygon, Point2 centroid, int order) {
  double sum = 0.0;
  for_each_polygon_point(polygon, centroid, order, [&](Point2 p, double w) { sum += w * f(p.x, p.y); });
  return sum;
}

}  // namespace vemlump
