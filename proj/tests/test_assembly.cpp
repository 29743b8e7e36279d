#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vemlump/assembly.hpp"
#include "vemlump/error.hpp"

using namespace vemlump;

TEST_SUITE("assembly") {

TEST_CASE("lumped weights on the unit square") {
  const std::vector<Point2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const ProjectorPack p1 = build_projectors(Element::from_polygon(sq), 1);
  const LumpedWeights w1 = lumped_weights(p1, 0.1);
  for (double s : w1.raw) CHECK(s == doctest::Approx(0.25).epsilon(1e-14));

  const ProjectorPack p2 = build_projectors(Element::from_polygon(sq), 2);
  const LumpedWeights w2 = lumped_weights(p2, 0.1);
  const std::size_t centre = p2.layout.interior_slot(0);
  for (std::size_t i = 0; i < 9; ++i) {
    if (i == centre) {
      CHECK(w2.raw[i] == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(w2.floored[i] == doctest::Approx(1.0).epsilon(1e-14));
    } else {
      CHECK(std::abs(w2.raw[i]) < 1e-14);
      CHECK(w2.floored[i] == doctest::Approx(0.1 / 9.0).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(lumped_weights(p1, 0.0), Error);
  CHECK_THROWS_AS(lumped_weights(p1, 1.0), Error);
}

TEST_CASE("row sums of the consistent mass are the raw weights") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto poly = oracle::random_convex_polygon(rng, trial % 2 == 0);
    for (int k = 1; k <= 2; ++k) {
      const ProjectorPack p = build_projectors(Element::from_polygon(poly), k);
      const LumpedWeights w = lumped_weights(p, 0.1);
      const Eigen::VectorXd rows = local_consistent_mass(p).rowwise().sum();
      double total = 0.0;
      for (std::size_t i = 0; i < w.raw.size(); ++i) {
        CHECK(std::abs(rows[static_cast<Eigen::Index>(i)] - w.raw[i]) < 1e-12 * std::max(1.0, p.area));
        CHECK(w.floored[i] >= 0.1 * p.area / static_cast<double>(w.raw.size()));
        total += w.raw[i];
      }
      CHECK(std::abs(total - p.area) < 1e-12 * std::max(1.0, p.area));
    }
  }
}

TEST_CASE("local stiffness: symmetry, kernel and positivity") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto poly = oracle::random_convex_polygon(rng, trial % 2 == 0);
    for (int k = 1; k <= 2; ++k) {
      const ProjectorPack p = build_projectors(Element::from_polygon(poly), k);
      const Eigen::MatrixXd ke = local_stiffness(p);
      CHECK((ke - ke.transpose()).cwiseAbs().maxCoeff() == 0.0);
      // DOFs of the constant 1
      const Eigen::VectorXd one = p.dof_matrix.row(0).transpose();
      CHECK((ke * one).cwiseAbs().maxCoeff() < 1e-12 * ke.cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ke, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues()(0) > -1e-12 * es.eigenvalues().maxCoeff());
      CHECK(es.eigenvalues()(1) > 1e-8 * es.eigenvalues().maxCoeff());
    }
  }
}

TEST_CASE("2x2 grid has a single free DOF") {
  const Mesh mesh = oracle::uniform_grid(2);
  const Discretization disc = discretize(mesh, 1);
  const SystemMatrices sys = assemble_system(disc);
  CHECK(mesh.n_vertices() == 9);
  CHECK(sys.n_free == 1);
  CHECK(sys.stiffness.rows() == 1);
  CHECK(sys.lumped_mass[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(sys.free_dofs[0] == 4);
}

TEST_CASE("one cell has no free DOFs for k = 1") {
  const Mesh mesh = oracle::uniform_grid(1);
  CHECK_THROWS_AS(assemble_system(discretize(mesh, 1)), MeshError);
}

TEST_CASE("global lumped mass") {
  for (int k = 1; k <= 2; ++k) {
    const Mesh mesh = generate_mesh({MeshFamily::Voronoi, 6, 0.0, 5, 4});
    const Discretization disc = discretize(mesh, k);
    const SystemMatrices sys = assemble_system(disc);
    CHECK(std::abs(sys.raw_mass_total - 1.0) < 1e-12);
    for (double d : sys.lumped_mass) CHECK(d > 0.0);
    for (std::size_t i = 0; i < sys.n_free; ++i) CHECK(sys.stiffness.at(i, i) > 0.0);
    CHECK(sys.stiffness.transpose().values() == sys.stiffness.values());
  }
}

TEST_CASE("threads do not change the assembled system") {
  const Mesh mesh = generate_mesh({MeshFamily::SerendipityQ8, 6, 0.2, 0, 2});
  const Discretization d1 = discretize(mesh, 2, 1), d4 = discretize(mesh, 2, 4);
  const SystemMatrices s1 = assemble_system(d1, 0.1, 1), s4 = assemble_system(d4, 0.1, 4);
  CHECK(s1.stiffness.values() == s4.stiffness.values());
  CHECK(s1.lumped_mass == s4.lumped_mass);
}

TEST_CASE("load vectors") {
  const Mesh mesh = oracle::uniform_grid(4);
  const Discretization disc = discretize(mesh, 1);
  const SystemMatrices sys = assemble_system(disc);
  const auto zero = assemble_load(disc, sys, [](double, double, double) { return 0.0; }, 0.0);
  for (double v : zero) CHECK(v == 0.0);
  // sum over all DOFs of int f Pi^0 psi_i = int f for a constant f
  const auto full = assemble_load_global(disc, [](double, double, double) { return 3.0; }, 0.0);
  double total = 0.0;
  for (double v : full) total += v;
  CHECK(total == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("lumped/consistent L2 equivalence does not drift under refinement") {
  // extreme generalized eigenvalues of (diag(floored weights), M_E) per cell;
  // the consistent mass stands in for ||v||^2 since Pi^0 has a kernel for k = 1
  for (int k = 1; k <= 2; ++k) {
    double prev_lo = 0.0, prev_hi = 0.0;
    for (int n : {32, 64, 128}) {  // levels that resolve the map
      const Mesh mesh = oracle::smooth_distorted_grid(n);
      const Discretization disc = discretize(mesh, k);
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (const ProjectorPack& p : disc.packs) {
        const LumpedWeights w = lumped_weights(p, 0.1);
        Eigen::VectorXd d(static_cast<Eigen::Index>(w.floored.size()));
        for (std::size_t i = 0; i < w.floored.size(); ++i) d[static_cast<Eigen::Index>(i)] = w.floored[i];
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(d.asDiagonal().toDenseMatrix(), local_consistent_mass(p),
                                                                     Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
        hi = std::max(hi, es.eigenvalues().maxCoeff());
      }
      CHECK(lo > 0.0);
      if (prev_hi > 0.0) {
        CHECK(std::abs(lo / prev_lo - 1.0) < 0.1);
        CHECK(std::abs(hi / prev_hi - 1.0) < 0.1);
      }
      prev_lo = lo;
      prev_hi = hi;
    }
  }
}

}
