#pragma once

// Local VEM matrices (stiffness, consistent mass, lumped weights), global
// assembly with homogeneous Dirichlet elimination, and load vectors.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vemlump/mesh.hpp"
#include "vemlump/projectors.hpp"
#include "vemlump/sparse.hpp"

namespace vemlump {

inline constexpr double kDefaultFloorDelta = 0.1;

/// Consistency plus dofi-dofi stabilization:
///   K_E = P^T G P + tau (I - D P)^T (I - D P),
///   tau = max(trace(P^T G P) / N_dof, 1e-12).
/// The result is symmetrized exactly.
Eigen::MatrixXd local_stiffness(const ProjectorPack& pack);

/// M_E = P0^T H P0 + |E| (I - D P0)^T (I - D P0).
Eigen::MatrixXd local_consistent_mass(const ProjectorPack& pack);

struct LumpedWeights {
  std::vector<double> raw;      // s^E: row sums, int_E Pi^0 psi_i
  std::vector<double> floored;  // max(s_i, delta |E| / N_dof)
  double delta = kDefaultFloorDelta;
};

/// Row-sum lumping from DOF data only: solve H w = c with c_alpha = int m_alpha,
/// then s = C^T w where C holds the L2-projector moments int psi_i m_alpha.
LumpedWeights lumped_weights(const ProjectorPack& pack, double delta);

/// All element operators of a mesh at order k.
struct Discretization {
  const Mesh* mesh = nullptr;
  int k = 1;
  DofNumbering numbering;
  std::vector<ProjectorPack> packs;
  std::vector<std::vector<std::size_t>> cell_dofs;
};

Discretization discretize(const Mesh& mesh, int k, int threads = 1);

struct SystemMatrices {
  SparseMatrix stiffness;             // K_h on free DOFs
  std::vector<double> lumped_mass;    // diagonal of M_h on free DOFs
  std::vector<long long> free_index;  // global DOF -> free index, -1 if constrained
  std::vector<std::size_t> free_dofs; // free index -> global DOF
  std::size_t n_free = 0;
  std::size_t n_global = 0;
  double raw_mass_total = 0.0;        // sum of all raw weights before elimination
  double delta = kDefaultFloorDelta;

  /// Restricts a global vector to the free DOFs.
  std::vector<double> restrict_to_free(std::span<const double> global) const;
  /// Expands a free vector to all DOFs with zeros on the boundary.
  std::vector<double> expand(std::span<const double> free) const;
};

SystemMatrices assemble_system(const Discretization& disc, double delta = kDefaultFloorDelta, int threads = 1);

using TimeField = std::function<double(double t, double x, double y)>;

/// Load vector on all DOFs: F_i = sum_alpha P0(alpha, i) int_E f m_alpha,
/// fan quadrature of order 2k + 8.
std::vector<double> assemble_load_global(const Discretization& disc, const TimeField& f, double t, int threads = 1);
/// Same, restricted to free DOFs.
std::vector<double> assemble_load(const Discretization& disc, const SystemMatrices& system, const TimeField& f,
                                  double t, int threads = 1);

}  // namespace vemlump
