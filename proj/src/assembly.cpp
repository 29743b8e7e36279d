#include "vemlump/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "vemlump/error.hpp"
#include "vemlump/parallel.hpp"

namespace vemlump {

Eigen::MatrixXd local_stiffness(const ProjectorPack& pack) {
  const Eigen::MatrixXd& p = pack.energy;
  const auto n = p.cols();
  const Eigen::MatrixXd consistency = p.transpose() * pack.stiffness_gram * p;
  const double tau = std::max(consistency.trace() / static_cast<double>(n), 1e-12);
  const Eigen::MatrixXd defect = Eigen::MatrixXd::Identity(n, n) - pack.dof_matrix.transpose() * p;
  Eigen::MatrixXd k = consistency + tau * defect.transpose() * defect;
  return 0.5 * (k + k.transpose());
}

Eigen::MatrixXd local_consistent_mass(const ProjectorPack& pack) {
  const Eigen::MatrixXd& p = pack.l2;
  const auto n = p.cols();
  const Eigen::MatrixXd defect = Eigen::MatrixXd::Identity(n, n) - pack.dof_matrix.transpose() * p;
  Eigen::MatrixXd m = p.transpose() * pack.mass_gram * p + pack.area * defect.transpose() * defect;
  return 0.5 * (m + m.transpose());
}

LumpedWeights lumped_weights(const ProjectorPack& pack, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error("flooring parameter delta must lie in (0, 1)");
  // c_alpha = int_E m_alpha is the first column of H since m_(0,0) = 1.
  const Eigen::VectorXd c = pack.mass_gram.col(0);
  Eigen::LLT<Eigen::MatrixXd> llt(pack.mass_gram);
  if (llt.info() != Eigen::Success) throw NumericalError("monomial mass Gram is not positive definite");
  const Eigen::VectorXd w = llt.solve(c);
  const Eigen::VectorXd s = pack.l2_moments.transpose() * w;

  LumpedWeights out;
  out.delta = delta;
  const double floor = delta * pack.area / static_cast<double>(pack.layout.size());
  out.raw.assign(s.data(), s.data() + s.size());
  out.floored.resize(out.raw.size());
  std::transform(out.raw.begin(), out.raw.end(), out.floored.begin(), [floor](double v) { return std::max(v, floor); });
  return out;
}

Discretization discretize(const Mesh& mesh, int k, int threads) {
  Discretization disc{&mesh, k, DofNumbering(mesh, k), {}, {}};
  std::vector<std::optional<ProjectorPack>> packs(mesh.n_cells());
  parallel_for(mesh.n_cells(), threads, [&](std::size_t c) {
    packs[c].emplace(build_projectors(Element::from_mesh(mesh, c), k));
  });
  disc.packs.reserve(mesh.n_cells());
  for (auto& p : packs) disc.packs.push_back(std::move(*p));
  disc.cell_dofs.reserve(mesh.n_cells());
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) disc.cell_dofs.push_back(disc.numbering.cell_dofs(c));
  return disc;
}

std::vector<double> SystemMatrices::restrict_to_free(std::span<const double> global) const {
  if (global.size() != n_global) throw Error("global vector has the wrong size");
  std::vector<double> out(n_free);
  for (std::size_t i = 0; i < n_free; ++i) out[i] = global[free_dofs[i]];
  return out;
}

std::vector<double> SystemMatrices::expand(std::span<const double> free) const {
  if (free.size() != n_free) throw Error("free vector has the wrong size");
  std::vector<double> out(n_global, 0.0);
  for (std::size_t i = 0; i < n_free; ++i) out[free_dofs[i]] = free[i];
  return out;
}

SystemMatrices assemble_system(const Discretization& disc, double delta, int threads) {
  const Mesh& mesh = *disc.mesh;
  SystemMatrices sys;
  sys.delta = delta;
  sys.n_global = disc.numbering.size();
  sys.free_index.assign(sys.n_global, -1);
  const auto& boundary = disc.numbering.boundary_mask();
  for (std::size_t g = 0; g < sys.n_global; ++g) {
    if (!boundary[g]) {
      sys.free_index[g] = static_cast<long long>(sys.free_dofs.size());
      sys.free_dofs.push_back(g);
    }
  }
  sys.n_free = sys.free_dofs.size();
  if (sys.n_free == 0) throw MeshError("no free degrees of freedom: every DOF lies on the boundary");

  std::vector<Eigen::MatrixXd> local_k(mesh.n_cells());
  std::vector<LumpedWeights> local_w(mesh.n_cells());
  parallel_for(mesh.n_cells(), threads, [&](std::size_t c) {
    local_k[c] = local_stiffness(disc.packs[c]);
    local_w[c] = lumped_weights(disc.packs[c], delta);
  });

  // Scatter in cell order.
  std::vector<Triplet> triplets;
  std::vector<double> mass(sys.n_global, 0.0);
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto& dofs = disc.cell_dofs[c];
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      mass[dofs[i]] += local_w[c].floored[i];
      sys.raw_mass_total += local_w[c].raw[i];
      const long long fi = sys.free_index[dofs[i]];
      if (fi < 0) continue;
      for (std::size_t j = 0; j < dofs.size(); ++j) {
        const long long fj = sys.free_index[dofs[j]];
        if (fj < 0) continue;
        triplets.push_back({static_cast<std::size_t>(fi), static_cast<std::size_t>(fj),
                            local_k[c](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
      }
    }
  }
  sys.stiffness = SparseMatrix::from_triplets(sys.n_free, sys.n_free, std::move(triplets));
  sys.lumped_mass = sys.restrict_to_free(mass);
  for (double d : sys.lumped_mass) {
    if (!(d > 0.0)) throw NumericalError("lumped mass has a non-positive free diagonal entry");
  }
  return sys;
}

std::vector<double> assemble_load_global(const Discretization& disc, const TimeField& f, double t, int threads) {
  const Mesh& mesh = *disc.mesh;
  const int order = 2 * disc.k + 8;
  std::vector<Eigen::VectorXd> local(mesh.n_cells());
  parallel_for(mesh.n_cells(), threads, [&](std::size_t c) {
    const ProjectorPack& pack = disc.packs[c];
    const CellGeometry& g = mesh.geometry(c);
    Eigen::VectorXd moments = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pack.basis.size()));
    for_each_polygon_point(mesh.cell_polygon(c), g.centroid, order, [&](Point2 p, double w) {
      moments += (w * f(t, p.x, p.y)) * pack.basis.values(p);
    });
    local[c] = pack.l2.transpose() * moments;
  });
  std::vector<double> load(disc.numbering.size(), 0.0);
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto& dofs = disc.cell_dofs[c];
    for (std::size_t i = 0; i < dofs.size(); ++i) load[dofs[i]] += local[c][static_cast<Eigen::Index>(i)];
  }
  return load;
}

std::vector<double> assemble_load(const Discretization& disc, const SystemMatrices& system, const TimeField& f,
                                  double t, int threads) {
  return system.restrict_to_free(assemble_load_global(disc, f, t, threads));
}

}  // namespace vemlump
