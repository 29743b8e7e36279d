#include "vemlump/spectral.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "vemlump/assembly.hpp"
#include "vemlump/error.hpp"

namespace vemlump {

SpectralReport lambda_max_power(const SparseMatrix& stiffness, std::span<const double> mass,
                                const PowerOptions& options) {
  const std::size_t n = mass.size();
  if (n == 0 || stiffness.rows() != n || stiffness.cols() != n) throw Error("power iteration: size mismatch");
  if (!(options.tol > 0.0)) throw Error("power iteration: tolerance must be positive");
  const std::size_t max_iters =
      options.max_iters ? options.max_iters : static_cast<std::size_t>(50.0 * std::sqrt(double(n))) + 1000;

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> positive(0.5, 1.5);
  std::vector<double> v(n), kv(n), w(n);
  for (auto& x : v) x = positive(rng);
  double norm = energy_norm(v, mass);
  for (auto& x : v) x /= norm;

  SpectralReport report;
  double lambda = 0.0;
  for (std::size_t it = 1; it <= max_iters; ++it) {
    stiffness.multiply(v, kv);
    // v is M-normalized, so the Rayleigh quotient is v^T K v.
    double rq = 0.0;
    for (std::size_t i = 0; i < n; ++i) rq += v[i] * kv[i];
    for (std::size_t i = 0; i < n; ++i) w[i] = kv[i] / mass[i];
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res += mass[i] * (w[i] - rq * v[i]) * (w[i] - rq * v[i]);
    report.rayleigh_history.push_back(rq);
    report.iterations = it;
    report.residual = rq > 0.0 ? std::sqrt(res) / rq : std::sqrt(res);

    const bool converged = it > 1 && std::abs(rq - lambda) <= options.tol * std::abs(rq);
    lambda = rq;
    if (converged) break;

    norm = energy_norm(w, mass);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      report.lambda_max = lambda;
      throw PowerIterationError("power iteration collapsed (zero or non-finite iterate)", report);
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    if (it == max_iters) {
      report.lambda_max = lambda;
      report.dt_fe = lambda > 0.0 ? 2.0 / lambda : 0.0;
      report.eigenvector = v;
      throw PowerIterationError("power iteration did not converge in " + std::to_string(max_iters) + " iterations",
                                report);
    }
  }
  if (!(lambda > 0.0)) throw NumericalError("power iteration: non-positive largest eigenvalue");
  report.lambda_max = lambda;
  report.dt_fe = 2.0 / lambda;
  report.eigenvector = std::move(v);
  return report;
}

SpectralReport lambda_max_power_relaxed(const SparseMatrix& stiffness, std::span<const double> mass,
                                        const PowerOptions& options, std::string* note) {
  PowerOptions opts = options;
  for (int attempt = 0;; ++attempt) {
    try {
      SpectralReport rep = lambda_max_power(stiffness, mass, opts);
      if (note && attempt > 0) {
        std::ostringstream os;
        os << "power iteration tolerance loosened to " << opts.tol;
        *note = os.str();
      }
      return rep;
    } catch (const PowerIterationError&) {
      if (attempt == 2) throw;
      opts.tol *= 100.0;
    }
  }
}

double dt_limit(double lambda_max, const Tableau& tableau, double safety) {
  if (!(safety > 0.0 && safety <= 1.0)) throw Error("safety factor must lie in (0, 1]");
  if (!(lambda_max > 0.0)) throw Error("lambda_max must be positive");
  return safety * tableau.c_ssp * 2.0 / lambda_max;
}

double dt_limit(const SpectralReport& report, IntegratorKind kind, double safety) {
  return dt_limit(report.lambda_max, make_tableau(kind), safety);
}

std::vector<SpectralRow> verify_spectral_bound(std::span<const Mesh> meshes, int k, double delta,
                                               const PowerOptions& options, int threads) {
  std::vector<SpectralRow> rows;
  for (std::size_t level = 0; level < meshes.size(); ++level) {
    const Mesh& mesh = meshes[level];
    const MeshStats stats = mesh_stats(mesh);
    const Discretization disc = discretize(mesh, k, threads);
    const SystemMatrices sys = assemble_system(disc, delta, threads);
    const SpectralReport rep = lambda_max_power_relaxed(sys.stiffness, sys.lumped_mass, options);
    SpectralRow row;
    row.level = level;
    row.h_min = stats.h_min;
    row.h_max = stats.h_max;
    row.n_free = sys.n_free;
    row.lambda_max = rep.lambda_max;
    row.dt_fe = rep.dt_fe;
    row.bound_product = rep.lambda_max * stats.h_min * stats.h_min;
    if (!rows.empty()) {
      const double ratio = row.bound_product / rows.back().bound_product;
      row.flagged = ratio > 2.0 || ratio < 0.5;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace vemlump
