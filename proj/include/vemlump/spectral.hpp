#pragma once

// Largest eigenvalue of M^{-1} K for diagonal M, and the explicit time-step
// limits that follow from it.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vemlump/error.hpp"
#include "vemlump/mesh.hpp"
#include "vemlump/sparse.hpp"
#include "vemlump/timeint.hpp"

namespace vemlump {

struct SpectralReport {
  double lambda_max = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;  // ||M^{-1} K v - lambda v||_M / lambda for the final unit vector
  double dt_fe = 0.0;     // 2 / lambda_max
  double h_min = 0.0;
  double bound_product = 0.0;  // lambda_max * h_min^2
  std::vector<double> rayleigh_history;
  std::vector<double> eigenvector;  // M-normalized final iterate
};

struct PowerOptions {
  double tol = 1e-10;
  /// 0 selects 50 sqrt(n) + 1000.
  std::size_t max_iters = 0;
  std::uint64_t seed = 0;
};

/// Thrown when power iteration does not reach the tolerance; carries the
/// last iterate so callers can decide to accept it.
class PowerIterationError : public NumericalError {
 public:
  PowerIterationError(const std::string& what, SpectralReport last)
      : NumericalError(what), last_(std::move(last)) {}
  const SpectralReport& last() const noexcept { return last_; }

 private:
  SpectralReport last_;
};

/// Power iteration on M^{-1} K in the M inner product with Rayleigh-quotient
/// estimates. The start vector has positive entries drawn from `seed`.
SpectralReport lambda_max_power(const SparseMatrix& stiffness, std::span<const double> mass,
                                const PowerOptions& options = {});

/// Retries with the tolerance loosened 100x, then 10^4 x, when the top of the
/// spectrum is too clustered to converge in max_iters. `note` (if given)
/// records the tolerance finally used.
SpectralReport lambda_max_power_relaxed(const SparseMatrix& stiffness, std::span<const double> mass,
                                        const PowerOptions& options = {}, std::string* note = nullptr);

/// safety * C_SSP * 2 / lambda_max.
double dt_limit(double lambda_max, const Tableau& tableau, double safety);
double dt_limit(const SpectralReport& report, IntegratorKind kind, double safety);

struct SpectralRow {
  std::size_t level = 0;
  double h_min = 0.0;
  double h_max = 0.0;
  std::size_t n_free = 0;
  double lambda_max = 0.0;
  double dt_fe = 0.0;
  double bound_product = 0.0;
  bool flagged = false;  // product changed by more than 2x from the previous level
};

/// lambda_max and lambda_max h_min^2 on each mesh of a refinement sequence.
std::vector<SpectralRow> verify_spectral_bound(std::span<const Mesh> meshes, int k, double delta,
                                               const PowerOptions& options = {}, int threads = 1);

}  // namespace vemlump
