#pragma once

// Manufactured-solution convergence studies for the lumped heat solver.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vemlump/assembly.hpp"
#include "vemlump/mesh.hpp"
#include "vemlump/spectral.hpp"
#include "vemlump/timeint.hpp"

namespace vemlump {

using VectorField = std::function<std::array<double, 2>(double t, double x, double y)>;

/// u = e^t sin(pi x) sin(pi y) on the unit square, with f = u_t - lap(u).
/// The source separates as f(t, x, y) = source_time(t) * source_space(x, y).
struct ManufacturedCase {
  TimeField u;
  VectorField grad_u;
  TimeField u_t;
  TimeField laplacian_u;
  TimeField f;
  ScalarField u0;
  std::function<double(double)> source_time;
  ScalarField source_space;
};

ManufacturedCase manufactured_case();

struct ErrorNorms {
  double l2 = 0.0;
  double h1 = 0.0;
};

/// ||u(t) - Pi^0 u_h||_{L2} and |u(t) - Pi^grad u_h|_{H1}, element by
/// element with the fan rule of order 2k + 8. `dofs` spans all global DOFs.
ErrorNorms error_norms(const Discretization& disc, std::span<const double> dofs, const ScalarField& u,
                       const std::function<std::array<double, 2>(double, double)>& grad_u, int threads = 1);
ErrorNorms error_norms(const Discretization& disc, std::span<const double> dofs, const ManufacturedCase& mc, double t,
                       int threads = 1);

struct DtPolicy {
  enum class Kind { Spectral, Theta } kind = Kind::Spectral;
  /// Safety factor for Spectral; theta for Theta. For Theta, an empty value
  /// selects the calibrated theta = min over levels of 0.9 C_SSP 2 / (lambda h_min^2).
  std::optional<double> value = 0.9;

  /// Parses "spectral:<safety>", "theta:<theta>" or "theta".
  static DtPolicy parse(const std::string& text);
  std::string to_string() const;
};

struct ConvergenceConfig {
  MeshFamily family = MeshFamily::DistortedQuad;
  std::vector<int> levels{8, 16, 32};
  int k = 1;
  IntegratorKind integrator = IntegratorKind::SSPRK3;
  DtPolicy dt_policy{DtPolicy::Kind::Theta, std::nullopt};
  double delta = kDefaultFloorDelta;
  double distortion = 0.2;
  int lloyd_iters = 20;
  std::uint64_t seed = 0;
  double t_end = 1.0;
  double tol_eig = 1e-10;
  int threads = 1;

  /// One-line "key=value ..." rendering of every field.
  std::string describe() const;
};

struct ErrorReport {
  std::size_t level = 0;
  int n = 0;
  double h_max = 0.0;
  double h_min = 0.0;
  std::size_t n_free = 0;
  double err_l2 = 0.0;
  double err_h1 = 0.0;
  double dt = 0.0;
  double lambda_max = 0.0;
  double wall_time = 0.0;
  bool stable = true;
  std::string note;
};

struct EOCTable {
  ConvergenceConfig config;
  std::vector<ErrorReport> rows;
  std::vector<double> eoc_l2;  // size rows - 1; NaN when a row is unusable
  std::vector<double> eoc_h1;
  std::optional<double> theta;  // theta actually used under the Theta policy
};

/// ln(e1 / e2) / ln(h1 / h2).
double eoc(double e1, double e2, double h1, double h2);

/// Mesh per level from one seeded stream, lumped system, lambda_max, time step
/// per policy, integration of the manufactured problem to t_end, errors.
EOCTable run_convergence(const ConvergenceConfig& config);

/// Convergence CSV (config echoed as a leading comment line).
void write_convergence_csv(const EOCTable& table, std::ostream& out);
void write_convergence_csv(const EOCTable& table, const std::filesystem::path& path);
/// Log-log error plot: one polyline per table and norm, plus dashed
/// reference slopes 1 and 2.
void write_convergence_svg(std::span<const EOCTable> tables, std::ostream& out);
void write_convergence_svg(std::span<const EOCTable> tables, const std::filesystem::path& path);

}  // namespace vemlump
