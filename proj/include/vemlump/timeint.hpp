#pragma once

// Explicit Runge-Kutta integration of M u' = -K u + f(t) with diagonal M.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vemlump/sparse.hpp"

namespace vemlump {

enum class IntegratorKind { ForwardEuler, SSPRK3, SSPRK54 };

std::string to_string(IntegratorKind kind);
/// Parses "fe", "ssprk3" or "ssprk54".
IntegratorKind parse_integrator(const std::string& name);

/// Explicit Butcher tableau with its SSP coefficient.
struct Tableau {
  std::string name;
  int stages = 1;
  int order = 1;
  Eigen::MatrixXd a;  // strictly lower triangular
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  double c_ssp = 1.0;
};

/// Compiled-in tableaus, checked against the order conditions of their
/// stated order on first use (throws NumericalError on a mismatch).
const Tableau& make_tableau(IntegratorKind kind);

/// Residuals of the Runge-Kutta order conditions up to `order` (at most 4):
/// 1 condition for order 1, 2 for order 2, 4 for order 3, 8 for order 4.
std::vector<double> order_condition_residuals(const Tableau& tableau, int order);

/// Semi-discrete system M u' = -K u + f(t). The load callback writes f(t)
/// into its output span; an empty callback means f = 0.
struct LinearSystem {
  const SparseMatrix* stiffness = nullptr;
  std::span<const double> mass;
  std::function<void(double, std::span<double>)> load;
};

struct StepState {
  std::vector<double> u;
  double t = 0.0;
  std::size_t step_index = 0;
  double energy = 0.0;  // sqrt(u^T M u)
};

double energy_norm(std::span<const double> u, std::span<const double> mass);

/// One explicit RK step (Butcher form; stage loads at t + c_s dt).
/// Throws InstabilityError if the result is not finite.
StepState ssp_step(const LinearSystem& system, const Tableau& tableau, const StepState& state, double dt);

struct EnergySample {
  std::size_t step = 0;
  double t = 0.0;
  double energy = 0.0;
};

/// Called after every step with the state before and after it; may throw
/// to abort the integration.
using StepObserver = std::function<void(const StepState& before, const StepState& after, double dt)>;

struct IntegrationResult {
  StepState final_state;
  std::vector<EnergySample> energy_trace;  // includes the initial state
};

/// Marches from t = 0 to t_end with steps of dt; the last step is shortened
/// to land exactly on t_end.
IntegrationResult integrate(const LinearSystem& system, const Tableau& tableau, std::vector<double> u0, double dt,
                            double t_end, bool record_energy, const StepObserver& observer = {});

/// CSV with columns step,t,energy.
void write_energy_csv(const std::vector<EnergySample>& trace, const std::filesystem::path& path,
                      const std::string& comment = {});

}  // namespace vemlump
