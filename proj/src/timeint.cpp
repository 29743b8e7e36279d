#include "vemlump/timeint.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>

#include "vemlump/error.hpp"

namespace vemlump {

std::string to_string(IntegratorKind kind) {
  switch (kind) {
    case IntegratorKind::ForwardEuler: return "fe";
    case IntegratorKind::SSPRK3: return "ssprk3";
    case IntegratorKind::SSPRK54: return "ssprk54";
  }
  return "unknown";
}

IntegratorKind parse_integrator(const std::string& name) {
  if (name == "fe") return IntegratorKind::ForwardEuler;
  if (name == "ssprk3") return IntegratorKind::SSPRK3;
  if (name == "ssprk54") return IntegratorKind::SSPRK54;
  throw Error("unknown integrator '" + name + "'");
}

namespace {

Tableau forward_euler() {
  Tableau t{"fe", 1, 1, Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), 1.0};
  return t;
}

Tableau ssprk3() {
  Tableau t{"ssprk3", 3, 3, Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd(3), Eigen::VectorXd(3), 1.0};
  t.a(1, 0) = 1.0;
  t.a(2, 0) = 0.25;
  t.a(2, 1) = 0.25;
  t.b << 1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0;
  t.c = t.a.rowwise().sum();
  return t;
}

// Optimal five-stage fourth-order SSP method, converted from its Shu-Osher
// form: stage i = sum_j alpha_ij stage_j + dt beta_ij F(stage_j).
Tableau ssprk54() {
  constexpr int s = 5;
  // Rows of A are built stage by stage from the convex combinations.
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(s + 1, s);
  auto unit = [](int j) {
    Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(s);
    e[j] = 1.0;
    return e;
  };
  rows.row(1) = 0.391752226571890 * unit(0);
  rows.row(2) = 0.444370493651235 * rows.row(0) + 0.555629506348765 * rows.row(1) + 0.368410593050371 * unit(1);
  rows.row(3) = 0.620101851488403 * rows.row(0) + 0.379898148511597 * rows.row(2) + 0.251891774271694 * unit(2);
  rows.row(4) = 0.178079954393132 * rows.row(0) + 0.821920045606868 * rows.row(3) + 0.544974750228521 * unit(3);
  rows.row(5) = 0.517231671970585 * rows.row(2) + 0.096059710526147 * rows.row(3) + 0.063692468666290 * unit(3) +
                0.386708617503269 * rows.row(4) + 0.226007483236906 * unit(4);

  Tableau t{"ssprk54", s, 4, rows.topRows(s), rows.row(s).transpose(), Eigen::VectorXd(s), 1.508152618068942};
  t.c = t.a.rowwise().sum();
  return t;
}

void validate(const Tableau& t) {
  for (double r : order_condition_residuals(t, t.order)) {
    if (!(std::abs(r) < 1e-12)) {
      throw NumericalError("tableau " + t.name + " fails an order condition (residual " + std::to_string(r) + ")");
    }
  }
  for (int i = 0; i < t.stages; ++i) {
    for (int j = i; j < t.stages; ++j) {
      if (t.a(i, j) != 0.0) throw NumericalError("tableau " + t.name + " is not explicit");
    }
  }
}

}  // namespace

const Tableau& make_tableau(IntegratorKind kind) {
  static const Tableau fe = forward_euler(), rk3 = ssprk3(), rk54 = ssprk54();
  static std::once_flag checked;
  std::call_once(checked, [] {
    validate(fe);
    validate(rk3);
    validate(rk54);
  });
  switch (kind) {
    case IntegratorKind::ForwardEuler: return fe;
    case IntegratorKind::SSPRK3: return rk3;
    case IntegratorKind::SSPRK54: return rk54;
  }
  throw Error("unknown integrator");
}

std::vector<double> order_condition_residuals(const Tableau& t, int order) {
  const Eigen::VectorXd& b = t.b;
  const Eigen::VectorXd& c = t.c;
  const Eigen::MatrixXd& a = t.a;
  std::vector<double> r;
  r.push_back(b.sum() - 1.0);
  if (order >= 2) r.push_back(b.dot(c) - 1.0 / 2.0);
  if (order >= 3) {
    r.push_back(b.dot(c.cwiseProduct(c)) - 1.0 / 3.0);
    r.push_back(b.dot(a * c) - 1.0 / 6.0);
  }
  if (order >= 4) {
    const Eigen::VectorXd c2 = c.cwiseProduct(c);
    r.push_back(b.dot(c2.cwiseProduct(c)) - 1.0 / 4.0);
    r.push_back(b.dot(c.cwiseProduct(a * c)) - 1.0 / 8.0);
    r.push_back(b.dot(a * c2) - 1.0 / 12.0);
    r.push_back(b.dot(a * (a * c)) - 1.0 / 24.0);
  }
  if (order > 4) throw Error("order conditions are implemented up to order 4");
  return r;
}

double energy_norm(std::span<const double> u, std::span<const double> mass) {
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += mass[i] * u[i] * u[i];
  return std::sqrt(sum);
}

StepState ssp_step(const LinearSystem& system, const Tableau& tableau, const StepState& state, double dt) {
  if (!(dt > 0.0)) throw Error("time step must be positive");
  const std::size_t n = state.u.size();
  if (system.mass.size() != n || system.stiffness->rows() != n) throw Error("state size does not match the system");

  const int s = tableau.stages;
  std::vector<std::vector<double>> slopes(static_cast<std::size_t>(s), std::vector<double>(n));
  std::vector<double> stage(n), ku(n), load(n, 0.0);
  for (int i = 0; i < s; ++i) {
    stage = state.u;
    for (int j = 0; j < i; ++j) {
      const double aij = tableau.a(i, j);
      if (aij == 0.0) continue;
      const auto& kj = slopes[static_cast<std::size_t>(j)];
      for (std::size_t p = 0; p < n; ++p) stage[p] += dt * aij * kj[p];
    }
    system.stiffness->multiply(stage, ku);
    if (system.load) system.load(state.t + tableau.c[i] * dt, load);
    auto& ki = slopes[static_cast<std::size_t>(i)];
    for (std::size_t p = 0; p < n; ++p) ki[p] = (load[p] - ku[p]) / system.mass[p];
  }

  StepState next;
  next.u = state.u;
  for (int i = 0; i < s; ++i) {
    const double bi = tableau.b[i];
    const auto& ki = slopes[static_cast<std::size_t>(i)];
    for (std::size_t p = 0; p < n; ++p) next.u[p] += dt * bi * ki[p];
  }
  next.t = state.t + dt;
  next.step_index = state.step_index + 1;
  next.energy = energy_norm(next.u, system.mass);
  if (!std::isfinite(next.energy)) throw InstabilityError(next.step_index, "non-finite solution values");
  return next;
}

IntegrationResult integrate(const LinearSystem& system, const Tableau& tableau, std::vector<double> u0, double dt,
                            double t_end, bool record_energy, const StepObserver& observer) {
  if (!(dt > 0.0)) throw Error("time step must be positive");
  if (!(t_end >= 0.0)) throw Error("final time must be non-negative");
  IntegrationResult result;
  StepState state;
  state.u = std::move(u0);
  state.energy = energy_norm(state.u, system.mass);
  if (record_energy) result.energy_trace.push_back({0, 0.0, state.energy});

  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt * (1.0 - 1e-12)));
  for (std::size_t n = 0; n < steps; ++n) {
    const double t_next = n + 1 == steps ? t_end : static_cast<double>(n + 1) * dt;
    StepState next = ssp_step(system, tableau, state, t_next - state.t);
    next.t = t_next;
    if (observer) observer(state, next, t_next - state.t);
    if (record_energy) result.energy_trace.push_back({next.step_index, next.t, next.energy});
    state = std::move(next);
  }
  result.final_state = std::move(state);
  return result;
}

void write_energy_csv(const std::vector<EnergySample>& trace, const std::filesystem::path& path,
                      const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "step,t,energy\n" << std::setprecision(17);
  for (const auto& s : trace) out << s.step << ',' << s.t << ',' << s.energy << '\n';
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

}  // namespace vemlump
