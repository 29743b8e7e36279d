#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "vemlump/assembly.hpp"
#include "vemlump/error.hpp"
#include "vemlump/spectral.hpp"
#include "vemlump/timeint.hpp"

using namespace vemlump;

namespace {

const IntegratorKind kAll[] = {IntegratorKind::ForwardEuler, IntegratorKind::SSPRK3, IntegratorKind::SSPRK54};

// u' = -u, u(0) = 1, integrated to t = 1
double decay_error(IntegratorKind kind, double dt) {
  static const SparseMatrix one = SparseMatrix::diagonal(std::vector<double>{1.0});
  static const std::vector<double> mass{1.0};
  LinearSystem sys{&one, mass, {}};
  const auto res = integrate(sys, make_tableau(kind), {1.0}, dt, 1.0, false);
  return std::abs(res.final_state.u[0] - std::exp(-1.0));
}

}  // namespace

TEST_SUITE("timeint") {

TEST_CASE("tableaus satisfy their order conditions") {
  for (IntegratorKind kind : kAll) {
    const Tableau& t = make_tableau(kind);
    for (double r : order_condition_residuals(t, t.order)) CHECK(std::abs(r) < 1e-12);
    CHECK(t.c.size() == t.stages);
    for (int i = 0; i < t.stages; ++i) CHECK(t.c[i] == doctest::Approx(t.a.row(i).sum()).epsilon(1e-15));
  }
  CHECK(make_tableau(IntegratorKind::ForwardEuler).c_ssp == 1.0);
  CHECK(make_tableau(IntegratorKind::SSPRK3).c_ssp == 1.0);
  CHECK(make_tableau(IntegratorKind::SSPRK54).c_ssp == doctest::Approx(1.508).epsilon(1e-3));
  CHECK(make_tableau(IntegratorKind::SSPRK3).order == 3);
  CHECK(make_tableau(IntegratorKind::SSPRK54).order == 4);
  // SSPRK3 fails the fourth-order conditions
  double worst = 0.0;
  for (double r : order_condition_residuals(make_tableau(IntegratorKind::SSPRK3), 4)) worst = std::max(worst, std::abs(r));
  CHECK(worst > 1e-3);
  CHECK(parse_integrator("ssprk54") == IntegratorKind::SSPRK54);
  CHECK_THROWS_AS(parse_integrator("rk4"), Error);
}

TEST_CASE("observed temporal order on u' = -u") {
  for (IntegratorKind kind : kAll) {
    const int order = make_tableau(kind).order;
    const double e1 = decay_error(kind, 0.1), e2 = decay_error(kind, 0.05), e3 = decay_error(kind, 0.025);
    CHECK(std::log(e1 / e2) / std::log(2.0) == doctest::Approx(order).epsilon(0.1 / order));
    CHECK(std::log(e2 / e3) / std::log(2.0) == doctest::Approx(order).epsilon(0.1 / order));
  }
}

TEST_CASE("forward Euler along the top eigenvector") {
  const Mesh mesh = generate_mesh({MeshFamily::DistortedQuad, 6, 0.2, 0, 2});
  const SystemMatrices sys = assemble_system(discretize(mesh, 1));
  // top eigenpair from the dense symmetric problem, v = M^{-1/2} y
  const auto n = static_cast<Eigen::Index>(sys.n_free);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a(i, j) = sys.stiffness.at(i, j) / std::sqrt(sys.lumped_mass[i] * sys.lumped_mass[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const double lambda = es.eigenvalues()(n - 1);
  std::vector<double> v(sys.n_free);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = es.eigenvectors()(i, n - 1) / std::sqrt(sys.lumped_mass[i]);

  LinearSystem ls{&sys.stiffness, sys.lumped_mass, {}};
  const Tableau& fe = make_tableau(IntegratorKind::ForwardEuler);
  const StepState s0{v, 0.0, 0, energy_norm(v, sys.lumped_mass)};
  const StepState at_limit = ssp_step(ls, fe, s0, 2.0 / lambda);
  CHECK(std::abs(at_limit.energy - s0.energy) < 1e-10 * s0.energy);
  const StepState half = ssp_step(ls, fe, s0, 0.5 / lambda);
  for (std::size_t i = 0; i < half.u.size(); ++i) CHECK(std::abs(half.u[i] - 0.5 * v[i]) < 1e-10);
}

TEST_CASE("fixed points") {
  const SparseMatrix zero(3, 3);
  const std::vector<double> mass{1.0, 2.0, 3.0};
  LinearSystem ls{&zero, mass, {}};
  for (IntegratorKind kind : kAll) {
    const auto res = integrate(ls, make_tableau(kind), {1.0, -2.0, 0.5}, 0.1, 1.0, false);
    CHECK(res.final_state.u == std::vector<double>{1.0, -2.0, 0.5});
  }
  const SystemMatrices sys = assemble_system(discretize(oracle::uniform_grid(4), 1));
  LinearSystem heat{&sys.stiffness, sys.lumped_mass, {}};
  const auto res = integrate(heat, make_tableau(IntegratorKind::SSPRK3), std::vector<double>(sys.n_free, 0.0), 0.001, 0.1, false);
  for (double v : res.final_state.u) CHECK(v == 0.0);
}

TEST_CASE("integration lands exactly on t_end") {
  const SparseMatrix one = SparseMatrix::diagonal(std::vector<double>{1.0});
  const std::vector<double> mass{1.0};
  LinearSystem ls{&one, mass, {}};
  const auto res = integrate(ls, make_tableau(IntegratorKind::SSPRK3), {1.0}, 0.3, 1.0, true);
  CHECK(res.final_state.t == 1.0);
  CHECK(res.final_state.step_index == 4);
  CHECK(res.energy_trace.size() == 5);
  const auto exact = integrate(ls, make_tableau(IntegratorKind::SSPRK3), {1.0}, 0.1, 1.0, false);
  CHECK(exact.final_state.step_index == 10);
}

TEST_CASE("energy is non-increasing below the SSP limit") {
  const Mesh mesh = generate_mesh({MeshFamily::Voronoi, 6, 0.0, 5, 9});
  const SystemMatrices sys = assemble_system(discretize(mesh, 1));
  const SpectralReport rep = lambda_max_power(sys.stiffness, sys.lumped_mass);
  LinearSystem ls{&sys.stiffness, sys.lumped_mass, {}};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> u0(sys.n_free);
  for (auto& x : u0) x = unit(rng);
  for (IntegratorKind kind : kAll) {
    const Tableau& t = make_tableau(kind);
    const auto res = integrate(ls, t, u0, 0.99 * t.c_ssp * rep.dt_fe, 200 * rep.dt_fe, true);
    for (std::size_t i = 1; i < res.energy_trace.size(); ++i) {
      CHECK(res.energy_trace[i].energy <= res.energy_trace[i - 1].energy * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("non-finite states raise an instability error") {
  const SparseMatrix big = SparseMatrix::diagonal(std::vector<double>{1e300});
  const std::vector<double> mass{1e-300};
  LinearSystem ls{&big, mass, {}};
  CHECK_THROWS_AS(integrate(ls, make_tableau(IntegratorKind::ForwardEuler), {1.0}, 1.0, 5.0, false), InstabilityError);
}

TEST_CASE("energy CSV") {
  const auto path = std::filesystem::temp_directory_path() / "vemlump_energy_test.csv";
  write_energy_csv({{0, 0.0, 1.0}, {1, 0.5, 0.75}}, path, "config: test");
  std::ifstream in(path);
  std::string l1, l2, l3;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  CHECK(l1 == "# config: test");
  CHECK(l2 == "step,t,energy");
  CHECK(l3.rfind("0,0,1", 0) == 0);
  std::filesystem::remove(path);
}

}
