#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "vemlump/harness.hpp"

using namespace vemlump;

TEST_SUITE("harness") {

TEST_CASE("manufactured case satisfies the heat equation") {
  const ManufacturedCase mc = manufactured_case();
  const double pi = std::numbers::pi;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0, worst_split = 0.0, worst_lib = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = unit(rng), x = unit(rng), y = unit(rng);
    const double s = std::sin(pi * x) * std::sin(pi * y);
    const double ut = std::exp(t) * s;                      // d/dt of e^t s
    const double lap = -2.0 * pi * pi * std::exp(t) * s;    // sum of second derivatives
    worst = std::max(worst, std::abs(ut - lap - mc.f(t, x, y)));
    worst_lib = std::max(worst_lib, std::abs(mc.u_t(t, x, y) - mc.laplacian_u(t, x, y) - mc.f(t, x, y)));
    worst_split = std::max(worst_split, std::abs(mc.source_time(t) * mc.source_space(x, y) - mc.f(t, x, y)));
    CHECK(mc.u(t, x, y) == doctest::Approx(std::exp(t) * s));
    const auto g = mc.grad_u(t, x, y);
    CHECK(g[0] == doctest::Approx(pi * std::exp(t) * std::cos(pi * x) * std::sin(pi * y)));
    CHECK(g[1] == doctest::Approx(pi * std::exp(t) * std::sin(pi * x) * std::cos(pi * y)));
  }
  CHECK(worst < 1e-9);
  CHECK(worst_lib < 1e-9);
  CHECK(worst_split < 1e-12);
  CHECK(mc.u0(0.5, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("error norms") {
  const Mesh mesh = generate_mesh({MeshFamily::Voronoi, 5, 0.0, 3, 2});
  for (int k = 1; k <= 2; ++k) {
    const Discretization disc = discretize(mesh, k);
    const std::vector<double> zero(disc.numbering.size(), 0.0);
    const ErrorNorms z = error_norms(disc, zero, [](double, double) { return 0.0; },
                                     [](double, double) { return std::array<double, 2>{0.0, 0.0}; });
    CHECK(z.l2 == 0.0);
    CHECK(z.h1 == 0.0);

    auto lin = [](double x, double y) { return 1.0 + 2.0 * x - 3.0 * y; };
    const auto dofs = interpolate_dofs(mesh, k, lin);
    const ErrorNorms e = error_norms(disc, dofs, lin, [](double, double) { return std::array<double, 2>{2.0, -3.0}; });
    CHECK(e.l2 < 1e-12);
    CHECK(e.h1 < 1e-12);
  }
}

TEST_CASE("interpolation error decays at second order") {
  const ManufacturedCase mc = manufactured_case();
  double prev = 0.0;
  for (int n : {8, 16}) {
    const Mesh mesh = oracle::uniform_grid(n);
    const Discretization disc = discretize(mesh, 1);
    const auto dofs = interpolate_dofs(mesh, 1, [&](double x, double y) { return mc.u(0.5, x, y); });
    const ErrorNorms e = error_norms(disc, dofs, mc, 0.5);
    CHECK(e.l2 > 0.0);
    if (prev > 0.0) {
      CHECK(prev / e.l2 > 3.5);
      CHECK(prev / e.l2 < 4.5);
    }
    prev = e.l2;
  }
}

TEST_CASE("EOC formula") {
  CHECK(eoc(0.04, 0.01, 0.25, 0.125) == doctest::Approx(2.0));
  CHECK(eoc(0.2, 0.1, 0.5, 0.25) == doctest::Approx(1.0));
}

TEST_CASE("dt policy parsing") {
  DtPolicy p = DtPolicy::parse("spectral:0.8");
  CHECK(p.kind == DtPolicy::Kind::Spectral);
  CHECK(*p.value == 0.8);
  p = DtPolicy::parse("theta:0.05");
  CHECK(p.kind == DtPolicy::Kind::Theta);
  CHECK(*p.value == 0.05);
  p = DtPolicy::parse("theta");
  CHECK_FALSE(p.value.has_value());
  CHECK(DtPolicy::parse(p.to_string()).kind == DtPolicy::Kind::Theta);
  CHECK_THROWS_AS(DtPolicy::parse("cfl:0.5"), Error);
  CHECK_THROWS_AS(DtPolicy::parse("spectral:abc"), Error);
  CHECK_THROWS_AS(DtPolicy::parse("theta:-1"), Error);
}

TEST_CASE("convergence runs: monotone errors and artefacts") {
  for (MeshFamily f : {MeshFamily::DistortedQuad, MeshFamily::SerendipityQ8, MeshFamily::Voronoi}) {
    ConvergenceConfig cfg;
    cfg.family = f;
    cfg.levels = {4, 8, 16};
    const EOCTable t = run_convergence(cfg);
    REQUIRE(t.rows.size() == 3);
    REQUIRE(t.theta.has_value());
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(t.rows[i].stable);
      CHECK(t.rows[i].dt <= 2.0 / t.rows[i].lambda_max * (1.0 + 1e-12));
      if (i > 0) {
        CHECK(t.rows[i].err_l2 < t.rows[i - 1].err_l2);
        CHECK(t.rows[i].err_h1 < t.rows[i - 1].err_h1);
      }
    }
    if (f != MeshFamily::DistortedQuad) continue;
    std::ostringstream a, b, svg;
    write_convergence_csv(t, a);
    write_convergence_csv(t, b);
    CHECK(a.str() == b.str());
    std::istringstream lines(a.str());
    std::string line;
    std::vector<std::string> all;
    while (std::getline(lines, line)) all.push_back(line);
    REQUIRE(all.size() == 5);
    CHECK(all[0].rfind("# config:", 0) == 0);
    CHECK(all[1] == "family,k,integrator,level,n,h_max,h_min,n_free,lambda_max,dt,err_l2,err_h1,eoc_l2,eoc_h1,wall_time_s");
    write_convergence_svg(std::span<const EOCTable>(&t, 1), svg);
    const std::string s = svg.str();
    auto count = [&](const std::string& needle) {
      std::size_t c = 0;
      for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++c;
      return c;
    };
    CHECK(count("<polyline class=\"err-l2\"") == 1);
    CHECK(count("<polyline class=\"err-h1\"") == 1);
    CHECK(count("class=\"ref-slope-1\"") == 1);
    CHECK(count("class=\"ref-slope-2\"") == 1);
    CHECK(count("stroke-dasharray") >= 2);
  }
}

TEST_CASE("a theta above the SSP bound is flagged, not run") {
  ConvergenceConfig cfg;
  cfg.levels = {4, 8};
  cfg.dt_policy = DtPolicy::parse("theta:10");
  const EOCTable t = run_convergence(cfg);
  for (const auto& r : t.rows) {
    CHECK_FALSE(r.stable);
    CHECK(std::isnan(r.err_l2));
  }
  CHECK(std::isnan(t.eoc_l2[0]));
}

TEST_CASE("spectral policy past the forward Euler limit blows up") {
  ConvergenceConfig cfg;
  cfg.levels = {16, 20};  // enough steps for roundoff to grow by 1.1 per step
  cfg.integrator = IntegratorKind::ForwardEuler;
  cfg.dt_policy = DtPolicy::parse("spectral:1.05");
  const EOCTable t = run_convergence(cfg);
  for (const auto& r : t.rows) CHECK_FALSE(r.stable);
}

}
