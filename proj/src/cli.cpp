#include "vemlump/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "vemlump/assembly.hpp"
#include "vemlump/error.hpp"
#include "vemlump/harness.hpp"
#include "vemlump/mesh.hpp"
#include "vemlump/spectral.hpp"
#include "vemlump/timeint.hpp"

namespace vemlump {
namespace {

struct RunConfig {
  std::string family = "distorted-quad";
  int n = 8;
  std::vector<int> levels{8, 16, 32};
  int k = 1;
  std::string integrator = "ssprk3";
  std::string dt_policy = "theta";
  double delta = kDefaultFloorDelta;
  double distortion = 0.2;
  int lloyd_iters = 20;
  std::uint64_t seed = 0;
  double t_end = 1.0;
  std::string mesh_path;
  std::string out;
  std::string svg;
  int threads = 1;
  double tol_eig = 1e-10;

  MeshSpec mesh_spec(int resolution) const {
    const MeshFamily f = parse_mesh_family(family);
    return {f, resolution, f == MeshFamily::Voronoi ? 0.0 : distortion, lloyd_iters, seed};
  }
};

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string describe(const std::string& sub, const RunConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17) << "subcommand=" << sub;
  if (sub == "solve" && !c.mesh_path.empty()) {
    os << " mesh=" << c.mesh_path;
  } else {
    os << " family=" << c.family;
    if (sub == "convergence" || sub == "spectral") {
      os << " levels=" << join(c.levels);
    } else {
      os << " n=" << c.n;
    }
    os << " distortion=" << c.distortion << " lloyd_iters=" << c.lloyd_iters;
  }
  os << " seed=" << c.seed;
  if (sub != "mesh") {
    os << " k=" << c.k << " delta=" << c.delta << " tol_eig=" << c.tol_eig;
    if (sub != "spectral") os << " integrator=" << c.integrator << " dt_policy=" << c.dt_policy << " t_end=" << c.t_end;
  }
  os << " threads=" << c.threads;
  return os.str();
}

void add_mesh_options(CLI::App* app, RunConfig& c, bool levels) {
  app->add_option("--family", c.family, "Mesh family")
      ->check(CLI::IsMember({"distorted-quad", "serendipity-q8", "voronoi"}));
  if (levels) {
    app->add_option("--levels", c.levels, "Comma-separated resolutions, one per level")->delimiter(',');
  } else {
    app->add_option("--n", c.n, "Resolution: n x n quads or n^2 Voronoi seeds")->check(CLI::Range(2, 1 << 20));
  }
  app->add_option("--distortion", c.distortion, "Vertex jitter as a fraction of the spacing, in [0, 0.5)");
  app->add_option("--lloyd-iters", c.lloyd_iters, "Lloyd relaxation sweeps for Voronoi meshes")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--seed", c.seed, "Seed of the single random stream");
  app->add_option("--threads", c.threads, "Worker threads for element loops")->check(CLI::PositiveNumber);
}

void add_solver_options(CLI::App* app, RunConfig& c, bool time_stepping) {
  app->add_option("--k", c.k, "Polynomial order")->check(CLI::IsMember({1, 2}));
  app->add_option("--delta", c.delta, "Lumped-weight flooring parameter in (0, 1)");
  app->add_option("--tol-eig", c.tol_eig, "Relative tolerance of the power iteration")->check(CLI::PositiveNumber);
  if (time_stepping) {
    app->add_option("--integrator", c.integrator, "Time integrator")->check(CLI::IsMember({"fe", "ssprk3", "ssprk54"}));
    app->add_option("--dt-policy", c.dt_policy, "spectral:<safety> or theta[:<theta>]");
    app->add_option("--t-end", c.t_end, "Final time")->check(CLI::PositiveNumber);
  }
}

int cmd_mesh(const RunConfig& c, std::ostream& out) {
  const Mesh mesh = generate_mesh(c.mesh_spec(c.n));
  const MeshStats s = mesh_stats(mesh);
  write_mesh(mesh, c.out);
  out << std::setprecision(12) << "wrote " << c.out << ": " << s.n_cells << " cells, " << mesh.n_vertices()
      << " vertices, h_max=" << s.h_max << " h_min=" << s.h_min << " max_vertices=" << s.max_vertices_per_cell
      << " mean_vertices=" << s.mean_vertices_per_cell << " area=" << s.total_area << '\n';
  return kExitOk;
}

int cmd_solve(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Mesh mesh = c.mesh_path.empty() ? generate_mesh(c.mesh_spec(c.n)) : read_mesh(c.mesh_path);
  const MeshStats stats = mesh_stats(mesh);
  const IntegratorKind kind = parse_integrator(c.integrator);
  const Tableau& tableau = make_tableau(kind);
  const DtPolicy policy = DtPolicy::parse(c.dt_policy);

  const Discretization disc = discretize(mesh, c.k, c.threads);
  const SystemMatrices sys = assemble_system(disc, c.delta, c.threads);
  std::string eig_note;
  const SpectralReport rep = lambda_max_power_relaxed(sys.stiffness, sys.lumped_mass, {c.tol_eig, 0, c.seed}, &eig_note);
  if (!eig_note.empty()) err << "note: " << eig_note << '\n';
  const double dt_max = tableau.c_ssp * rep.dt_fe;
  double dt = 0.0;
  if (policy.kind == DtPolicy::Kind::Spectral) {
    dt = *policy.value * dt_max;
  } else {
    const double theta = policy.value ? *policy.value : 0.9 * dt_max / (stats.h_min * stats.h_min);
    dt = theta * stats.h_min * stats.h_min;
  }
  out << std::setprecision(10) << "cells=" << mesh.n_cells() << " n_free=" << sys.n_free << " h_max=" << stats.h_max
      << " h_min=" << stats.h_min << " lambda_max=" << rep.lambda_max << " dt_fe=" << rep.dt_fe << " dt=" << dt
      << " dt/(C_SSP dt_fe)=" << dt / dt_max << '\n';
  if (dt > dt_max) err << "warning: dt exceeds C_SSP * 2 / lambda_max; the scheme is outside its stability bound\n";

  const ManufacturedCase mc = manufactured_case();
  const std::vector<double> profile =
      assemble_load(disc, sys, [&](double, double x, double y) { return mc.source_space(x, y); }, 0.0, c.threads);
  double profile_dual2 = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) profile_dual2 += profile[i] * profile[i] / sys.lumped_mass[i];
  LinearSystem ls{&sys.stiffness, sys.lumped_mass, [&](double t, std::span<double> f) {
                    const double s = mc.source_time(t);
                    for (std::size_t i = 0; i < f.size(); ++i) f[i] = s * profile[i];
                  }};
  std::vector<double> u0 = sys.restrict_to_free(interpolate_dofs(mesh, c.k, mc.u0));
  const double e0 = energy_norm(u0, sys.lumped_mass);
  double cf2 = 0.0;
  const StepObserver guard = [&](const StepState& before, const StepState& after, double step) {
    const double s = mc.source_time(before.t);
    cf2 = std::max(cf2, s * s * profile_dual2);
    const double bound = std::exp(after.t) * e0 * e0 + (1.0 + step) * (std::exp(after.t) - 1.0) * cf2;
    if (after.energy * after.energy > 10.0 * bound) {
      throw InstabilityError(after.step_index, "energy " + std::to_string(after.energy) +
                                                   " exceeds the discrete Gronwall envelope (growth detected)");
    }
  };

  IntegrationResult res = integrate(ls, tableau, std::move(u0), dt, c.t_end, true, guard);
  const ErrorNorms e = error_norms(disc, sys.expand(res.final_state.u), mc, c.t_end, c.threads);
  out << std::setprecision(10) << "t=" << res.final_state.t << " steps=" << res.final_state.step_index
      << " err_l2=" << e.l2 << " err_h1=" << e.h1 << " energy=" << res.final_state.energy << '\n';
  if (!c.out.empty()) write_energy_csv(res.energy_trace, c.out, "config: " + describe("solve", c));
  return kExitOk;
}

ConvergenceConfig convergence_config(const RunConfig& c) {
  ConvergenceConfig cc;
  cc.family = parse_mesh_family(c.family);
  cc.levels = c.levels;
  cc.k = c.k;
  cc.integrator = parse_integrator(c.integrator);
  cc.dt_policy = DtPolicy::parse(c.dt_policy);
  cc.delta = c.delta;
  cc.distortion = c.distortion;
  cc.lloyd_iters = c.lloyd_iters;
  cc.seed = c.seed;
  cc.t_end = c.t_end;
  cc.tol_eig = c.tol_eig;
  cc.threads = c.threads;
  return cc;
}

int cmd_convergence(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const EOCTable table = run_convergence(convergence_config(c));
  write_convergence_csv(table, out);
  if (!c.out.empty()) write_convergence_csv(table, c.out);
  if (!c.svg.empty()) write_convergence_svg(std::span<const EOCTable>(&table, 1), c.svg);
  bool stable = true;
  for (const auto& r : table.rows) {
    if (!r.stable) {
      err << "level " << r.level << " (n=" << r.n << ") unstable: " << r.note << '\n';
      stable = false;
    } else if (!r.note.empty()) {
      err << "note: level " << r.level << ": " << r.note << '\n';
    }
  }
  return stable ? kExitOk : kExitNumerical;
}

int cmd_spectral(const RunConfig& c, std::ostream& out) {
  std::vector<Mesh> meshes;
  std::mt19937_64 seeds(c.seed);
  for (int n : c.levels) {
    MeshSpec spec = c.mesh_spec(n);
    spec.seed = seeds();
    meshes.push_back(generate_mesh(spec));
  }
  const auto rows = verify_spectral_bound(meshes, c.k, c.delta, {c.tol_eig, 0, c.seed}, c.threads);
  // stdout already carries the config echo.
  auto emit = [&](std::ostream& os, bool with_config) {
    if (with_config) os << "# config: " << describe("spectral", c) << '\n';
    os << "level,h_min,n_free,lambda_max,dt_fe,bound_product\n" << std::setprecision(17);
    for (const auto& r : rows) {
      os << r.level << ',' << r.h_min << ',' << r.n_free << ',' << r.lambda_max << ',' << r.dt_fe << ','
         << r.bound_product << '\n';
    }
  };
  emit(out, false);
  if (!c.out.empty()) {
    std::ofstream f(c.out);
    if (!f) throw Error("cannot open '" + c.out + "' for writing");
    emit(f, true);
  }
  for (const auto& r : rows) {
    if (r.flagged) out << "# note: bound_product changed by more than 2x at level " << r.level << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mass-lumped virtual element heat solver with explicit SSP Runge-Kutta stepping", "vemlump"};
  app.require_subcommand(1);
  RunConfig c;

  auto* mesh = app.add_subcommand("mesh", "Generate a mesh of the unit square");
  add_mesh_options(mesh, c, false);
  mesh->add_option("--out", c.out, "Output mesh file")->required();

  auto* solve = app.add_subcommand("solve", "Solve the manufactured heat problem on one mesh");
  solve->add_option("--mesh", c.mesh_path, "Mesh file (otherwise generated from --family/--n)");
  add_mesh_options(solve, c, false);
  add_solver_options(solve, c, true);
  solve->add_option("--out", c.out, "Energy trace CSV");

  auto* conv = app.add_subcommand("convergence", "Spatial convergence study");
  add_mesh_options(conv, c, true);
  add_solver_options(conv, c, true);
  conv->add_option("--out", c.out, "Convergence CSV");
  conv->add_option("--svg", c.svg, "Log-log error plot");

  auto* spec = app.add_subcommand("spectral", "lambda_max and lambda_max h_min^2 across levels");
  add_mesh_options(spec, c, true);
  add_solver_options(spec, c, false);
  spec->add_option("--out", c.out, "Spectral CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw Error("--delta must lie in (0, 1)");
    if (!(c.distortion >= 0.0 && c.distortion < 0.5)) throw Error("--distortion must lie in [0, 0.5)");
    if ((name == "convergence" || name == "spectral") && c.levels.size() < (name == "spectral" ? 1u : 2u)) {
      throw Error("--levels needs at least " + std::string(name == "spectral" ? "one level" : "two levels"));
    }
    if (name != "mesh" && name != "spectral") {
      parse_integrator(c.integrator);
      DtPolicy::parse(c.dt_policy);
    }
    out << "# config: " << describe(name, c) << '\n';
    if (name == "mesh") return cmd_mesh(c, out);
    if (name == "solve") return cmd_solve(c, out, err);
    if (name == "convergence") return cmd_convergence(c, out, err);
    return cmd_spectral(c, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace vemlump
