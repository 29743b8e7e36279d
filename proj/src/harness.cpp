#include "vemlump/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "vemlump/error.hpp"
#include "vemlump/parallel.hpp"

namespace vemlump {

using std::numbers::pi;

ManufacturedCase manufactured_case() {
  ManufacturedCase mc;
  mc.u = [](double t, double x, double y) { return std::exp(t) * std::sin(pi * x) * std::sin(pi * y); };
  mc.grad_u = [](double t, double x, double y) {
    const double e = std::exp(t);
    return std::array<double, 2>{e * pi * std::cos(pi * x) * std::sin(pi * y),
                                 e * pi * std::sin(pi * x) * std::cos(pi * y)};
  };
  mc.u_t = mc.u;
  mc.laplacian_u = [](double t, double x, double y) {
    return -2.0 * pi * pi * std::exp(t) * std::sin(pi * x) * std::sin(pi * y);
  };
  mc.f = [](double t, double x, double y) {
    return std::exp(t) * std::sin(pi * x) * std::sin(pi * y) * (1.0 + 2.0 * pi * pi);
  };
  mc.u0 = [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); };
  mc.source_time = [](double t) { return std::exp(t); };
  mc.source_space = [](double x, double y) { return (1.0 + 2.0 * pi * pi) * std::sin(pi * x) * std::sin(pi * y); };
  return mc;
}

ErrorNorms error_norms(const Discretization& disc, std::span<const double> dofs, const ScalarField& u,
                       const std::function<std::array<double, 2>(double, double)>& grad_u, int threads) {
  const Mesh& mesh = *disc.mesh;
  if (dofs.size() != disc.numbering.size()) throw Error("error_norms: DOF vector has the wrong size");
  const int order = 2 * disc.k + 8;
  std::vector<double> l2(mesh.n_cells()), h1(mesh.n_cells());
  parallel_for(mesh.n_cells(), threads, [&](std::size_t c) {
    const ProjectorPack& pack = disc.packs[c];
    const auto& ids = disc.cell_dofs[c];
    Eigen::VectorXd local(static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) local[static_cast<Eigen::Index>(i)] = dofs[ids[i]];
    const Eigen::VectorXd l2_coef = pack.l2 * local;
    const Eigen::VectorXd energy_coef = pack.energy * local;
    double el2 = 0.0, eh1 = 0.0;
    for_each_polygon_point(mesh.cell_polygon(c), mesh.geometry(c).centroid, order, [&](Point2 p, double w) {
      double value = 0.0, gx = 0.0, gy = 0.0;
      for (std::size_t a = 0; a < pack.basis.size(); ++a) {
        const MonomialValue mv = pack.basis.eval(pack.basis.index(a), p);
        value += l2_coef[static_cast<Eigen::Index>(a)] * mv.value;
        gx += energy_coef[static_cast<Eigen::Index>(a)] * mv.gradient[0];
        gy += energy_coef[static_cast<Eigen::Index>(a)] * mv.gradient[1];
      }
      const double du = u(p.x, p.y) - value;
      const auto g = grad_u(p.x, p.y);
      el2 += w * du * du;
      eh1 += w * ((g[0] - gx) * (g[0] - gx) + (g[1] - gy) * (g[1] - gy));
    });
    l2[c] = el2;
    h1[c] = eh1;
  });
  ErrorNorms out;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    out.l2 += l2[c];
    out.h1 += h1[c];
  }
  out.l2 = std::sqrt(out.l2);
  out.h1 = std::sqrt(out.h1);
  return out;
}

ErrorNorms error_norms(const Discretization& disc, std::span<const double> dofs, const ManufacturedCase& mc, double t,
                       int threads) {
  return error_norms(
      disc, dofs, [&](double x, double y) { return mc.u(t, x, y); },
      [&](double x, double y) { return mc.grad_u(t, x, y); }, threads);
}

DtPolicy DtPolicy::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  DtPolicy policy;
  std::optional<double> value;
  if (colon != std::string::npos) {
    const std::string number = text.substr(colon + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(number, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != number.size() || !(v > 0.0)) throw Error("invalid dt policy value in '" + text + "'");
    value = v;
  }
  if (kind == "spectral") {
    policy.kind = Kind::Spectral;
    policy.value = value.value_or(0.9);
  } else if (kind == "theta") {
    policy.kind = Kind::Theta;
    policy.value = value;
  } else {
    throw Error("unknown dt policy '" + text + "' (expected spectral:<safety> or theta[:<theta>])");
  }
  return policy;
}

std::string DtPolicy::to_string() const {
  std::ostringstream os;
  os << std::setprecision(17) << (kind == Kind::Spectral ? "spectral" : "theta");
  if (value) os << ':' << *value;
  return os.str();
}

std::string ConvergenceConfig::describe() const {
  std::ostringstream os;
  os << std::setprecision(17) << "family=" << to_string(family) << " levels=";
  for (std::size_t i = 0; i < levels.size(); ++i) os << (i ? "," : "") << levels[i];
  os << " k=" << k << " integrator=" << to_string(integrator) << " dt_policy=" << dt_policy.to_string()
     << " delta=" << delta << " distortion=" << distortion << " lloyd_iters=" << lloyd_iters << " seed=" << seed
     << " t_end=" << t_end << " tol_eig=" << tol_eig;
  return os.str();
}

double eoc(double e1, double e2, double h1, double h2) { return std::log(e1 / e2) / std::log(h1 / h2); }

namespace {

struct PreparedLevel {
  Mesh mesh;
  MeshStats stats;
  double lambda_max = 0.0;
  double setup_seconds = 0.0;
  std::string note;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

EOCTable run_convergence(const ConvergenceConfig& config) {
  if (config.levels.size() < 2) throw Error("a convergence study needs at least two levels");
  if (config.k < 1 || config.k > 2) throw Error("the solver supports k = 1 and k = 2");
  if (!(config.t_end > 0.0)) throw Error("t_end must be positive");
  // Spectral safety factors above 1 are accepted for instability studies.
  if (config.dt_policy.kind == DtPolicy::Kind::Spectral && !(config.dt_policy.value && *config.dt_policy.value > 0.0)) {
    throw Error("spectral safety must be positive");
  }

  const Tableau& tableau = make_tableau(config.integrator);
  const ManufacturedCase mc = manufactured_case();
  EOCTable table;
  table.config = config;

  // Pass 1: meshes, lumped systems and lambda_max for every level.
  std::mt19937_64 seeds(config.seed);
  // Discretizations keep pointers into `levels`; reserve so they stay valid.
  std::vector<PreparedLevel> levels;
  std::vector<Discretization> discs;
  std::vector<SystemMatrices> systems;
  levels.reserve(config.levels.size());
  discs.reserve(config.levels.size());
  for (int n : config.levels) {
    const auto start = std::chrono::steady_clock::now();
    MeshSpec spec{config.family, n, config.distortion, config.lloyd_iters, seeds()};
    if (config.family == MeshFamily::Voronoi) spec.distortion = 0.0;
    levels.push_back({generate_mesh(spec), {}, 0.0, 0.0});
    PreparedLevel& lvl = levels.back();
    lvl.stats = mesh_stats(lvl.mesh);
    discs.push_back(discretize(lvl.mesh, config.k, config.threads));
    systems.push_back(assemble_system(discs.back(), config.delta, config.threads));
    PowerOptions po{config.tol_eig, 0, config.seed};
    lvl.lambda_max =
        lambda_max_power_relaxed(systems.back().stiffness, systems.back().lumped_mass, po, &lvl.note).lambda_max;
    lvl.setup_seconds = seconds_since(start);
  }

  double theta = 0.0;
  if (config.dt_policy.kind == DtPolicy::Kind::Theta) {
    if (config.dt_policy.value) {
      theta = *config.dt_policy.value;
    } else {
      theta = std::numeric_limits<double>::infinity();
      for (const auto& lvl : levels) {
        theta = std::min(theta, 0.9 * tableau.c_ssp * 2.0 / (lvl.lambda_max * lvl.stats.h_min * lvl.stats.h_min));
      }
    }
    table.theta = theta;
  }

  // Pass 2: time integration and errors.
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto start = std::chrono::steady_clock::now();
    PreparedLevel& lvl = levels[l];
    const Discretization& disc = discs[l];
    const SystemMatrices& sys = systems[l];

    ErrorReport row;
    row.level = l;
    row.n = config.levels[l];
    row.h_max = lvl.stats.h_max;
    row.h_min = lvl.stats.h_min;
    row.n_free = sys.n_free;
    row.lambda_max = lvl.lambda_max;
    row.note = lvl.note;
    const double dt_max = tableau.c_ssp * 2.0 / lvl.lambda_max;
    row.dt = config.dt_policy.kind == DtPolicy::Kind::Spectral ? *config.dt_policy.value * dt_max
                                                               : theta * lvl.stats.h_min * lvl.stats.h_min;

    if (config.dt_policy.kind == DtPolicy::Kind::Theta && row.dt > dt_max) {
      row.stable = false;
      row.note = "unstable by configuration: dt exceeds C_SSP * 2 / lambda_max";
      row.err_l2 = row.err_h1 = std::numeric_limits<double>::quiet_NaN();
    } else {
      const std::vector<double> profile =
          assemble_load(disc, sys, [&](double, double x, double y) { return mc.source_space(x, y); }, 0.0,
                        config.threads);
      double profile_dual2 = 0.0;  // ||profile||^2 in the M^{-1} norm
      for (std::size_t i = 0; i < profile.size(); ++i) profile_dual2 += profile[i] * profile[i] / sys.lumped_mass[i];

      LinearSystem ls{&sys.stiffness, sys.lumped_mass, [&](double t, std::span<double> out) {
                        const double s = mc.source_time(t);
                        for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * profile[i];
                      }};
      std::vector<double> u0 = sys.restrict_to_free(interpolate_dofs(lvl.mesh, config.k, mc.u0));
      const double e0 = energy_norm(u0, sys.lumped_mass);

      // Guard against runaway growth: abort when the energy leaves the
      // discrete Gronwall envelope by orders of magnitude.
      double cf2 = 0.0;
      StepObserver guard = [&](const StepState& before, const StepState& after, double dt) {
        const double s = mc.source_time(before.t);
        cf2 = std::max(cf2, s * s * profile_dual2);
        const double bound = std::exp(after.t) * e0 * e0 + (1.0 + dt) * (std::exp(after.t) - 1.0) * cf2;
        if (after.energy * after.energy > 10.0 * bound) {
          throw InstabilityError(after.step_index, "energy growth far beyond the discrete Gronwall bound");
        }
      };
      try {
        IntegrationResult res = integrate(ls, tableau, std::move(u0), row.dt, config.t_end, false, guard);
        const std::vector<double> full = sys.expand(res.final_state.u);
        const ErrorNorms errs = error_norms(disc, full, mc, config.t_end, config.threads);
        row.err_l2 = errs.l2;
        row.err_h1 = errs.h1;
      } catch (const InstabilityError& e) {
        row.stable = false;
        row.note = e.what();
        row.err_l2 = row.err_h1 = std::numeric_limits<double>::quiet_NaN();
      }
    }
    row.wall_time = lvl.setup_seconds + seconds_since(start);
    table.rows.push_back(std::move(row));
  }

  for (std::size_t l = 0; l + 1 < table.rows.size(); ++l) {
    const ErrorReport& a = table.rows[l];
    const ErrorReport& b = table.rows[l + 1];
    const bool usable = a.stable && b.stable;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    table.eoc_l2.push_back(usable ? eoc(a.err_l2, b.err_l2, a.h_max, b.h_max) : nan);
    table.eoc_h1.push_back(usable ? eoc(a.err_h1, b.err_h1, a.h_max, b.h_max) : nan);
  }
  return table;
}

void write_convergence_csv(const EOCTable& table, std::ostream& out) {
  if (table.rows.empty()) throw Error("cannot emit an empty convergence table");
  out << "# config: " << table.config.describe();
  if (table.theta) out << " theta_used=" << std::setprecision(17) << *table.theta;
  out << '\n';
  out << "family,k,integrator,level,n,h_max,h_min,n_free,lambda_max,dt,err_l2,err_h1,eoc_l2,eoc_h1,wall_time_s\n";
  out << std::setprecision(17);
  for (std::size_t l = 0; l < table.rows.size(); ++l) {
    const ErrorReport& r = table.rows[l];
    out << to_string(table.config.family) << ',' << table.config.k << ',' << to_string(table.config.integrator) << ','
        << r.level << ',' << r.n << ',' << r.h_max << ',' << r.h_min << ',' << r.n_free << ',' << r.lambda_max << ','
        << r.dt << ',' << r.err_l2 << ',' << r.err_h1 << ',';
    if (l > 0) out << table.eoc_l2[l - 1];
    out << ',';
    if (l > 0) out << table.eoc_h1[l - 1];
    out << ',' << std::setprecision(6) << r.wall_time << std::setprecision(17) << '\n';
  }
}

void write_convergence_csv(const EOCTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_convergence_csv(table, out);
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

void write_convergence_svg(std::span<const EOCTable> tables, std::ostream& out) {
  if (tables.empty() || tables.front().rows.empty()) throw Error("cannot plot an empty convergence table");
  constexpr double width = 640, height = 480, margin = 60;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      if (!r.stable || !(r.err_l2 > 0.0) || !(r.err_h1 > 0.0)) continue;
      xmin = std::min(xmin, std::log10(r.h_max));
      xmax = std::max(xmax, std::log10(r.h_max));
      for (double e : {r.err_l2, r.err_h1}) {
        ymin = std::min(ymin, std::log10(e));
        ymax = std::max(ymax, std::log10(e));
      }
    }
  }
  if (!std::isfinite(xmin)) throw Error("no plottable rows in the convergence table");
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
  auto px = [&](double lx) { return margin + (lx - xmin) / (xmax - xmin) * (width - 2 * margin); };
  auto py = [&](double ly) { return height - margin - (ly - ymin) / (ymax - ymin) * (height - 2 * margin); };

  out << std::fixed << std::setprecision(3);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">log10 h_max</text>\n";
  out << "<text x=\"15\" y=\"" << height / 2 << "\" transform=\"rotate(-90 15 " << height / 2
      << ")\" text-anchor=\"middle\">log10 error</text>\n";

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::size_t color = 0;
  for (const auto& t : tables) {
    for (int norm = 0; norm < 2; ++norm) {
      out << "<polyline class=\"" << (norm == 0 ? "err-l2" : "err-h1") << "\" fill=\"none\" stroke=\""
          << colors[color++ % 6] << "\" stroke-width=\"2\" points=\"";
      bool first = true;
      for (const auto& r : t.rows) {
        const double e = norm == 0 ? r.err_l2 : r.err_h1;
        if (!r.stable || !(e > 0.0)) continue;
        out << (first ? "" : " ") << px(std::log10(r.h_max)) << ',' << py(std::log10(e));
        first = false;
      }
      out << "\"><title>" << to_string(t.config.integrator) << ' ' << (norm == 0 ? "L2" : "H1")
          << "</title></polyline>\n";
    }
  }
  // Reference slopes anchored at the coarsest point of the first table.
  const ErrorReport& anchor = tables.front().rows.front();
  for (int slope = 1; slope <= 2; ++slope) {
    const double e = slope == 2 ? anchor.err_l2 : anchor.err_h1;
    const double x0 = std::log10(anchor.h_max), y0 = std::isfinite(e) && e > 0 ? std::log10(e) : ymax;
    const double x1 = xmin, y1 = y0 - slope * (x0 - x1);
    out << "<line class=\"ref-slope-" << slope << "\" x1=\"" << px(x0) << "\" y1=\"" << py(y0) << "\" x2=\"" << px(x1)
        << "\" y2=\"" << py(y1) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  }
  out << "</svg>\n";
}

void write_convergence_svg(std::span<const EOCTable> tables, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_convergence_svg(tables, out);
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

}  // namespace vemlump
