#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vemlump/assembly.hpp"
#include "vemlump/cli.hpp"
#include "vemlump/error.hpp"
#include "vemlump/harness.hpp"
#include "vemlump/mesh.hpp"
#include "vemlump/projectors.hpp"
#include "vemlump/spectral.hpp"
#include "vemlump/timeint.hpp"

namespace py = pybind11;
using namespace vemlump;

namespace {

using Coords = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Point2> to_points(const Coords& xy) {
  if (xy.ndim() != 2 || xy.shape(1) != 2) throw py::value_error("expected an (n, 2) array of coordinates");
  auto r = xy.unchecked<2>();
  std::vector<Point2> pts(static_cast<std::size_t>(xy.shape(0)));
  for (py::ssize_t i = 0; i < xy.shape(0); ++i) pts[static_cast<std::size_t>(i)] = {r(i, 0), r(i, 1)};
  return pts;
}

py::array_t<double> from_points(const std::vector<Point2>& pts) {
  py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), py::ssize_t{2}});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    w(static_cast<py::ssize_t>(i), 0) = pts[i].x;
    w(static_cast<py::ssize_t>(i), 1) = pts[i].y;
  }
  return out;
}

py::dict stats_dict(const MeshStats& s) {
  py::dict d;
  d["h_max"] = s.h_max;
  d["h_min"] = s.h_min;
  d["n_cells"] = s.n_cells;
  d["max_vertices_per_cell"] = s.max_vertices_per_cell;
  d["mean_vertices_per_cell"] = s.mean_vertices_per_cell;
  d["total_area"] = s.total_area;
  return d;
}

py::dict convergence(const std::string& family, std::vector<int> levels, int k, const std::string& integrator,
                     const std::string& dt_policy, double delta, double distortion, int lloyd_iters,
                     std::uint64_t seed, double t_end, double tol_eig, int threads) {
  ConvergenceConfig cfg;
  cfg.family = parse_mesh_family(family);
  cfg.levels = std::move(levels);
  cfg.k = k;
  cfg.integrator = parse_integrator(integrator);
  cfg.dt_policy = DtPolicy::parse(dt_policy);
  cfg.delta = delta;
  cfg.distortion = distortion;
  cfg.lloyd_iters = lloyd_iters;
  cfg.seed = seed;
  cfg.t_end = t_end;
  cfg.tol_eig = tol_eig;
  cfg.threads = threads;
  EOCTable table;
  {
    py::gil_scoped_release release;
    table = run_convergence(cfg);
  }
  py::list rows;
  for (const ErrorReport& r : table.rows) {
    py::dict d;
    d["level"] = r.level;
    d["n"] = r.n;
    d["h_max"] = r.h_max;
    d["h_min"] = r.h_min;
    d["n_free"] = r.n_free;
    d["err_l2"] = r.err_l2;
    d["err_h1"] = r.err_h1;
    d["dt"] = r.dt;
    d["lambda_max"] = r.lambda_max;
    d["wall_time"] = r.wall_time;
    d["stable"] = r.stable;
    d["note"] = r.note;
    rows.append(d);
  }
  py::dict out;
  out["config"] = table.config.describe();
  out["rows"] = rows;
  out["eoc_l2"] = table.eoc_l2;
  out["eoc_h1"] = table.eoc_h1;
  out["theta"] = table.theta ? py::cast(*table.theta) : py::none();
  std::ostringstream csv;
  write_convergence_csv(table, csv);
  out["csv"] = csv.str();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mass-lumped virtual elements with SSP Runge-Kutta time stepping";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<MeshError>(m, "MeshError", error.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<InstabilityError>(m, "InstabilityError", numerical.ptr());

  py::class_<Mesh>(m, "Mesh")
      .def(py::init([](const Coords& vertices, const std::vector<std::vector<std::size_t>>& cells) {
             std::vector<Cell> cs;
             for (const auto& c : cells) cs.push_back({c});
             return Mesh(to_points(vertices), std::move(cs));
           }),
           py::arg("vertices"), py::arg("cells"))
      .def_property_readonly("vertices", [](const Mesh& mesh) { return from_points(mesh.vertices()); })
      .def_property_readonly("cells",
                             [](const Mesh& mesh) {
                               std::vector<std::vector<std::size_t>> out;
                               for (const Cell& c : mesh.cells()) out.push_back(c.vertex_ids);
                               return out;
                             })
      .def_property_readonly("n_vertices", &Mesh::n_vertices)
      .def_property_readonly("n_cells", &Mesh::n_cells)
      .def_property_readonly("n_edges", &Mesh::n_edges)
      .def("cell_area", [](const Mesh& mesh, std::size_t c) { return mesh.geometry(c).area; })
      .def("stats", [](const Mesh& mesh) { return stats_dict(mesh_stats(mesh)); });

  m.def(
      "generate_mesh",
      [](const std::string& family, int n, double distortion, int lloyd_iters, std::uint64_t seed) {
        return generate_mesh(MeshSpec{parse_mesh_family(family), n, distortion, lloyd_iters, seed});
      },
      py::arg("family"), py::arg("n"), py::arg("distortion") = 0.0, py::arg("lloyd_iters") = 0,
      py::arg("seed") = 0);
  m.def("read_mesh", py::overload_cast<const std::filesystem::path&>(&read_mesh), py::arg("path"));
  m.def("write_mesh", py::overload_cast<const Mesh&, const std::filesystem::path&>(&write_mesh), py::arg("mesh"),
        py::arg("path"));

  m.def(
      "projectors",
      [](const Coords& polygon, int k) {
        const ProjectorPack p = build_projectors(Element::from_polygon(to_points(polygon)), k);
        py::dict d;
        d["D"] = p.dof_matrix;
        d["H"] = p.mass_gram;
        d["G"] = p.stiffness_gram;
        d["P_nabla"] = p.energy;
        d["P_zero"] = p.l2;
        d["C"] = p.l2_moments;
        d["K"] = local_stiffness(p);
        d["M"] = local_consistent_mass(p);
        d["area"] = p.area;
        return d;
      },
      py::arg("polygon"), py::arg("k"),
      "Local operators of one polygon (CCW vertices). D is N_k x N_dof.");

  m.def(
      "lumped_weights",
      [](const Coords& polygon, int k, double delta) {
        const LumpedWeights w =
            vemlump::lumped_weights(build_projectors(Element::from_polygon(to_points(polygon)), k), delta);
        return py::make_tuple(w.raw, w.floored);
      },
      py::arg("polygon"), py::arg("k"), py::arg("delta") = kDefaultFloorDelta,
      "(raw, floored) lumped weights of one polygon.");

  m.def(
      "assemble",
      [](const Mesh& mesh, int k, double delta) {
        const Discretization disc = discretize(mesh, k);
        const SystemMatrices sys = assemble_system(disc, delta);
        py::dict d;
        d["indptr"] = sys.stiffness.row_offsets();
        d["indices"] = sys.stiffness.col_indices();
        d["data"] = sys.stiffness.values();
        d["lumped_mass"] = sys.lumped_mass;
        d["free_dofs"] = sys.free_dofs;
        d["n_free"] = sys.n_free;
        d["n_global"] = sys.n_global;
        return d;
      },
      py::arg("mesh"), py::arg("k") = 1, py::arg("delta") = kDefaultFloorDelta,
      "Free-DOF stiffness in CSR parts and the lumped mass diagonal.");

  m.def(
      "lambda_max",
      [](const Mesh& mesh, int k, double delta, double tol, std::uint64_t seed) {
        const Discretization disc = discretize(mesh, k);
        const SystemMatrices sys = assemble_system(disc, delta);
        std::string note;
        const SpectralReport rep =
            lambda_max_power_relaxed(sys.stiffness, sys.lumped_mass, PowerOptions{tol, 0, seed}, &note);
        py::dict d;
        d["lambda_max"] = rep.lambda_max;
        d["dt_fe"] = rep.dt_fe;
        d["iterations"] = rep.iterations;
        d["note"] = note;
        return d;
      },
      py::arg("mesh"), py::arg("k") = 1, py::arg("delta") = kDefaultFloorDelta, py::arg("tol") = 1e-10,
      py::arg("seed") = 0);

  m.def(
      "tableau",
      [](const std::string& name) {
        const Tableau& t = make_tableau(parse_integrator(name));
        py::dict d;
        d["name"] = t.name;
        d["stages"] = t.stages;
        d["order"] = t.order;
        d["a"] = t.a;
        d["b"] = t.b;
        d["c"] = t.c;
        d["c_ssp"] = t.c_ssp;
        return d;
      },
      py::arg("name"));

  m.def("run_convergence", &convergence, py::arg("family") = "distorted-quad",
        py::arg("levels") = std::vector<int>{8, 16, 32}, py::arg("k") = 1, py::arg("integrator") = "ssprk3",
        py::arg("dt_policy") = "theta", py::arg("delta") = kDefaultFloorDelta, py::arg("distortion") = 0.2,
        py::arg("lloyd_iters") = 20, py::arg("seed") = 0, py::arg("t_end") = 1.0, py::arg("tol_eig") = 1e-10,
        py::arg("threads") = 1);

  m.def(
      "run_command",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = vemlump::run_command(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in process; returns (exit_code, stdout, stderr).");
}
