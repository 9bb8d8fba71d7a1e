#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "polymps/agglomeration.hpp"
#include "polymps/faces.hpp"
#include "polymps/mesh.hpp"
#include "polymps/params.hpp"
#include "polymps/space.hpp"
#include "polymps/time_integration.hpp"

namespace polymps {

/// Where the meshes of a run come from. A file path wins over the family.
///  - "cartesian":     level n -> squares of (-1,1)x(0,1), n cells per unit length
///  - "agglomerated":  level N -> N polygons agglomerated from a triangulated grid
///  - "synthetic_brain": one fine triangulation, optionally agglomerated to targets
struct MeshSource {
  std::string path;
  std::string family = "cartesian";
  std::vector<std::size_t> levels{3, 6, 12, 24};
  std::uint64_t seed = 1;
  std::size_t resolution = 100;  // synthetic_brain fine grid
  std::size_t target_el = 0;     // synthetic_brain / file agglomeration targets (0: keep fine)
  std::size_t target_f = 0;
};

/// Uniform source in compartment E: g_E(t) = amplitude sin(2 pi frequency t).
struct SourceSpec {
  double amplitude = 0.0;
  double frequency = 1.0;
};

struct RunConfig {
  MeshSource mesh;
  std::vector<int> degrees{1};
  std::string preset = "unit";  // base parameter set: unit | physiological
  PhysicalParams params = PhysicalParams::unit();
  SchemeParams scheme;
  std::string case_id = "steady";  // steady | unsteady | custom
  std::size_t n_steps = 5;
  std::size_t stride = 1;
  std::string out_dir = "out";
  double rate_tol_below = 0.2;  // accepted rate band [m - below, m + above]
  double rate_tol_above = 0.3;
  double oracle_tol = 1e-4;
  std::size_t oracle_points = 100;
  bool export_matrices = false;
  std::size_t threads = 0;  // 0: hardware concurrency
  SourceSpec source;
  std::optional<BoundaryConditionMap> boundary_conditions;

  void validate() const {
    params.validate();
    scheme.validate();
    if (degrees.empty()) throw InputError("at least one polynomial degree is required");
    for (int m : degrees)
      if (m < 1) throw InputError("polynomial degree must be >= 1");
    if (case_id != "steady" && case_id != "unsteady" && case_id != "custom")
      throw InputError("unknown case '" + case_id + "' (steady | unsteady | custom)");
    if (stride == 0) throw InputError("snapshot stride must be >= 1");
    if (!mesh.path.empty() && !std::filesystem::exists(mesh.path))
      throw InputError("mesh file not found: " + mesh.path);
    if (mesh.path.empty() && mesh.family != "cartesian" && mesh.family != "agglomerated" &&
        mesh.family != "synthetic_brain")
      throw InputError("unknown mesh family '" + mesh.family + "'");
    if (mesh.path.empty() && mesh.family != "synthetic_brain" && mesh.levels.empty())
      throw InputError("mesh family needs at least one level");
    if (!(rate_tol_below >= 0.0 && rate_tol_above >= 0.0)) throw InputError("rate tolerances must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const BoundaryCondition& bc) {
  return {{"dirichlet_d", bc.dirichlet_d}, {"dirichlet_u", bc.dirichlet_u}, {"outlet", bc.outlet},
          {"dirichlet_p", std::vector<std::string>(bc.dirichlet_p.begin(), bc.dirichlet_p.end())}};
}

inline BoundaryCondition condition_from_json(const nlohmann::json& j) {
  BoundaryCondition bc;
  bc.dirichlet_d = j.value("dirichlet_d", false);
  bc.dirichlet_u = j.value("dirichlet_u", false);
  bc.outlet = j.value("outlet", false);
  for (const auto& name : j.value("dirichlet_p", std::vector<std::string>{})) bc.dirichlet_p.insert(name);
  return bc;
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json params;
  to_json(params, c.params);
  nlohmann::json j = {
      {"mesh",
       {{"path", c.mesh.path}, {"family", c.mesh.family}, {"levels", c.mesh.levels}, {"seed", c.mesh.seed},
        {"resolution", c.mesh.resolution}, {"target_el", c.mesh.target_el}, {"target_f", c.mesh.target_f}}},
      {"degrees", c.degrees},
      {"preset", c.preset},
      {"params", params},
      {"scheme",
       {{"dt", c.scheme.dt}, {"beta", c.scheme.beta}, {"gamma", c.scheme.gamma}, {"theta", c.scheme.theta},
        {"startup_steps", c.scheme.startup_steps}}},
      {"case", c.case_id},
      {"n_steps", c.n_steps},
      {"stride", c.stride},
      {"out", c.out_dir},
      {"rate_tol_below", c.rate_tol_below},
      {"rate_tol_above", c.rate_tol_above},
      {"oracle_tol", c.oracle_tol},
      {"oracle_points", c.oracle_points},
      {"export_matrices", c.export_matrices},
      {"threads", c.threads},
      {"source", {{"amplitude", c.source.amplitude}, {"frequency", c.source.frequency}}}};
  if (c.boundary_conditions) {
    nlohmann::json bcs = nlohmann::json::object();
    for (const auto& [label, bc] : *c.boundary_conditions) bcs[label] = to_json(bc);
    j["boundary_conditions"] = bcs;
  }
  return j;
}

/// Reads a run configuration; absent keys keep their defaults.
inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (!j.is_object()) throw InputError("configuration must be a JSON object");
    if (j.contains("mesh")) {
      const auto& m = j.at("mesh");
      c.mesh.path = m.value("path", c.mesh.path);
      c.mesh.family = m.value("family", c.mesh.family);
      c.mesh.levels = m.value("levels", c.mesh.levels);
      c.mesh.seed = m.value("seed", c.mesh.seed);
      c.mesh.resolution = m.value("resolution", c.mesh.resolution);
      c.mesh.target_el = m.value("target_el", c.mesh.target_el);
      c.mesh.target_f = m.value("target_f", c.mesh.target_f);
    }
    c.degrees = j.value("degrees", c.degrees);
    c.preset = j.value("preset", c.preset);
    if (c.preset == "physiological") {
      c.params = PhysicalParams::physiological();
    } else if (c.preset != "unit") {
      throw InputError("unknown parameter preset '" + c.preset + "'");
    }
    if (j.contains("params")) c.params = params_from_json(j.at("params"), c.params);
    if (j.contains("scheme")) {
      const auto& s = j.at("scheme");
      c.scheme.dt = s.value("dt", c.scheme.dt);
      c.scheme.beta = s.value("beta", c.scheme.beta);
      c.scheme.gamma = s.value("gamma", c.scheme.gamma);
      c.scheme.theta = s.value("theta", c.scheme.theta);
      c.scheme.startup_steps = s.value("startup_steps", c.scheme.startup_steps);
    }
    c.case_id = j.value("case", c.case_id);
    c.n_steps = j.value("n_steps", c.n_steps);
    c.stride = j.value("stride", c.stride);
    c.out_dir = j.value("out", c.out_dir);
    c.rate_tol_below = j.value("rate_tol_below", c.rate_tol_below);
    c.rate_tol_above = j.value("rate_tol_above", c.rate_tol_above);
    c.oracle_tol = j.value("oracle_tol", c.oracle_tol);
    c.oracle_points = j.value("oracle_points", c.oracle_points);
    c.export_matrices = j.value("export_matrices", c.export_matrices);
    c.threads = j.value("threads", c.threads);
    if (j.contains("source")) {
      c.source.amplitude = j.at("source").value("amplitude", c.source.amplitude);
      c.source.frequency = j.at("source").value("frequency", c.source.frequency);
    }
    if (j.contains("boundary_conditions")) {
      BoundaryConditionMap bcs;
      for (const auto& [label, bc] : j.at("boundary_conditions").items()) bcs[label] = condition_from_json(bc);
      c.boundary_conditions = bcs;
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid configuration: ") + e.what());
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open configuration file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("configuration " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Meshes

/// Fine triangulated verification grid agglomerated to `n_polygons`, split
/// evenly between the two subdomains. The fine grid has 20 n_polygons
/// triangles, so each coarse polygon gathers about 20 of them.
inline PolyMesh agglomerated_verification_mesh(std::size_t n_polygons, std::uint64_t seed) {
  const auto nx = static_cast<std::size_t>(std::llround(std::sqrt(20.0 * static_cast<double>(n_polygons))));
  if (n_polygons < 2 || n_polygons % 2 != 0 || nx * nx != 20 * n_polygons || nx % 2 != 0)
    throw InputError("agglomerated level " + std::to_string(n_polygons) +
                     " must be 20 q^2 for an integer q (e.g. 20, 80, 320, 1280)");
  AgglomerationConfig cfg;
  cfg.target_el = cfg.target_f = n_polygons / 2;
  cfg.seed = seed;
  return agglomerate(verification_grid(nx, nx / 2, true), cfg).coarse;
}

/// Meshes of the run, coarsest first.
inline std::vector<std::shared_ptr<const PolyMesh>> build_meshes(const MeshSource& src) {
  std::vector<std::shared_ptr<const PolyMesh>> out;
  auto maybe_agglomerate = [&src](PolyMesh fine) {
    if (src.target_el == 0 && src.target_f == 0) return fine;
    AgglomerationConfig cfg;
    cfg.target_el = src.target_el;
    cfg.target_f = src.target_f;
    cfg.seed = src.seed;
    return agglomerate(fine, cfg).coarse;
  };
  if (!src.path.empty()) {
    out.push_back(std::make_shared<const PolyMesh>(maybe_agglomerate(load_mesh(src.path))));
  } else if (src.family == "synthetic_brain") {
    out.push_back(std::make_shared<const PolyMesh>(maybe_agglomerate(synthetic_brain_mesh(src.resolution))));
  } else {
    for (std::size_t level : src.levels) {
      if (src.family == "cartesian") {
        if (level == 0) throw InputError("cartesian level must be >= 1");
        out.push_back(std::make_shared<const PolyMesh>(verification_grid(2 * level, level, false)));
      } else {
        out.push_back(std::make_shared<const PolyMesh>(agglomerated_verification_mesh(level, src.seed)));
      }
    }
  }
  return out;
}

inline BoundaryConditionMap conditions_for(const RunConfig& c) {
  if (c.boundary_conditions) return *c.boundary_conditions;
  if (c.mesh.path.empty() && c.mesh.family == "synthetic_brain") return synthetic_brain_conditions();
  return verification_conditions(c.params.names());
}

// ---------------------------------------------------------------------------
// Output

/// Fixed-format number, identical across runs and platforms with IEEE doubles.
inline std::string fmt(double v, int digits = 10) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits, v);
  return buf;
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir + ": " + ec.message());
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

struct ErrorRow {
  int m = 1;
  double h = 0.0;
  std::size_t n_el = 0;
  std::size_t n_f = 0;
  double energy = 0.0;
  double d = 0.0;
  double pE = 0.0;
  double u = 0.0;
  double p = 0.0;
  std::optional<double> rate;  // vs the previous row of the same m
  bool saturated = false;
};

inline const char* kErrorCsvHeader = "m,h,n_elements_el,n_elements_f,err_energy,err_d,err_pE,err_u,err_p,rate_energy";

inline void write_error_csv(const std::filesystem::path& p, const std::vector<ErrorRow>& rows) {
  auto out = open_out(p);
  out << kErrorCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.m << ',' << fmt(r.h) << ',' << r.n_el << ',' << r.n_f << ',' << fmt(r.energy) << ',' << fmt(r.d)
        << ',' << fmt(r.pE) << ',' << fmt(r.u) << ',' << fmt(r.p) << ',';
    if (r.saturated)
      out << "saturated";
    else if (r.rate)
      out << fmt(*r.rate, 6);
    out << '\n';
  }
}

/// Per-cell data of a snapshot; vectors carry two components per cell.
struct CellData {
  std::vector<std::pair<std::string, std::vector<double>>> scalars;
  std::vector<std::pair<std::string, std::vector<double>>> vectors;
};

/// Element means of the fields of `s`; cells of the other subdomain get 0.
inline CellData cell_means(const DGSpace& sp, const TimeState& s, const PhysicalParams& prm) {
  const PolyMesh& mesh = sp.mesh();
  const std::size_t n = mesh.n_elements();
  CellData cd;
  std::vector<double> domain(n), d(2 * n, 0.0), u(2 * n, 0.0), pf(n, 0.0);
  std::vector<std::vector<double>> pj(prm.n_compartments(), std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    if (mesh.element(k).domain == Domain::elastic) {
      domain[k] = 0.0;
      d[2 * k] = element_mean(sp, s.d, 2, 0, k);
      d[2 * k + 1] = element_mean(sp, s.d, 2, 1, k);
      for (std::size_t j = 0; j < pj.size(); ++j) pj[j][k] = element_mean(sp, s.pj[j], 1, 0, k);
    } else {
      domain[k] = 1.0;
      u[2 * k] = element_mean(sp, s.u, 2, 0, k);
      u[2 * k + 1] = element_mean(sp, s.u, 2, 1, k);
      pf[k] = element_mean(sp, s.p, 1, 0, k);
    }
  }
  cd.scalars.emplace_back("domain", std::move(domain));
  for (std::size_t j = 0; j < pj.size(); ++j) cd.scalars.emplace_back("p_" + prm.compartments[j].name, std::move(pj[j]));
  cd.scalars.emplace_back("p_f", std::move(pf));
  cd.vectors.emplace_back("d", std::move(d));
  cd.vectors.emplace_back("u", std::move(u));
  return cd;
}

/// Legacy ASCII VTK POLYDATA with one polygon per element.
inline void write_vtk(const std::filesystem::path& p, const PolyMesh& mesh, const CellData& cd,
                      const std::string& title = "polymps") {
  auto out = open_out(p);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << mesh.vertices().size() << " double\n";
  for (const auto& v : mesh.vertices()) out << fmt(v.x(), 16) << ' ' << fmt(v.y(), 16) << " 0\n";
  std::size_t total = 0;
  for (const auto& e : mesh.elements()) total += e.vertices.size() + 1;
  out << "POLYGONS " << mesh.n_elements() << ' ' << total << '\n';
  for (const auto& e : mesh.elements()) {
    out << e.vertices.size();
    for (std::size_t v : e.vertices) out << ' ' << v;
    out << '\n';
  }
  if (cd.scalars.empty() && cd.vectors.empty()) return;
  out << "CELL_DATA " << mesh.n_elements() << '\n';
  for (const auto& [name, vals] : cd.scalars) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : vals) out << fmt(v) << '\n';
  }
  for (const auto& [name, vals] : cd.vectors) {
    out << "VECTORS " << name << " double\n";
    for (std::size_t k = 0; k + 1 < vals.size(); k += 2) out << fmt(vals[k]) << ' ' << fmt(vals[k + 1]) << " 0\n";
  }
}

/// Appends the cell data of one snapshot to a long-format CSV stream.
inline void write_cell_rows(std::ostream& out, std::size_t step, double t, const PolyMesh& mesh, const CellData& cd) {
  for (std::size_t k = 0; k < mesh.n_elements(); ++k) {
    const Point& c = mesh.geometry(k).centroid;
    out << step << ',' << fmt(t) << ',' << k << ',' << fmt(c.x()) << ',' << fmt(c.y());
    for (const auto& s : cd.scalars) out << ',' << fmt(s.second[k]);
    for (const auto& v : cd.vectors) out << ',' << fmt(v.second[2 * k]) << ',' << fmt(v.second[2 * k + 1]);
    out << '\n';
  }
}

inline std::string cell_csv_header(const CellData& cd) {
  std::string h = "step,t,cell,x,y";
  for (const auto& s : cd.scalars) h += "," + s.first;
  for (const auto& v : cd.vectors) h += "," + v.first + "_x," + v.first + "_y";
  return h;
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
}

}  // namespace polymps
