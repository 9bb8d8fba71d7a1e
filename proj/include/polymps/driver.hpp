#pragma once

// Command drivers behind the CLI. Each returns an exit code:
// 0 success, 1 acceptance violation, 2 input error.

#include <algorithm>
#include <atomic>
#include <exception>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <thread>

#include "polymps/block_system.hpp"
#include "polymps/io.hpp"
#include "polymps/linear_solver.hpp"
#include "polymps/manufactured.hpp"
#include "polymps/norms.hpp"

namespace polymps {

enum ExitCode : int { kExitSuccess = 0, kExitViolation = 1, kExitInputError = 2 };

/// Prepared discretization of one (mesh, degree) pair.
struct Discretization {
  std::shared_ptr<const PolyMesh> mesh;
  std::unique_ptr<DGSpace> space;
  FaceSet faces;
  SystemMatrices sys;

  Discretization(std::shared_ptr<const PolyMesh> m, int degree, const PhysicalParams& prm,
                 const BoundaryConditionMap& bcs)
      : mesh(std::move(m)),
        space(std::make_unique<DGSpace>(mesh, degree)),
        faces(build_faces(*mesh, bcs, prm.names())),
        sys(build_system(*space, prm, faces)) {}
};

inline TimeState steady_solve(const Discretization& D, const PhysicalParams& prm, const ProblemData& data,
                              double t = 0.0) {
  const SteadySystem st = build_steady(D.sys, assemble_loads(*D.space, prm, D.faces, data, t));
  const Fields F = unstack(D.sys.layout, Factorization(st.matrix).solve(st.rhs));
  TimeState s = TimeState::zero(D.sys.layout, t);
  s.d = F.d;
  s.pj = F.pj;
  s.u = F.u;
  s.p = F.p;
  return s;
}

inline LoadFn load_function(const Discretization& D, const PhysicalParams& prm, const ProblemData& data) {
  return [&D, &prm, data](double t) { return assemble_loads(*D.space, prm, D.faces, data, t); };
}

/// Errors of one manufactured run.
inline ErrorRow manufactured_errors(const Discretization& D, const ManufacturedCase& mc, const RunConfig& cfg,
                                    bool steady) {
  ErrorRow row;
  row.m = D.space->degree();
  row.h = D.mesh->mesh_size();
  row.n_el = D.mesh->n_elements(Domain::elastic);
  row.n_f = D.mesh->n_elements(Domain::fluid);
  TimeState last;
  if (steady) {
    last = steady_solve(D, mc.params, mc.data);
    row.energy = steady_energy_norm(last, *D.space, D.faces, mc.params, &mc.exact).value();
  } else {
    const LoadFn loads = load_function(D, mc.params, mc.data);
    const TimeState init = initial_state(*D.space, D.sys, mc.initial, loads(0.0), 0.0);
    const TimeIntegrator integ(D.sys, cfg.scheme);
    const auto traj = simulate(integ, init, cfg.n_steps, loads, 1);
    row.energy = energy_norm(traj, *D.space, D.faces, mc.params, &mc.exact).value();
    last = traj.back();
  }
  const BrokenNorms n = broken_norms(last, *D.space, D.faces, mc.params, &mc.exact);
  const std::size_t e = mc.params.index_E().value_or(0);
  row.d = std::sqrt(n.d.total());
  row.pE = std::sqrt(n.p.at(e).total());
  row.u = std::sqrt(n.u.total());
  row.p = std::sqrt(n.pf.total());
  return row;
}

/// Runs jobs 0..n-1 on up to `threads` workers; results land by index, so
/// the output order does not depend on scheduling.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, std::size_t threads, F&& job) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline ManufacturedCase manufactured_for(const RunConfig& cfg) {
  if (cfg.params.n_compartments() != 1 || !cfg.params.index_E())
    throw InputError("manufactured cases need exactly one compartment named E");
  return cfg.case_id == "steady" ? steady_case(cfg.params) : unsteady_case(cfg.params);
}

inline void write_run_files(const RunConfig& cfg, const std::string& command, int code, nlohmann::json summary,
                            std::vector<std::string> files) {
  const std::filesystem::path dir = cfg.out_dir;
  write_json(dir / "config.json", to_json(cfg));
  files.insert(files.begin(), "config.json");
  files.push_back("manifest.json");
  write_json(dir / "manifest.json", {{"command", command},
                                     {"exit_code", code},
                                     {"status", code == kExitSuccess ? "pass" : "fail"},
                                     {"files", files},
                                     {"summary", std::move(summary)}});
}

// ---------------------------------------------------------------------------

/// Error table over the mesh family and degrees. With one mesh the degrees
/// are checked for a strictly decreasing error (spectral trend); with three
/// or more meshes every observed rate must lie in [m - below, m + above].
inline int cmd_convergence(const RunConfig& cfg, std::ostream& log = std::cout) {
  if (cfg.case_id == "custom") throw InputError("convergence needs case steady or unsteady");
  const ManufacturedCase mc = manufactured_for(cfg);
  const auto meshes = build_meshes(cfg.mesh);
  if (meshes.size() == 2) throw InputError("convergence needs one mesh (degree sweep) or at least three refinements");
  const BoundaryConditionMap bcs = conditions_for(cfg);
  std::vector<int> degrees = cfg.degrees;
  std::sort(degrees.begin(), degrees.end());
  const bool steady = cfg.case_id == "steady";

  const std::size_t nm = meshes.size();
  auto rows = parallel_map<ErrorRow>(nm * degrees.size(), cfg.threads, [&](std::size_t i) {
    const Discretization D(meshes[i % nm], degrees[i / nm], mc.params, bcs);
    return manufactured_errors(D, mc, cfg, steady);
  });

  ensure_dir(cfg.out_dir);
  int code = kExitSuccess;
  nlohmann::json summary = {{"case", cfg.case_id}, {"violations", nlohmann::json::array()}};
  auto violation = [&](const std::string& msg) {
    log << "VIOLATION: " << msg << '\n';
    summary["violations"].push_back(msg);
    code = kExitViolation;
  };
  if (nm >= 3) {
    for (std::size_t a = 0; a < degrees.size(); ++a) {
      std::vector<double> es, hs;
      for (std::size_t l = 0; l < nm; ++l) {
        es.push_back(rows[a * nm + l].energy);
        hs.push_back(rows[a * nm + l].h);
      }
      const auto rates = convergence_rates(es, hs);
      for (std::size_t l = 0; l < rates.size(); ++l) {
        ErrorRow& r = rows[a * nm + l + 1];
        r.saturated = rates[l].saturated;
        if (!r.saturated) r.rate = rates[l].value;
        const int m = degrees[a];
        if (r.saturated) {
          log << "note: m=" << m << " saturated between h=" << hs[l] << " and h=" << hs[l + 1] << '\n';
          summary["saturated"].push_back({{"m", m}, {"level", l + 1}});
        } else if (rates[l].value < m - cfg.rate_tol_below || rates[l].value > m + cfg.rate_tol_above) {
          violation("m=" + std::to_string(m) + " rate " + fmt(rates[l].value, 3) + " outside [" +
                    fmt(m - cfg.rate_tol_below, 2) + ", " + fmt(m + cfg.rate_tol_above, 2) + "]");
        }
      }
    }
  } else {
    for (std::size_t a = 1; a < rows.size(); ++a)
      if (!(rows[a].energy < rows[a - 1].energy))
        violation("error does not decrease from m=" + std::to_string(rows[a - 1].m) + " to m=" +
                  std::to_string(rows[a].m));
    if (rows.size() > 1) summary["reduction"] = rows.front().energy / rows.back().energy;
  }
  write_error_csv(std::filesystem::path(cfg.out_dir) / "errors.csv", rows);

  log << std::left << std::setw(4) << "m" << std::setw(12) << "h" << std::setw(8) << "N" << std::setw(14)
      << "err_energy" << "rate\n";
  for (const auto& r : rows)
    log << std::setw(4) << r.m << std::setw(12) << fmt(r.h, 4) << std::setw(8) << r.n_el + r.n_f << std::setw(14)
        << fmt(r.energy, 4) << (r.saturated ? "saturated" : r.rate ? fmt(*r.rate, 3) : "-") << '\n';
  write_run_files(cfg, "convergence", code, summary, {"errors.csv"});
  return code;
}

/// Solves the configured case and writes snapshots every `stride` steps:
/// snapshots/step_NNNNNN.vtk plus one long-format fields.csv. A steady case
/// writes the single solution as step 0. With several mesh levels the finest
/// is used, with several degrees the first.
inline int cmd_solve(const RunConfig& cfg, std::ostream& log = std::cout) {
  const auto meshes = build_meshes(cfg.mesh);
  const int m = cfg.degrees.front();
  const BoundaryConditionMap bcs = conditions_for(cfg);

  std::optional<ManufacturedCase> mc;
  ProblemData data;
  InitialData initial;
  if (cfg.case_id != "custom") {
    mc = manufactured_for(cfg);
    data = mc->data;
    initial = mc->initial;
  } else if (cfg.source.amplitude != 0.0) {
    const std::size_t e = cfg.params.index_E().value_or(0);
    data.g.resize(cfg.params.n_compartments());
    const double a = cfg.source.amplitude, w = 2.0 * std::numbers::pi * cfg.source.frequency;
    data.g[e] = [a, w](const Point&, double t) { return a * std::sin(w * t); };
  }

  const Discretization D(meshes.back(), m, cfg.params, bcs);
  log << "mesh: " << D.mesh->n_elements(Domain::elastic) << " elastic + " << D.mesh->n_elements(Domain::fluid)
      << " fluid elements, h = " << fmt(D.mesh->mesh_size(), 4) << ", m = " << m << ", " << D.sys.layout.size()
      << " unknowns\n";

  const std::filesystem::path dir = cfg.out_dir;
  ensure_dir((dir / "snapshots").string());
  std::vector<std::string> files{"fields.csv", "energy.csv"};
  auto fields = open_out(dir / "fields.csv");
  auto energy = open_out(dir / "energy.csv");
  energy << "step,t,discrete_energy\n";
  bool header = false;
  auto snapshot = [&](const TimeState& s, std::size_t step) {
    const CellData cd = cell_means(*D.space, s, cfg.params);
    if (!header) {
      fields << cell_csv_header(cd) << '\n';
      header = true;
    }
    write_cell_rows(fields, step, s.t, *D.mesh, cd);
    char name[32];
    std::snprintf(name, sizeof name, "step_%06zu.vtk", step);
    write_vtk(dir / "snapshots" / name, *D.mesh, cd, "t = " + fmt(s.t));
    files.push_back(std::string("snapshots/") + name);
  };

  nlohmann::json summary = {{"case", cfg.case_id}, {"degree", m}, {"n_elements_el", D.mesh->n_elements(Domain::elastic)},
                            {"n_elements_f", D.mesh->n_elements(Domain::fluid)}, {"h", D.mesh->mesh_size()}};
  TimeState last;
  if (cfg.case_id == "steady") {
    last = steady_solve(D, cfg.params, data);
    energy << 0 << ',' << fmt(0.0) << ',' << fmt(discrete_energy(D.sys, last)) << '\n';
    snapshot(last, 0);
  } else {
    const LoadFn loads = load_function(D, cfg.params, data);
    const TimeState init = initial_state(*D.space, D.sys, initial, loads(0.0), 0.0);
    const TimeIntegrator integ(D.sys, cfg.scheme);
    energy << 0 << ',' << fmt(init.t) << ',' << fmt(discrete_energy(D.sys, init)) << '\n';
    const auto traj = simulate(integ, init, cfg.n_steps, loads, cfg.stride, [&](const TimeState& s, std::size_t n) {
      energy << n << ',' << fmt(s.t) << ',' << fmt(discrete_energy(D.sys, s)) << '\n';
      if (n % cfg.stride == 0) snapshot(s, n);
    });
    last = traj.back();
    summary["n_steps"] = cfg.n_steps;
    summary["t_final"] = last.t;
    if (mc) summary["err_energy"] = energy_norm(traj, *D.space, D.faces, cfg.params, &mc->exact).value();
  }
  if (mc && cfg.case_id == "steady")
    summary["err_energy"] = steady_energy_norm(last, *D.space, D.faces, cfg.params, &mc->exact).value();
  summary["snapshots"] = files.size() - 2;
  log << "wrote " << files.size() - 2 << " snapshots to " << (dir / "snapshots").string() << '\n';
  write_run_files(cfg, "solve", kExitSuccess, summary, files);
  return kExitSuccess;
}

/// Residual oracle on both manufactured cases (with sign-flipped negative
/// controls) and the structural matrix suite for every configured degree on
/// the first mesh.
inline int cmd_verify(const RunConfig& cfg, std::ostream& log = std::cout) {
  if (cfg.params.n_compartments() != 1 || !cfg.params.index_E())
    throw InputError("verify needs exactly one compartment named E");
  ensure_dir(cfg.out_dir);
  int code = kExitSuccess;
  nlohmann::json report = {{"violations", nlohmann::json::array()}};
  auto check = [&](bool ok, const std::string& what) {
    log << (ok ? "ok    " : "FAIL  ") << what << '\n';
    if (!ok) {
      report["violations"].push_back(what);
      code = kExitViolation;
    }
  };

  const double t_unsteady = 0.37;
  for (const bool steady : {true, false}) {
    const ManufacturedCase mc = steady ? steady_case(cfg.params) : unsteady_case(cfg.params);
    const double t = steady ? 0.0 : t_unsteady;
    const ResidualReport r = residual_oracle(mc, cfg.oracle_points, t, cfg.mesh.seed);
    nlohmann::json entry = r.max_residual;
    report["oracle"][mc.name] = entry;
    check(r.worst() < cfg.oracle_tol, mc.name + " residual " + fmt(r.worst(), 3) + " < " + fmt(cfg.oracle_tol, 1));
    for (const char* src : {"f_el", "g", "f_f"}) {
      const ResidualReport f = residual_oracle(flip_source(mc, src), cfg.oracle_points, t, cfg.mesh.seed);
      report["negative_controls"][mc.name][src] = f.worst();
      check(f.worst() > 1e-1, mc.name + " with flipped " + src + " flagged (" + fmt(f.worst(), 3) + " > 1e-1)");
    }
  }

  const auto meshes = build_meshes(cfg.mesh);
  const BoundaryConditionMap bcs = conditions_for(cfg);
  std::vector<std::string> files{"verify_report.json"};
  for (int m : cfg.degrees) {
    const Discretization D(meshes.front(), m, cfg.params, bcs);
    const SpMat op = global_operator(D.sys, 1.0);
    const StructuralReport s = structural_checks(D.sys, op);
    const auto jumps = jump_annihilation(*D.space, cfg.params);
    double worst_jump = 0.0;
    for (const auto& [k, v] : jumps) worst_jump = std::max(worst_jump, v);
    const std::string tag = "m" + std::to_string(m);
    report["structural"][tag] = {{"symmetry", s.symmetry}, {"psd", s.psd}, {"pairing", s.pairing},
                                 {"coupling_energy", s.coupling_energy}, {"jump_annihilation", jumps}};
    check(s.ok(), "structural suite, m = " + std::to_string(m));
    check(worst_jump < 1e-10, "jump terms vanish on continuous fields, m = " + std::to_string(m) + " (" +
                                  fmt(worst_jump, 2) + ")");
    if (cfg.export_matrices) {
      const std::string name = "operator_" + tag + ".mtx";
      export_matrix_market(op, (std::filesystem::path(cfg.out_dir) / name).string());
      files.push_back(name);
    }
  }
  write_json(std::filesystem::path(cfg.out_dir) / "verify_report.json", report);
  write_run_files(cfg, "verify", code, {{"violations", report["violations"]}}, files);
  return code;
}

/// Agglomerates the fine triangulation (file, synthetic brain, or the
/// triangulated Cartesian grid of the first level) to the configured targets
/// and validates the partition.
inline int cmd_agglomerate(const RunConfig& cfg, std::ostream& log = std::cout) {
  const MeshSource& src = cfg.mesh;
  if (src.target_el == 0 && src.target_f == 0) throw InputError("agglomerate needs mesh.target_el / mesh.target_f");
  PolyMesh fine = !src.path.empty()                ? load_mesh(src.path)
                  : src.family == "synthetic_brain" ? synthetic_brain_mesh(src.resolution)
                  : src.family == "cartesian"       ? verification_grid(2 * src.levels.front(), src.levels.front(), true)
                                                    : throw InputError("agglomerate needs a file, synthetic_brain or cartesian mesh");
  AgglomerationConfig ac;
  ac.target_el = src.target_el;
  ac.target_f = src.target_f;
  ac.seed = src.seed;
  const AgglomerationResult res = agglomerate(fine, ac);
  const PartitionReport rep = validate_partition(fine, res.assignment, &res.coarse);
  const std::size_t n_el = res.coarse.n_elements(Domain::elastic), n_f = res.coarse.n_elements(Domain::fluid);

  ensure_dir(cfg.out_dir);
  const std::filesystem::path dir = cfg.out_dir;
  save_mesh(res.coarse, (dir / "coarse_mesh.json").string());
  CellData cd;
  std::vector<double> dom;
  for (const auto& e : res.coarse.elements()) dom.push_back(e.domain == Domain::elastic ? 0.0 : 1.0);
  cd.scalars.emplace_back("domain", dom);
  write_vtk(dir / "coarse_mesh.vtk", res.coarse, cd, "agglomerated mesh");
  {
    auto out = open_out(dir / "assignment.csv");
    out << "fine_element,coarse_element\n";
    for (std::size_t k = 0; k < res.assignment.size(); ++k) out << k << ',' << res.assignment[k] << '\n';
  }

  const double area_tol = 1e-10;
  const bool counts = n_el == src.target_el && n_f == src.target_f;
  const bool ok = counts && rep.ok(area_tol);
  nlohmann::json summary = {{"fine_elements", fine.n_elements()},
                            {"coarse_el", n_el},
                            {"coarse_f", n_f},
                            {"targets", {src.target_el, src.target_f}},
                            {"impure_clusters", rep.impure.size()},
                            {"disconnected_clusters", rep.disconnected.size()},
                            {"area_error_el", rep.area_error_el},
                            {"area_error_f", rep.area_error_f},
                            {"interface_preserved", rep.interface_preserved},
                            {"h", res.coarse.mesh_size()}};
  log << "fine " << fine.n_elements() << " -> coarse (" << n_el << ", " << n_f << "), targets (" << src.target_el
      << ", " << src.target_f << "); impure " << rep.impure.size() << ", disconnected " << rep.disconnected.size()
      << ", area error " << fmt(std::max(rep.area_error_el, rep.area_error_f), 2) << ", interface "
      << (rep.interface_preserved ? "preserved" : "CHANGED") << '\n';
  const int code = ok ? kExitSuccess : kExitViolation;
  write_run_files(cfg, "agglomerate", code, summary, {"coarse_mesh.json", "coarse_mesh.vtk", "assignment.csv"});
  return code;
}

/// Dispatches a command by name; errors map onto the exit-code contract.
inline int run_command(const std::string& command, const RunConfig& cfg, std::ostream& log = std::cout,
                       std::ostream& err = std::cerr) {
  try {
    if (command == "convergence") return cmd_convergence(cfg, log);
    if (command == "solve") return cmd_solve(cfg, log);
    if (command == "verify") return cmd_verify(cfg, log);
    if (command == "agglomerate") return cmd_agglomerate(cfg, log);
    err << "unknown command '" << command << "'\n";
    return kExitInputError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitViolation;
  }
}

}  // namespace polymps
