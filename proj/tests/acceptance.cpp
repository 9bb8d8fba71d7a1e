// Acceptance gate: one PASS/FAIL line per criterion; exit 1 on any FAIL.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include "polymps/driver.hpp"

using namespace polymps;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Energy-norm errors on every (mesh, degree), ordered degree-major.
std::vector<ErrorRow> sweep(const RunConfig& cfg, bool steady) {
  const ManufacturedCase mc = steady ? steady_case(cfg.params) : unsteady_case(cfg.params);
  const auto meshes = build_meshes(cfg.mesh);
  const BoundaryConditionMap bcs = conditions_for(cfg);
  const std::size_t nm = meshes.size();
  return parallel_map<ErrorRow>(nm * cfg.degrees.size(), cfg.threads, [&](std::size_t i) {
    const Discretization D(meshes[i % nm], cfg.degrees[i / nm], mc.params, bcs);
    return manufactured_errors(D, mc, cfg, steady);
  });
}

Outcome rates_in_band(const RunConfig& cfg, bool steady) {
  const auto rows = sweep(cfg, steady);
  const std::size_t nm = cfg.mesh.levels.size();
  Outcome o{true, ""};
  for (std::size_t a = 0; a < cfg.degrees.size(); ++a) {
    const int m = cfg.degrees[a];
    std::vector<double> e, h;
    for (std::size_t l = 0; l < nm; ++l) {
      e.push_back(rows[a * nm + l].energy);
      h.push_back(rows[a * nm + l].h);
    }
    o.detail += " m=" + std::to_string(m) + ":";
    for (const Rate& r : convergence_rates(e, h)) {
      if (r.saturated) {
        o.pass = false;
        o.detail += " saturated";
        continue;
      }
      o.detail += " " + fixed(r.value, 2);
      if (r.value < m - 0.2 || r.value > m + 0.3) o.pass = false;
    }
  }
  o.detail = "rates in [m-0.2, m+0.3];" + o.detail;
  return o;
}

RunConfig verification_run(std::vector<std::size_t> levels, std::vector<int> degrees) {
  RunConfig c;
  c.mesh.levels = std::move(levels);
  c.degrees = std::move(degrees);
  return c;
}

// 1. Steady rates on four Cartesian refinements.
Outcome steady_convergence() { return rates_in_band(verification_run({3, 6, 12, 24}, {1, 2, 3}), true); }

// 2. Error decreases monotonically in m on the 80-polygon mesh.
Outcome spectral_trend() {
  RunConfig c = verification_run({80}, {1, 2, 3, 4, 5});
  c.mesh.family = "agglomerated";
  const auto rows = sweep(c, true);
  Outcome o{true, "h=" + fixed(rows.front().h, 4) + " errors"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    o.detail += " " + fmt(rows[i].energy, 2);
    if (i > 0 && !(rows[i].energy < rows[i - 1].energy)) o.pass = false;
  }
  const double reduction = rows.front().energy / rows.back().energy;
  o.detail += "; reduction " + fmt(reduction, 2) + " (need >= 1e3)";
  o.pass = o.pass && reduction >= 1e3;
  return o;
}

// 3. Unsteady rates over five steps of dt = 1e-3.
Outcome unsteady_convergence() {
  RunConfig c = verification_run({3, 6, 12, 24}, {1, 2, 3});
  c.scheme.dt = 1e-3;
  c.scheme.theta = 0.5;
  c.scheme.beta = 0.25;
  c.scheme.gamma = 0.5;
  c.scheme.startup_steps = 1;
  c.n_steps = 5;
  return rates_in_band(c, false);
}

// 4. Strong-form residual oracle with negative controls.
Outcome oracle() {
  Outcome o{true, ""};
  double worst = 0.0, weakest_flip = std::numeric_limits<double>::infinity();
  for (const auto& [mc, t] : {std::pair{steady_case(), 0.0}, std::pair{unsteady_case(), 0.37}}) {
    worst = std::max(worst, residual_oracle(mc, 100, t, 1, 1e-5).worst());
    for (const char* src : {"f_el", "g", "f_f"})
      weakest_flip = std::min(weakest_flip, residual_oracle(flip_source(mc, src), 100, t, 1, 1e-5).worst());
  }
  o.pass = worst < 1e-4 && weakest_flip > 1e-1;
  o.detail = "max residual " + fmt(worst, 2) + " (< 1e-4), smallest flipped " + fmt(weakest_flip, 2) + " (> 1e-1)";
  return o;
}

// 5. Symmetry, semidefiniteness, transpose pairing and jump annihilation.
Outcome structural() {
  Outcome o{true, ""};
  const PhysicalParams prm;
  double sym = 0.0, psd = std::numeric_limits<double>::infinity(), pair = 0.0, jump = 0.0;
  std::vector<std::shared_ptr<const PolyMesh>> meshes{std::make_shared<const PolyMesh>(verification_grid(6, 3, false)),
                                                      std::make_shared<const PolyMesh>(agglomerated_verification_mesh(80, 1))};
  for (const auto& mesh : meshes)
    for (int m : {1, 2, 3}) {
      const Discretization D(mesh, m, prm, verification_conditions(prm.names()));
      const StructuralReport r = structural_checks(D.sys, global_operator(D.sys, 1.0), 200);
      o.pass = o.pass && r.ok();
      for (const auto& [k, v] : r.symmetry) sym = std::max(sym, v);
      for (const auto& [k, v] : r.psd) psd = std::min(psd, v);
      for (const auto& [k, v] : r.pairing) pair = std::max(pair, v);
      pair = std::max(pair, r.coupling_energy);
      for (const auto& [k, v] : jump_annihilation(*D.space, prm)) jump = std::max(jump, v);
    }
  o.pass = o.pass && jump < 1e-10;
  o.detail = "symmetry " + fmt(sym, 1) + ", min Rayleigh " + fmt(psd, 1) + ", pairing " + fmt(pair, 1) +
             ", jumps " + fmt(jump, 1);
  return o;
}

// 6. Discrete energy never grows without loads.
Outcome energy() {
  PhysicalParams prm;
  BoundaryCondition el = BoundaryCondition::wall();
  el.dirichlet_p = {"E"};
  const BoundaryConditionMap bcs{{"outer_el", el}, {"wall_f", BoundaryCondition::wall()}, {"out", BoundaryCondition::wall()}};
  const Discretization D(std::make_shared<const PolyMesh>(agglomerated_verification_mesh(80, 1)), 2, prm, bcs);
  SchemeParams sp;
  sp.dt = 1e-2;
  const TimeIntegrator integ(D.sys, sp);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> dist;
  auto random = [&](std::size_t n) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
    return v;
  };
  TimeState s = TimeState::zero(D.sys.layout);
  s.d = random(D.sys.layout.n_d);
  s.z = random(D.sys.layout.n_d);
  s.pj[0] = random(D.sys.layout.n_pj);
  s.u = random(D.sys.layout.n_u);
  s.p = random(D.sys.layout.n_p);
  const LoadFn loads = load_function(D, prm, {});
  const double e0 = discrete_energy(D.sys, s);
  double prev = e0, worst = -std::numeric_limits<double>::infinity();
  simulate(integ, s, 100, loads, 100, [&](const TimeState& x, std::size_t) {
    const double e = discrete_energy(D.sys, x);
    worst = std::max(worst, (e - prev) / prev);
    prev = e;
  });
  return {worst <= 1e-10, "max relative step increase " + fmt(worst, 2) + " (<= 1e-10), E100/E0 " + fmt(prev / e0, 2)};
}

// 7. Agglomeration of the synthetic two-domain triangulation.
Outcome agglomeration() {
  const PolyMesh fine = synthetic_brain_mesh(100);
  AgglomerationConfig cfg;
  cfg.target_el = 910;
  cfg.target_f = 101;
  const AgglomerationResult r = agglomerate(fine, cfg);
  const PartitionReport rep = validate_partition(fine, r.assignment, &r.coarse);
  const std::size_t n_el = r.coarse.n_elements(Domain::elastic), n_f = r.coarse.n_elements(Domain::fluid);
  std::ostringstream d;
  d << "(" << n_el << ", " << n_f << ") from " << fine.n_elements() << " triangles; impure " << rep.impure.size()
    << ", disconnected " << rep.disconnected.size() << ", area error "
    << fmt(std::max(rep.area_error_el, rep.area_error_f), 1) << ", interface "
    << (rep.interface_preserved ? "preserved" : "changed");
  return {n_el == 910 && n_f == 101 && rep.ok(1e-10), d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Outcome (*)()>> criteria{
      {"steady convergence", steady_convergence}, {"spectral trend", spectral_trend},
      {"unsteady convergence", unsteady_convergence}, {"manufactured oracle", oracle},
      {"structural suite", structural},           {"energy dissipativity", energy},
      {"agglomeration pipeline", agglomeration}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << criteria[i].first << ": " << o.detail
              << " [" << fixed(secs, 1) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
