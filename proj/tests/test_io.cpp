#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "polymps/driver.hpp"
#include "polymps/io.hpp"

using namespace polymps;
using namespace polymps::testing;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("polymps_io_" + name);
  fs::remove_all(p);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

/// Small custom run on the coarse verification grid.
RunConfig small_run(const std::string& out) {
  RunConfig c;
  c.mesh.levels = {1};
  c.case_id = "custom";
  c.out_dir = out;
  c.scheme.dt = 1e-2;
  c.threads = 1;
  return c;
}

}  // namespace

TEST(Config, DefaultsFromEmptyObject) {
  const RunConfig c = config_from_json(nlohmann::json::object());
  EXPECT_EQ(c.mesh.family, "cartesian");
  EXPECT_EQ(c.mesh.levels, (std::vector<std::size_t>{3, 6, 12, 24}));
  EXPECT_EQ(c.degrees, std::vector<int>{1});
  EXPECT_EQ(c.case_id, "steady");
  EXPECT_DOUBLE_EQ(c.scheme.beta, 0.25);
  EXPECT_DOUBLE_EQ(c.scheme.gamma, 0.5);
  EXPECT_DOUBLE_EQ(c.scheme.theta, 0.5);
  EXPECT_DOUBLE_EQ(c.rate_tol_below, 0.2);
  EXPECT_DOUBLE_EQ(c.rate_tol_above, 0.3);
  EXPECT_DOUBLE_EQ(c.oracle_tol, 1e-4);
  EXPECT_EQ(c.oracle_points, 100u);
  EXPECT_EQ(c.params.n_compartments(), 1u);
}

TEST(Config, RoundTripPreservesEverything) {
  RunConfig c;
  c.mesh.family = "agglomerated";
  c.mesh.levels = {80};
  c.degrees = {1, 2, 5};
  c.preset = "physiological";
  c.params = PhysicalParams::physiological();
  c.scheme.dt = 0.02;
  c.scheme.startup_steps = 2;
  c.case_id = "custom";
  c.stride = 4;
  c.source.amplitude = 0.5;
  BoundaryCondition bc = BoundaryCondition::wall();
  bc.dirichlet_p = {"A", "C"};
  c.boundary_conditions = BoundaryConditionMap{{"wall", bc}};
  const nlohmann::json j = to_json(c);
  const RunConfig r = config_from_json(j);
  EXPECT_EQ(to_json(r), j);
  EXPECT_EQ(r.params.n_compartments(), c.params.n_compartments());
  EXPECT_EQ(r.boundary_conditions->at("wall").dirichlet_p, bc.dirichlet_p);
}

TEST(Config, PresetIsOverriddenByExplicitParams) {
  const RunConfig c = config_from_json({{"preset", "physiological"}, {"params", {{"mu_el", 300.0}}}});
  EXPECT_EQ(c.params.names(), std::vector<std::string>{"E"});
  EXPECT_DOUBLE_EQ(c.params.mu_el, 300.0);
  EXPECT_DOUBLE_EQ(c.params.lambda, 505.0);
}

TEST(Config, RejectsInvalidInput) {
  EXPECT_THROW(config_from_json({{"degrees", {0}}}), InputError);
  EXPECT_THROW(config_from_json({{"case", "moving"}}), InputError);
  EXPECT_THROW(config_from_json({{"stride", 0}}), InputError);
  EXPECT_THROW(config_from_json({{"scheme", {{"dt", -1.0}}}}), InputError);
  EXPECT_THROW(config_from_json({{"mesh", {{"family", "hex"}}}}), InputError);
  EXPECT_THROW(config_from_json({{"mesh", {{"path", "/nonexistent.json"}}}}), InputError);
  EXPECT_THROW(config_from_json({{"preset", "mouse"}}), InputError);
  EXPECT_THROW(config_from_json({{"degrees", "two"}}), InputError);
  EXPECT_THROW(config_from_json(nlohmann::json::array()), InputError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), InputError);
  const std::string bad = scratch("bad.json");
  std::ofstream(bad) << "{\"degrees\": [1,";
  EXPECT_THROW(load_config(bad), InputError);
}

TEST(Meshes, FamiliesProduceTheRequestedLevels) {
  MeshSource src;
  src.levels = {1, 2};
  const auto cart = build_meshes(src);
  ASSERT_EQ(cart.size(), 2u);
  EXPECT_EQ(cart[0]->n_elements(), 2u);
  EXPECT_EQ(cart[1]->n_elements(), 8u);
  src.family = "agglomerated";
  src.levels = {20};
  const auto agg = build_meshes(src);
  EXPECT_EQ(agg[0]->n_elements(Domain::elastic), 10u);
  EXPECT_EQ(agg[0]->n_elements(Domain::fluid), 10u);
  src.levels = {30};
  EXPECT_THROW(build_meshes(src), InputError);
}

TEST(Output, NumberFormatIsFixed) {
  EXPECT_EQ(fmt(1.0), "1.0000000000e+00");
  EXPECT_EQ(fmt(-0.00123, 3), "-1.230e-03");
  EXPECT_EQ(fmt(std::nan("")), "nan");
}

TEST(Output, ErrorCsvLayout) {
  const std::string dir = scratch("errors");
  ensure_dir(dir);
  std::vector<ErrorRow> rows(3);
  rows[1].rate = 1.5;
  rows[2].saturated = true;
  write_error_csv(fs::path(dir) / "e.csv", rows);
  std::ifstream in(fs::path(dir) / "e.csv");
  std::string header, r0, r1, r2;
  std::getline(in, header);
  std::getline(in, r0);
  std::getline(in, r1);
  std::getline(in, r2);
  EXPECT_EQ(header, kErrorCsvHeader);
  EXPECT_EQ(r0.back(), ',');
  EXPECT_NE(r1.find("1.500000e+00"), std::string::npos);
  EXPECT_NE(r2.find("saturated"), std::string::npos);
}

TEST(Output, VtkHasPolygonsAndCellData) {
  const auto mesh = share(verification_grid(2, 1, false));
  const DGSpace sp(mesh, 1);
  const PhysicalParams prm;
  const Layout L{sp.field_size(Domain::elastic, 2), sp.field_size(Domain::elastic, 1),
                 sp.field_size(Domain::fluid, 2), sp.field_size(Domain::fluid, 1), 1};
  const CellData cd = cell_means(sp, TimeState::zero(L), prm);
  const std::string dir = scratch("vtk");
  ensure_dir(dir);
  write_vtk(fs::path(dir) / "m.vtk", *mesh, cd);
  const std::string text = slurp(fs::path(dir) / "m.vtk");
  EXPECT_EQ(text.rfind("# vtk DataFile Version 3.0\n", 0), 0u);
  EXPECT_NE(text.find("DATASET POLYDATA"), std::string::npos);
  EXPECT_NE(text.find("POINTS 6 double"), std::string::npos);
  EXPECT_NE(text.find("POLYGONS 2 10"), std::string::npos);
  EXPECT_NE(text.find("CELL_DATA 2"), std::string::npos);
  EXPECT_NE(text.find("SCALARS p_E double 1"), std::string::npos);
  EXPECT_NE(text.find("VECTORS u double"), std::string::npos);
  EXPECT_EQ(cell_csv_header(cd), "step,t,cell,x,y,domain,p_E,p_f,d_x,d_y,u_x,u_y");
}

TEST(Solve, ZeroDataGivesZeroFieldsAndSnapshotsEveryStride) {
  RunConfig c = small_run(scratch("solve_zero"));
  c.n_steps = 100;
  c.stride = 10;
  std::ostringstream log;
  ASSERT_EQ(run_command("solve", c, log), kExitSuccess) << log.str();
  std::size_t vtk = 0;
  for (const auto& e : fs::directory_iterator(fs::path(c.out_dir) / "snapshots")) vtk += e.path().extension() == ".vtk";
  EXPECT_EQ(vtk, 10u);
  EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "snapshots" / "step_000100.vtk"));
  EXPECT_FALSE(fs::exists(fs::path(c.out_dir) / "snapshots" / "step_000000.vtk"));
  EXPECT_EQ(count_lines(fs::path(c.out_dir) / "fields.csv"), 1u + 10u * 2u);
  EXPECT_EQ(count_lines(fs::path(c.out_dir) / "energy.csv"), 1u + 101u);
  std::ifstream in(fs::path(c.out_dir) / "fields.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    // every field value past the centroid is an exact zero
    std::stringstream ss(line);
    std::string cell;
    for (int col = 0; std::getline(ss, cell, ','); ++col)
      if (col > 5) EXPECT_EQ(std::stod(cell), 0.0) << line;
  }
  const auto manifest = nlohmann::json::parse(slurp(fs::path(c.out_dir) / "manifest.json"));
  EXPECT_EQ(manifest["exit_code"], 0);
  EXPECT_EQ(manifest["summary"]["snapshots"], 10);
  EXPECT_EQ(config_from_json(nlohmann::json::parse(slurp(fs::path(c.out_dir) / "config.json"))).stride, 10u);
}

TEST(Solve, OutputIsByteIdenticalAcrossRuns) {
  RunConfig a = small_run(scratch("det_a")), b = small_run(scratch("det_b"));
  for (RunConfig* c : {&a, &b}) {
    c->source.amplitude = 1.0;
    c->n_steps = 4;
    c->degrees = {2};
    std::ostringstream log;
    ASSERT_EQ(run_command("solve", *c, log), kExitSuccess);
  }
  EXPECT_EQ(slurp(fs::path(a.out_dir) / "fields.csv"), slurp(fs::path(b.out_dir) / "fields.csv"));
  EXPECT_EQ(slurp(fs::path(a.out_dir) / "snapshots" / "step_000004.vtk"),
            slurp(fs::path(b.out_dir) / "snapshots" / "step_000004.vtk"));
  EXPECT_NE(slurp(fs::path(a.out_dir) / "fields.csv").find("e-"), std::string::npos);
}

TEST(RunCommand, ExitCodes) {
  std::ostringstream log, err;
  RunConfig c = small_run(scratch("codes"));
  EXPECT_EQ(run_command("dance", c, log, err), kExitInputError);
  c.case_id = "custom";
  EXPECT_EQ(run_command("convergence", c, log, err), kExitInputError);
  c.case_id = "steady";
  c.mesh.levels = {1, 2};
  EXPECT_EQ(run_command("convergence", c, log, err), kExitInputError);
  EXPECT_EQ(run_command("agglomerate", c, log, err), kExitInputError);
  c.params.compartments = {Compartment{"A"}};
  c.params.beta = Eigen::MatrixXd::Zero(1, 1);
  EXPECT_EQ(run_command("verify", c, log, err), kExitInputError);
}

TEST(RunCommand, ConvergenceFlagsRatesOutsideTheBand) {
  RunConfig c = small_run(scratch("band"));
  c.case_id = "steady";
  c.mesh.levels = {2, 4, 8};
  std::ostringstream log, err;
  // m = 1 on these coarse grids still converges at a positive rate, but an
  // empty band cannot contain it.
  c.rate_tol_below = c.rate_tol_above = 0.0;
  EXPECT_EQ(run_command("convergence", c, log, err), kExitViolation);
  EXPECT_NE(log.str().find("VIOLATION"), std::string::npos);
  c.rate_tol_below = c.rate_tol_above = 10.0;
  EXPECT_EQ(run_command("convergence", c, log, err), kExitSuccess);
  EXPECT_EQ(count_lines(fs::path(c.out_dir) / "errors.csv"), 4u);
}

TEST(RunCommand, AgglomerateWritesCoarseMesh) {
  RunConfig c = small_run(scratch("agg"));
  c.mesh.levels = {4};
  c.mesh.target_el = c.mesh.target_f = 3;
  std::ostringstream log, err;
  ASSERT_EQ(run_command("agglomerate", c, log, err), kExitSuccess) << err.str();
  const PolyMesh m = load_mesh((fs::path(c.out_dir) / "coarse_mesh.json").string());
  EXPECT_EQ(m.n_elements(), 6u);
  EXPECT_EQ(count_lines(fs::path(c.out_dir) / "assignment.csv"), 1u + 64u);
}
