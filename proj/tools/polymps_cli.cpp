#include <CLI11.hpp>

#include "polymps/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"PolyDG solver for poroelasticity coupled with Stokes flow"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  double tol = -1.0;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"convergence", "error table and observed rates over a mesh family (--tol: symmetric rate tolerance)"},
      {"solve", "solve one case and write CSV/VTK snapshots"},
      {"verify", "manufactured-solution oracle and structural matrix checks (--tol: residual tolerance)"},
      {"agglomerate", "agglomerate a fine triangulation into polygons"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--tol", tol, "tolerance override")->check(CLI::NonNegativeNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? polymps::kExitSuccess : polymps::kExitInputError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  polymps::RunConfig cfg;
  try {
    cfg = polymps::load_config(config_path);
  } catch (const polymps::Error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return polymps::kExitInputError;
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (tol >= 0.0) {
    if (command == "convergence") cfg.rate_tol_below = cfg.rate_tol_above = tol;
    if (command == "verify") cfg.oracle_tol = tol;
  }
  return polymps::run_command(command, cfg);
}
