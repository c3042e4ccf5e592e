#include <iostream>

#include "CLI11.hpp"
#include "fsi/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fluid-structure energy decay solver"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run a coupled simulation and write energies.csv and summaries");
  run->add_option("-c,--config", config, "JSON configuration")->required();
  run->add_option("-o,--out", out_dir, "Output directory")->required();

  auto* escape = app.add_subcommand("check-escape", "Certify or refute an escape vector field");
  escape->add_option("-c,--config", config, "JSON configuration")->required();

  auto* ident = app.add_subcommand("verify-identities", "Check the multiplier identities");
  ident->add_option("-c,--config", config, "JSON configuration")->required();

  int levels = 4;
  auto* mms = app.add_subcommand("mms", "Manufactured-solution convergence studies");
  mms->add_option("--levels", levels, "Refinement levels")->check(CLI::Range(2, 6));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : fsi::kExitInput;
  }

  try {
    if (*run) return fsi::cmd_run(config, out_dir, std::cerr);
    if (*escape) return fsi::cmd_check_escape(config, std::cout);
    if (*ident) return fsi::cmd_verify_identities(config, std::cout);
    if (*mms) return fsi::cmd_mms(levels, std::cout);
  } catch (const fsi::Error& e) {
    std::cerr << e.what() << "\n";
    return fsi::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return fsi::kExitFailure;
  }
  return fsi::kExitFailure;
}
