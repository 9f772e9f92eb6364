#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pchain/commands.hpp"
#include "pchain/config.hpp"

int main(int argc, char** argv) {
  using namespace pchain;

  CLI::App app{"Penning-trap electron spin chain: couplings, transfer, fidelity budget, oracles"};
  app.require_subcommand(1, 1);

  std::string config_path, mode, orientation, out_path, format = "csv";
  app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--mode", mode, "anomaly frequency: exact | approx")->check(CLI::IsMember({"exact", "approx"}));
  app.add_option("--orientation", orientation, "array orientation: z | x")->check(CLI::IsMember({"z", "x"}));
  app.add_option("--out", out_path, "write output here instead of stdout");
  app.add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  for (const auto& name : command_names()) app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_code::ok : exit_code::input_error;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const bool needs_config = command != "table1" && command != "oracle";
  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    else if (needs_config) throw ConfigError("'" + command + "' needs --config");
    if (!mode.empty()) cfg.mode = parse_mode(mode);
    if (!orientation.empty()) cfg.orientation = parse_orientation(orientation);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::input_error;
  }

  std::string error;
  const CommandResult res = run_command(command, cfg, error);
  if (!error.empty()) {
    std::cerr << "error: " << error << '\n';
    return res.exit_code;
  }

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      std::cerr << "error: cannot write '" << out_path << "'\n";
      return exit_code::input_error;
    }
  }
  std::ostream& os = out_path.empty() ? std::cout : file;
  if (format == "json") write_json(os, res.report);
  else write_csv(os, res.report);
  if (res.exit_code == exit_code::regime_violation) std::cerr << "regime validation failed; see the regime table\n";
  if (res.exit_code == exit_code::acceptance_failure) std::cerr << "acceptance thresholds not met; see the report\n";
  return res.exit_code;
}
