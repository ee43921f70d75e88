#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flks/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Flux-limited chemotaxis toolkit: simulate, exact, reduce, verify, lie, sweep"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  bool echo_only = false;
  for (const char* name : {"simulate", "exact", "reduce", "verify", "lie", "sweep"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " command");
    sub->add_option("--config", config_path, "config file (sectioned key = value)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config's out key)");
    sub->add_option("--override", overrides, "section.key=value, repeatable");
    sub->add_flag("--echo", echo_only, "print the canonical config and exit");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : flks::kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  std::ifstream f(config_path, std::ios::binary);
  if (!f) {
    std::cerr << flks::IoError(config_path, "cannot open config").what() << "\n";
    return flks::kExitIo;
  }
  std::ostringstream text;
  text << f.rdbuf();
  overrides.push_back("command=" + command);
  if (!out_dir.empty()) overrides.push_back("out=" + out_dir);

  flks::RunConfig cfg;
  try {
    cfg = flks::parse_config(text.str(), overrides);
  } catch (const flks::ParseError& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return flks::kExitConfig;
  } catch (const flks::ValidationError& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return flks::kExitConfig;
  } catch (const flks::Error& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return flks::kExitConfig;
  }
  if (echo_only) {
    std::cout << flks::echo(cfg);
    return flks::kExitOk;
  }
  const flks::CommandResult r = flks::run_command(cfg);
  for (const auto& file : r.files) std::cout << file << "\n";
  return r.exit_code;
}
