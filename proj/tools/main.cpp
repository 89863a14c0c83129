#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

struct Flags {
  std::string config;
  std::vector<std::string> sets;
  bool fd = false;
  std::vector<std::pair<std::string, std::string>> values;  // yaml key, flag value
};

void add_options(CLI::App& sub, Flags& flags) {
  sub.add_option("-c,--config", flags.config, "YAML run configuration")->check(CLI::ExistingFile);
  sub.add_option("--set", flags.sets, "Override key=value (dotted keys, YAML values)");
  sub.add_flag("--fd", flags.fd, "Also evaluate the finite-difference check");
  const std::vector<std::tuple<std::string, std::string, std::string>> table{
      {"--model", "model.name", "Model name"},
      {"--domain", "domain.kind", "FlatTorus, Rectangle or Sphere2"},
      {"--dims", "domain.dims", "Domain dimension"},
      {"--extents", "domain.extents", "Extents, e.g. [1,1]"},
      {"--field", "field.name", "Closed-form fixture used instead of a sample"},
      {"--direction", "direction.name", "Closed-form perturbation fixture"},
      {"-r,--resolution", "resolution", "Cells per axis (icosphere level on Sphere2)"},
      {"-N,--count", "N", "Ensemble size"},
      {"-s,--seed", "seed", "Master seed"},
      {"--samples", "samples", "Monte Carlo samples per node"},
      {"--delta", "delta", "Tube radius"},
      {"--t-range", "t_range", "Level range, e.g. [-1,1]"},
      {"--t-resolution", "t_resolution", "Uniform level samples"},
      {"--eps", "eps", "Refinement width around critical levels"},
      {"--fd-step", "fd_step", "Finite-difference step"},
      {"--quantity", "quantity", "kacrice: first, second or derivative"},
      {"--pairs", "pairs", "Number of (field, direction) pairs"},
      {"-o,--out", "out", "Output directory"},
      {"--format", "format", "csv or json"},
      {"-j,--workers", "workers", "Worker threads (0: all cores)"},
  };
  for (const auto& [flag, key, help] : table) {
    auto* slot = &flags.values.emplace_back(key, std::string());
    sub.add_option(flag, slot->second, help);
  }
}

std::string fallback_out(const Flags& flags) {
  for (const auto& [key, value] : flags.values)
    if (key == "out" && !value.empty()) return value;
  if (const char* env = std::getenv("NODALAB_OUT"); env && *env) return env;
  return "nodalab_out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nodal geometry laboratory for smooth Gaussian random fields"};
  app.set_version_flag("--version", nodalab::version_tag());
  app.require_subcommand(1);
  const auto& names = nodalab::cli::command_names();
  std::vector<Flags> flags(names.size());
  for (auto& f : flags) f.values.reserve(32);
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < names.size(); ++i) {
    subs.push_back(app.add_subcommand(names[i]));
    add_options(*subs.back(), flags[i]);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::size_t which = 0;
  while (which < subs.size() && !subs[which]->parsed()) ++which;
  const Flags& f = flags[which];
  const std::string command = names[which];
  std::string out_dir = fallback_out(f);
  try {
    std::vector<std::string> overrides = f.sets;
    for (const auto& [key, value] : f.values)
      if (!value.empty()) overrides.push_back(key + "=" + value);
    if (f.fd) overrides.push_back("fd=true");
    const auto config = nodalab::cli::parse_config_file(f.config, command, overrides);
    out_dir = nodalab::cli::output_directory(config);
    for (const auto& path : nodalab::cli::dispatch(config)) std::cout << path << "\n";
    return 0;
  } catch (const std::exception& e) {
    const auto record = nodalab::cli::error_record(e, command);
    std::cerr << "error: " << e.what() << "\n";
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream(std::filesystem::path(out_dir) / "error.json") << record.dump(2) << "\n";
    return nodalab::cli::exit_code_for(e);
  }
}
