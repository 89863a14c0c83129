#pragma once

#include "nodalab/fields.hpp"
#include "nodalab/geometry.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nodalab::cli {

struct DomainSpec {
  std::string kind = "FlatTorus";
  int dims = 2;
  std::vector<double> extents;  // filled with 1 per axis when omitted
  std::vector<double> origin;
};

struct ModelSpec {
  std::string name;
  ModelParams params;
};

// Closed-form fixture by name.
struct FixtureSpec {
  std::string name;
  std::vector<double> params;
};

struct RunConfig {
  std::string command;
  DomainSpec domain;
  std::optional<ModelSpec> model;
  std::optional<FixtureSpec> field;      // replaces a sampled field
  std::optional<FixtureSpec> direction;  // perturbation h (variation, segment-scan)
  int resolution = 128;                  // cells per axis; icosphere level on Sphere2 (default 5)
  std::vector<int> resolutions;          // volume convergence ladder (default res/4, res/2, res)
  std::size_t n = 1000;                  // ensemble size N
  std::uint64_t seed = 0;
  int samples = 10000;                   // Monte Carlo samples per node (pair)
  double delta = 0.0;                    // tube radius; 0 uses the module default
  double t_min = -1.0, t_max = 1.0;
  int t_resolution = 64;
  std::optional<double> eps;             // refinement width around critical levels
  int refine_levels = 8;
  bool fd = false;
  std::optional<double> fd_step;
  std::string quantity = "first";        // kacrice: first, second, derivative
  int pairs = 1;                         // variation / segment-scan sweeps
  int scan_resolution = 0;               // seed chart of the critical-zero scan (0: module default)
  std::string out;
  std::string format = "csv";
  int workers = 1;
};

// The first invalid field is named in the ErrorKind::Config message.
RunConfig parse_config(const YAML::Node& node, const std::string& command);
RunConfig parse_config_file(const std::string& path, const std::string& command,
                            const std::vector<std::string>& overrides = {});
// key=value with dotted keys (domain.kind=Rectangle); the value is read as YAML.
void apply_override(YAML::Node& node, const std::string& assignment);

// Fully resolved configuration.
nlohmann::json config_echo(const RunConfig& config);

// Output directory: config, then NODALAB_OUT, then "nodalab_out".
std::string output_directory(const RunConfig& config);

const std::vector<std::string>& command_names();

// Runs one subcommand and writes its artifacts; returns the written paths.
std::vector<std::string> dispatch(const RunConfig& config);

// Exit status for an exception escaping dispatch: 2 config, 3 numerical, 4 internal.
int exit_code_for(const std::exception& error);
// Machine-readable record written to <out>/error.json.
nlohmann::json error_record(const std::exception& error, const std::string& command);

}  // namespace nodalab::cli
