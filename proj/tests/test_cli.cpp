#include "cli.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace nodalab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error(const YAML::Node& node, const std::string& command = "volume") {
  try {
    cli::parse_config(node, command);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(e.module() == "cli");
    return e.what();
  }
  FAIL("expected a Config error");
  return {};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::current_path() / "cli_test_out" / name;
  fs::remove_all(p);
  return p;
}

int run(const std::string& args) {
  const int status = std::system((std::string(NODALAB_EXE) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("defaults") {
  const auto c = cli::parse_config(YAML::Load("{}"), "volume");
  CHECK(c.resolution == 128);
  CHECK(c.n == 1000);
  CHECK(c.seed == 0);
  CHECK(c.domain.kind == "FlatTorus");
  CHECK(c.domain.extents == std::vector<double>{1, 1});
  CHECK(c.format == "csv");
}

TEST_CASE("invalid fields are named") {
  CHECK(config_error(YAML::Load("resolution: -5")).find("resolution") != std::string::npos);
  CHECK(config_error(YAML::Load("bogus: 1")).find("bogus") != std::string::npos);
  const std::string m = config_error(YAML::Load("model: {name: NoSuchModel}"));
  CHECK(m.find("model.name") != std::string::npos);
  CHECK(m.find("ArithmeticWave") != std::string::npos);
  CHECK(m.find("AtomDemo") != std::string::npos);
  CHECK(config_error(YAML::Load("domain: {kind: Sphere2, extents: [1, 1]}")).find("domain") != std::string::npos);
  CHECK(config_error(YAML::Load("resolution: 4")).find("resolution") != std::string::npos);
  CHECK(config_error(YAML::Load("format: xml")).find("format") != std::string::npos);
}

TEST_CASE("overrides use dotted keys") {
  YAML::Node n = YAML::Load("{domain: {kind: FlatTorus}, model: {name: ArithmeticWave, n: 1}}");
  cli::apply_override(n, "domain.kind=Rectangle");
  cli::apply_override(n, "model.n=5");
  cli::apply_override(n, "resolution=64");
  const auto c = cli::parse_config(n, "volume");
  CHECK(c.domain.kind == "Rectangle");
  CHECK(c.model->params.n == 5);
  CHECK(c.resolution == 64);
  YAML::Node s = YAML::Load("{}");
  cli::apply_override(s, "model=AtomDemo");
  CHECK(cli::parse_config(s, "ensemble").model->name == "AtomDemo");
}

TEST_CASE("volume run writes metadata and reproduces bytes") {
  const fs::path a = fresh_dir("volume_a"), b = fresh_dir("volume_b");
  const auto make = [](const fs::path& out) {
    YAML::Node n = YAML::Load("{domain: {kind: Rectangle, extents: [2, 2], origin: [-1, -1]}, field: {name: circle}}");
    n["resolution"] = 64;
    n["seed"] = 9;
    n["out"] = out.string();
    return cli::parse_config(n, "volume");
  };
  const auto files = cli::dispatch(make(a));
  CHECK_FALSE(files.empty());
  const std::string csv = slurp(a / "volume.csv");
  CHECK(csv.rfind("# nodalab ", 0) == 0);
  CHECK(csv.find("# seed 9") != std::string::npos);
  CHECK(csv.find("# config {") != std::string::npos);
  CHECK(csv.find("resolution,volume,refined_volume") != std::string::npos);
  CHECK(fs::exists(a / "metadata.json"));
  cli::dispatch(make(b));
  for (const auto& entry : fs::directory_iterator(a)) {
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
  }
}

TEST_CASE("variation run reports the finite-difference gap") {
  const fs::path out = fresh_dir("variation");
  YAML::Node n = YAML::Load("{model: {name: ArithmeticWave, n: 5}, fd: true}");
  n["resolution"] = 64;
  n["out"] = out.string();
  cli::dispatch(cli::parse_config(n, "variation"));
  const std::string csv = slurp(out / "variation.csv");
  CHECK(csv.find("fd_gap") != std::string::npos);
}

TEST_CASE("exit codes and error records") {
  const fs::path ok = fresh_dir("exe_ok");
  CHECK(run("volume --field circle --domain Rectangle --extents [2,2] -r 32 -o " + ok.string()) == 0);
  CHECK(fs::exists(ok / "volume.csv"));

  const fs::path bad = fresh_dir("exe_bad");
  CHECK(run("volume -r -5 -o " + bad.string()) == 2);
  REQUIRE(fs::exists(bad / "error.json"));
  const auto rec = nlohmann::json::parse(slurp(bad / "error.json"));
  CHECK(rec["kind"] == "ConfigError");
  CHECK(rec["module"] == "cli");
  CHECK(rec["exit_code"] == 2);
  CHECK(rec["message"].get<std::string>().find("resolution") != std::string::npos);

  const fs::path few = fresh_dir("exe_few");
  CHECK(run("density --model AtomDemo -N 50 -r 32 -o " + few.string()) == 2);
  CHECK(nlohmann::json::parse(slurp(few / "error.json"))["kind"] == "InsufficientSamples");

  CHECK(run("--version") == 0);
  CHECK(run("no-such-command") == 2);
}

TEST_CASE("output directory falls back to the environment") {
  const fs::path env = fresh_dir("env_out");
  ::setenv("NODALAB_OUT", env.string().c_str(), 1);
  CHECK(cli::output_directory(cli::parse_config(YAML::Load("{}"), "volume")) == env.string());
  CHECK(run("volume --field circle --domain Rectangle --extents [2,2] -r 16") == 0);
  ::unsetenv("NODALAB_OUT");
  CHECK(fs::exists(env / "volume.csv"));
  CHECK(cli::output_directory(cli::parse_config(YAML::Load("{}"), "volume")) == "nodalab_out");
}

}  // TEST_SUITE
