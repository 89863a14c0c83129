#include "cli.hpp"

#include "nodalab/fixtures.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

namespace nodalab::cli {

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& message) {
  fail(ErrorKind::Config, "cli", "parse_config", field + ": " + message);
}

template <class T>
T read(const YAML::Node& node, const std::string& field, const char* what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    invalid(field, std::string("expected ") + what);
  }
}

std::vector<double> read_vector(const YAML::Node& node, const std::string& field) {
  if (node.IsScalar()) return {read<double>(node, field, "a number")};
  if (!node.IsSequence()) invalid(field, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i)
    out.push_back(read<double>(node[i], field + "[" + std::to_string(i) + "]", "a number"));
  return out;
}

void reject_unknown(const YAML::Node& node, const std::string& prefix, const std::set<std::string>& allowed) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) invalid(prefix + key, "unknown field");
  }
}

DomainSpec parse_domain(const YAML::Node& node) {
  DomainSpec d;
  if (node && node.IsScalar()) {
    d.kind = node.as<std::string>();
  } else if (node) {
    if (!node.IsMap()) invalid("domain", "expected a mapping or a kind name");
    reject_unknown(node, "domain.", {"kind", "dims", "extents", "origin"});
    if (node["kind"]) d.kind = read<std::string>(node["kind"], "domain.kind", "a string");
    if (node["dims"]) d.dims = read<int>(node["dims"], "domain.dims", "an integer");
    if (node["extents"]) d.extents = read_vector(node["extents"], "domain.extents");
    if (node["origin"]) d.origin = read_vector(node["origin"], "domain.origin");
  }
  DomainKind kind;
  try {
    kind = domain_kind_from_string(d.kind);
  } catch (const Error&) {
    invalid("domain.kind", "unknown domain kind '" + d.kind + "'; valid kinds: FlatTorus, Rectangle, Sphere2");
  }
  d.kind = to_string(kind);
  if (d.dims != 2 && d.dims != 3) invalid("domain.dims", "must be 2 or 3");
  if (kind == DomainKind::Sphere2) {
    if (d.dims != 2) invalid("domain.dims", "Sphere2 is two-dimensional");
    if (!d.extents.empty() || !d.origin.empty()) invalid("domain.extents", "Sphere2 takes no extents or origin");
    return d;
  }
  if (d.extents.empty()) d.extents.assign(d.dims, 1.0);
  if (static_cast<int>(d.extents.size()) != d.dims) invalid("domain.extents", "needs one entry per axis");
  for (double e : d.extents)
    if (!(e > 0.0) || !std::isfinite(e)) invalid("domain.extents", "entries must be positive");
  if (d.origin.empty()) d.origin.assign(d.dims, 0.0);
  if (static_cast<int>(d.origin.size()) != d.dims) invalid("domain.origin", "needs one entry per axis");
  return d;
}

ModelSpec parse_model(const YAML::Node& node) {
  ModelSpec m;
  if (node.IsScalar()) {
    m.name = node.as<std::string>();
  } else {
    if (!node.IsMap()) invalid("model", "expected a mapping or a model name");
    reject_unknown(node, "model.",
                   {"name", "n", "k", "directions", "truncation", "length", "degree", "l", "frequencies", "weights",
                    "sigma0"});
    if (!node["name"]) invalid("model.name", "missing");
    m.name = read<std::string>(node["name"], "model.name", "a string");
    auto& p = m.params;
    if (node["n"]) p.n = read<int>(node["n"], "model.n", "an integer");
    if (node["k"]) p.k = read<double>(node["k"], "model.k", "a number");
    if (node["directions"]) p.directions = read<int>(node["directions"], "model.directions", "an integer");
    if (node["truncation"]) p.truncation = read<int>(node["truncation"], "model.truncation", "an integer");
    if (node["length"]) p.length = read<double>(node["length"], "model.length", "a number");
    if (node["degree"]) p.degree = read<int>(node["degree"], "model.degree", "an integer");
    if (node["l"]) p.l = read<int>(node["l"], "model.l", "an integer");
    if (node["sigma0"]) p.sigma0 = read<double>(node["sigma0"], "model.sigma0", "a number");
    if (node["weights"]) p.weights = read_vector(node["weights"], "model.weights");
    if (node["frequencies"]) {
      const auto& fq = node["frequencies"];
      if (!fq.IsSequence()) invalid("model.frequencies", "expected a list of lattice vectors");
      for (std::size_t i = 0; i < fq.size(); ++i) {
        const auto v = read_vector(fq[i], "model.frequencies[" + std::to_string(i) + "]");
        if (v.empty() || v.size() > 3)
          invalid("model.frequencies[" + std::to_string(i) + "]", "expected 1 to 3 components");
        Vec3 k = Vec3::Zero();
        for (std::size_t a = 0; a < v.size(); ++a) k[static_cast<int>(a)] = v[a];
        p.frequencies.push_back(k);
      }
    }
  }
  try {
    m.name = to_string(model_kind_from_string(m.name));
  } catch (const Error&) {
    invalid("model.name", "unknown model '" + m.name + "'; valid names: " + valid_model_names());
  }
  return m;
}

FixtureSpec parse_fixture(const YAML::Node& node, const std::string& field) {
  FixtureSpec f;
  if (node.IsScalar()) {
    f.name = node.as<std::string>();
  } else {
    if (!node.IsMap()) invalid(field, "expected a mapping or a fixture name");
    reject_unknown(node, field + ".", {"name", "params"});
    if (!node["name"]) invalid(field + ".name", "missing");
    f.name = read<std::string>(node["name"], field + ".name", "a string");
    if (node["params"]) f.params = read_vector(node["params"], field + ".params");
  }
  try {
    (void)fixtures::by_name(f.name, f.params);
  } catch (const Error&) {
    invalid(field + ".name", "unknown fixture '" + f.name + "'; valid names: " + fixtures::fixture_names());
  }
  return f;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"volume",       "variation", "kacrice", "morse-profile",
                                              "segment-scan", "ensemble",  "density"};
  return names;
}

RunConfig parse_config(const YAML::Node& node, const std::string& command) {
  RunConfig c;
  c.command = command;
  if (std::find(command_names().begin(), command_names().end(), command) == command_names().end())
    invalid("command", "unknown subcommand '" + command + "'");
  if (node && !node.IsNull() && !node.IsMap()) invalid("config", "top level must be a mapping");
  const YAML::Node root = node && node.IsMap() ? node : YAML::Node(YAML::NodeType::Map);
  reject_unknown(root, "",
                 {"domain", "model", "field", "direction", "resolution", "resolutions", "N", "seed", "samples",
                  "delta", "t_range", "t_resolution", "eps", "refine_levels", "fd", "fd_step", "quantity", "pairs",
                  "scan_resolution", "out", "format", "workers"});

  c.domain = parse_domain(root["domain"]);
  const bool sphere = c.domain.kind == "Sphere2";
  if (root["model"]) c.model = parse_model(root["model"]);
  if (root["field"]) c.field = parse_fixture(root["field"], "field");
  if (root["direction"]) c.direction = parse_fixture(root["direction"], "direction");

  c.resolution = sphere ? 5 : 128;
  if (root["resolution"]) c.resolution = read<int>(root["resolution"], "resolution", "an integer");
  if (c.resolution <= 0) invalid("resolution", "must be positive");
  if (sphere && c.resolution > 8) invalid("resolution", "icosphere level must be at most 8");
  if (!sphere && c.resolution < 8) invalid("resolution", "must be at least 8 cells per axis");
  if (root["resolutions"]) {
    for (double r : read_vector(root["resolutions"], "resolutions")) {
      if (!(r >= 1.0) || r != std::floor(r)) invalid("resolutions", "entries must be positive integers");
      if (!sphere && r < 8) invalid("resolutions", "entries must be at least 8 cells per axis");
      if (sphere && r > 8) invalid("resolutions", "icosphere levels must be at most 8");
      c.resolutions.push_back(static_cast<int>(r));
    }
  } else if (sphere) {
    for (int l = std::max(1, c.resolution - 2); l <= c.resolution; ++l) c.resolutions.push_back(l);
  } else {
    for (int div : {4, 2, 1})
      if (c.resolution / div >= 8) c.resolutions.push_back(c.resolution / div);
  }
  if (c.resolutions.empty()) c.resolutions.push_back(c.resolution);

  if (root["N"]) {
    const long long n = read<long long>(root["N"], "N", "an integer");
    if (n < 2) invalid("N", "must be at least 2");
    c.n = static_cast<std::size_t>(n);
  }
  if (root["seed"]) c.seed = read<std::uint64_t>(root["seed"], "seed", "a non-negative integer");
  if (root["samples"]) c.samples = read<int>(root["samples"], "samples", "an integer");
  if (c.samples <= 0) invalid("samples", "must be positive");
  if (root["delta"]) c.delta = read<double>(root["delta"], "delta", "a number");
  if (!(c.delta >= 0.0)) invalid("delta", "must be non-negative");
  if (root["t_range"]) {
    const auto t = read_vector(root["t_range"], "t_range");
    if (t.size() != 2) invalid("t_range", "expected [t_min, t_max]");
    c.t_min = t[0];
    c.t_max = t[1];
  }
  if (!(c.t_min < c.t_max)) invalid("t_range", "need t_min < t_max");
  if (root["t_resolution"]) c.t_resolution = read<int>(root["t_resolution"], "t_resolution", "an integer");
  if (c.t_resolution < 2) invalid("t_resolution", "must be at least 2");
  if (root["eps"]) {
    c.eps = read<double>(root["eps"], "eps", "a number");
    if (!(*c.eps > 0.0)) invalid("eps", "must be positive");
  }
  if (root["refine_levels"]) c.refine_levels = read<int>(root["refine_levels"], "refine_levels", "an integer");
  if (c.refine_levels < 0 || c.refine_levels > 30) invalid("refine_levels", "must lie in [0, 30]");
  if (root["fd"]) c.fd = read<bool>(root["fd"], "fd", "a boolean");
  if (root["fd_step"]) {
    c.fd_step = read<double>(root["fd_step"], "fd_step", "a number");
    if (!(*c.fd_step > 0.0)) invalid("fd_step", "must be positive");
  }
  if (root["quantity"]) c.quantity = read<std::string>(root["quantity"], "quantity", "a string");
  if (c.quantity != "first" && c.quantity != "second" && c.quantity != "derivative")
    invalid("quantity", "must be one of first, second, derivative");
  if (root["pairs"]) c.pairs = read<int>(root["pairs"], "pairs", "an integer");
  if (c.pairs <= 0) invalid("pairs", "must be positive");
  if (root["scan_resolution"]) c.scan_resolution = read<int>(root["scan_resolution"], "scan_resolution", "an integer");
  if (c.scan_resolution < 0) invalid("scan_resolution", "must be non-negative");
  if (root["out"]) c.out = read<std::string>(root["out"], "out", "a path");
  if (root["format"]) c.format = read<std::string>(root["format"], "format", "a string");
  if (c.format != "csv" && c.format != "json") invalid("format", "must be csv or json");
  if (root["workers"]) c.workers = read<int>(root["workers"], "workers", "an integer");
  if (c.workers < 0) invalid("workers", "must be non-negative");
  return c;
}

void apply_override(YAML::Node& node, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) invalid("override", "expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  YAML::Node value;
  try {
    value = YAML::Load(assignment.substr(eq + 1));
  } catch (const YAML::Exception&) {
    invalid(key, "unparsable value");
  }
  std::vector<std::string> path;
  std::size_t start = 0;
  for (std::size_t dot; (dot = key.find('.', start)) != std::string::npos; start = dot + 1)
    path.push_back(key.substr(start, dot - start));
  path.push_back(key.substr(start));
  // Promote a scalar shorthand (model: Kostlan) to a mapping before nesting into it.
  if (path.size() == 2) {
    YAML::Node parent = node[path[0]];
    if (parent && parent.IsScalar()) {
      const std::string name = parent.as<std::string>();
      YAML::Node promoted(YAML::NodeType::Map);
      promoted[path[0] == "domain" ? "kind" : "name"] = name;
      node[path[0]] = promoted;
    }
    node[path[0]][path[1]] = value;
  } else if (path.size() == 1) {
    node[path[0]] = value;
  } else {
    invalid(key, "nesting deeper than one level is not supported");
  }
}

RunConfig parse_config_file(const std::string& path, const std::string& command,
                            const std::vector<std::string>& overrides) {
  YAML::Node node(YAML::NodeType::Map);
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) invalid("config", "cannot open '" + path + "'");
    try {
      node = YAML::Load(in);
    } catch (const YAML::Exception& e) {
      invalid("config", std::string("YAML parse error: ") + e.what());
    }
    if (node.IsNull()) node = YAML::Node(YAML::NodeType::Map);
  }
  for (const auto& o : overrides) apply_override(node, o);
  return parse_config(node, command);
}

std::string output_directory(const RunConfig& config) {
  if (!config.out.empty()) return config.out;
  if (const char* env = std::getenv("NODALAB_OUT"); env && *env) return env;
  return "nodalab_out";
}

nlohmann::json config_echo(const RunConfig& c) {
  using nlohmann::json;
  json j;
  j["command"] = c.command;
  json d{{"kind", c.domain.kind}, {"dims", c.domain.dims}};
  if (!c.domain.extents.empty()) d["extents"] = c.domain.extents;
  if (!c.domain.origin.empty()) d["origin"] = c.domain.origin;
  j["domain"] = d;
  if (c.model) {
    const auto& p = c.model->params;
    json m{{"name", c.model->name}, {"n", p.n},           {"k", p.k},
           {"directions", p.directions}, {"truncation", p.truncation}, {"length", p.length},
           {"degree", p.degree}, {"l", p.l},             {"sigma0", p.sigma0}};
    json fq = json::array();
    for (const auto& k : p.frequencies) fq.push_back({k[0], k[1], k[2]});
    m["frequencies"] = fq;
    m["weights"] = p.weights;
    j["model"] = m;
  } else {
    j["model"] = nullptr;
  }
  auto fixture = [](const std::optional<FixtureSpec>& f) -> json {
    if (!f) return nullptr;
    return json{{"name", f->name}, {"params", f->params}};
  };
  j["field"] = fixture(c.field);
  j["direction"] = fixture(c.direction);
  j["resolution"] = c.resolution;
  j["resolutions"] = c.resolutions;
  j["N"] = c.n;
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["delta"] = c.delta;
  j["t_range"] = {c.t_min, c.t_max};
  j["t_resolution"] = c.t_resolution;
  j["eps"] = c.eps ? json(*c.eps) : json(nullptr);
  j["refine_levels"] = c.refine_levels;
  j["fd"] = c.fd;
  j["fd_step"] = c.fd_step ? json(*c.fd_step) : json(nullptr);
  j["quantity"] = c.quantity;
  j["pairs"] = c.pairs;
  j["scan_resolution"] = c.scan_resolution;
  j["format"] = c.format;
  j["workers"] = c.workers;
  return j;
}

}  // namespace nodalab::cli
