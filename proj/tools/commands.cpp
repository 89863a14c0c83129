#include "cli.hpp"

#include "nodalab/fixtures.hpp"
#include "nodalab/kacrice.hpp"
#include "nodalab/law.hpp"
#include "nodalab/morse.hpp"
#include "nodalab/nodal.hpp"
#include "nodalab/parallel.hpp"
#include "nodalab/rng.hpp"
#include "nodalab/variation.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nodalab::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_float()) return format_number(v.get<double>());
  const std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

// Non-finite doubles become null so the JSON stays valid.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Writer {
 public:
  explicit Writer(const RunConfig& config) : config_(config), dir_(output_directory(config)) {
    meta_ = {{"version", version_tag()}, {"seed", config.seed}, {"config", config_echo(config)}};
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) fail(ErrorKind::Config, "cli", "dispatch", "out: cannot create '" + dir_ + "': " + ec.message());
  }

  // Rows of equal length; csv or json per the configured format.
  void table(const std::string& name, const std::vector<std::string>& columns, const std::vector<json>& rows) {
    if (config_.format == "json") {
      json out = meta_;
      out["columns"] = columns;
      json records = json::array();
      for (const auto& r : rows) {
        json rec = json::object();
        for (std::size_t i = 0; i < columns.size(); ++i) rec[columns[i]] = r[i];
        records.push_back(rec);
      }
      out["rows"] = records;
      write(name + ".json", out.dump(2) + "\n");
      return;
    }
    std::string text = csv_header();
    for (std::size_t i = 0; i < columns.size(); ++i) text += (i ? "," : "") + columns[i];
    text += "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) text += (i ? "," : "") + csv_cell(r[i]);
      text += "\n";
    }
    write(name + ".csv", text);
  }

  // Pre-formatted CSV body behind the metadata comment lines.
  void csv(const std::string& name, const std::string& body) { write(name + ".csv", csv_header() + body); }

  void document(const std::string& name, const json& payload) {
    json out = meta_;
    for (auto it = payload.begin(); it != payload.end(); ++it) out[it.key()] = it.value();
    write(name + ".json", out.dump(2) + "\n");
  }

  std::vector<std::string> finish() {
    json files = written_;
    document("metadata", {{"command", config_.command}, {"files", files}});
    return written_;
  }

 private:
  std::string csv_header() const {
    return "# " + std::string(version_tag()) + "\n# seed " + std::to_string(config_.seed) + "\n# config " +
           meta_["config"].dump() + "\n";
  }

  void write(const std::string& file, const std::string& text) {
    const std::string path = (fs::path(dir_) / file).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Config, "cli", "dispatch", "out: cannot write '" + path + "'");
    out << text;
    written_.push_back(file);
  }

  const RunConfig& config_;
  std::string dir_;
  json meta_;
  std::vector<std::string> written_;
};

struct Setup {
  DomainChart dc;
  std::optional<CovarianceModel> model;
};

Setup setup(const RunConfig& c) {
  const DomainKind kind = domain_kind_from_string(c.domain.kind);
  Setup s{make_domain(kind, c.domain.dims, c.domain.extents, c.resolution, c.domain.origin), std::nullopt};
  if (c.model) s.model = build_model(model_kind_from_string(c.model->name), c.model->params, s.dc.domain);
  return s;
}

void require_model(const RunConfig& c, const char* why) {
  if (!c.model) fail(ErrorKind::Config, "cli", "dispatch", std::string("model: required for ") + why);
}

bool on_sphere(const RunConfig& c) { return c.domain.kind == "Sphere2"; }

// The field fixture, or a sample of the model from stream `stream`.
FieldFunction field_for(const RunConfig& c, const Setup& s, std::uint64_t stream) {
  if (c.field) return fixtures::by_name(c.field->name, c.field->params, on_sphere(c));
  require_model(c, "a sampled field (or set field)");
  return sample_field(*s.model, derive_seed(c.seed, stream));
}

FieldFunction direction_for(const RunConfig& c, const Setup& s, std::uint64_t stream) {
  if (c.direction) return fixtures::by_name(c.direction->name, c.direction->params, on_sphere(c));
  require_model(c, "a sampled direction (or set direction)");
  return sample_field(*s.model, derive_seed(c.seed, stream));
}

json vec_json(const Vec3& p) { return json::array({p[0], p[1], p[2]}); }

json zero_json(const CriticalZero& z) {
  return {{"point", vec_json(z.point)},
          {"t", z.t},
          {"stratum", to_string(z.stratum)},
          {"face", z.face},
          {"index", z.index},
          {"hessian_eigenvalues", z.hessian_eigenvalues},
          {"certificate", z.certificate},
          {"normal_derivative", z.normal_derivative},
          {"residual", z.residual}};
}

json fit_json(const std::optional<ExponentFit>& f) {
  if (!f) return nullptr;
  return {{"side", to_string(f->side)},
          {"shape", to_string(f->shape)},
          {"alpha", f->alpha},
          {"amplitude", f->amplitude},
          {"plateau", f->plateau},
          {"plateau_estimate", f->plateau_estimate},
          {"sign", f->sign},
          {"r2", num(f->r2)},
          {"log_amplitude", f->log_amplitude},
          {"log_r2", num(f->log_r2)},
          {"samples", f->samples}};
}

std::vector<std::string> run_volume(const RunConfig& c) {
  Writer w(c);
  const Setup s = setup(c);
  const FieldFunction f = field_for(c, s, 0);
  std::vector<json> rows;
  double previous = std::nan("");
  NodalSet nodal;
  for (int r : c.resolutions) {
    const GridChart chart = make_chart(s.dc.domain, r);
    nodal = extract_nodal_set(f, s.dc.domain, chart);
    const double v = nodal_volume(nodal);
    const double refined = refined_volume(nodal, f, s.dc.domain);
    const json change = std::isnan(previous) ? json(nullptr) : num(std::abs(refined - previous) / std::max(std::abs(refined), 1e-300));
    rows.push_back({r, v, refined, component_count(nodal), nodal.elements.size(), nodal.boundary.size(), change});
    previous = refined;
  }
  w.table("volume", {"resolution", "volume", "refined_volume", "components", "elements", "boundary_elements",
                     "relative_change"},
          rows);
  std::ostringstream elements;
  write_nodal_csv(nodal, elements);
  w.csv("nodal_set", elements.str());
  if (!c.field) {
    const VecX& a = f.coefficients();
    w.document("coefficients", {{"model", c.model->name},
                                {"stream_seed", derive_seed(c.seed, 0)},
                                {"coefficients", std::vector<double>(a.data(), a.data() + a.size())}});
  }
  return w.finish();
}

std::vector<std::string> run_variation(const RunConfig& c) {
  Writer w(c);
  const Setup s = setup(c);
  std::vector<json> rows;
  for (int i = 0; i < c.pairs; ++i) {
    const auto stream = static_cast<std::uint64_t>(2 * i);
    const FieldFunction f = field_for(c, s, stream);
    const FieldFunction h = direction_for(c, s, stream + 1);
    VariationReport r = first_variation(f, h, s.dc.domain, s.dc.chart);
    json step = nullptr;
    if (c.fd) {
      const double eps = c.fd_step ? *c.fd_step : default_fd_step(f, h, s.dc.domain, s.dc.chart);
      r.fd_value = fd_first_variation(f, h, s.dc.domain, s.dc.chart, eps);
      r.fd_gap = std::abs(r.total - *r.fd_value);
      step = eps;
    }
    rows.push_back({i, r.interior_term, r.boundary_term, r.total, r.fd_value ? json(*r.fd_value) : json(nullptr),
                    c.fd ? json(r.fd_gap) : json(nullptr), step, r.elements, r.boundary_elements});
  }
  w.table("variation", {"pair", "interior_term", "boundary_term", "total", "fd_value", "fd_gap", "fd_step",
                        "elements", "boundary_elements"},
          rows);
  return w.finish();
}

json tube_json(const TubeReport& t) {
  json centres = json::array();
  for (const auto& p : t.degenerate_centres) centres.push_back(vec_json(p));
  return {{"delta", t.delta},         {"extrapolated", num(t.extrapolated)}, {"drift", num(t.drift)},
          {"raw_drift", num(t.raw_drift)}, {"order", num(t.order)},         {"method", t.method},
          {"degenerate_centres", centres}, {"evaluations", t.evaluations}};
}

std::vector<json> tube_rows(const TubeReport& t) {
  std::vector<json> rows;
  for (int k = 0; k < 3; ++k) rows.push_back({k, t.delta / std::ldexp(1.0, k), t.values[k], t.standard_errors[k]});
  return rows;
}

std::vector<std::string> run_kacrice(const RunConfig& c) {
  require_model(c, "kacrice");
  Writer w(c);
  const Setup s = setup(c);
  const auto& model = *s.model;
  if (c.quantity == "first") {
    ExpectedVolumeOptions o;
    o.resolution = c.resolution;
    o.samples = c.samples;
    o.seed = c.seed;
    const auto r = expected_volume(model, s.dc.domain, o);
    w.table("kacrice", {"quantity", "value", "standard_error", "nodes", "closed_form"},
            {json{"first", r.value, r.standard_error, r.nodes, r.closed_form}});
    return w.finish();
  }
  TubeOptions o;
  o.resolution = c.resolution;
  if (c.delta > 0.0) o.tube_radius = c.delta;
  o.samples = c.samples;
  o.seed = c.seed;
  const std::vector<std::string> cols{"level", "delta", "value", "standard_error"};
  if (c.quantity == "second") {
    const auto t = second_moment(model, s.dc.domain, o);
    w.table("kacrice", cols, tube_rows(t));
    w.document("kacrice_summary", {{"quantity", "second"}, {"tube", tube_json(t)}});
    return w.finish();
  }
  const auto d = derivative_norm_sq_expectation(model, s.dc.domain, c.domain.dims, o);
  w.table("kacrice", cols, tube_rows(d.table));
  json div = nullptr;
  if (d.divergence)
    div = {{"values", d.divergence->values}, {"growth_ratios", d.divergence->growth_ratios}};
  w.document("kacrice_summary", {{"quantity", "derivative"},
                                 {"status", to_string(d.status)},
                                 {"value", d.value ? json(*d.value) : json(nullptr)},
                                 {"divergence", div},
                                 {"tube", tube_json(d.table)}});
  return w.finish();
}

std::vector<std::string> run_morse_profile(const RunConfig& c) {
  Writer w(c);
  const Setup s = setup(c);
  const FieldFunction T = field_for(c, s, 0);
  ProfileOptions o;
  o.refine_levels = c.refine_levels;
  o.width = c.eps;
  o.scan.resolution = c.scan_resolution;
  const LevelProfile p = level_profile(T, s.dc.domain, s.dc.chart, c.t_min, c.t_max, c.t_resolution, o);
  std::vector<json> rows;
  for (const auto& q : p.samples) rows.push_back({q.t, q.phi, q.dphi, q.refined});
  w.table("profile", {"t", "phi", "dphi", "refined"}, rows);
  json levels = json::array();
  for (const auto& l : p.critical) {
    json zs = json::array();
    for (const auto& z : l.zeros) zs.push_back(zero_json(z));
    levels.push_back({{"t", l.t}, {"template", to_string(l.match)}, {"left", fit_json(l.left)},
                      {"right", fit_json(l.right)}, {"zeros", zs}});
  }
  w.document("zeros", {{"dims", p.dims}, {"critical_levels", levels}});
  return w.finish();
}

std::vector<std::string> run_segment_scan(const RunConfig& c) {
  Writer w(c);
  const Setup s = setup(c);
  ScanOptions o;
  o.resolution = c.scan_resolution;
  json segments = json::array();
  std::vector<json> rows;
  for (int i = 0; i < c.pairs; ++i) {
    const auto stream = static_cast<std::uint64_t>(2 * i);
    const FieldFunction f = field_for(c, s, stream);
    const FieldFunction h = direction_for(c, s, stream + 1);
    const SegmentScan scan = scan_segment(f, h, c.t_min, c.t_max, s.dc.domain, o);
    json zs = json::array();
    for (const auto& z : scan.zeros) {
      zs.push_back(zero_json(z));
      rows.push_back({i, z.t, z.point[0], z.point[1], z.point[2], to_string(z.stratum), z.face, z.index,
                      z.certificate, z.residual});
    }
    segments.push_back({{"pair", i}, {"seeds", scan.seeds}, {"stalled", scan.stalled}, {"log", scan.log},
                        {"value_scale", scan.value_scale}, {"zeros", zs}});
  }
  w.table("segment_zeros", {"pair", "t", "x", "y", "z", "stratum", "face", "index", "certificate", "residual"}, rows);
  w.document("zeros", {{"segments", segments}});
  return w.finish();
}

json ensemble_json(const EnsembleSummary& e) {
  return {{"model", e.model},         {"domain", e.domain},       {"requested", e.requested},
          {"retained", e.size()},     {"excluded", e.excluded},   {"zero_count", e.zero_count},
          {"mean", e.mean},           {"variance", e.variance},   {"standard_error", e.standard_error},
          {"log", e.log}};
}

EnsembleSummary ensemble_for(const RunConfig& c, const Setup& s) {
  return run_ensemble(*s.model, s.dc.domain, s.dc.chart, c.n, c.seed);
}

std::vector<std::string> run_ensemble_cmd(const RunConfig& c) {
  require_model(c, "ensemble");
  Writer w(c);
  const Setup s = setup(c);
  const EnsembleSummary e = ensemble_for(c, s);
  std::vector<json> rows;
  for (std::size_t i = 0; i < e.size(); ++i)
    rows.push_back({e.sample_index[i], e.sample_seeds[i], e.values[i],
                    e.components.empty() ? json(nullptr) : json(e.components[i])});
  w.table("ensemble", {"sample", "stream_seed", "volume", "components"}, rows);
  w.document("ensemble_summary", ensemble_json(e));
  return w.finish();
}

std::vector<std::string> run_density(const RunConfig& c) {
  require_model(c, "density");
  Writer w(c);
  const Setup s = setup(c);
  const EnsembleSummary e = ensemble_for(c, s);
  const LawEstimate law = estimate_law(e);
  std::vector<json> hist;
  for (std::size_t k = 0; k < law.histograms.size(); ++k) {
    const auto& h = law.histograms[k];
    const double width = (h.hi - h.lo) / static_cast<double>(h.mass.size());
    for (std::size_t b = 0; b < h.mass.size(); ++b)
      hist.push_back({k, h.mass.size(), b, h.lo + width * b, h.lo + width * (b + 1), h.mass[b]});
  }
  w.table("histograms", {"level", "bins", "bin", "lo", "hi", "mass"}, hist);
  std::vector<json> dens;
  for (std::size_t i = 0; i < law.grid.size(); ++i) dens.push_back({law.grid[i], law.density[i]});
  w.table("density", {"x", "density"}, dens);
  std::vector<json> nv;
  for (std::size_t i = 0; i < law.g.x.size(); ++i) {
    const bool rec = i < law.reconstruction.mask.size() && law.reconstruction.mask[i];
    nv.push_back({law.g.x[i], law.g.mask[i] ? json(law.g.g[i]) : json(nullptr), static_cast<bool>(law.g.mask[i]),
                  rec ? json(law.reconstruction.density[i]) : json(nullptr), rec});
  }
  w.table("g_function", {"x", "g", "g_defined", "reconstruction", "reconstruction_defined"}, nv);
  w.document("law", {{"ensemble", ensemble_json(e)},
                     {"n", law.n},
                     {"nonzero", law.nonzero},
                     {"atom", law.atom},
                     {"atom_interval", {law.atom_interval.lo, law.atom_interval.hi}},
                     {"degenerate", law.degenerate},
                     {"c", law.c},
                     {"support", {law.support_lo, law.support_hi}},
                     {"max_bin_mass", law.max_bin_mass},
                     {"max_bin_mass_decreasing", law.max_bin_mass_decreasing},
                     {"bandwidth", law.bandwidth},
                     {"density_mass", law.density_mass},
                     {"values_distinct", law.values_distinct},
                     {"continuous_mean", law.continuous_mean},
                     {"mean_abs", law.mean_abs},
                     {"l1_gap", law.reconstruction.l1_gap}});
  return w.finish();
}

}  // namespace

std::vector<std::string> dispatch(const RunConfig& c) {
  set_worker_count(c.workers);
  if (c.command == "volume") return run_volume(c);
  if (c.command == "variation") return run_variation(c);
  if (c.command == "kacrice") return run_kacrice(c);
  if (c.command == "morse-profile") return run_morse_profile(c);
  if (c.command == "segment-scan") return run_segment_scan(c);
  if (c.command == "ensemble") return run_ensemble_cmd(c);
  if (c.command == "density") return run_density(c);
  fail(ErrorKind::Config, "cli", "dispatch", "command: unknown subcommand '" + c.command + "'");
}

int exit_code_for(const std::exception& error) {
  if (const auto* e = dynamic_cast<const Error*>(&error)) {
    switch (e->kind()) {
      case ErrorKind::Config:
      case ErrorKind::InvalidArgument:
      case ErrorKind::DomainMismatch:
      case ErrorKind::InsufficientSamples:  // too few samples requested
        return 2;
      default:
        return e->numerical() ? 3 : 4;
    }
  }
  return 4;
}

json error_record(const std::exception& error, const std::string& command) {
  json j{{"version", version_tag()}, {"command", command}, {"exit_code", exit_code_for(error)},
         {"message", error.what()}};
  if (const auto* e = dynamic_cast<const Error*>(&error)) {
    j["kind"] = to_string(e->kind());
    j["module"] = e->module();
    j["operation"] = e->operation();
  } else {
    j["kind"] = "Internal";
    j["module"] = nullptr;
    j["operation"] = nullptr;
  }
  return j;
}

}  // namespace nodalab::cli
