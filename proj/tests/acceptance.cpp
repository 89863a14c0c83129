// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select
// criteria by number.
#include "nodalab/fixtures.hpp"
#include "nodalab/kacrice.hpp"
#include "nodalab/law.hpp"
#include "nodalab/morse.hpp"
#include "nodalab/nodal.hpp"
#include "nodalab/variation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace nodalab;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED[" << what << "]";
    }
  }
};

CovarianceModel wave(const Domain& d, int n) {
  ModelParams p;
  p.n = n;
  return build_model(ModelKind::ArithmeticWave, p, d);
}

// 1. First variation: circle value and formula vs finite differences on random pairs.
void first_variation_check(Outcome& o) {
  const auto dc = make_domain(DomainKind::Rectangle, 2, {4, 4}, 512, {-2, -2});
  const double circle = first_variation(fixtures::circle(1.0), fixtures::constant(1.0), dc.domain, dc.chart).total;
  o.detail << "circle=" << circle;
  o.require(std::abs(circle + kPi) <= 1e-3, "circle");
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 256);
  const auto m = wave(t.domain, 5);
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const FieldFunction f = sample_field(m, 2 * i), h = sample_field(m, 2 * i + 1);
    const double v = first_variation(f, h, t.domain, t.chart).total;
    const double fd = fd_first_variation(f, h, t.domain, t.chart, default_fd_step(f, h, t.domain, t.chart));
    worst = std::max(worst, std::abs(v - fd) / (5e-3 * (1 + std::abs(v))));
  }
  o.detail << " worst_gap/tol=" << worst;
  o.require(worst <= 1.0, "fd pairs");
}

// 2. Second variation on the minimal stripe fixture.
void second_variation_check(Outcome& o) {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 512);
  const FieldFunction f = fixtures::sine(0);
  const double s = second_variation_minimal(f, fixtures::sine(1, 1.0, kTwoPi), t.domain, t.chart);
  o.detail << "fixture=" << s << " (4pi^2=" << 4 * kPi * kPi << ")";
  o.require(std::abs(s / (4 * kPi * kPi) - 1.0) <= 0.01, "4pi^2");
  ModelParams p;
  p.n = 5;
  const auto m = build_model(ModelKind::ArithmeticWave, p, t.domain);
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const FieldFunction h = sample_field(m, 100 + i).scaled(0.5);
    const double a = second_variation_minimal(f, h, t.domain, t.chart);
    const double fd = fd_second_variation(f, h, t.domain, t.chart, 1e-2);
    worst = std::max(worst, std::abs(a - fd) / std::abs(fd));
  }
  o.detail << " worst_rel_fd=" << worst;
  o.require(worst <= 0.01, "fd directions");
}

// 3. Cameron-Martin norm vs the basis expansion.
void cm_norm_check(Outcome& o) {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 96);
  const auto m = wave(t.domain, 5);
  o.require(m.rank() <= 12, "rank");
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FieldFunction f = sample_field(m, seed);
    const auto z = extract_nodal_set(f, t.domain, t.chart);
    double sum = 0.0;
    for (std::size_t n = 0; n < m.rank(); ++n) {
      CameronMartinElement e;
      e.coefficients = VecX::Zero(static_cast<int>(m.rank()));
      e.coefficients[static_cast<int>(n)] = 1.0;
      const double pairing = first_variation(z, cm_field(m, e)).total;
      sum += pairing * pairing;
    }
    worst = std::max(worst, std::abs(cm_norm_sq(z, m) - sum) / sum);
  }
  o.detail << "rank=" << m.rank() << " worst_rel=" << worst;
  o.require(worst <= 1e-6, "norm");
}

// 4. Kac-Rice first moment.
void first_moment_check(Outcome& o) {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 128);
  for (int n : {1, 2, 5}) {
    const auto m = wave(t.domain, n);
    const double kr = expected_volume(m, t.domain).value;
    const double oracle = std::sqrt(4 * kPi * kPi * n) / (2 * std::sqrt(2.0));
    const auto ens = run_ensemble(m, t.domain, t.chart, 2000, 1000 + n, {false});
    const double z = (ens.mean - kr) / ens.standard_error;
    o.detail << " n=" << n << ":kr=" << kr << ",mc=" << ens.mean << ",z=" << z;
    o.require(std::abs(kr / oracle - 1.0) <= 5e-3, "closed form n=" + std::to_string(n));
    o.require(std::abs(z) <= 3.0, "monte carlo n=" + std::to_string(n));
  }
}

// 5. Kac-Rice second moment with tube halving.
void second_moment_check(Outcome& o) {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 128);
  const auto m = wave(t.domain, 1);
  TubeOptions opts;
  opts.resolution = 64;
  opts.samples = 10000;
  const auto r = second_moment(m, t.domain, opts);
  const auto ens = run_ensemble(m, t.domain, t.chart, 2000, 77, {false});
  double s2 = 0.0, s4 = 0.0;
  for (double v : ens.values) {
    s2 += v * v;
    s4 += v * v * v * v;
  }
  const double n = static_cast<double>(ens.size());
  const double mean2 = s2 / n, se = std::sqrt((s4 / n - mean2 * mean2) / (n - 1));
  const double z = (r.extrapolated - mean2) / std::hypot(se, r.standard_errors[2]);
  o.detail << "kr=" << r.extrapolated << " mc=" << mean2 << " z=" << z << " drift=" << r.drift;
  o.require(std::abs(z) <= 3.0, "monte carlo");
  o.require(r.drift <= 0.01, "drift");
}

// 6. Morse exponents and templates.
void morse_check(Outcome& o) {
  const auto sq = make_domain(DomainKind::Rectangle, 2, {2, 2}, 256, {-1, -1});
  struct Case {
    const char* name;
    FieldFunction f;
    Template expected;
    int index;
  };
  for (const auto& c : {Case{"min", fixtures::paraboloid(1.0), Template::G0, 0},
                        Case{"saddle", fixtures::saddle(), Template::G1, 1},
                        Case{"max", fixtures::paraboloid(-1.0), Template::G2, 2}}) {
    const auto prof = level_profile(c.f, sq.domain, sq.chart, -0.5, 0.5, 11);
    const bool one = prof.critical.size() == 1 && prof.critical[0].zeros.size() == 1;
    o.require(one, std::string(c.name) + " levels");
    if (!one) continue;
    const auto& lv = prof.critical[0];
    o.require(lv.zeros[0].index == c.index && lv.match == c.expected, std::string(c.name) + " template");
    for (const auto* fit : {&lv.left, &lv.right})
      if (*fit && (*fit)->shape == Shape::PowerLaw) {
        o.detail << " " << c.name << ":" << (*fit)->alpha;
        o.require(std::abs((*fit)->alpha + 0.5) <= 0.05, std::string(c.name) + " alpha");
      }
  }
  const auto rect = make_domain(DomainKind::Rectangle, 2, {2, 1}, 256, {-1, 0});
  const auto cap = level_profile(fixtures::boundary_cap(), rect.domain, rect.chart, -0.5, 0.5, 11);
  const bool cap_ok = cap.critical.size() == 1 && cap.critical[0].right &&
                      cap.critical[0].right->shape == Shape::PowerLaw;
  o.require(cap_ok, "boundary level");
  if (cap_ok) {
    o.detail << " boundary:" << cap.critical[0].right->alpha;
    o.require(std::abs(cap.critical[0].right->alpha + 0.5) <= 0.05, "boundary alpha");
  }
  std::vector<double> ts, v3;
  for (double s : {1e-3, 5e-4, 2.5e-4}) {
    ts.push_back(s);
    v3.push_back(model_level_integral(2, 1, MatX::Identity(3, 3), LevelIntegrand::MeanCurvature, s, 1.0));
  }
  const double r2 = fit_log(ts, v3).r2;
  MatX g4 = MatX::Zero(4, 4);
  g4.diagonal() << 1.0, 1.5, 0.7, 2.0;
  std::vector<double> v4;
  for (double s = 1e-4; s >= 0.99e-6; s /= std::sqrt(10.0))
    v4.push_back(model_level_integral(2, 2, g4, LevelIntegrand::MeanCurvature, s, 1.0));
  const double var4 = relative_variation(v4);
  o.detail << " m3_r2=" << r2 << " m4_variation=" << var4;
  o.require(r2 >= 0.99, "m=3 log fit");
  o.require(var4 <= 0.10, "m=4 bounded");
}

// 7. Derivative-norm dichotomy.
void dichotomy_check(Outcome& o) {
  const auto t3 = make_domain(DomainKind::FlatTorus, 3, {1, 1, 1}, 16);
  TubeOptions o3;
  o3.resolution = 1024;
  const auto r3 = derivative_norm_sq_expectation(wave(t3.domain, 2), t3.domain, 3, o3);
  o.detail << "T3:" << to_string(r3.status) << " drift=" << r3.table.raw_drift;
  o.require(r3.status == DerivativeNormResult::Status::Converged, "T3 converged");
  o.require(r3.table.raw_drift <= 0.02, "T3 drift");

  const auto t2 = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 16);
  TubeOptions o2;
  o2.resolution = 64;
  const auto r2 = derivative_norm_sq_expectation(wave(t2.domain, 1), t2.domain, 2, o2);
  o.detail << " T2:" << to_string(r2.status);
  o.require(r2.status == DerivativeNormResult::Status::Diverging && r2.divergence.has_value(), "T2 diverging");
  if (r2.divergence) {
    const auto& g = r2.divergence->growth_ratios;
    o.detail << " growth=" << g[0] << "," << g[1];
    o.require(g[0] >= 1.2 && g[1] >= 1.2, "T2 growth");
  }
}

// 8. Segment transversality.
void segment_check(Outcome& o) {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 64);
  const auto m = wave(t.domain, 5);
  std::size_t violations = 0, roots = 0, zero_cert = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    try {
      const auto scan = scan_segment(sample_field(m, 5000 + 2 * i), sample_field(m, 5001 + 2 * i), -1.0, 1.0, t.domain);
      roots += scan.zeros.size();
      for (const auto& z : scan.zeros)
        if (!(std::abs(z.certificate) > 0.0) || !std::isfinite(z.certificate)) ++zero_cert;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MorseFloorViolation) throw;
      ++violations;
    }
  }
  o.detail << "roots=" << roots << " per_segment=" << roots / 200.0 << " floor_violations=" << violations
           << " zero_certificates=" << zero_cert;
  o.require(violations == 0, "floor");
  o.require(zero_cert == 0, "certificates");
}

// 9 and 10 share the AtomDemo ensemble.
const EnsembleSummary& atom_ensemble() {
  static const EnsembleSummary ens = [] {
    const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 128);
    return run_ensemble(build_model(ModelKind::AtomDemo, ModelParams{}, t.domain), t.domain, t.chart, 8000, 2024,
                        {false});
  }();
  return ens;
}

void law_check(Outcome& o) {
  const auto& ens = atom_ensemble();
  const auto law = estimate_law(ensemble_prefix(ens, 2000));
  o.detail << "P=" << law.atom << " max_bin_mass=";
  for (double v : law.max_bin_mass) o.detail << v << ";";
  o.require(law.atom > 0.02 && law.atom < 0.98, "atom");
  o.require(law.max_bin_mass_decreasing, "secondary atom");
  std::vector<double> mins;
  for (std::size_t n : {500, 2000, 8000}) {
    const auto p = ensemble_prefix(ens, n);
    double mn = INFINITY;
    for (double v : p.values)
      if (v > 0) mn = std::min(mn, v);
    mins.push_back(mn);
  }
  o.detail << " min+=" << mins[0] << "," << mins[1] << "," << mins[2];
  o.require(mins[1] <= mins[0] && mins[2] <= mins[1] && mins[2] < mins[0], "min positive");
}

void nv_check(Outcome& o) {
  auto tab = [](double lo, double hi, int n, auto pdf, std::vector<double>& x, std::vector<double>& d) {
    for (int i = 0; i <= n; ++i) {
      x.push_back(lo + (hi - lo) * i / n);
      d.push_back(pdf(x.back()));
    }
  };
  std::vector<double> x, d;
  tab(-10, 10, 40000, [](double s) { return std::exp(-0.5 * s * s) / std::sqrt(kTwoPi); }, x, d);
  const double gap_n = nv_reconstruct(x, d, nv_g_function(x, d), std::sqrt(2 / kPi)).l1_gap;
  x.clear();
  d.clear();
  tab(-1, 29, 20000, [](double s) { return std::exp(-(s + 1)); }, x, d);
  const double gap_e = nv_reconstruct(x, d, nv_g_function(x, d), 2 * std::exp(-1.0)).l1_gap;
  const auto law = estimate_law(ensemble_prefix(atom_ensemble(), 2000));
  o.detail << "normal=" << gap_n << " exponential=" << gap_e << " atomdemo=" << law.reconstruction.l1_gap;
  o.require(gap_n <= 1e-3 && gap_e <= 1e-3, "analytic");
  o.require(law.reconstruction.l1_gap <= 0.05, "empirical");
}

// 11. Linear field on the sphere.
void linear_check(Outcome& o) {
  const auto s = make_domain(DomainKind::Sphere2, 2, {}, 5);
  const auto lin = build_model(ModelKind::LinearField, ModelParams{}, s.domain);
  const auto ens = run_ensemble(lin, s.domain, s.chart, 100, 11, {false});
  double worst = 0.0;
  for (double v : ens.values) worst = std::max(worst, std::abs(v / kTwoPi - 1.0));
  o.detail << "n=" << ens.size() << " worst_rel=" << worst << " variance=" << ens.variance;
  o.require(ens.size() == 100, "samples");
  o.require(worst <= 5e-3, "volume");
  o.require(ens.variance <= 1e-6 * kTwoPi * kTwoPi, "variance");
}

// 12. Second-order convergence of the nodal volume.
void convergence_check(Outcome& o) {
  std::vector<double> err;
  for (int res : {64, 128, 256, 512}) {
    const auto dc = make_domain(DomainKind::Rectangle, 2, {2, 2}, res, {-1, -1});
    err.push_back(std::abs(nodal_volume(extract_nodal_set(fixtures::circle(0.5), dc.domain, dc.chart)) - kPi));
  }
  o.detail << "ratios=";
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double r = err[i - 1] / err[i];
    o.detail << r << ";";
    o.require(r >= 3.2 && r <= 4.8, "ratio");
  }
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "first variation", 120, first_variation_check},
      {2, "second variation", 120, second_variation_check},
      {3, "Cameron-Martin norm", 60, cm_norm_check},
      {4, "Kac-Rice first moment", 600, first_moment_check},
      {5, "Kac-Rice second moment", 1200, second_moment_check},
      {6, "Morse exponents", 300, morse_check},
      {7, "derivative-norm dichotomy", 1800, dichotomy_check},
      {8, "segment transversality", 600, segment_check},
      {9, "law structure", 900, law_check},
      {10, "Nourdin-Viens reconstruction", 60, nv_check},
      {11, "linear-field constancy", 120, linear_check},
      {12, "convergence order", 60, convergence_check},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs <= c.budget_s, "runtime");
    if (!o.pass) ++failures;
    std::printf("%s criterion %2d (%s) %.1fs/%.0fs: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, c.budget_s,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
