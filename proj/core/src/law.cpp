#include "nodalab/law.hpp"

#include "nodalab/nodal.hpp"
#include "nodalab/parallel.hpp"
#include "nodalab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace nodalab {

namespace {

constexpr const char* kModule = "law";

void fill_moments(EnsembleSummary& s) {
  const std::size_t n = s.values.size();
  s.zero_count = 0;
  double mean = 0.0;
  for (double v : s.values) {
    mean += v;
    s.zero_count += v == 0.0;
  }
  mean = n ? mean / n : 0.0;
  double var = 0.0;
  for (double v : s.values) var += (v - mean) * (v - mean);
  s.mean = mean;
  s.variance = n > 1 ? var / (n - 1) : 0.0;
  s.standard_error = n > 1 ? std::sqrt(s.variance / n) : 0.0;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

}  // namespace

EnsembleSummary run_ensemble(const CovarianceModel& model, const Domain& domain, const GridChart& chart, std::size_t n,
                             std::uint64_t seed, const EnsembleOptions& options) {
  if (n < 2) fail(ErrorKind::InvalidArgument, kModule, "run_ensemble", "N must be at least 2");
  struct Result {
    double value = 0.0;
    int components = 0;
    bool ok = false;
  };
  std::vector<Result> res(n);
  ExtractOptions ex;
  ex.with_jets = false;
  ex.boundary = false;
  parallel_for(n, [&](std::size_t i) {
    const FieldFunction f = sample_field(model, derive_seed(seed, i));
    try {
      const NodalSet nodal = extract_nodal_set(f, domain, chart, ex);
      res[i].value = nodal.any_sign_change ? nodal_volume(nodal) : 0.0;
      if (options.components) res[i].components = component_count(nodal);
      res[i].ok = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RegularityViolation) throw;
    }
  });
  EnsembleSummary s;
  s.model = model.name;
  s.domain = to_string(domain.kind);
  s.seed = seed;
  s.requested = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (!res[i].ok) {
      s.excluded.push_back(i);
      continue;
    }
    s.values.push_back(res[i].value);
    if (options.components) s.components.push_back(res[i].components);
    s.sample_index.push_back(i);
    s.sample_seeds.push_back(derive_seed(seed, i));
  }
  if (!s.excluded.empty())
    s.log.push_back("excluded " + std::to_string(s.excluded.size()) + " samples with RegularityViolation");
  fill_moments(s);
  return s;
}

EnsembleSummary ensemble_prefix(const EnsembleSummary& summary, std::size_t n) {
  EnsembleSummary s = summary;
  s.requested = std::min(n, summary.requested);
  s.values.clear();
  s.components.clear();
  s.sample_index.clear();
  s.sample_seeds.clear();
  s.excluded.clear();
  for (std::size_t i = 0; i < summary.values.size(); ++i) {
    if (summary.sample_index[i] >= n) break;
    s.values.push_back(summary.values[i]);
    if (!summary.components.empty()) s.components.push_back(summary.components[i]);
    s.sample_index.push_back(summary.sample_index[i]);
    s.sample_seeds.push_back(summary.sample_seeds[i]);
  }
  for (std::size_t e : summary.excluded)
    if (e < n) s.excluded.push_back(e);
  fill_moments(s);
  return s;
}

double Histogram::max_mass() const { return mass.empty() ? 0.0 : *std::max_element(mass.begin(), mass.end()); }

WilsonInterval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

GFunction nv_g_function(const std::vector<double>& x, const std::vector<double>& density, double mask_floor) {
  if (x.size() != density.size() || x.size() < 3)
    fail(ErrorKind::InvalidArgument, kModule, "nv_g_function", "grid and density must match (>= 3 points)");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) fail(ErrorKind::InvalidArgument, kModule, "nv_g_function", "grid must be increasing");
  double top = 0.0;
  for (double d : density) {
    if (d < 0.0) fail(ErrorKind::InvalidArgument, kModule, "nv_g_function", "density must be nonnegative");
    top = std::max(top, d);
  }
  const std::size_t n = x.size();
  // phi(x_i) = int_{x_i}^inf y pi(y) dy, accumulated from the right end.
  std::vector<double> phi(n, 0.0);
  for (std::size_t i = n - 1; i-- > 0;)
    phi[i] = phi[i + 1] + 0.5 * (x[i + 1] - x[i]) * (x[i] * density[i] + x[i + 1] * density[i + 1]);
  GFunction g;
  g.x = x;
  g.g.assign(n, 0.0);
  g.mask.assign(n, 0);
  const double floor = mask_floor * top;
  for (std::size_t i = 0; i < n; ++i) {
    if (density[i] < floor || !(density[i] > 0.0)) continue;
    g.g[i] = phi[i] / density[i];
    g.mask[i] = 1;
  }
  return g;
}

Reconstruction nv_reconstruct(const std::vector<double>& x, const std::vector<double>& density, const GFunction& g,
                              double mean_abs) {
  if (x.size() != density.size() || g.x.size() != x.size())
    fail(ErrorKind::InvalidArgument, kModule, "nv_reconstruct", "g must live on the density grid");
  const std::size_t n = x.size();
  Reconstruction r;
  r.x = x;
  r.density.assign(n, 0.0);
  r.mask.assign(n, 0);
  // First grid point >= 0.
  std::size_t i0 = std::lower_bound(x.begin(), x.end(), 0.0) - x.begin();
  if (i0 >= n || (i0 > 0 && !g.mask[i0 - 1] && !g.mask[i0]) || (i0 == 0 && !g.mask[0]))
    fail(ErrorKind::InvalidArgument, kModule, "nv_reconstruct", "0 must lie inside the unmasked grid");
  auto usable = [&](std::size_t i) { return g.mask[i] && g.g[i] > 0.0; };
  std::vector<double> integral(n, 0.0);
  // Right of 0.
  if (usable(i0)) {
    integral[i0] = 0.5 * x[i0] * (x[i0] / g.g[i0]);
    r.mask[i0] = 1;
    for (std::size_t i = i0 + 1; i < n && usable(i); ++i) {
      integral[i] = integral[i - 1] + 0.5 * (x[i] - x[i - 1]) * (x[i] / g.g[i] + x[i - 1] / g.g[i - 1]);
      r.mask[i] = 1;
    }
  }
  // Left of 0.
  if (i0 > 0 && usable(i0 - 1)) {
    const std::size_t j0 = i0 - 1;
    integral[j0] = -0.5 * (0.0 - x[j0]) * (x[j0] / g.g[j0]);
    r.mask[j0] = 1;
    for (std::size_t j = j0; j-- > 0 && usable(j);) {
      integral[j] = integral[j + 1] - 0.5 * (x[j + 1] - x[j]) * (x[j] / g.g[j] + x[j + 1] / g.g[j + 1]);
      r.mask[j] = 1;
    }
  }
  std::vector<double> xs, diff;
  for (std::size_t i = 0; i < n; ++i) {
    if (!r.mask[i]) continue;
    r.density[i] = mean_abs / (2.0 * g.g[i]) * std::exp(-integral[i]);
    xs.push_back(x[i]);
    diff.push_back(std::abs(r.density[i] - density[i]));
  }
  r.l1_gap = trapezoid(xs, diff);
  return r;
}

LawEstimate estimate_law(const EnsembleSummary& summary, const LawOptions& opt) {
  LawEstimate e;
  e.n = summary.values.size();
  if (e.n < opt.min_samples)
    fail(ErrorKind::InsufficientSamples, kModule, "estimate_law",
         "need at least " + std::to_string(opt.min_samples) + " samples, have " + std::to_string(e.n));
  std::vector<double> nz;
  double mean = 0.0;
  for (double v : summary.values) {
    mean += v;
    if (v != 0.0) nz.push_back(v);
  }
  e.c = mean / e.n;
  e.nonzero = nz.size();
  e.atom = static_cast<double>(e.n - e.nonzero) / e.n;
  e.atom_interval = wilson_interval(e.n - e.nonzero, e.n);
  std::sort(nz.begin(), nz.end());
  if (!nz.empty()) {
    e.support_lo = nz.front();
    e.support_hi = nz.back();
  }
  {
    std::set<std::string> seen;
    char buf[64];
    for (double v : nz) {
      std::snprintf(buf, sizeof buf, "%.11e", v);
      if (!seen.insert(buf).second) e.values_distinct = false;
    }
  }
  const double spread = nz.empty() ? 0.0 : nz.back() - nz.front();
  e.degenerate = nz.size() < 2 || !(spread > 1e-12 * std::max(std::abs(nz.back()), 1e-300)) ||
                 summary.variance <= 1e-12 * e.c * e.c;
  if (e.degenerate) return e;

  // Histograms of the nonzero values under bin halvings.
  for (int k = 0; k <= opt.halvings; ++k) {
    Histogram h;
    h.lo = nz.front();
    h.hi = nz.back();
    const int bins = opt.base_bins << k;
    h.mass.assign(bins, 0.0);
    for (double v : nz) {
      int b = static_cast<int>((v - h.lo) / (h.hi - h.lo) * bins);
      b = std::clamp(b, 0, bins - 1);
      h.mass[b] += 1.0 / nz.size();
    }
    e.max_bin_mass.push_back(h.max_mass());
    e.histograms.push_back(std::move(h));
  }
  e.max_bin_mass_decreasing = true;
  for (std::size_t k = 1; k < e.max_bin_mass.size(); ++k)
    if (!(e.max_bin_mass[k] < e.max_bin_mass[k - 1])) e.max_bin_mass_decreasing = false;

  // Gaussian kernel estimate, reflected at 0, Silverman's bandwidth.
  const std::size_t m = nz.size();
  double mu = 0.0;
  for (double v : nz) mu += v / m;
  double var = 0.0;
  for (double v : nz) var += (v - mu) * (v - mu) / (m - 1);
  const double q1 = nz[static_cast<std::size_t>(0.25 * (m - 1))], q3 = nz[static_cast<std::size_t>(0.75 * (m - 1))];
  double sigma = std::sqrt(var);
  if (q3 > q1) sigma = std::min(sigma, (q3 - q1) / 1.34);
  e.bandwidth = 0.9 * sigma * std::pow(static_cast<double>(m), -0.2);
  const double h = e.bandwidth;
  const double upper = nz.back() + 5.0 * h;
  const int G = std::max(opt.grid_points, 16);
  e.grid.resize(G);
  e.density.assign(G, 0.0);
  for (int i = 0; i < G; ++i) e.grid[i] = upper * i / (G - 1);
  parallel_for(static_cast<std::size_t>(G), [&](std::size_t i) {
    const double x = e.grid[i];
    double s = 0.0;
    for (double v : nz) {
      const double a = (x - v) / h, b = (x + v) / h;
      if (std::abs(a) < 9.0) s += std::exp(-0.5 * a * a);
      if (std::abs(b) < 9.0) s += std::exp(-0.5 * b * b);
    }
    e.density[i] = s;
  });
  const double raw = trapezoid(e.grid, e.density);
  for (double& d : e.density) d *= (1.0 - e.atom) / raw;
  e.density_mass = trapezoid(e.grid, e.density);

  // Density identity on the continuous part, centred at its own mean.
  std::vector<double> pbar(G), xbar(G), xp(G), ax(G);
  for (int i = 0; i < G; ++i) pbar[i] = e.density[i] / (1.0 - e.atom);
  for (int i = 0; i < G; ++i) xp[i] = e.grid[i] * pbar[i];
  e.continuous_mean = trapezoid(e.grid, xp);
  for (int i = 0; i < G; ++i) {
    xbar[i] = e.grid[i] - e.continuous_mean;
    ax[i] = std::abs(xbar[i]) * pbar[i];
  }
  e.mean_abs = trapezoid(xbar, ax);
  e.g = nv_g_function(xbar, pbar, opt.mask_floor);
  e.reconstruction = nv_reconstruct(xbar, pbar, e.g, e.mean_abs);
  return e;
}

}  // namespace nodalab
