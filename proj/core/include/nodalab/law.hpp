#pragma once

#include "nodalab/fields.hpp"
#include "nodalab/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nodalab {

struct EnsembleOptions {
  bool components = true;  // also count connected components
};

struct EnsembleSummary {
  std::string model;
  std::string domain;
  std::uint64_t seed = 0;
  std::size_t requested = 0;
  std::vector<double> values;              // V_i of the retained samples, in sample order
  std::vector<int> components;             // component counts (empty when not requested)
  std::vector<std::size_t> sample_index;   // index of each retained sample
  std::vector<std::uint64_t> sample_seeds; // stream seed of each retained sample
  std::vector<std::size_t> excluded;       // samples that raised RegularityViolation
  std::vector<std::string> log;
  std::size_t zero_count = 0;              // empty zero sets
  double mean = 0.0;
  double variance = 0.0;                   // unbiased
  double standard_error = 0.0;

  std::size_t size() const { return values.size(); }
};

// N independent samples; sample i uses the stream derive_seed(seed, i).
EnsembleSummary run_ensemble(const CovarianceModel& model, const Domain& domain, const GridChart& chart, std::size_t n,
                             std::uint64_t seed, const EnsembleOptions& options = {});

// Summary of the first n samples (nested prefixes of one ensemble).
EnsembleSummary ensemble_prefix(const EnsembleSummary& summary, std::size_t n);

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<double> mass;  // fraction of the nonzero values per bin
  double max_mass() const;
};

struct WilsonInterval {
  double lo = 0.0, hi = 0.0;
};
WilsonInterval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

struct LawOptions {
  std::size_t min_samples = 200;
  int grid_points = 2048;
  int base_bins = 16;
  int halvings = 3;
  double mask_floor = 1e-4;  // relative to max density
};

struct GFunction {
  std::vector<double> x;
  std::vector<double> g;
  std::vector<char> mask;  // 1 where the density is above the floor and g is defined
};

struct Reconstruction {
  std::vector<double> x;
  std::vector<double> density;
  std::vector<char> mask;
  double l1_gap = 0.0;
};

struct LawEstimate {
  std::size_t n = 0;
  std::size_t nonzero = 0;
  double atom = 0.0;  // P-hat
  WilsonInterval atom_interval;
  bool degenerate = false;  // constant values: no density fitted
  double c = 0.0;           // sample mean of V
  double support_lo = 0.0, support_hi = 0.0;
  std::vector<Histogram> histograms;  // base_bins x 2^k, k = 0..halvings
  std::vector<double> max_bin_mass;
  bool max_bin_mass_decreasing = false;
  double bandwidth = 0.0;
  std::vector<double> grid;     // x >= 0
  std::vector<double> density;  // kernel estimate of (1 - P) pi, reflected at 0
  double density_mass = 0.0;    // trapezoid integral of `density`
  bool values_distinct = true;  // no nonzero value repeats to 12 significant digits
  // Density identity on the centred continuous part.
  double continuous_mean = 0.0;
  double mean_abs = 0.0;        // E|V - c| under the centred continuous density
  GFunction g;
  Reconstruction reconstruction;
};

LawEstimate estimate_law(const EnsembleSummary& summary, const LawOptions& options = {});

// g(x) = (int_x^inf y pi(y) dy) / pi(x) by trapezoid on the grid.
GFunction nv_g_function(const std::vector<double>& x, const std::vector<double>& density, double mask_floor = 1e-4);

// pi_rec(x) = E|V| / (2 g(x)) exp(-int_0^x y / g(y) dy) on the unmasked run
// containing 0, and its L1 distance to `density` there.
Reconstruction nv_reconstruct(const std::vector<double>& x, const std::vector<double>& density, const GFunction& g,
                              double mean_abs);

}  // namespace nodalab
