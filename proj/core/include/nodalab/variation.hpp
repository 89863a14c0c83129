#pragma once

#include "nodalab/fields.hpp"
#include "nodalab/nodal.hpp"

#include <optional>

namespace nodalab {

// <d_f V, h> = boundary_term - interior_term, with
//   interior_term = int_Z h (Laplacian f - Hess f(nu, nu)) / |df|^2
//   boundary_term = int_{dZ} h <n, nu> / |d(f restricted to dM)|
struct VariationReport {
  double interior_term = 0.0;
  double boundary_term = 0.0;
  double total = 0.0;
  std::optional<double> fd_value;
  double fd_gap = 0.0;
  std::size_t elements = 0;
  std::size_t boundary_elements = 0;
};

VariationReport first_variation(const NodalSet& nodal, const FieldFunction& h);
VariationReport first_variation(const FieldFunction& f, const FieldFunction& h, const Domain& domain,
                                const GridChart& chart);

// 1e-3 * max|f| / max|h| over the chart nodes.
double default_fd_step(const FieldFunction& f, const FieldFunction& h, const Domain& domain, const GridChart& chart);

// Richardson-extrapolated central difference of t -> V(f + t h) at 0 with
// steps eps and eps/2, on the same chart.
double fd_first_variation(const FieldFunction& f, const FieldFunction& h, const Domain& domain, const GridChart& chart,
                          double eps);
// Same for the second derivative.
double fd_second_variation(const FieldFunction& f, const FieldFunction& h, const Domain& domain,
                           const GridChart& chart, double eps);

// Signed nodal weights s_i such that <d_f V, h> = sum_i s_i h(x_i): interior
// elements first, then boundary elements.
struct VariationMeasure {
  std::vector<Vec3> points;
  std::vector<double> weights;
};
VariationMeasure variation_measure(const NodalSet& nodal);

// Cameron-Martin norm of d_f V as the double sum of K over the variation
// measure. kernel_scale multiplies K.
double cm_norm_sq(const NodalSet& nodal, const CovarianceModel& model, double kernel_scale = 1.0);
double cm_norm_sq(const FieldFunction& f, const CovarianceModel& model, const Domain& domain, const GridChart& chart);

struct SecondVariationOptions {
  std::optional<double> ricci;       // Ric(nu, nu); default 0 flat, 1 on the unit sphere
  double minimality_threshold = 1e-3;  // max |mean curvature| on Z
};

double second_variation_minimal(const FieldFunction& f, const FieldFunction& h, const Domain& domain,
                                const GridChart& chart, const SecondVariationOptions& options = {});

}  // namespace nodalab
