#pragma once

#include "nodalab/fields.hpp"
#include "nodalab/gaussian.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nodalab {

// Joint law at a pair of points conditioned on X(p) = X(q) = 0.
// conditional_law coordinates: grad_p (m), hess_p (m(m+1)/2 upper triangle),
// grad_q, hess_q, all in the jet_frame of the respective point.
struct TwoPointIntensity {
  Vec3 p = Vec3::Zero();
  Vec3 q = Vec3::Zero();
  int m = 2;
  double cpp = 0.0, cqq = 0.0, cpq = 0.0;
  double density_factor = 0.0;  // 1 / (2 pi sqrt(C(p,p) C(q,q) - C(p,q)^2)); 0 when excluded
  GaussianVector conditional_law;
  std::vector<Vec3> frame_p, frame_q;
  bool excluded = false;
};

// Raises DegenerateConditioning when the value pair is degenerate outside the
// tube dist(p, q) < tube_radius.
TwoPointIntensity two_point_density(const CovarianceModel& model, const Domain& domain, const Vec3& p, const Vec3& q,
                                    double tube_radius = 0.0);

struct PairMomentOptions {
  int samples = 10000;
  std::uint64_t seed = 0;
  // Outward face normals (ambient) when p or q is a boundary point.
  std::optional<Vec3> normal_p;
  std::optional<Vec3> normal_q;
  bool absolute = false;  // also compute E[|Dp| |Dq| / (|dpX| |dqX|)]
};

// Conditional moments given X(p) = X(q) = 0, with D = Laplacian - Hess(nu, nu)
// and g = <n, nu>:
//   gradient_product   E[|dpX| |dqX|]
//   curvature_product  E[Dp / |dpX| * Dq / |dqX|]
//   cross_pq           E[Dp / |dpX| * g_q]     (needs normal_q)
//   cross_qp           E[g_p * Dq / |dqX|]     (needs normal_p)
//   boundary_product   E[g_p g_q]              (needs both)
// Gradient directions are sampled from the conditional law; the radial parts
// are integrated in closed form given the directions.
struct PairMoments {
  double gradient_product = 0.0;
  double curvature_product = 0.0;
  double cross_pq = 0.0;
  double cross_qp = 0.0;
  double boundary_product = 0.0;
  double abs_curvature_product = 0.0;
  double gradient_product_se = 0.0;
  double curvature_product_se = 0.0;
  bool rao_blackwell = true;  // false when the gradient block is singular
};

PairMoments pair_moments(const TwoPointIntensity& intensity, const PairMomentOptions& options);

// One-point moments given X(p) = 0: E|dpX| and E[|Dp| / |dpX|].
struct PointMoments {
  double gradient_norm = 0.0;
  double gradient_norm_se = 0.0;
  double abs_curvature = 0.0;
  bool closed_form = false;
};
PointMoments point_moments(const CovarianceModel& model, const Vec3& p, int samples = 10000, std::uint64_t seed = 0,
                           bool absolute = false);

struct ExpectedVolumeOptions {
  int resolution = 64;  // quadrature chart resolution (icosphere level on Sphere2)
  int samples = 10000;
  std::uint64_t seed = 0;
};

struct ExpectedVolumeReport {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t nodes = 0;
  bool closed_form = false;
};

ExpectedVolumeReport expected_volume(const CovarianceModel& model, const Domain& domain,
                                     const ExpectedVolumeOptions& options = {});

struct TubeOptions {
  int resolution = 64;                // grid resolution; spacing = extent / resolution
  std::optional<double> tube_radius;  // default 4 x spacing
  int samples = 10000;                // per node pair
  std::uint64_t seed = 0;
  int max_grid = 0;                   // cap on grid nodes per axis for the smooth part (0: 64 in 2-D, 24 in 3-D)
};

// Values with the tube dist < delta, delta/2, delta/4 excised.
struct TubeReport {
  double delta = 0.0;
  std::array<double, 3> values{};
  std::array<double, 3> standard_errors{};
  double extrapolated = 0.0;   // limit from the three values
  double drift = 0.0;          // |E(delta) - E(delta/2)| / |E|, E(.) = two-level extrapolation
  double raw_drift = 0.0;      // max pairwise |v_i - v_j| / |v_2|
  double order = 0.0;          // observed convergence order used for the extrapolation
  std::string method;          // stationary, isotropic_sphere, double_grid
  std::vector<Vec3> degenerate_centres;  // displacements (or antipode) where the value pair degenerates
  std::size_t evaluations = 0;
};

TubeReport second_moment(const CovarianceModel& model, const Domain& domain, const TubeOptions& options = {});

struct DivergenceReport {
  std::array<double, 3> values{};
  std::array<double, 2> growth_ratios{};
};

struct DerivativeNormResult {
  enum class Status { Converged, Diverging, Inconclusive };
  Status status = Status::Inconclusive;
  TubeReport table;
  std::optional<double> value;            // set when converged
  std::optional<DivergenceReport> divergence;  // set when diverging
};

const char* to_string(DerivativeNormResult::Status status);

// E |d_X V|^2 in the Cameron-Martin norm. m must equal the domain dimension
// and lie in {2, 3}; for m = 3 the extended non-degeneracy sweep runs first.
DerivativeNormResult derivative_norm_sq_expectation(const CovarianceModel& model, const Domain& domain, int m,
                                                    const TubeOptions& options = {});

// min over a (p, v) sweep of the relative smallest eigenvalue of the law of
// (X(p), dX(v), Hess X(v, v)). Raises NonDegeneracySweepFailure below 1e-8.
double extended_nondegeneracy_sweep(const CovarianceModel& model, const Domain& domain, int points = 100);

struct DiagnosticRow {
  double t = 0.0;
  double density_factor = 0.0;
  double conditional = 0.0;  // I(p, q) = E[|Dp| |Dq| / (|dpX| |dqX|) | X(p) = X(q) = 0]
  double t_conditional = 0.0;
  double t_density = 0.0;    // t * 2 pi * density_factor
};

// q = exp_p(t v) for each t (straight line on flat domains, wrapped on the
// torus; great circle on the sphere).
std::vector<DiagnosticRow> near_diagonal_diagnostic(const CovarianceModel& model, const Domain& domain, const Vec3& p,
                                                    const Vec3& v, const std::vector<double>& distances,
                                                    int samples = 2000, std::uint64_t seed = 0);

// Closed-form-radial moments used by pair_moments; exposed for testing.
// R(i, j) = int_0^inf int_0^inf x^i y^j exp(-(a x^2 + 2 b x y + c y^2) / 2) dx dy
double radial_moment(int i, int j, double a, double b, double c);

}  // namespace nodalab
