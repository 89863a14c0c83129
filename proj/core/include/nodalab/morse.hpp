#pragma once

#include "nodalab/fields.hpp"
#include "nodalab/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nodalab {

enum class Stratum { Interior, Boundary };
const char* to_string(Stratum stratum);

// Point p and parameter t* with j^1_p (f + t* h) = 0 (for level profiles t*
// is the critical value of T).
struct CriticalZero {
  Vec3 point = Vec3::Zero();
  double t = 0.0;
  Stratum stratum = Stratum::Interior;
  int face = -1;  // Domain::faces() index for boundary zeros
  int index = 0;  // negative eigenvalues of the (restricted) Hessian
  std::vector<double> hessian_eigenvalues;
  double certificate = 0.0;         // d/dt (f + t h)(p(t)) at t* = h(p)
  double normal_derivative = 0.0;   // d(f + t* h)(n) for boundary zeros
  double residual = 0.0;            // max(|f_t(p)|, |d f_t(p)|) / scale after polishing
};

struct ScanOptions {
  int resolution = 0;           // seed chart: cells per axis (0: 48 in 2-D, 16 in 3-D) or icosphere level (0: 4)
  int t_steps = 64;
  double seed_threshold = 0.5;  // scaled residual max(|f_t|, |df_t| spacing) / max over nodes
  int newton_iterations = 40;
  double tolerance = 1e-10;     // relative to the value scale
  double morse_floor = 1e-6;    // |eigenvalue| relative to the Hessian scale
  bool boundary = true;
};

struct SegmentScan {
  std::vector<CriticalZero> zeros;
  std::size_t seeds = 0;
  std::size_t stalled = 0;       // NewtonStall: seeds discarded
  std::vector<std::string> log;  // one line per discarded seed class
  double value_scale = 0.0;
};

// Critical zeros of f + t h for t in [t0, t1]. Raises MorseFloorViolation when
// a root has a degenerate Hessian.
SegmentScan scan_segment(const FieldFunction& f, const FieldFunction& h, double t0, double t1, const Domain& domain,
                         const ScanOptions& options = {});
std::vector<CriticalZero> find_critical_zeros_on_segment(const FieldFunction& f, const FieldFunction& h, double t0,
                                                         double t1, const Domain& domain,
                                                         const ScanOptions& options = {});

// Negative eigenvalue count; MorseFloorViolation when the smallest |eigenvalue|
// is below floor x the largest (or x scale when given).
int morse_index(const MatX& hessian, Stratum stratum = Stratum::Interior, double floor = 1e-6,
                std::optional<double> scale = std::nullopt);

enum class Shape { PowerLaw, Log, Bounded };
const char* to_string(Shape shape);

enum class Side { Left, Right };
const char* to_string(Side side);

// Fit of phi'(t0 +/- tau) = A tau^alpha + B on one side.
struct ExponentFit {
  Side side = Side::Right;
  Shape shape = Shape::Bounded;
  double alpha = 0.0;
  double amplitude = 0.0;  // A
  double plateau = 0.0;    // B
  double plateau_estimate = 0.0;  // median of phi' at the three farthest samples
  int sign = 0;            // sign of the divergent part; 0 when bounded
  double r2 = 0.0;
  double log_amplitude = 0.0;  // c of c log(1/tau) + b
  double log_r2 = 0.0;
  std::size_t samples = 0;
};

enum class Template { G0, G1, G2, G0PlusG2, Log, Bounded, Unclassified };
const char* to_string(Template t);

struct ProfileSample {
  double t = 0.0;
  double phi = 0.0;
  double dphi = 0.0;
  bool refined = false;  // part of a geometric refinement toward a critical value
};

struct CriticalLevel {
  double t = 0.0;
  std::vector<CriticalZero> zeros;
  std::optional<ExponentFit> left, right;
  Template match = Template::Unclassified;
};

struct LevelProfile {
  std::vector<ProfileSample> samples;  // sorted by t; critical values skipped
  std::vector<CriticalLevel> critical;
  int dims = 2;
};

struct ProfileOptions {
  int refine_levels = 8;         // J: samples at t* +/- 2^-j width, j = 0..J
  std::optional<double> width;   // default: 0.25 x range, capped at 0.45 x the gap to neighbouring critical values
  bool fit = true;
  ScanOptions scan;
};

// phi(t) = vol(T = t) and phi'(t) over [t_min, t_max] on `chart`.
LevelProfile level_profile(const FieldFunction& T, const Domain& domain, const GridChart& chart, double t_min,
                           double t_max, int t_resolution, const ProfileOptions& options = {});

// Requires >= 5 samples strictly on the requested side of t0 (InsufficientSamples).
ExponentFit fit_exponent(const LevelProfile& profile, double t0, Side side);
ExponentFit fit_exponent(const std::vector<double>& offsets, const std::vector<double>& dphi, Side side);

// Combine the two one-sided fits of a critical level.
Template classify(const std::optional<ExponentFit>& left, const std::optional<ExponentFit>& right);

// c log(1/t) + b least squares.
struct LogFit {
  double c = 0.0;
  double b = 0.0;
  double r2 = 0.0;
};
LogFit fit_log(const std::vector<double>& t, const std::vector<double>& values);

// (max - min) / max |value|
double relative_variation(const std::vector<double>& values);

enum class LevelIntegrand { Volume, MeanCurvature };  // h = 1 or h = tilde-Laplacian T / |dT|^2

// Integral of h over {T = t} inside the Morse chart {|x_-| < eps}, for
// T = |x_+|^2 - |x_-|^2 with the constant metric g.
double model_level_integral(int n_plus, int n_minus, const MatX& g, LevelIntegrand integrand, double t, double eps);

}  // namespace nodalab
