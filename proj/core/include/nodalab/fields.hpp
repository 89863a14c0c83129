#pragma once

#include "nodalab/geometry.hpp"
#include "nodalab/jet.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace nodalab {

// Finite family of analytic functions e_0..e_{N-1}. Points are ambient
// coordinates (z = 0 on planar domains); jets are ambient as well.
class Basis {
 public:
  virtual ~Basis() = default;
  virtual std::size_t size() const = 0;
  virtual void values(const Vec3& p, double* out) const = 0;
  virtual void jets(const Vec3& p, Jet2* out) const = 0;
  virtual std::string describe() const = 0;
};

// Sum of bases, concatenated in order.
std::shared_ptr<const Basis> make_composite_basis(std::vector<std::shared_ptr<const Basis>> parts);
// sqrt(w_j) cos(omega_j . x), sqrt(w_j) sin(omega_j . x) for every angular frequency omega_j.
std::shared_ptr<const Basis> make_trig_basis(std::vector<Vec3> omegas, std::vector<double> weights);
std::shared_ptr<const Basis> make_constant_basis(double value);

enum class ModelKind {
  ArithmeticWave,
  BerryWave,
  BargmannFock,
  Kostlan,
  SpectralSum,
  LinearField,
  SphericalHarmonic,
  AtomDemo
};

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);
std::string valid_model_names();

struct ModelParams {
  int n = 1;                      // ArithmeticWave: |k|^2 = n
  double k = 20.0;                // BerryWave wavenumber (radians per unit length)
  int directions = 16;            // BerryWave truncation
  int truncation = 10;            // BargmannFock total degree
  double length = 0.35;           // BargmannFock correlation length
  int degree = 2;                 // Kostlan degree
  int l = 2;                      // SphericalHarmonic degree
  std::vector<Vec3> frequencies;  // SpectralSum / AtomDemo: integer lattice vectors on the torus
  std::vector<double> weights;    // spectral weights, same length as frequencies
  double sigma0 = 3.0;            // AtomDemo constant weight, in units of the fluctuation scale
};

// Finite-rank Gaussian model K(p,q) = sum_n h_n(p) h_n(q) where {h_n} is the
// Cameron-Martin orthonormal basis.
class CovarianceModel {
 public:
  std::string name;
  ModelKind kind = ModelKind::ArithmeticWave;
  ModelParams params;
  DomainKind domain_kind = DomainKind::FlatTorus;
  int dims = 2;
  std::shared_ptr<const Basis> basis;
  bool stationary = false;     // translation invariant on the flat torus
  bool isotropic_sphere = false;  // rotation invariant on Sphere2
  double variance = 1.0;       // K(p,p) when constant
  double ass1_min_eigenvalue = 0.0;
  std::function<double(const Vec3&, const Vec3&)> closed_kernel;  // independent kernel formula, may be empty
  std::vector<Vec3> omegas;    // trig models: angular frequencies (one per +/- pair)
  std::vector<double> omega_weights;
  double constant_weight = 0.0;  // AtomDemo: variance of the constant term

  std::size_t rank() const { return basis->size(); }
  bool on_sphere() const { return domain_kind == DomainKind::Sphere2; }
  VecX basis_values(const Vec3& p) const;
  // Jets of the basis functions: intrinsic (projected) on Sphere2.
  std::vector<Jet2> basis_jets(const Vec3& p) const;
  double kernel(const Vec3& p, const Vec3& q) const;  // rank-sum
};

CovarianceModel build_model(ModelKind kind, const ModelParams& params, const Domain& domain);

// Ambient jet to intrinsic jet on the unit sphere: tangential projection of the
// gradient and the Levi-Civita correction of the Hessian.
Jet2 sphere_intrinsic_jet(const Jet2& ambient, const Vec3& p);

// Closed-form deterministic function with exact jets.
struct ClosedForm {
  std::string name;
  std::function<double(const Vec3&)> value;
  std::function<Jet2(const Vec3&)> jet;
};

class FieldFunction {
 public:
  FieldFunction() = default;
  static FieldFunction from_basis(std::shared_ptr<const Basis> basis, VecX coefficients, bool sphere);
  static FieldFunction closed_form(ClosedForm form, bool sphere);
  static FieldFunction constant(double c, bool sphere);

  double value(const Vec3& p) const;
  Jet2 ambient_jet(const Vec3& p) const;
  // Intrinsic jet (equal to the ambient one on flat domains).
  Jet2 jet(const Vec3& p) const;
  void values(const std::vector<Vec3>& points, std::vector<double>& out) const;

  // f + t h
  FieldFunction plus(const FieldFunction& h, double t) const;
  FieldFunction scaled(double a) const;
  // Same ambient formula read as a function on the unit sphere.
  FieldFunction restricted_to_sphere() const;

  bool on_sphere() const { return sphere_; }
  bool empty() const { return terms_.empty() && closed_.empty() && constant_ == 0.0; }
  // Coefficients of the first basis term (the Cameron-Martin coordinates of a
  // sampled field).
  const VecX& coefficients() const;
  std::shared_ptr<const Basis> basis() const;
  bool is_pure_basis() const { return closed_.empty() && constant_ == 0.0 && terms_.size() == 1; }
  std::string describe() const;

 private:
  struct Term {
    std::shared_ptr<const Basis> basis;
    VecX coefficients;
  };
  struct Closed {
    std::shared_ptr<const ClosedForm> form;
    double weight = 1.0;
  };
  std::vector<Term> terms_;
  std::vector<Closed> closed_;
  double constant_ = 0.0;
  bool sphere_ = false;
};

Jet2 evaluate_jet2(const FieldFunction& f, const Vec3& p);

FieldFunction sample_field(const CovarianceModel& model, std::uint64_t seed);

// Mixed derivative of K: rows index the order-i derivative multi-index at p
// (3^i entries, row-major for the Hessian), columns the order-j one at q.
MatX covariance_jet(const CovarianceModel& model, const Vec3& p, const Vec3& q, int order_p, int order_q);

struct CameronMartinElement {
  VecX coefficients;
};

FieldFunction cm_field(const CovarianceModel& model, const CameronMartinElement& h);
CameronMartinElement cm_element(const CovarianceModel& model, const FieldFunction& h);
double cm_inner(const CovarianceModel& model, const CameronMartinElement& a, const CameronMartinElement& b);
double cm_inner(const CovarianceModel& model, const FieldFunction& a, const FieldFunction& b);
// K(p, .) as an element of the Cameron-Martin space.
CameronMartinElement kernel_section(const CovarianceModel& model, const Vec3& p);

// Feature rows of the jet at p in an orthonormal frame: value, m gradient
// components, m(m+1)/2 Hessian components (upper triangle, row-major).
// Row r of the result is the vector (d_r h_n(p))_n, so that the covariance of
// the jet is F F^T.
MatX jet_features(const CovarianceModel& model, const Vec3& p, int max_order);
// Frame used by jet_features: standard axes on flat domains, tangent_frame on
// the sphere.
std::vector<Vec3> jet_frame(const CovarianceModel& model, const Vec3& p);

}  // namespace nodalab
