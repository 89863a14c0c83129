#include "nodalab/fields.hpp"

#include "nodalab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nodalab {

namespace {

constexpr const char* kModule = "fields";

class TrigBasis final : public Basis {
 public:
  TrigBasis(std::vector<Vec3> omegas, std::vector<double> weights) : omegas_(std::move(omegas)) {
    amps_.reserve(weights.size());
    for (double w : weights) amps_.push_back(std::sqrt(w));
  }
  std::size_t size() const override { return 2 * omegas_.size(); }
  void values(const Vec3& p, double* out) const override {
    for (std::size_t j = 0; j < omegas_.size(); ++j) {
      const double phase = omegas_[j].dot(p);
      out[2 * j] = amps_[j] * std::cos(phase);
      out[2 * j + 1] = amps_[j] * std::sin(phase);
    }
  }
  void jets(const Vec3& p, Jet2* out) const override {
    for (std::size_t j = 0; j < omegas_.size(); ++j) {
      const Vec3& w = omegas_[j];
      const double phase = w.dot(p);
      const double c = amps_[j] * std::cos(phase), s = amps_[j] * std::sin(phase);
      const Mat3 ww = w * w.transpose();
      Jet2& jc = out[2 * j];
      jc.value = c;
      jc.grad = -s * w;
      jc.hess = -c * ww;
      Jet2& js = out[2 * j + 1];
      js.value = s;
      js.grad = c * w;
      js.hess = -s * ww;
    }
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "trig(" << omegas_.size() << " frequencies)";
    return os.str();
  }

 private:
  std::vector<Vec3> omegas_;
  std::vector<double> amps_;
};

class ConstantBasis final : public Basis {
 public:
  explicit ConstantBasis(double c) : c_(c) {}
  std::size_t size() const override { return 1; }
  void values(const Vec3&, double* out) const override { out[0] = c_; }
  void jets(const Vec3&, Jet2* out) const override { out[0] = Jet2::constant(c_); }
  std::string describe() const override { return "constant"; }

 private:
  double c_;
};

class CompositeBasis final : public Basis {
 public:
  explicit CompositeBasis(std::vector<std::shared_ptr<const Basis>> parts) : parts_(std::move(parts)) {
    for (const auto& b : parts_) size_ += b->size();
  }
  std::size_t size() const override { return size_; }
  void values(const Vec3& p, double* out) const override {
    for (const auto& b : parts_) {
      b->values(p, out);
      out += b->size();
    }
  }
  void jets(const Vec3& p, Jet2* out) const override {
    for (const auto& b : parts_) {
      b->jets(p, out);
      out += b->size();
    }
  }
  std::string describe() const override {
    std::string s = "composite[";
    for (std::size_t i = 0; i < parts_.size(); ++i) s += (i ? "," : "") + parts_[i]->describe();
    return s + "]";
  }

 private:
  std::vector<std::shared_ptr<const Basis>> parts_;
  std::size_t size_ = 0;
};

// c_alpha * prefactor(x) * x^alpha for a list of multi-indices.
class MonomialBasis final : public Basis {
 public:
  MonomialBasis(std::vector<std::array<int, 3>> exps, std::vector<double> coeffs, Vec3 center, double length,
                bool gaussian, std::string label)
      : exps_(std::move(exps)), coeffs_(std::move(coeffs)), center_(center), inv_length_(1.0 / length),
        gaussian_(gaussian), label_(std::move(label)) {
    for (const auto& e : exps_) max_deg_ = std::max({max_deg_, e[0], e[1], e[2]});
  }
  std::size_t size() const override { return exps_.size(); }
  void values(const Vec3& p, double* out) const override {
    const Vec3 u = (p - center_) * inv_length_;
    std::vector<double> pw[3];
    for (int a = 0; a < 3; ++a) {
      pw[a].assign(max_deg_ + 1, 1.0);
      for (int d = 1; d <= max_deg_; ++d) pw[a][d] = pw[a][d - 1] * u[a];
    }
    const double g = gaussian_ ? std::exp(-0.5 * u.squaredNorm()) : 1.0;
    for (std::size_t n = 0; n < exps_.size(); ++n)
      out[n] = coeffs_[n] * g * pw[0][exps_[n][0]] * pw[1][exps_[n][1]] * pw[2][exps_[n][2]];
  }
  void jets(const Vec3& p, Jet2* out) const override {
    Jet2 u[3];
    for (int a = 0; a < 3; ++a) {
      u[a] = Jet2::coordinate(a, p[a]) - center_[a];
      u[a] *= inv_length_;
    }
    std::vector<Jet2> pw[3];
    for (int a = 0; a < 3; ++a) {
      pw[a].assign(max_deg_ + 1, Jet2::constant(1.0));
      for (int d = 1; d <= max_deg_; ++d) pw[a][d] = pw[a][d - 1] * u[a];
    }
    Jet2 g = Jet2::constant(1.0);
    if (gaussian_) g = exp(-0.5 * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]));
    for (std::size_t n = 0; n < exps_.size(); ++n)
      out[n] = coeffs_[n] * (g * pw[0][exps_[n][0]] * pw[1][exps_[n][1]] * pw[2][exps_[n][2]]);
  }
  std::string describe() const override { return label_; }

 private:
  std::vector<std::array<int, 3>> exps_;
  std::vector<double> coeffs_;
  Vec3 center_;
  double inv_length_;
  bool gaussian_;
  int max_deg_ = 0;
  std::string label_;
};

// Real spherical harmonics of degree l restricted from ambient polynomials
// Q_l^m(z) Re/Im (x + i y)^m, normalized so that sum_n h_n(x) h_n(y) = P_l(x.y).
template <class T>
void spherical_harmonics(int l, const std::vector<double>& norms, const T& x, const T& y, const T& z, T* out) {
  T cm = 0.0 * x + 1.0, sm = 0.0 * x;  // Re/Im (x+iy)^m
  double dfact = 1.0;                      // (2m-1)!!
  for (int m = 0; m <= l; ++m) {
    if (m > 0) {
      const T c_next = cm * x - sm * y;
      const T s_next = cm * y + sm * x;
      cm = c_next;
      sm = s_next;
      dfact *= (2.0 * m - 1.0);
    }
    // Q_k^m for k = m..l
    T q_prev = 0.0 * x + dfact;  // Q_m^m
    T q = q_prev;
    if (l > m) {
      T q_cur = (2.0 * m + 1.0) * (z * q_prev);  // Q_{m+1}^m
      for (int k = m + 2; k <= l; ++k) {
        T q_next = ((2.0 * k - 1.0) * (z * q_cur) - (k + m - 1.0) * q_prev) * (1.0 / (k - m));
        q_prev = q_cur;
        q_cur = q_next;
      }
      q = q_cur;
    }
    if (m == 0) {
      out[0] = norms[0] * q;
    } else {
      out[2 * m - 1] = norms[m] * (q * cm);
      out[2 * m] = norms[m] * (q * sm);
    }
  }
}

class SphericalHarmonicBasis final : public Basis {
 public:
  explicit SphericalHarmonicBasis(int l) : l_(l) {
    norms_.resize(l + 1);
    norms_[0] = 1.0;
    for (int m = 1; m <= l; ++m) norms_[m] = std::sqrt(2.0 * std::exp(std::lgamma(l - m + 1.0) - std::lgamma(l + m + 1.0)));
  }
  std::size_t size() const override { return 2 * l_ + 1; }
  void values(const Vec3& p, double* out) const override {
    spherical_harmonics<double>(l_, norms_, p[0], p[1], p[2], out);
  }
  void jets(const Vec3& p, Jet2* out) const override {
    spherical_harmonics<Jet2>(l_, norms_, Jet2::coordinate(0, p[0]), Jet2::coordinate(1, p[1]),
                              Jet2::coordinate(2, p[2]), out);
  }
  std::string describe() const override { return "spherical_harmonic(l=" + std::to_string(l_) + ")"; }

 private:
  int l_;
  std::vector<double> norms_;
};

double factorial(int n) { return std::exp(std::lgamma(n + 1.0)); }

std::vector<std::array<int, 3>> multi_indices(int dims, int min_degree, int max_degree) {
  std::vector<std::array<int, 3>> out;
  for (int d = min_degree; d <= max_degree; ++d) {
    for (int a = d; a >= 0; --a) {
      if (dims == 2) {
        out.push_back({a, d - a, 0});
        continue;
      }
      for (int b = d - a; b >= 0; --b) out.push_back({a, b, d - a - b});
    }
  }
  return out;
}

Vec3 random_point(const Domain& d, Rng& rng) {
  if (d.kind == DomainKind::Sphere2) {
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    return v.normalized();
  }
  Vec3 p = Vec3::Zero();
  for (int a = 0; a < d.dims; ++a) p[a] = d.origin[a] + d.extents[a] * rng.uniform();
  return p;
}

Vec3 random_tangent(const Domain& d, const Vec3& p, Rng& rng) {
  Vec3 v(rng.normal(), rng.normal(), rng.normal());
  if (d.kind == DomainKind::Sphere2) v -= v.dot(p) * p;
  else if (d.dims == 2) v[2] = 0.0;
  return v.normalized();
}

void require_domain(bool ok, ModelKind kind, const Domain& domain) {
  if (!ok)
    fail(ErrorKind::DomainMismatch, kModule, "build_model",
         std::string(to_string(kind)) + " is not defined on " + to_string(domain.kind));
}

// Lattice vectors k in Z^m with |k|^2 = n, one per +/- pair.
std::vector<Vec3> lattice_shell(int dims, int n) {
  std::vector<Vec3> out;
  const int r = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))) + 1;
  for (int a = -r; a <= r; ++a)
    for (int b = -r; b <= r; ++b)
      for (int c = (dims == 3 ? -r : 0); c <= (dims == 3 ? r : 0); ++c) {
        if (a * a + b * b + c * c != n) continue;
        // representative: first nonzero coordinate positive
        const int first = a != 0 ? a : (b != 0 ? b : c);
        if (first <= 0) continue;
        out.emplace_back(a, b, c);
      }
  return out;
}

}  // namespace

std::shared_ptr<const Basis> make_composite_basis(std::vector<std::shared_ptr<const Basis>> parts) {
  return std::make_shared<CompositeBasis>(std::move(parts));
}
std::shared_ptr<const Basis> make_trig_basis(std::vector<Vec3> omegas, std::vector<double> weights) {
  return std::make_shared<TrigBasis>(std::move(omegas), std::move(weights));
}
std::shared_ptr<const Basis> make_constant_basis(double value) { return std::make_shared<ConstantBasis>(value); }

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ArithmeticWave: return "ArithmeticWave";
    case ModelKind::BerryWave: return "BerryWave";
    case ModelKind::BargmannFock: return "BargmannFock";
    case ModelKind::Kostlan: return "Kostlan";
    case ModelKind::SpectralSum: return "SpectralSum";
    case ModelKind::LinearField: return "LinearField";
    case ModelKind::SphericalHarmonic: return "SphericalHarmonic";
    case ModelKind::AtomDemo: return "AtomDemo";
  }
  return "ArithmeticWave";
}

std::string valid_model_names() {
  return "ArithmeticWave, BerryWave, BargmannFock, Kostlan, SpectralSum, LinearField, SphericalHarmonic, AtomDemo";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (ModelKind k : {ModelKind::ArithmeticWave, ModelKind::BerryWave, ModelKind::BargmannFock, ModelKind::Kostlan,
                      ModelKind::SpectralSum, ModelKind::LinearField, ModelKind::SphericalHarmonic,
                      ModelKind::AtomDemo})
    if (name == to_string(k)) return k;
  fail(ErrorKind::Config, kModule, "build_model", "unknown model '" + name + "'; valid names: " + valid_model_names());
}

Jet2 sphere_intrinsic_jet(const Jet2& ambient, const Vec3& p) {
  const Vec3 n = p.normalized();
  const Mat3 P = Mat3::Identity() - n * n.transpose();
  Jet2 j;
  j.value = ambient.value;
  j.grad = P * ambient.grad;
  j.hess = P * ambient.hess * P - (n.dot(ambient.grad)) * P;
  return j;
}

VecX CovarianceModel::basis_values(const Vec3& p) const {
  VecX v(basis->size());
  basis->values(p, v.data());
  return v;
}

std::vector<Jet2> CovarianceModel::basis_jets(const Vec3& p) const {
  std::vector<Jet2> j(basis->size());
  basis->jets(p, j.data());
  if (on_sphere())
    for (auto& x : j) x = sphere_intrinsic_jet(x, p);
  return j;
}

double CovarianceModel::kernel(const Vec3& p, const Vec3& q) const { return basis_values(p).dot(basis_values(q)); }

CovarianceModel build_model(ModelKind kind, const ModelParams& params, const Domain& domain) {
  CovarianceModel model;
  model.kind = kind;
  model.params = params;
  model.domain_kind = domain.kind;
  model.dims = domain.dims;
  model.name = to_string(kind);
  const bool flat = domain.kind != DomainKind::Sphere2;

  auto trig_setup = [&](std::vector<Vec3> omegas, std::vector<double> weights) {
    model.omegas = omegas;
    model.omega_weights = weights;
    model.basis = make_trig_basis(std::move(omegas), std::move(weights));
    const auto om = model.omegas;
    const auto ow = model.omega_weights;
    model.closed_kernel = [om, ow](const Vec3& p, const Vec3& q) {
      double s = 0.0;
      for (std::size_t j = 0; j < om.size(); ++j) s += ow[j] * std::cos(om[j].dot(p - q));
      return s;
    };
    model.variance = std::accumulate(ow.begin(), ow.end(), 0.0);
  };

  auto spectral_from_params = [&](const char* label) {
    if (params.frequencies.empty() || params.frequencies.size() != params.weights.size())
      fail(ErrorKind::InvalidArgument, kModule, "build_model",
           std::string(label) + " needs matching, nonempty frequencies and weights");
    std::vector<Vec3> omegas;
    std::vector<double> weights;
    for (std::size_t j = 0; j < params.frequencies.size(); ++j) {
      const Vec3& k = params.frequencies[j];
      if (!(params.weights[j] > 0.0))
        fail(ErrorKind::InvalidArgument, kModule, "build_model", "spectral weights must be positive");
      if (k.norm() == 0.0) fail(ErrorKind::InvalidArgument, kModule, "build_model", "zero frequency is not allowed");
      Vec3 w = Vec3::Zero();
      for (int a = 0; a < domain.dims; ++a) {
        if (domain.kind == DomainKind::FlatTorus && std::abs(k[a] - std::round(k[a])) > 1e-12)
          fail(ErrorKind::InvalidArgument, kModule, "build_model", "torus frequencies must be integer lattice vectors");
        w[a] = kTwoPi * k[a] / domain.extents[a];
      }
      omegas.push_back(w);
      weights.push_back(params.weights[j]);
    }
    trig_setup(std::move(omegas), std::move(weights));
  };

  switch (kind) {
    case ModelKind::ArithmeticWave: {
      require_domain(flat, kind, domain);
      if (params.n < 1) fail(ErrorKind::InvalidArgument, kModule, "build_model", "ArithmeticWave needs n >= 1");
      const auto shell = lattice_shell(domain.dims, params.n);
      if (shell.empty())
        fail(ErrorKind::InvalidArgument, kModule, "build_model",
             "no lattice points with |k|^2 = " + std::to_string(params.n) + " in dimension " +
                 std::to_string(domain.dims));
      std::vector<Vec3> omegas;
      for (const auto& k : shell) {
        Vec3 w = Vec3::Zero();
        for (int a = 0; a < domain.dims; ++a) w[a] = kTwoPi * k[a] / domain.extents[a];
        omegas.push_back(w);
      }
      trig_setup(omegas, std::vector<double>(omegas.size(), 1.0 / omegas.size()));
      model.stationary = domain.kind == DomainKind::FlatTorus;
      model.name += "(" + std::to_string(params.n) + ")";
      break;
    }
    case ModelKind::BerryWave: {
      require_domain(domain.kind == DomainKind::Rectangle, kind, domain);
      if (params.directions < 2 || !(params.k > 0.0))
        fail(ErrorKind::InvalidArgument, kModule, "build_model", "BerryWave needs k > 0 and at least 2 directions");
      std::vector<Vec3> omegas;
      const int J = params.directions;
      for (int j = 0; j < J; ++j) {
        if (domain.dims == 2) {
          const double th = kPi * (j + 0.5) / J;
          omegas.emplace_back(params.k * std::cos(th), params.k * std::sin(th), 0.0);
        } else {
          // Fibonacci points on the upper hemisphere
          const double z = 1.0 - (j + 0.5) / J;
          const double r = std::sqrt(1.0 - z * z);
          const double ph = j * kPi * (3.0 - std::sqrt(5.0));
          omegas.emplace_back(params.k * r * std::cos(ph), params.k * r * std::sin(ph), params.k * z);
        }
      }
      trig_setup(omegas, std::vector<double>(J, 1.0 / J));
      model.name += "(" + std::to_string(params.k) + ")";
      break;
    }
    case ModelKind::BargmannFock: {
      require_domain(domain.kind == DomainKind::Rectangle, kind, domain);
      if (params.truncation < 1 || !(params.length > 0.0))
        fail(ErrorKind::InvalidArgument, kModule, "build_model", "BargmannFock needs truncation >= 1 and length > 0");
      auto exps = multi_indices(domain.dims, 0, params.truncation);
      std::vector<double> coeffs;
      for (const auto& e : exps) coeffs.push_back(1.0 / std::sqrt(factorial(e[0]) * factorial(e[1]) * factorial(e[2])));
      const Vec3 center = domain.origin + 0.5 * domain.extents;
      Vec3 c = center;
      if (domain.dims == 2) c[2] = 0.0;
      model.basis = std::make_shared<MonomialBasis>(exps, coeffs, c, params.length, true,
                                                    "bargmann_fock(" + std::to_string(params.truncation) + ")");
      // Degree-T truncation of exp(x.y): exp(-(|x|^2 + |y|^2) / 2) sum_{k <= T} (x.y)^k / k!.
      const double len = params.length;
      const int trunc = params.truncation;
      model.closed_kernel = [len, trunc, c](const Vec3& p, const Vec3& q) {
        const Vec3 x = (p - c) / len, y = (q - c) / len;
        const double xy = x.dot(y);
        double term = 1.0, sum = 1.0;
        for (int k = 1; k <= trunc; ++k) {
          term *= xy / k;
          sum += term;
        }
        return std::exp(-0.5 * (x.squaredNorm() + y.squaredNorm())) * sum;
      };
      model.variance = 0.0;  // not constant after truncation
      break;
    }
    case ModelKind::Kostlan:
    case ModelKind::LinearField: {
      require_domain(!flat, kind, domain);
      const int d = kind == ModelKind::LinearField ? 1 : params.degree;
      if (d < 1) fail(ErrorKind::InvalidArgument, kModule, "build_model", "Kostlan degree must be >= 1");
      auto exps = multi_indices(3, d, d);
      std::vector<double> coeffs;
      for (const auto& e : exps)
        coeffs.push_back(std::sqrt(factorial(d) / (factorial(e[0]) * factorial(e[1]) * factorial(e[2]))));
      model.basis = std::make_shared<MonomialBasis>(exps, coeffs, Vec3::Zero(), 1.0, false,
                                                    "kostlan(" + std::to_string(d) + ")");
      model.closed_kernel = [d](const Vec3& p, const Vec3& q) { return std::pow(p.dot(q), d); };
      model.isotropic_sphere = true;
      model.variance = 1.0;
      if (kind == ModelKind::Kostlan) model.name += "(" + std::to_string(d) + ")";
      break;
    }
    case ModelKind::SphericalHarmonic: {
      require_domain(!flat, kind, domain);
      if (params.l < 1) fail(ErrorKind::InvalidArgument, kModule, "build_model", "SphericalHarmonic needs l >= 1");
      model.basis = std::make_shared<SphericalHarmonicBasis>(params.l);
      const int l = params.l;
      model.closed_kernel = [l](const Vec3& p, const Vec3& q) {
        return std::legendre(static_cast<unsigned>(l), std::clamp(p.dot(q), -1.0, 1.0));
      };
      model.isotropic_sphere = true;
      model.variance = 1.0;
      model.name += "(" + std::to_string(l) + ")";
      break;
    }
    case ModelKind::SpectralSum: {
      require_domain(flat, kind, domain);
      spectral_from_params("SpectralSum");
      model.stationary = domain.kind == DomainKind::FlatTorus;
      break;
    }
    case ModelKind::AtomDemo: {
      require_domain(domain.kind == DomainKind::FlatTorus, kind, domain);
      ModelParams p = params;
      if (p.frequencies.empty()) {
        p.frequencies = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0), Vec3(1, -1, 0)};
        if (domain.dims == 3) p.frequencies.push_back(Vec3(0, 0, 1));
        p.weights.assign(p.frequencies.size(), 1.0 / p.frequencies.size());
      }
      model.params = p;
      std::vector<Vec3> omegas;
      std::vector<double> weights;
      for (std::size_t j = 0; j < p.frequencies.size(); ++j) {
        Vec3 w = Vec3::Zero();
        for (int a = 0; a < domain.dims; ++a) w[a] = kTwoPi * p.frequencies[j][a] / domain.extents[a];
        omegas.push_back(w);
        weights.push_back(p.weights.at(j));
      }
      trig_setup(omegas, weights);
      const double fluct = std::sqrt(model.variance);
      const double sigma0 = p.sigma0 * fluct;
      model.constant_weight = sigma0 * sigma0;
      model.basis = make_composite_basis({model.basis, make_constant_basis(sigma0)});
      const auto trig_kernel = model.closed_kernel;
      const double c2 = model.constant_weight;
      model.closed_kernel = [trig_kernel, c2](const Vec3& a, const Vec3& b) { return trig_kernel(a, b) + c2; };
      model.variance += c2;
      model.stationary = true;
      break;
    }
  }

  // Assumption check: (X(p), d_pX(v)) non-degenerate on a sweep of (p, v).
  Rng rng(0x5EEDA551ULL, 1);
  double min_eig = std::numeric_limits<double>::infinity();
  const std::size_t N = model.basis->size();
  std::vector<Jet2> jets(N);
  for (int s = 0; s < 100; ++s) {
    const Vec3 p = random_point(domain, rng);
    const Vec3 v = random_tangent(domain, p, rng);
    jets = model.basis_jets(p);
    Eigen::Matrix2d c = Eigen::Matrix2d::Zero();
    for (std::size_t n = 0; n < N; ++n) {
      const Eigen::Vector2d a(jets[n].value, jets[n].grad.dot(v));
      c += a * a.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(c);
    const double lo = es.eigenvalues()[0];
    const double scale = std::max(c.trace(), 1e-300);
    min_eig = std::min(min_eig, lo / scale);
  }
  model.ass1_min_eigenvalue = min_eig;
  if (!(min_eig > 1e-12))
    fail(ErrorKind::InvalidArgument, kModule, "build_model",
         model.name + " fails the non-degeneracy check of (X(p), d_pX(v)) (relative min eigenvalue " +
             std::to_string(min_eig) + ")");
  return model;
}

// ---------------------------------------------------------------------------
// FieldFunction

FieldFunction FieldFunction::from_basis(std::shared_ptr<const Basis> basis, VecX coefficients, bool sphere) {
  if (static_cast<std::size_t>(coefficients.size()) != basis->size())
    fail(ErrorKind::InvalidArgument, kModule, "from_basis", "coefficient count does not match the basis size");
  FieldFunction f;
  f.terms_.push_back({std::move(basis), std::move(coefficients)});
  f.sphere_ = sphere;
  return f;
}

FieldFunction FieldFunction::closed_form(ClosedForm form, bool sphere) {
  FieldFunction f;
  f.closed_.push_back({std::make_shared<const ClosedForm>(std::move(form)), 1.0});
  f.sphere_ = sphere;
  return f;
}

FieldFunction FieldFunction::constant(double c, bool sphere) {
  FieldFunction f;
  f.constant_ = c;
  f.sphere_ = sphere;
  return f;
}

double FieldFunction::value(const Vec3& p) const {
  double v = constant_;
  for (const auto& t : terms_) {
    const std::size_t n = t.basis->size();
    double buf[64];
    std::vector<double> big;
    double* out = buf;
    if (n > 64) {
      big.resize(n);
      out = big.data();
    }
    t.basis->values(p, out);
    for (std::size_t i = 0; i < n; ++i) v += t.coefficients[static_cast<Eigen::Index>(i)] * out[i];
  }
  for (const auto& c : closed_) v += c.weight * c.form->value(p);
  return v;
}

Jet2 FieldFunction::ambient_jet(const Vec3& p) const {
  Jet2 j = Jet2::constant(constant_);
  for (const auto& t : terms_) {
    std::vector<Jet2> buf(t.basis->size());
    t.basis->jets(p, buf.data());
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const double c = t.coefficients[static_cast<Eigen::Index>(i)];
      j.value += c * buf[i].value;
      j.grad += c * buf[i].grad;
      j.hess += c * buf[i].hess;
    }
  }
  for (const auto& c : closed_) {
    const Jet2 x = c.form->jet(p);
    j.value += c.weight * x.value;
    j.grad += c.weight * x.grad;
    j.hess += c.weight * x.hess;
  }
  return j;
}

Jet2 FieldFunction::jet(const Vec3& p) const {
  const Jet2 a = ambient_jet(p);
  if (sphere_) return sphere_intrinsic_jet(a, p);
  return a;
}

void FieldFunction::values(const std::vector<Vec3>& points, std::vector<double>& out) const {
  out.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = value(points[i]);
}

FieldFunction FieldFunction::restricted_to_sphere() const {
  FieldFunction r = *this;
  r.sphere_ = true;
  return r;
}

FieldFunction FieldFunction::plus(const FieldFunction& h, double t) const {
  FieldFunction r = *this;
  r.sphere_ = sphere_ || h.sphere_;
  r.constant_ += t * h.constant_;
  for (const auto& ht : h.terms_) {
    bool merged = false;
    for (auto& rt : r.terms_) {
      if (rt.basis == ht.basis) {
        rt.coefficients += t * ht.coefficients;
        merged = true;
        break;
      }
    }
    if (!merged) r.terms_.push_back({ht.basis, t * ht.coefficients});
  }
  for (const auto& hc : h.closed_) {
    bool merged = false;
    for (auto& rc : r.closed_) {
      if (rc.form == hc.form) {
        rc.weight += t * hc.weight;
        merged = true;
        break;
      }
    }
    if (!merged) r.closed_.push_back({hc.form, t * hc.weight});
  }
  return r;
}

FieldFunction FieldFunction::scaled(double a) const {
  FieldFunction r = *this;
  r.constant_ *= a;
  for (auto& t : r.terms_) t.coefficients *= a;
  for (auto& c : r.closed_) c.weight *= a;
  return r;
}

const VecX& FieldFunction::coefficients() const {
  if (terms_.empty()) fail(ErrorKind::InvalidArgument, kModule, "coefficients", "field has no basis term");
  return terms_.front().coefficients;
}

std::shared_ptr<const Basis> FieldFunction::basis() const {
  if (terms_.empty()) return nullptr;
  return terms_.front().basis;
}

std::string FieldFunction::describe() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& t : terms_) {
    os << (first ? "" : " + ") << t.basis->describe();
    first = false;
  }
  for (const auto& c : closed_) {
    os << (first ? "" : " + ") << c.weight << "*" << c.form->name;
    first = false;
  }
  if (constant_ != 0.0 || first) os << (first ? "" : " + ") << constant_;
  return os.str();
}

Jet2 evaluate_jet2(const FieldFunction& f, const Vec3& p) { return f.jet(p); }

FieldFunction sample_field(const CovarianceModel& model, std::uint64_t seed) {
  Rng rng(seed, 0);
  VecX c(static_cast<Eigen::Index>(model.rank()));
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = rng.normal();
  return FieldFunction::from_basis(model.basis, std::move(c), model.on_sphere());
}

namespace {

VecX derivative_entries(const Jet2& j, int order) {
  if (order == 0) {
    VecX v(1);
    v[0] = j.value;
    return v;
  }
  if (order == 1) return j.grad;
  VecX v(9);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) v[a * 3 + b] = j.hess(a, b);
  return v;
}

}  // namespace

MatX covariance_jet(const CovarianceModel& model, const Vec3& p, const Vec3& q, int order_p, int order_q) {
  if (order_p < 0 || order_q < 0 || order_p > 2 || order_q > 2)
    fail(ErrorKind::InvalidArgument, kModule, "covariance_jet", "derivative orders must be in [0, 2]");
  const auto jp = model.basis_jets(p);
  const auto jq = model.basis_jets(q);
  const int rp = order_p == 0 ? 1 : (order_p == 1 ? 3 : 9);
  const int rq = order_q == 0 ? 1 : (order_q == 1 ? 3 : 9);
  MatX out = MatX::Zero(rp, rq);
  for (std::size_t n = 0; n < jp.size(); ++n)
    out += derivative_entries(jp[n], order_p) * derivative_entries(jq[n], order_q).transpose();
  return out;
}

FieldFunction cm_field(const CovarianceModel& model, const CameronMartinElement& h) {
  if (static_cast<std::size_t>(h.coefficients.size()) != model.rank())
    fail(ErrorKind::InvalidArgument, kModule, "cm_field", "element outside the Cameron-Martin span of the model");
  return FieldFunction::from_basis(model.basis, h.coefficients, model.on_sphere());
}

CameronMartinElement cm_element(const CovarianceModel& model, const FieldFunction& h) {
  if (!h.is_pure_basis() || h.basis() != model.basis)
    fail(ErrorKind::InvalidArgument, "fields", "cm_inner", "element outside the Cameron-Martin span of the model");
  return {h.coefficients()};
}

double cm_inner(const CovarianceModel& model, const CameronMartinElement& a, const CameronMartinElement& b) {
  const auto n = static_cast<Eigen::Index>(model.rank());
  if (a.coefficients.size() != n || b.coefficients.size() != n)
    fail(ErrorKind::InvalidArgument, kModule, "cm_inner", "element outside the Cameron-Martin span of the model");
  return a.coefficients.dot(b.coefficients);
}

double cm_inner(const CovarianceModel& model, const FieldFunction& a, const FieldFunction& b) {
  return cm_inner(model, cm_element(model, a), cm_element(model, b));
}

CameronMartinElement kernel_section(const CovarianceModel& model, const Vec3& p) { return {model.basis_values(p)}; }

std::vector<Vec3> jet_frame(const CovarianceModel& model, const Vec3& p) {
  if (model.on_sphere()) {
    const auto [e1, e2] = tangent_frame(p);
    return {e1, e2};
  }
  std::vector<Vec3> f;
  for (int a = 0; a < model.dims; ++a) f.push_back(Vec3::Unit(a));
  return f;
}

MatX jet_features(const CovarianceModel& model, const Vec3& p, int max_order) {
  const int m = model.dims;
  const auto frame = jet_frame(model, p);
  const auto jets = model.basis_jets(p);
  const int rows = 1 + (max_order >= 1 ? m : 0) + (max_order >= 2 ? m * (m + 1) / 2 : 0);
  MatX F(rows, static_cast<Eigen::Index>(jets.size()));
  for (std::size_t n = 0; n < jets.size(); ++n) {
    const auto c = static_cast<Eigen::Index>(n);
    int r = 0;
    F(r++, c) = jets[n].value;
    if (max_order >= 1)
      for (int a = 0; a < m; ++a) F(r++, c) = jets[n].grad.dot(frame[a]);
    if (max_order >= 2)
      for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) F(r++, c) = frame[a].dot(jets[n].hess * frame[b]);
  }
  return F;
}

}  // namespace nodalab
