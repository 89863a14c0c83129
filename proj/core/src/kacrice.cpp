#include "nodalab/kacrice.hpp"

#include "nodalab/parallel.hpp"
#include "nodalab/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace nodalab {

namespace {

constexpr const char* kModule = "kacrice";

int hess_count(int m) { return m * (m + 1) / 2; }

// Coefficients of Laplacian - Hess(nu, nu) on the upper-triangle Hessian
// coordinates: diagonal 1 - nu_a^2, off-diagonal -2 nu_a nu_b.
void trace_coefficients(const double* nu, int m, double* ell) {
  int r = 0;
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) ell[r++] = a == b ? 1.0 - nu[a] * nu[a] : -2.0 * nu[a] * nu[b];
}

// G(i, k) = int_0^inf t^i (a t^2 + 2 b t + c)^(-k) dt for i <= 2k - 2.
struct QuadraticPowers {
  static constexpr int kI = 8, kK = 5;
  long double g[kI][kK]{};

  QuadraticPowers(long double a, long double b, long double c, int max_i, int max_k) {
    const long double D = a * c - b * b;
    const long double sd = std::sqrt(D);
    g[0][1] = std::atan2(sd, b) / sd;
    long double ck = c;  // c^k
    for (int k = 1; k + 1 <= max_k; ++k) {
      g[0][k + 1] = -b / (2.0L * k * D * ck) + (2.0L * k - 1.0L) * a / (2.0L * k * D) * g[0][k];
      ck *= c;
    }
    for (int k = 2; k <= max_k; ++k) {
      g[1][k] = std::pow(c, 1.0L - k) / (2.0L * a * (k - 1)) - (b / a) * g[0][k];
      for (int i = 2; i <= std::min(max_i, 2 * k - 2); ++i)
        g[i][k] = (g[i - 2][k - 1] - 2.0L * b * g[i - 1][k] - c * g[i - 2][k]) / a;
    }
  }
};

// Ratios of radial moments R(m-1+x, m-1+y) / R(m-1, m-1) for the law with
// density rho_p^{m-1} rho_q^{m-1} exp(-rho^T A rho / 2) on the quadrant.
struct RadialRatios {
  double pq = 0.0;     // E[rho_p rho_q]
  double p_q = 0.0;    // E[rho_p / rho_q]
  double q_p = 0.0;    // E[rho_q / rho_p]
  double inv = 0.0;    // E[1 / (rho_p rho_q)]
};

RadialRatios radial_ratios(int m, double a, double b, double c) {
  const QuadraticPowers G(a, b, c, m + 1, m + 1);
  const long double base = G.g[m - 1][m];
  RadialRatios r;
  r.pq = static_cast<double>(2.0L * m * G.g[m][m + 1] / base);
  r.p_q = static_cast<double>(G.g[m][m] / base);
  r.q_p = static_cast<double>(G.g[m - 2][m] / base);
  r.inv = static_cast<double>(G.g[m - 2][m - 1] / (2.0L * (m - 1) * base));
  return r;
}

// E|N(mu, var)|
double folded_mean(double mu, double var) {
  if (!(var > 0.0)) return std::abs(mu);
  const double s = std::sqrt(var);
  return s * std::sqrt(2.0 / kPi) * std::exp(-0.5 * mu * mu / var) + mu * std::erf(mu / (s * std::sqrt(2.0)));
}

// E|X Y| for a bivariate normal with means (mx, my), variances (vx, vy) and
// covariance cxy: exact in Y given X, Gauss-Legendre in X split at the kink.
double abs_product_mean(double mx, double my, double vx, double vy, double cxy) {
  if (!(vx > 0.0)) return std::abs(mx) * folded_mean(my, vy);
  const double sx = std::sqrt(vx);
  const double beta = cxy / vx;
  const double tau2 = std::max(0.0, vy - cxy * cxy / vx);
  const double z0 = -mx / sx;
  const Rule1D& base = gauss_legendre(24);
  auto piece = [&](double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    double s = 0.0;
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      const double z = mid + half * base.nodes[i];
      const double x = mx + sx * z;
      s += base.weights[i] * std::abs(x) * folded_mean(my + beta * sx * z, tau2) * std::exp(-0.5 * z * z);
    }
    return half * s / std::sqrt(kTwoPi);
  };
  constexpr double lim = 9.0;
  if (z0 <= -lim || z0 >= lim) return piece(-lim, lim);
  return piece(-lim, z0) + piece(z0, lim);
}

// Law of (G, H) = (gradients, Hessians) in the layout of the conditional law,
// split for the direction decomposition.
struct DirectionalLaw {
  int m = 2, h = 3;
  bool regular = false;
  MatX L;   // 2m x 2m factor of the gradient block
  MatX P;   // its inverse
  MatX B;   // 2h x 2m regression of Hessians on gradients
  MatX S;   // 2h x 2h residual
  std::vector<int> gi, hi;  // indices of gradients / Hessians in the law

  explicit DirectionalLaw(const TwoPointIntensity& in) : m(in.m), h(hess_count(in.m)) {
    for (int a = 0; a < m; ++a) gi.push_back(a);
    for (int a = 0; a < m; ++a) gi.push_back(m + h + a);
    for (int a = 0; a < h; ++a) hi.push_back(m + a);
    for (int a = 0; a < h; ++a) hi.push_back(2 * m + h + a);
    const MatX& C = in.conditional_law.covariance;
    MatX Cgg(2 * m, 2 * m), Chg(2 * h, 2 * m), Chh(2 * h, 2 * h);
    for (int r = 0; r < 2 * m; ++r)
      for (int c = 0; c < 2 * m; ++c) Cgg(r, c) = C(gi[r], gi[c]);
    for (int r = 0; r < 2 * h; ++r) {
      for (int c = 0; c < 2 * m; ++c) Chg(r, c) = C(hi[r], gi[c]);
      for (int c = 0; c < 2 * h; ++c) Chh(r, c) = C(hi[r], hi[c]);
    }
    Eigen::SelfAdjointEigenSolver<MatX> es(Cgg);
    const double top = es.eigenvalues().maxCoeff();
    regular = top > 0.0 && es.eigenvalues().minCoeff() > 1e-10 * top;
    if (!regular) return;
    L = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal();
    P = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    B = Chg * P;
    S = Chh - B * Chg.transpose();
  }
};

double frame_component(const std::vector<Vec3>& frame, const double* nu, int m, const Vec3& n) {
  Vec3 v = Vec3::Zero();
  for (int a = 0; a < m; ++a) v += nu[a] * frame[a];
  return n.dot(v);
}

struct Accumulator {
  double sum = 0.0, sum2 = 0.0;
  long n = 0;
  void add(double x) {
    sum += x;
    sum2 += x * x;
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double se() const {
    if (n < 2) return 0.0;
    const double mu = mean();
    return std::sqrt(std::max(0.0, sum2 / n - mu * mu) / (n - 1));
  }
};

// Direction-conditional E[|Dp| |Dq| / (rho_p rho_q)] by quadrature over the
// two radii. In whitened coordinates rho = M w (M^T A M = I) the Gaussian is
// isotropic and the quadrant becomes a wedge, so polar quadrature in w stays
// accurate however elongated A is.
double abs_direction_integral(int m, double a, double b, double c, double app, double apq, double aqp, double aqq,
                              double spp, double sqq, double spq) {
  Eigen::Matrix2d A;
  A << a, b, b, c;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A);
  const Eigen::Matrix2d M = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal();
  const Eigen::Matrix2d Minv = M.inverse();
  const Eigen::Vector2d e1 = Minv.col(0), e2 = Minv.col(1);
  const double psi1 = std::atan2(e1[1], e1[0]);
  double dpsi = std::atan2(e2[1], e2[0]) - psi1;
  if (dpsi > kPi) dpsi -= kTwoPi;
  if (dpsi < -kPi) dpsi += kTwoPi;
  const Rule1D& lag = gauss_laguerre(12, m - 2.0);
  const Rule1D psi = gauss_legendre(16, 0.0, 1.0);
  double total = 0.0;
  for (std::size_t k = 0; k < psi.nodes.size(); ++k) {
    const double ang = psi1 + dpsi * psi.nodes[k];
    const Eigen::Vector2d dir = M * Eigen::Vector2d(std::cos(ang), std::sin(ang));
    const double dp = std::max(dir[0], 0.0), dq = std::max(dir[1], 0.0);
    double inner = 0.0;
    for (std::size_t l = 0; l < lag.nodes.size(); ++l) {
      const double r = std::sqrt(2.0 * lag.nodes[l]);
      const double rp = r * dp, rq = r * dq;
      inner += lag.weights[l] * abs_product_mean(app * rp + apq * rq, aqp * rp + aqq * rq, spp, sqq, spq);
    }
    total += psi.weights[k] * std::pow(dp * dq, m - 2) * inner;
  }
  const double detM = std::abs(M.determinant());
  return detM * std::abs(dpsi) * std::pow(2.0, m - 2) * total / radial_moment(m - 1, m - 1, a, b, c);
}

}  // namespace

double radial_moment(int i, int j, double a, double b, double c) {
  if (i < 0 || j < 0 || (i + j) % 2 != 0)
    fail(ErrorKind::InvalidArgument, kModule, "radial_moment", "exponents must be nonnegative with even sum");
  if (!(a > 0.0) || !(c > 0.0) || !(a * c - b * b > 0.0))
    fail(ErrorKind::InvalidArgument, kModule, "radial_moment", "quadratic form must be positive definite");
  const int k = (i + j + 2) / 2;
  if (k >= QuadraticPowers::kK || i >= QuadraticPowers::kI)
    fail(ErrorKind::InvalidArgument, kModule, "radial_moment", "exponents too large");
  const QuadraticPowers G(a, b, c, i, k);
  return static_cast<double>(std::pow(2.0L, (i + j) / 2) * std::tgamma(static_cast<long double>(k)) * G.g[i][k]);
}

TwoPointIntensity two_point_density(const CovarianceModel& model, const Domain& domain, const Vec3& p, const Vec3& q,
                                    double tube_radius) {
  TwoPointIntensity out;
  out.p = p;
  out.q = q;
  out.m = model.dims;
  const int m = model.dims, h = hess_count(m), nf = 1 + m + h;
  const MatX Fp = jet_features(model, p, 2);
  const MatX Fq = jet_features(model, q, 2);
  MatX F(2 * nf, Fp.cols());
  F << Fp, Fq;
  const MatX C = F * F.transpose();
  out.cpp = C(0, 0);
  out.cqq = C(nf, nf);
  out.cpq = C(0, nf);
  out.frame_p = jet_frame(model, p);
  out.frame_q = jet_frame(model, q);
  const double dist = geodesic_distance(domain, p, q);
  if (dist < tube_radius) {
    out.excluded = true;
    return out;
  }
  const double det = out.cpp * out.cqq - out.cpq * out.cpq;
  if (!(det > 1e-12 * out.cpp * out.cqq))
    fail(ErrorKind::DegenerateConditioning, kModule, "two_point_density",
         "values at the two points are fully correlated (distance " + std::to_string(dist) + ")");
  out.density_factor = 1.0 / (kTwoPi * std::sqrt(det));
  std::vector<std::string> labels;
  for (const char* pt : {"p", "q"}) {
    labels.push_back(std::string("value_") + pt);
    for (int a = 0; a < m; ++a) labels.push_back(std::string("grad_") + pt + "[" + std::to_string(a) + "]");
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b)
        labels.push_back(std::string("hess_") + pt + "[" + std::to_string(a) + std::to_string(b) + "]");
  }
  const GaussianVector joint = make_gaussian(0.5 * (C + C.transpose()), labels);
  out.conditional_law = condition(joint, {0, nf}, VecX::Zero(2));
  return out;
}

PairMoments pair_moments(const TwoPointIntensity& in, const PairMomentOptions& opt) {
  if (in.excluded) fail(ErrorKind::InvalidArgument, kModule, "pair_moments", "pair lies inside the excluded tube");
  if (opt.samples < 1) fail(ErrorKind::InvalidArgument, kModule, "pair_moments", "samples must be positive");
  const int m = in.m, h = hess_count(m);
  const DirectionalLaw law(in);
  Rng rng(opt.seed, 0);
  PairMoments out;
  Accumulator grad, curv, xpq, xqp, bb, ab;
  double nu_p[3], nu_q[3], ell_p[6], ell_q[6];

  if (!law.regular) {
    // Singular gradient block: plain regression sampling of the full law.
    out.rao_blackwell = false;
    const GaussianSampler sampler(in.conditional_law);
    VecX x(in.conditional_law.dimension());
    for (int s = 0; s < opt.samples; ++s) {
      sampler.draw(rng, x.data());
      double rp = 0.0, rq = 0.0;
      for (int a = 0; a < m; ++a) {
        rp += x[a] * x[a];
        rq += x[m + h + a] * x[m + h + a];
      }
      rp = std::sqrt(rp);
      rq = std::sqrt(rq);
      if (!(rp > 0.0) || !(rq > 0.0)) continue;
      for (int a = 0; a < m; ++a) {
        nu_p[a] = x[a] / rp;
        nu_q[a] = x[m + h + a] / rq;
      }
      trace_coefficients(nu_p, m, ell_p);
      trace_coefficients(nu_q, m, ell_q);
      double Dp = 0.0, Dq = 0.0;
      for (int r = 0; r < h; ++r) {
        Dp += ell_p[r] * x[m + r];
        Dq += ell_q[r] * x[2 * m + h + r];
      }
      grad.add(rp * rq);
      curv.add(Dp * Dq / (rp * rq));
      ab.add(std::abs(Dp * Dq) / (rp * rq));
      const double bp = opt.normal_p ? frame_component(in.frame_p, nu_p, m, *opt.normal_p) : 0.0;
      const double bq = opt.normal_q ? frame_component(in.frame_q, nu_q, m, *opt.normal_q) : 0.0;
      xpq.add(Dp / rp * bq);
      xqp.add(bp * Dq / rq);
      bb.add(bp * bq);
    }
  } else {
    const int n2 = 2 * m;
    double z[6], g[6], wp[6], wq[6];
    for (int s = 0; s < opt.samples; ++s) {
      for (int a = 0; a < n2; ++a) z[a] = rng.normal();
      for (int a = 0; a < n2; ++a) {
        double v = 0.0;
        for (int c = 0; c < n2; ++c) v += law.L(a, c) * z[c];
        g[a] = v;
      }
      double rp = 0.0, rq = 0.0;
      for (int a = 0; a < m; ++a) {
        rp += g[a] * g[a];
        rq += g[m + a] * g[m + a];
      }
      rp = std::sqrt(rp);
      rq = std::sqrt(rq);
      if (!(rp > 0.0) || !(rq > 0.0)) continue;
      for (int a = 0; a < m; ++a) {
        nu_p[a] = g[a] / rp;
        nu_q[a] = g[m + a] / rq;
      }
      double A = 0.0, Bc = 0.0, Cc = 0.0;
      for (int a = 0; a < m; ++a)
        for (int c = 0; c < m; ++c) {
          A += nu_p[a] * law.P(a, c) * nu_p[c];
          Bc += nu_p[a] * law.P(a, m + c) * nu_q[c];
          Cc += nu_q[a] * law.P(m + a, m + c) * nu_q[c];
        }
      const RadialRatios R = radial_ratios(m, A, Bc, Cc);
      trace_coefficients(nu_p, m, ell_p);
      trace_coefficients(nu_q, m, ell_q);
      for (int c = 0; c < n2; ++c) {
        double vp = 0.0, vq = 0.0;
        for (int r = 0; r < h; ++r) {
          vp += ell_p[r] * law.B(r, c);
          vq += ell_q[r] * law.B(h + r, c);
        }
        wp[c] = vp;
        wq[c] = vq;
      }
      double app = 0.0, apq = 0.0, aqp = 0.0, aqq = 0.0;
      for (int a = 0; a < m; ++a) {
        app += wp[a] * nu_p[a];
        apq += wp[m + a] * nu_q[a];
        aqp += wq[a] * nu_p[a];
        aqq += wq[m + a] * nu_q[a];
      }
      double spq = 0.0;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < h; ++c) spq += ell_p[r] * law.S(r, h + c) * ell_q[c];
      grad.add(R.pq);
      curv.add(app * aqp * R.p_q + (app * aqq + apq * aqp) + apq * aqq * R.q_p + spq * R.inv);
      const double bp = opt.normal_p ? frame_component(in.frame_p, nu_p, m, *opt.normal_p) : 0.0;
      const double bq = opt.normal_q ? frame_component(in.frame_q, nu_q, m, *opt.normal_q) : 0.0;
      xpq.add(bq * (app + apq * R.q_p));
      xqp.add(bp * (aqq + aqp * R.p_q));
      bb.add(bp * bq);
      if (opt.absolute) {
        double spp = 0.0, sqq = 0.0;
        for (int r = 0; r < h; ++r)
          for (int c = 0; c < h; ++c) {
            spp += ell_p[r] * law.S(r, c) * ell_p[c];
            sqq += ell_q[r] * law.S(h + r, h + c) * ell_q[c];
          }
        ab.add(abs_direction_integral(m, A, Bc, Cc, app, apq, aqp, aqq, std::max(spp, 0.0), std::max(sqq, 0.0), spq));
      }
    }
  }
  out.gradient_product = grad.mean();
  out.gradient_product_se = grad.se();
  out.curvature_product = curv.mean();
  out.curvature_product_se = curv.se();
  out.cross_pq = xpq.mean();
  out.cross_qp = xqp.mean();
  out.boundary_product = bb.mean();
  out.abs_curvature_product = ab.mean();
  return out;
}

PointMoments point_moments(const CovarianceModel& model, const Vec3& p, int samples, std::uint64_t seed,
                           bool absolute) {
  const int m = model.dims, h = hess_count(m);
  const MatX F = jet_features(model, p, 2);
  const MatX C = F * F.transpose();
  const GaussianVector law = condition(make_gaussian(0.5 * (C + C.transpose())), {0}, VecX::Zero(1));
  const MatX Cgg = law.covariance.topLeftCorner(m, m);
  const MatX Chg = law.covariance.block(m, 0, h, m);
  const MatX Chh = law.covariance.bottomRightCorner(h, h);
  const double lambda = Cgg.trace() / m;
  PointMoments out;
  const double radial = std::sqrt(2.0) * std::tgamma(0.5 * (m + 1)) / std::tgamma(0.5 * m);
  if (!(lambda > 0.0))
    fail(ErrorKind::DegenerateConditioning, kModule, "point_moments", "conditional gradient law vanishes");
  if ((Cgg - lambda * MatX::Identity(m, m)).cwiseAbs().maxCoeff() <= 1e-10 * lambda) {
    out.gradient_norm = std::sqrt(lambda) * radial;
    out.closed_form = true;
    if (!absolute) return out;
  }
  Eigen::SelfAdjointEigenSolver<MatX> es(Cgg);
  if (es.eigenvalues().minCoeff() <= 1e-10 * es.eigenvalues().maxCoeff())
    fail(ErrorKind::DegenerateConditioning, kModule, "point_moments", "conditional gradient law is singular");
  const MatX L = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal();
  const MatX P = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  const MatX B = Chg * P;
  const MatX S = Chh - B * Chg.transpose();
  const Rule1D& lag = gauss_laguerre(16, 0.5 * (m - 3));
  Rng rng(seed, 0);
  Accumulator grad, ab;
  double nu[3], ell[6];
  for (int s = 0; s < samples; ++s) {
    VecX z(m);
    for (int a = 0; a < m; ++a) z[a] = rng.normal();
    const VecX g = L * z;
    const double r = g.norm();
    if (!(r > 0.0)) continue;
    for (int a = 0; a < m; ++a) nu[a] = g[a] / r;
    double A = 0.0;
    for (int a = 0; a < m; ++a)
      for (int c = 0; c < m; ++c) A += nu[a] * P(a, c) * nu[c];
    grad.add(radial / std::sqrt(A));
    if (absolute) {
      trace_coefficients(nu, m, ell);
      double alpha = 0.0, var = 0.0;
      for (int c = 0; c < m; ++c) {
        double w = 0.0;
        for (int k = 0; k < h; ++k) w += ell[k] * B(k, c);
        alpha += w * nu[c];
      }
      for (int k = 0; k < h; ++k)
        for (int c = 0; c < h; ++c) var += ell[k] * S(k, c) * ell[c];
      double sum = 0.0;
      for (std::size_t l = 0; l < lag.nodes.size(); ++l)
        sum += lag.weights[l] * folded_mean(alpha * std::sqrt(2.0 * lag.nodes[l] / A), std::max(var, 0.0));
      ab.add(std::sqrt(0.5 * A) * sum / std::tgamma(0.5 * m));
    }
  }
  if (!out.closed_form) {
    out.gradient_norm = grad.mean();
    out.gradient_norm_se = grad.se();
  }
  out.abs_curvature = ab.mean();
  return out;
}

ExpectedVolumeReport expected_volume(const CovarianceModel& model, const Domain& domain,
                                     const ExpectedVolumeOptions& opt) {
  if (model.domain_kind != domain.kind || model.dims != domain.dims)
    fail(ErrorKind::DomainMismatch, kModule, "expected_volume", "model was built for a different domain");
  ExpectedVolumeReport rep;
  auto node_value = [&](const Vec3& p, std::uint64_t stream, double& se) {
    const double cpp = model.kernel(p, p);
    const PointMoments pm = point_moments(model, p, opt.samples, derive_seed(opt.seed, stream));
    const double dens = 1.0 / std::sqrt(kTwoPi * cpp);
    se = pm.gradient_norm_se * dens;
    return pm.gradient_norm * dens;
  };
  if (model.stationary || model.isotropic_sphere) {
    // Constant integrand: one node times the volume.
    const Vec3 p = domain.kind == DomainKind::Sphere2 ? Vec3(0.0, 0.0, 1.0) : domain.origin;
    double se = 0.0;
    rep.value = node_value(p, 0, se) * domain.volume();
    rep.standard_error = se * domain.volume();
    rep.nodes = 1;
    rep.closed_form = se == 0.0;
    return rep;
  }
  const GridChart chart = make_chart(domain, opt.resolution);
  const QuadratureNodes q = chart_quadrature(domain, chart);
  std::vector<double> vals(q.points.size()), ses(q.points.size());
  parallel_for(q.points.size(), [&](std::size_t i) { vals[i] = node_value(q.points[i], i, ses[i]); });
  double var = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    rep.value += q.weights[i] * vals[i];
    var += q.weights[i] * q.weights[i] * ses[i] * ses[i];
  }
  rep.standard_error = std::sqrt(var);
  rep.nodes = vals.size();
  rep.closed_form = var == 0.0;
  return rep;
}

namespace {

struct PairValue {
  double value = 0.0;
  double variance = 0.0;
};

// One quadrature job: the pair (p, q) with weight w, assigned to the tube
// bucket 0 (dist >= delta), 1 (delta/2 <= dist < delta) or 2.
struct Job {
  Vec3 p, q;
  double w = 0.0;
  int bucket = 0;
  std::optional<Vec3> np, nq;
};

using PairIntegrand = std::function<PairValue(const Job&, std::uint64_t seed)>;

void finish_report(TubeReport& rep, int m) {
  const auto& v = rep.values;
  const double p0 = m - 1.0;  // excised mass ~ delta^(m-1)
  const double f0 = 1.0 / (std::pow(2.0, p0) - 1.0);
  const double e1 = v[1] + (v[1] - v[0]) * f0;
  const double e2 = v[2] + (v[2] - v[1]) * f0;
  const double scale = std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
  rep.drift = scale > 0.0 ? std::abs(e1 - e2) / std::max(std::abs(e2), 1e-300) : 0.0;
  double raw = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) raw = std::max(raw, std::abs(v[i] - v[j]));
  rep.raw_drift = scale > 0.0 ? raw / scale : 0.0;
  const double d1 = v[1] - v[0], d2 = v[2] - v[1];
  const double ratio = d1 != 0.0 ? d2 / d1 : 0.0;
  if (ratio > 0.05 && ratio < 0.95) {
    rep.order = std::log2(1.0 / ratio);
    rep.extrapolated = v[2] + d2 * ratio / (1.0 - ratio);
  } else {
    rep.order = p0;
    rep.extrapolated = e2;
  }
}

TubeReport run_jobs(const std::vector<Job>& jobs, const PairIntegrand& F, std::uint64_t seed, double delta, int m,
                    const char* method) {
  std::vector<PairValue> vals(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) { vals[i] = F(jobs[i], derive_seed(seed, i)); });
  TubeReport rep;
  rep.delta = delta;
  rep.method = method;
  rep.evaluations = jobs.size();
  std::array<double, 3> sum{}, var{};
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!std::isfinite(vals[i].value))
      fail(ErrorKind::IntegrandFailure, kModule, method, "non-finite two-point integrand");
    sum[jobs[i].bucket] += jobs[i].w * vals[i].value;
    var[jobs[i].bucket] += jobs[i].w * jobs[i].w * vals[i].variance;
  }
  rep.values = {sum[0], sum[0] + sum[1], sum[0] + sum[1] + sum[2]};
  rep.standard_errors = {std::sqrt(var[0]), std::sqrt(var[0] + var[1]), std::sqrt(var[0] + var[1] + var[2])};
  finish_report(rep, m);
  return rep;
}

// C-infinity step: 1 for s <= R/2, 0 for s >= R.
double bump(double s, double R) {
  if (s <= 0.5 * R) return 1.0;
  if (s >= R) return 0.0;
  const double x = (R - s) / (0.5 * R);
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

// Radial panels from delta/4 to R: tube shells, geometric panels to R/2, and
// two panels over the bump transition.
std::vector<std::pair<double, double>> radial_panels(double delta, double R, std::vector<int>& buckets) {
  std::vector<std::pair<double, double>> panels;
  panels.push_back({0.25 * delta, 0.5 * delta});
  buckets.push_back(2);
  panels.push_back({0.5 * delta, delta});
  buckets.push_back(1);
  double s = delta;
  while (s < 0.5 * R) {
    const double e = std::min(2.0 * s, 0.5 * R);
    panels.push_back({s, e});
    buckets.push_back(0);
    s = e;
  }
  panels.push_back({0.5 * R, 0.75 * R});
  buckets.push_back(0);
  panels.push_back({0.75 * R, R});
  buckets.push_back(0);
  return panels;
}

// Unit directions with weights integrating over S^{m-1}.
void sphere_directions(int m, std::vector<Vec3>& dirs, std::vector<double>& w) {
  if (m == 2) {
    const int n = 32;
    for (int k = 0; k < n; ++k) {
      const double th = kTwoPi * k / n;
      dirs.emplace_back(std::cos(th), std::sin(th), 0.0);
      w.push_back(kTwoPi / n);
    }
    return;
  }
  const Rule1D ct = gauss_legendre(12, -1.0, 1.0);
  const int nphi = 24;
  for (std::size_t i = 0; i < ct.nodes.size(); ++i) {
    const double z = ct.nodes[i], r = std::sqrt(1.0 - z * z);
    for (int k = 0; k < nphi; ++k) {
      const double ph = kTwoPi * (k + 0.5) / nphi;
      dirs.emplace_back(r * std::cos(ph), r * std::sin(ph), z);
      w.push_back(ct.weights[i] * kTwoPi / nphi);
    }
  }
}

double kernel_of(const CovarianceModel& model, const Vec3& p, const Vec3& q) {
  return model.closed_kernel ? model.closed_kernel(p, q) : model.kernel(p, q);
}

// Displacements r (minimal image) with |K(r)| = K(0): zeros of 1 - K^2 found
// from grid minima and refined by Newton on grad K = 0.
std::vector<Vec3> degenerate_displacements(const CovarianceModel& model, const Domain& domain, int n) {
  const int m = domain.dims;
  const Vec3 p0 = domain.origin;
  const double var = kernel_of(model, p0, p0);
  std::array<int, 3> dims{n, n, m == 3 ? n : 1};
  auto node = [&](int i, int j, int k) {
    Vec3 r = Vec3::Zero();
    const int idx[3] = {i, j, k};
    for (int a = 0; a < m; ++a) r[a] = domain.extents[a] * idx[a] / n;
    return r;
  };
  auto gap = [&](const Vec3& r) {
    const double k = kernel_of(model, p0, p0 + r) / var;
    return 1.0 - k * k;
  };
  std::vector<double> g(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
  auto id = [&](int i, int j, int k) {
    auto wrap = [&](int x, int d) { return ((x % d) + d) % d; };
    return (static_cast<std::size_t>(wrap(k, dims[2])) * dims[1] + wrap(j, dims[1])) * dims[0] + wrap(i, dims[0]);
  };
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) g[id(i, j, k)] = gap(node(i, j, k));
  std::vector<Vec3> centres{Vec3::Zero()};
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        if (i == 0 && j == 0 && k == 0) continue;
        const double v = g[id(i, j, k)];
        if (v > 0.1) continue;
        bool minimum = true;
        for (int dk = (m == 3 ? -1 : 0); dk <= (m == 3 ? 1 : 0) && minimum; ++dk)
          for (int dj = -1; dj <= 1 && minimum; ++dj)
            for (int di = -1; di <= 1; ++di) {
              if (!di && !dj && !dk) continue;
              if (g[id(i + di, j + dj, k + dk)] < v) {
                minimum = false;
                break;
              }
            }
        if (!minimum) continue;
        Vec3 r = node(i, j, k);
        for (int it = 0; it < 30; ++it) {
          const MatX gr = covariance_jet(model, p0, p0 + r, 0, 1);
          const MatX he = covariance_jet(model, p0, p0 + r, 0, 2);
          Eigen::MatrixXd H(m, m);
          Eigen::VectorXd gv(m);
          for (int a = 0; a < m; ++a) {
            gv[a] = gr(0, a);
            for (int b = 0; b < m; ++b) H(a, b) = he(0, 3 * a + b);
          }
          const Eigen::VectorXd step = H.completeOrthogonalDecomposition().solve(gv);
          for (int a = 0; a < m; ++a) r[a] -= step[a];
          if (step.norm() < 1e-14) break;
        }
        if (!(gap(r) < 1e-10)) continue;
        r = domain.displacement(Vec3::Zero(), r);
        bool dup = false;
        for (const auto& c : centres)
          if (domain.displacement(c, r).norm() < 1e-6) dup = true;
        if (!dup) centres.push_back(r);
      }
  return centres;
}

TubeReport stationary_quadrature(const CovarianceModel& model, const Domain& domain, const TubeOptions& opt,
                                 const PairIntegrand& F) {
  const int m = domain.dims;
  const double L = domain.extents.head(m).minCoeff();
  const double spacing = L / opt.resolution;
  const double delta = opt.tube_radius.value_or(4.0 * spacing);
  const int cap = opt.max_grid > 0 ? opt.max_grid : (m == 2 ? 64 : 24);
  const int n = std::min(opt.resolution, cap);
  const std::vector<Vec3> centres = degenerate_displacements(model, domain, std::max(n, 16));
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < centres.size(); ++a)
    for (std::size_t b = a + 1; b < centres.size(); ++b)
      sep = std::min(sep, domain.displacement(centres[a], centres[b]).norm());
  const double R = std::min(0.2 * L, 0.45 * sep);
  if (!(delta < 0.5 * R))
    fail(ErrorKind::InvalidArgument, kModule, "stationary_quadrature",
         "tube radius " + std::to_string(delta) + " too large for the degenerate-set spacing (need < " +
             std::to_string(0.5 * R) + ")");
  const Vec3 p0 = domain.origin;
  std::vector<Job> jobs;
  // smooth part on the grid
  double cell = 1.0;
  for (int a = 0; a < m; ++a) cell *= domain.extents[a] / n;
  for (int k = 0; k < (m == 3 ? n : 1); ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Vec3 r(domain.extents[0] * i / n, domain.extents[1] * j / n, m == 3 ? domain.extents[2] * k / n : 0.0);
        double chi = 0.0;
        for (const auto& c : centres) chi += bump(domain.displacement(c, r).norm(), R);
        if (chi >= 1.0 - 1e-15) continue;
        jobs.push_back({p0, domain.wrap(p0 + r), cell * (1.0 - chi), 0, {}, {}});
      }
  // polar parts around each centre
  std::vector<Vec3> dirs;
  std::vector<double> dw;
  sphere_directions(m, dirs, dw);
  std::vector<int> buckets;
  const auto panels = radial_panels(delta, R, buckets);
  const Rule1D base = gauss_legendre(m == 2 ? 6 : 6);
  for (const auto& c : centres)
    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
      const double lo = panels[pi].first, hi = panels[pi].second;
      for (std::size_t l = 0; l < base.nodes.size(); ++l) {
        const double s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * base.nodes[l];
        const double ws = 0.5 * (hi - lo) * base.weights[l] * std::pow(s, m - 1) * bump(s, R);
        for (std::size_t d = 0; d < dirs.size(); ++d)
          jobs.push_back({p0, domain.wrap(p0 + c + s * dirs[d]), ws * dw[d], buckets[pi], {}, {}});
      }
    }
  TubeReport rep = run_jobs(jobs, F, opt.seed, delta, m, "stationary");
  const double vol = domain.volume();
  for (auto& v : rep.values) v *= vol;
  for (auto& v : rep.standard_errors) v *= vol;
  finish_report(rep, m);
  rep.degenerate_centres.assign(centres.begin() + 1, centres.end());
  return rep;
}

TubeReport sphere_quadrature(const CovarianceModel& model, const Domain& domain, const TubeOptions& opt,
                             const PairIntegrand& F) {
  const GridChart chart = make_chart(domain, opt.resolution);
  const double delta = opt.tube_radius.value_or(4.0 * chart.min_spacing());
  const Vec3 p0(0.0, 0.0, 1.0);
  const double k_anti = kernel_of(model, p0, -p0) / kernel_of(model, p0, p0);
  const bool antipodal = std::abs(k_anti) > 1.0 - 1e-10;
  if (!(delta < 0.25 * kPi))
    fail(ErrorKind::InvalidArgument, kModule, "sphere_quadrature", "tube radius too large");
  // panels in theta: shells at 0 (and at pi when the antipode is degenerate)
  std::vector<std::pair<double, double>> panels;
  std::vector<int> buckets;
  auto add_end = [&](bool mirror) {
    auto put = [&](double a, double b, int bucket) {
      if (mirror) panels.push_back({kPi - b, kPi - a});
      else panels.push_back({a, b});
      buckets.push_back(bucket);
    };
    put(0.25 * delta, 0.5 * delta, 2);
    put(0.5 * delta, delta, 1);
    double s = delta;
    while (s < 0.25 * kPi) {
      const double e = std::min(2.0 * s, 0.25 * kPi);
      put(s, e, 0);
      s = e;
    }
  };
  add_end(false);
  if (antipodal) {
    add_end(true);
  } else {
    panels.push_back({0.75 * kPi, kPi});
    buckets.push_back(0);
  }
  for (int k = 0; k < 4; ++k) {
    panels.push_back({0.25 * kPi + 0.125 * kPi * k, 0.25 * kPi + 0.125 * kPi * (k + 1)});
    buckets.push_back(0);
  }
  const Rule1D base = gauss_legendre(8);
  std::vector<Job> jobs;
  const double outer = 4.0 * kPi * kTwoPi;  // p over the sphere, azimuth of q
  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const double lo = panels[pi].first, hi = panels[pi].second;
    for (std::size_t l = 0; l < base.nodes.size(); ++l) {
      const double th = 0.5 * (lo + hi) + 0.5 * (hi - lo) * base.nodes[l];
      const double w = 0.5 * (hi - lo) * base.weights[l] * std::sin(th) * outer;
      jobs.push_back({p0, Vec3(std::sin(th), 0.0, std::cos(th)), w, buckets[pi], {}, {}});
    }
  }
  TubeReport rep = run_jobs(jobs, F, opt.seed, delta, 2, "isotropic_sphere");
  if (antipodal) rep.degenerate_centres.push_back(-p0);
  return rep;
}

struct QNode {
  Vec3 x;
  double w;
  std::optional<Vec3> normal;
};

// Boundary quadrature nodes of a Rectangle (faces sampled at the chart
// spacing, trapezoid weights, corners and edges with reduced weight).
std::vector<QNode> boundary_nodes(const Domain& domain, const GridChart& chart) {
  std::vector<QNode> out;
  const int m = domain.dims;
  for (const Face& f : domain.faces()) {
    std::vector<int> axes;
    for (int a = 0; a < m; ++a)
      if (a != f.axis) axes.push_back(a);
    const double fixed = f.side < 0 ? domain.origin[f.axis] : domain.upper()[f.axis];
    const int n0 = chart.nodes_along(axes[0]);
    const int n1 = m == 3 ? chart.nodes_along(axes[1]) : 1;
    for (int j = 0; j < n1; ++j)
      for (int i = 0; i < n0; ++i) {
        Vec3 x = Vec3::Zero();
        x[f.axis] = fixed;
        x[axes[0]] = domain.origin[axes[0]] + i * chart.spacing[axes[0]];
        double w = chart.spacing[axes[0]] * ((i == 0 || i == n0 - 1) ? 0.5 : 1.0);
        if (m == 3) {
          x[axes[1]] = domain.origin[axes[1]] + j * chart.spacing[axes[1]];
          w *= chart.spacing[axes[1]] * ((j == 0 || j == n1 - 1) ? 0.5 : 1.0);
        }
        out.push_back({x, w, f.normal});
      }
  }
  return out;
}

TubeReport double_grid_quadrature(const CovarianceModel& model, const Domain& domain, const TubeOptions& opt,
                                  const PairIntegrand& F, bool with_boundary) {
  (void)model;
  const GridChart chart = make_chart(domain, opt.resolution);
  const double delta = opt.tube_radius.value_or(4.0 * chart.min_spacing());
  const QuadratureNodes q = chart_quadrature(domain, chart);
  std::vector<QNode> nodes;
  for (std::size_t i = 0; i < q.points.size(); ++i) nodes.push_back({q.points[i], q.weights[i], {}});
  if (with_boundary && domain.has_boundary())
    for (auto& b : boundary_nodes(domain, chart)) nodes.push_back(b);
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      const double d = geodesic_distance(domain, nodes[i].x, nodes[j].x);
      if (d < 0.25 * delta) continue;
      const int bucket = d >= delta ? 0 : (d >= 0.5 * delta ? 1 : 2);
      jobs.push_back({nodes[i].x, nodes[j].x, 2.0 * nodes[i].w * nodes[j].w, bucket, nodes[i].normal, nodes[j].normal});
    }
  return run_jobs(jobs, F, opt.seed, delta, domain.dims, "double_grid");
}

TubeReport tube_quadrature(const CovarianceModel& model, const Domain& domain, const TubeOptions& opt,
                           const PairIntegrand& F, bool with_boundary) {
  if (opt.resolution < 1) fail(ErrorKind::InvalidArgument, kModule, "tube_quadrature", "resolution must be positive");
  if (opt.tube_radius && !(*opt.tube_radius > 0.0))
    fail(ErrorKind::InvalidArgument, kModule, "tube_quadrature", "tube radius must be positive");
  if (model.stationary && domain.kind == DomainKind::FlatTorus) return stationary_quadrature(model, domain, opt, F);
  if (model.isotropic_sphere && domain.kind == DomainKind::Sphere2) return sphere_quadrature(model, domain, opt, F);
  return double_grid_quadrature(model, domain, opt, F, with_boundary);
}

void check_model_domain(const CovarianceModel& model, const Domain& domain, const char* op) {
  if (model.domain_kind != domain.kind || model.dims != domain.dims)
    fail(ErrorKind::DomainMismatch, kModule, op, "model was built for a different domain");
}

}  // namespace

TubeReport second_moment(const CovarianceModel& model, const Domain& domain, const TubeOptions& opt) {
  check_model_domain(model, domain, "second_moment");
  const PairIntegrand F = [&](const Job& job, std::uint64_t seed) {
    const TwoPointIntensity in = two_point_density(model, domain, job.p, job.q);
    PairMomentOptions po;
    po.samples = opt.samples;
    po.seed = seed;
    const PairMoments pm = pair_moments(in, po);
    return PairValue{in.density_factor * pm.gradient_product,
                     std::pow(in.density_factor * pm.gradient_product_se, 2)};
  };
  return tube_quadrature(model, domain, opt, F, false);
}

const char* to_string(DerivativeNormResult::Status status) {
  switch (status) {
    case DerivativeNormResult::Status::Converged: return "converged";
    case DerivativeNormResult::Status::Diverging: return "diverging";
    case DerivativeNormResult::Status::Inconclusive: return "inconclusive";
  }
  return "?";
}

double extended_nondegeneracy_sweep(const CovarianceModel& model, const Domain& domain, int points) {
  const int m = model.dims;
  // Structured directions first (axes, face and body diagonals), then random.
  std::vector<Vec3> dirs;
  if (m == 3) {
    for (int a = 0; a < 3; ++a) dirs.push_back(Vec3::Unit(a));
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b)
        for (int s : {1, -1}) dirs.push_back((Vec3::Unit(a) + s * Vec3::Unit(b)).normalized());
    for (int s1 : {1, -1})
      for (int s2 : {1, -1}) dirs.push_back(Vec3(1.0, s1, s2).normalized());
  } else {
    dirs = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0).normalized(), Vec3(1, -1, 0).normalized()};
  }
  Rng rng(0x5EEDA551ULL, 7);
  double worst = std::numeric_limits<double>::infinity();
  const int h = hess_count(m);
  for (int s = 0; s < points; ++s) {
    Vec3 p = domain.origin;
    for (int a = 0; a < m; ++a) p[a] += rng.uniform() * domain.extents[a];
    if (domain.kind == DomainKind::Sphere2) {
      p = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    }
    Vec3 v;
    if (s < static_cast<int>(dirs.size())) {
      v = dirs[s];
    } else {
      v = Vec3::Zero();
      for (int a = 0; a < m; ++a) v[a] = rng.normal();
      v.normalize();
    }
    const MatX F = jet_features(model, p, 2);
    MatX T = MatX::Zero(3, F.rows());
    T(0, 0) = 1.0;
    for (int a = 0; a < m; ++a) T(1, 1 + a) = v[a];
    int r = 0;
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) T(2, 1 + m + r++) = (a == b ? 1.0 : 2.0) * v[a] * v[b];
    (void)h;
    const MatX Fv = T * F;
    MatX C = Fv * Fv.transpose();
    const VecX d = C.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    C = d.asDiagonal() * C * d.asDiagonal();
    worst = std::min(worst, relative_min_eigenvalue(C));
  }
  if (!(worst > 1e-8))
    fail(ErrorKind::NonDegeneracySweepFailure, kModule, "extended_nondegeneracy_sweep",
         "(X(p), dX(v), Hess X(v,v)) is degenerate somewhere on the sweep (min relative eigenvalue " +
             std::to_string(worst) + ")");
  return worst;
}

DerivativeNormResult derivative_norm_sq_expectation(const CovarianceModel& model, const Domain& domain, int m,
                                                    const TubeOptions& opt) {
  check_model_domain(model, domain, "derivative_norm_sq_expectation");
  if (m != 2 && m != 3)
    fail(ErrorKind::InvalidArgument, kModule, "derivative_norm_sq_expectation", "dimension must be 2 or 3");
  if (m != domain.dims)
    fail(ErrorKind::InvalidArgument, kModule, "derivative_norm_sq_expectation", "dimension does not match the domain");
  if (m == 3) extended_nondegeneracy_sweep(model, domain);
  const PairIntegrand F = [&](const Job& job, std::uint64_t seed) {
    const TwoPointIntensity in = two_point_density(model, domain, job.p, job.q);
    PairMomentOptions po;
    po.samples = opt.samples;
    po.seed = seed;
    po.normal_p = job.np;
    po.normal_q = job.nq;
    const PairMoments pm = pair_moments(in, po);
    const double w = in.cpq * in.density_factor;
    const bool bp = job.np.has_value(), bq = job.nq.has_value();
    if (!bp && !bq) return PairValue{w * pm.curvature_product, std::pow(w * pm.curvature_product_se, 2)};
    if (bp && bq) return PairValue{w * pm.boundary_product, 0.0};
    // interior-boundary cross term enters with a factor -2 (the 2 is in the pair weight)
    return PairValue{-w * (bq ? pm.cross_pq : pm.cross_qp), 0.0};
  };
  DerivativeNormResult out;
  out.table = tube_quadrature(model, domain, opt, F, true);
  const auto& v = out.table.values;
  const double scale = std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
  // Reference size vol(M)^2 * tr Var(Hess) / tr Var(dX): values below 1e-9 of it are rounding.
  Vec3 ref = domain.kind == DomainKind::Sphere2 ? Vec3(0, 0, 1) : Vec3(domain.origin + 0.5 * domain.extents);
  if (domain.kind != DomainKind::Sphere2 && m == 2) ref[2] = 0.0;
  const MatX jf = jet_features(model, ref, 2);
  const MatX jc = jf * jf.transpose();
  const double grad_var = jc.block(1, 1, m, m).trace();
  const double hess_var = jc.bottomRightCorner(hess_count(m), hess_count(m)).trace();
  const double vol = domain.volume();
  const double negligible = 1e-9 * vol * vol * (grad_var > 0.0 ? hess_var / grad_var : 1.0);
  if (scale <= negligible || out.table.raw_drift <= 0.02) {
    out.status = DerivativeNormResult::Status::Converged;
    out.value = scale <= negligible ? v[2] : out.table.extrapolated;
  } else if (v[0] > 0.0 && v[1] / v[0] >= 1.2 && v[2] / v[1] >= 1.2) {
    out.status = DerivativeNormResult::Status::Diverging;
    out.divergence = DivergenceReport{v, {v[1] / v[0], v[2] / v[1]}};
  } else {
    out.status = DerivativeNormResult::Status::Inconclusive;
  }
  return out;
}

std::vector<DiagnosticRow> near_diagonal_diagnostic(const CovarianceModel& model, const Domain& domain, const Vec3& p,
                                                    const Vec3& v, const std::vector<double>& distances, int samples,
                                                    std::uint64_t seed) {
  check_model_domain(model, domain, "near_diagonal_diagnostic");
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (!(distances[i] > 0.0))
      fail(ErrorKind::InvalidArgument, kModule, "near_diagonal_diagnostic", "distances must be positive");
    if (i > 0 && !(distances[i] < distances[i - 1]))
      fail(ErrorKind::InvalidArgument, kModule, "near_diagonal_diagnostic", "distances must be decreasing");
  }
  Vec3 dir = v;
  if (domain.kind == DomainKind::Sphere2) {
    const Vec3 n = p.normalized();
    dir -= dir.dot(n) * n;
  }
  if (!(dir.norm() > 0.0))
    fail(ErrorKind::InvalidArgument, kModule, "near_diagonal_diagnostic", "direction must be a nonzero tangent vector");
  dir.normalize();
  std::vector<DiagnosticRow> rows(distances.size());
  parallel_for(distances.size(), [&](std::size_t i) {
    const double t = distances[i];
    Vec3 q;
    if (domain.kind == DomainKind::Sphere2) q = std::cos(t) * p.normalized() + std::sin(t) * dir;
    else q = domain.kind == DomainKind::FlatTorus ? domain.wrap(p + t * dir) : Vec3(p + t * dir);
    const TwoPointIntensity in = two_point_density(model, domain, p, q);
    PairMomentOptions po;
    po.samples = samples;
    po.seed = derive_seed(seed, i);
    po.absolute = true;
    const PairMoments pm = pair_moments(in, po);
    rows[i] = {t, in.density_factor, pm.abs_curvature_product, t * pm.abs_curvature_product,
               t * kTwoPi * in.density_factor};
  });
  return rows;
}

}  // namespace nodalab
