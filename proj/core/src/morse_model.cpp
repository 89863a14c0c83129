#include "nodalab/morse.hpp"
#include "nodalab/quadrature.hpp"

#include <Eigen/Cholesky>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

namespace nodalab {

namespace {

constexpr const char* kModule = "morse";

struct SpherePoint {
  VecX x;
  double w = 0.0;
};

// Quadrature on the unit sphere S^{k-1} in R^k, k = 1..4 (k = 1 is {-1, +1}).
std::vector<SpherePoint> sphere_rule(int k) {
  std::vector<SpherePoint> out;
  auto push = [&](std::initializer_list<double> c, double w) {
    VecX x(static_cast<int>(c.size()));
    int i = 0;
    for (double v : c) x[i++] = v;
    out.push_back({x, w});
  };
  if (k == 1) {
    push({1.0}, 1.0);
    push({-1.0}, 1.0);
  } else if (k == 2) {
    const int n = 96;
    for (int i = 0; i < n; ++i) {
      const double a = kTwoPi * (i + 0.5) / n;
      push({std::cos(a), std::sin(a)}, kTwoPi / n);
    }
  } else if (k == 3) {
    const Rule1D z = gauss_legendre(32);
    const int n = 64;
    for (std::size_t i = 0; i < z.nodes.size(); ++i) {
      const double r = std::sqrt(1.0 - z.nodes[i] * z.nodes[i]);
      for (int j = 0; j < n; ++j) {
        const double a = kTwoPi * (j + 0.5) / n;
        push({r * std::cos(a), r * std::sin(a), z.nodes[i]}, z.weights[i] * kTwoPi / n);
      }
    }
  } else if (k == 4) {
    // x = (cos e cos a, cos e sin a, sin e cos b, sin e sin b), dS = sin e cos e de da db
    const Rule1D e = gauss_legendre(32, 0.0, kPi / 2.0);
    const int n = 48;
    for (std::size_t i = 0; i < e.nodes.size(); ++i) {
      const double ce = std::cos(e.nodes[i]), se = std::sin(e.nodes[i]);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double ta = kTwoPi * (a + 0.5) / n, tb = kTwoPi * (b + 0.5) / n;
          push({ce * std::cos(ta), ce * std::sin(ta), se * std::cos(tb), se * std::sin(tb)},
               e.weights[i] * se * ce * (kTwoPi / n) * (kTwoPi / n));
        }
    }
  }
  return out;
}

struct ChartGeometry {
  int m = 2, np = 1, nm = 1;
  MatX ginv;
  VecX H;  // diagonal of T = x^T diag(H) x
  double sqrt_det = 1.0;
  LevelIntegrand integrand = LevelIntegrand::Volume;

  // J_g of the level through x times h(x).
  double weight(const VecX& x) const {
    const VecX xi = 2.0 * H.cwiseProduct(x);
    const double e2 = xi.squaredNorm();
    const VecX gxi = ginv * xi;
    const double n2 = xi.dot(gxi);
    const double J = sqrt_det * std::sqrt(n2 / e2);
    if (integrand == LevelIntegrand::Volume) return J;
    double lap = 0.0;
    for (int a = 0; a < m; ++a) lap += 2.0 * ginv(a, a) * H[a];
    const double hess_nn = 2.0 * gxi.dot(H.cwiseProduct(gxi)) / n2;
    return J * (lap - hess_nn) / n2;
  }
};

}  // namespace

double model_level_integral(int n_plus, int n_minus, const MatX& g, LevelIntegrand integrand, double t, double eps) {
  const int m = n_plus + n_minus;
  if (n_plus < 0 || n_minus < 0 || m < 2 || m > 4)
    fail(ErrorKind::InvalidArgument, kModule, "model_level_integral",
         "invalid signature (n_plus, n_minus) = (" + std::to_string(n_plus) + ", " + std::to_string(n_minus) +
             "); need n_plus + n_minus in {2, 3, 4}");
  if (g.rows() != m || g.cols() != m)
    fail(ErrorKind::InvalidArgument, kModule, "model_level_integral", "metric must be m x m");
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * g.cwiseAbs().maxCoeff())
    fail(ErrorKind::InvalidArgument, kModule, "model_level_integral", "metric must be symmetric");
  Eigen::LLT<MatX> llt(g);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::InvalidArgument, kModule, "model_level_integral", "metric must be positive definite");
  if (!(eps > 0.0) || !(t > 0.0) || !(t < eps * eps))
    fail(ErrorKind::InvalidArgument, kModule, "model_level_integral", "need 0 < t < eps^2");
  if (n_plus == 0) return 0.0;  // local maximum: the level t > 0 misses the chart

  ChartGeometry geo;
  geo.m = m;
  geo.np = n_plus;
  geo.nm = n_minus;
  geo.ginv = g.inverse();
  geo.H = VecX::Ones(m);
  for (int a = n_plus; a < m; ++a) geo.H[a] = -1.0;
  geo.sqrt_det = std::sqrt(g.determinant());
  geo.integrand = integrand;

  const double st = std::sqrt(t);
  if (n_minus == 0) {
    double s = 0.0;
    for (const auto& sp : sphere_rule(m)) s += sp.w * geo.weight(st * sp.x);
    return std::pow(t, 0.5 * (m - 1)) * s;
  }

  const auto splus = sphere_rule(n_plus), sminus = sphere_rule(n_minus);
  auto hhat = [&](double s) {
    const double r = s * st;
    const double a = std::sqrt(r * r + t);
    VecX x(m);
    double acc = 0.0;
    for (const auto& u : splus)
      for (const auto& v : sminus) {
        x.head(n_plus) = a * u.x;
        x.tail(n_minus) = r * v.x;
        acc += u.w * v.w * geo.weight(x);
      }
    return acc;
  };
  auto radial = [&](double s) {
    return hhat(s) * std::sqrt(2.0 * s * s + 1.0) * std::pow(s * s + 1.0, 0.5 * (n_plus - 2)) *
           std::pow(s, n_minus - 1);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double smax = eps / st;
  double total = GK::integrate(radial, 0.0, std::min(1.0, smax), 12, 1e-11);
  if (smax > 1.0) {
    auto tail = [&](double u) {
      const double s = std::exp(u);
      return radial(s) * s;
    };
    total += GK::integrate(tail, 0.0, std::log(smax), 15, 1e-11);
  }
  return std::pow(t, 0.5 * (m - 1)) * total;
}

}  // namespace nodalab
