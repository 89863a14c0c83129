#include "nodalab/kacrice.hpp"
#include "nodalab/law.hpp"
#include "nodalab/nodal.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cmath>
#include <vector>

using namespace nodalab;

namespace {

CovarianceModel wave(const Domain& d, int n) {
  ModelParams p;
  p.n = n;
  return build_model(ModelKind::ArithmeticWave, p, d);
}

// Polar form: R(i,j) = Gamma(k/2) 2^(k/2 - 1) int_0^{pi/2} cos^i sin^j q(th)^(-k/2) dth, k = i + j + 2.
// The angular integrand peaks where q is smallest; the interval is split there.
double angular_oracle(int i, int j, double a, double b, double c) {
  const double k = i + j + 2;
  auto integrand = [&](double th) {
    const double cs = std::cos(th), sn = std::sin(th);
    const double q = a * cs * cs + 2 * b * cs * sn + c * sn * sn;
    return std::pow(cs, i) * std::pow(sn, j) * std::pow(q, -0.5 * k);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double split = 0.5 * std::atan2(-2 * b, c - a);  // argmin of q on [0, pi)
  if (split < 0) split += kPi;
  std::vector<double> cuts{0.0};
  if (split > 0.0 && split < kPi / 2) {
    for (double w : {-0.1, -0.01, 0.0, 0.01, 0.1})
      if (split + w > cuts.back() && split + w < kPi / 2) cuts.push_back(split + w);
  }
  cuts.push_back(kPi / 2);
  double ang = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) ang += GK::integrate(integrand, cuts[s], cuts[s + 1], 15, 1e-13);
  return std::tgamma(0.5 * k) * std::pow(2.0, 0.5 * k - 1.0) * ang;
}

}  // namespace

TEST_SUITE("kacrice") {

TEST_CASE("radial moments match the angular oracle") {
  const double forms[][3] = {{1, 0, 1}, {2, 0.5, 1}, {1, -0.9, 1}, {3, 1.2, 0.7}, {1, -0.999, 1}, {1, 0.99, 1}};
  for (const auto& q : forms)
    for (auto [i, j] : {std::pair{0, 0}, {1, 1}, {2, 0}, {2, 2}, {3, 1}, {1, 3}, {3, 3}}) {
      CAPTURE(q[1]);
      CAPTURE(i);
      CAPTURE(j);
      const double r = radial_moment(i, j, q[0], q[1], q[2]);
      CHECK(std::abs(r / angular_oracle(i, j, q[0], q[1], q[2]) - 1.0) <= 1e-9);
    }
  // Independent standard pair: R(0,0) = pi / 2.
  CHECK(radial_moment(0, 0, 1, 0, 1) == doctest::Approx(kPi / 2).epsilon(1e-13));
}

TEST_CASE("uncorrelated unit pair has density 1/(2 pi)") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 32);
  const auto m = wave(t.domain, 1);
  // K = (cos 2 pi dx + cos 2 pi dy) / 2 vanishes at (1/4, 1/4).
  const Vec3 p(0.1, 0.2, 0), q(0.35, 0.45, 0);
  const auto tp = two_point_density(m, t.domain, p, q);
  CHECK(std::abs(tp.cpq) <= 1e-15);
  CHECK(tp.density_factor == doctest::Approx(1.0 / kTwoPi).epsilon(1e-14));
}

TEST_CASE("two-point intensity is symmetric") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 32);
  const auto m = wave(t.domain, 5);
  const Vec3 p(0.13, 0.77, 0), q(0.42, 0.31, 0);
  const auto a = two_point_density(m, t.domain, p, q), b = two_point_density(m, t.domain, q, p);
  CHECK(std::abs(a.density_factor - b.density_factor) <= 1e-12 * a.density_factor);
  const int m2 = a.conditional_law.dimension() / 2;
  // Swap the p and q blocks.
  MatX perm = MatX::Zero(2 * m2, 2 * m2);
  for (int i = 0; i < m2; ++i) {
    perm(i, m2 + i) = 1.0;
    perm(m2 + i, i) = 1.0;
  }
  const MatX swapped = perm * b.conditional_law.covariance * perm.transpose();
  CHECK((swapped - a.conditional_law.covariance).norm() <= 1e-12 * a.conditional_law.covariance.norm());
  PairMomentOptions o;
  o.samples = 4000;
  o.seed = 3;
  o.absolute = true;
  const auto ma = pair_moments(a, o), mb = pair_moments(b, o);
  CHECK(std::abs(ma.gradient_product - mb.gradient_product) <= 1e-12 * ma.gradient_product);
  CHECK(std::abs(ma.abs_curvature_product - mb.abs_curvature_product) <= 1e-12 * ma.abs_curvature_product);
}

TEST_CASE("antipodal pair of the linear field is degenerate") {
  const auto s = make_domain(DomainKind::Sphere2, 2, {}, 2);
  const auto lin = build_model(ModelKind::LinearField, ModelParams{}, s.domain);
  // K(p, -p) = -K(p, p): the value pair is fully anti-correlated.
  const Vec3 a(0, 0, 1);
  try {
    two_point_density(lin, s.domain, a, -a);
    FAIL("expected DegenerateConditioning");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateConditioning);
  }
}

TEST_CASE("expected volume of arithmetic waves") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 32);
  for (int n : {1, 2, 5}) {
    const auto m = wave(t.domain, n);
    const double oracle = std::sqrt(4 * kPi * kPi * n) / (2 * std::sqrt(2.0));
    CHECK(std::abs(expected_volume(m, t.domain).value / oracle - 1.0) <= 5e-3);
  }
  // The same field on a torus of twice the area: (0, 2) on [0,1]x[0,2] is (0, 1) on the unit torus.
  const auto w1 = wave(t.domain, 1);
  const auto tw = make_domain(DomainKind::FlatTorus, 2, {1, 2}, 32);
  ModelParams q;
  q.frequencies = {Vec3(1, 0, 0), Vec3(0, 2, 0)};
  q.weights = {1, 1};
  const auto w2 = build_model(ModelKind::SpectralSum, q, tw.domain);
  CHECK(expected_volume(w2, tw.domain).value == doctest::Approx(2.0 * expected_volume(w1, t.domain).value).epsilon(1e-9));
}

TEST_CASE("expected volume matches Monte Carlo for Kostlan on the sphere") {
  const auto s = make_domain(DomainKind::Sphere2, 2, {}, 5);
  ModelParams p;
  p.degree = 3;
  const auto m = build_model(ModelKind::Kostlan, p, s.domain);
  ExpectedVolumeOptions o;
  o.resolution = 4;
  const auto kr = expected_volume(m, s.domain, o);
  const auto ens = run_ensemble(m, s.domain, s.chart, 2000, 11, {false});
  CHECK(std::abs(kr.value - ens.mean) <= 3.0 * std::hypot(ens.standard_error, kr.standard_error));
}

TEST_CASE("linear field has zero derivative norm") {
  const auto s = make_domain(DomainKind::Sphere2, 2, {}, 3);
  const auto lin = build_model(ModelKind::LinearField, ModelParams{}, s.domain);
  TubeOptions o;
  o.resolution = 3;
  o.samples = 500;
  const auto r = derivative_norm_sq_expectation(lin, s.domain, 2, o);
  REQUIRE(r.value.has_value());
  CHECK(std::abs(*r.value) <= 1e-6);
}

TEST_CASE("near-diagonal density scaling") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 32);
  const auto m = wave(t.domain, 5);
  const Vec3 p(0.1, 0.2, 0), v = Vec3(1, 0.3, 0).normalized();
  const auto rows = near_diagonal_diagnostic(m, t.domain, p, v, {1e-2, 1e-3, 1e-4}, 500, 1);
  const MatX g = covariance_jet(m, p, p, 1, 1);
  const double gvv = v.dot(g.topLeftCorner(3, 3) * v);
  for (const auto& r : rows) CHECK(r.t_density * std::sqrt(gvv) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("three-dimensional conditional stays bounded near the diagonal") {
  const auto t3 = make_domain(DomainKind::FlatTorus, 3, {1, 1, 1}, 16);
  const auto m = wave(t3.domain, 2);
  const auto rows =
      near_diagonal_diagnostic(m, t3.domain, Vec3(0.1, 0.2, 0.3), Vec3(1, 0.3, 0.2).normalized(), {1e-1, 1e-2, 1e-3, 1e-4}, 2000, 1);
  // The bound I <= C / t keeps t I bounded; it is largest at the widest separation.
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.t_conditional));
    CHECK(r.t_conditional > 0.0);
    CHECK(r.t_conditional <= 1.5 * rows.front().t_conditional);
  }
}

TEST_CASE("far-apart points factorize") {
  const auto rect = make_domain(DomainKind::Rectangle, 2, {1, 1}, 32);
  ModelParams bp;
  bp.length = 0.15;
  bp.truncation = 40;
  const auto bf = build_model(ModelKind::BargmannFock, bp, rect.domain);
  const Vec3 p(0.1, 0.1, 0), q(0.9, 0.9, 0);
  const auto rows = near_diagonal_diagnostic(bf, rect.domain, p, (q - p).normalized(), {(q - p).norm()}, 4000, 2);
  const auto a = point_moments(bf, p, 4000, 3, true), b = point_moments(bf, q, 4000, 4, true);
  CHECK(rows[0].conditional / (a.abs_curvature * b.abs_curvature) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("second moment excision report") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 32);
  const auto m = wave(t.domain, 1);
  TubeOptions o;
  o.resolution = 64;
  o.samples = 500;
  const auto r = second_moment(m, t.domain, o);
  CHECK(r.delta == doctest::Approx(4.0 / 64));
  CHECK(r.values[0] < r.values[1]);
  CHECK(r.values[1] < r.values[2]);
  CHECK(r.extrapolated > r.values[2]);
  // (1/2, 1/2) is an off-diagonal degenerate displacement for AW(1).
  REQUIRE(r.degenerate_centres.size() == 1);
  CHECK(std::abs(std::abs(r.degenerate_centres[0][0]) - 0.5) <= 1e-9);
  CHECK(std::abs(std::abs(r.degenerate_centres[0][1]) - 0.5) <= 1e-9);
}

TEST_CASE("extended non-degeneracy sweep") {
  const auto t3 = make_domain(DomainKind::FlatTorus, 3, {1, 1, 1}, 8);
  CHECK(extended_nondegeneracy_sweep(wave(t3.domain, 2), t3.domain) > 1e-8);
  try {
    extended_nondegeneracy_sweep(wave(t3.domain, 1), t3.domain);
    FAIL("expected NonDegeneracySweepFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonDegeneracySweepFailure);
  }
}

}  // TEST_SUITE
