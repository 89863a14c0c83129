#include "nodalab/fields.hpp"
#include "nodalab/gaussian.hpp"
#include "nodalab/quadrature.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace nodalab;

TEST_SUITE("gaussian") {

TEST_CASE("independent blocks condition to the marginal") {
  MatX c = MatX::Zero(4, 4);
  c.topLeftCorner(2, 2) << 2, 0.5, 0.5, 1;
  c.bottomRightCorner(2, 2) << 3, -1, -1, 2;
  const auto g = condition(make_gaussian(c), {0, 1}, Eigen::Vector2d(0.3, -0.2));
  CHECK((g.covariance - c.bottomRightCorner(2, 2)).norm() <= 1e-14);
  CHECK(g.mean.norm() <= 1e-14);
}

TEST_CASE("correlated pair regression") {
  for (double rho : {-0.9, -0.3, 0.0, 0.5, 0.99}) {
    MatX c(2, 2);
    c << 1, rho, rho, 1;
    const auto g = condition(make_gaussian(c), {0}, VecX::Zero(1));
    CHECK(g.mean[0] == doctest::Approx(0.0));
    CHECK(g.covariance(0, 0) == doctest::Approx(1 - rho * rho).epsilon(1e-14));
    const auto h = condition(make_gaussian(c), {0}, VecX::Constant(1, 2.0));
    CHECK(h.mean[0] == doctest::Approx(2 * rho).epsilon(1e-14));
  }
}

TEST_CASE("singular observed block raises DegenerateConditioning") {
  MatX c(3, 3);
  c << 1, 1, 0.2, 1, 1, 0.2, 0.2, 0.2, 1;
  try {
    condition(make_gaussian(c), {0, 1}, VecX::Zero(2));
    FAIL("expected DegenerateConditioning");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateConditioning);
    CHECK(e.numerical());
  }
}

TEST_CASE("make_gaussian validates symmetry and PSD") {
  MatX asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(make_gaussian(asym), Error);
  MatX neg(2, 2);
  neg << 1, 2, 2, 1;
  CHECK_THROWS_AS(make_gaussian(neg), Error);
  MatX tiny(2, 2);
  tiny << 1, 1, 1, 1 - 1e-13;  // eigenvalue just below zero is clamped
  CHECK_NOTHROW(make_gaussian(tiny));
}

TEST_CASE("conditioning is idempotent and preserves PSD") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    MatX a(7, 7);
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j) a(i, j) = rng.normal();
    const MatX c = a * a.transpose() + 0.1 * MatX::Identity(7, 7);
    const VecX obs = Eigen::Vector2d(rng.normal(), rng.normal());
    const auto once = condition(make_gaussian(c), {1, 4}, obs);
    Eigen::SelfAdjointEigenSolver<MatX> es(once.covariance);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    // The residual is uncorrelated with the observations, so regressing it on
    // them a second time changes nothing.
    MatX joint2 = MatX::Zero(7, 7);
    joint2(0, 0) = c(1, 1);
    joint2(0, 1) = joint2(1, 0) = c(1, 4);
    joint2(1, 1) = c(4, 4);
    joint2.bottomRightCorner(5, 5) = once.covariance;
    VecX mean2 = VecX::Zero(7);
    mean2.head(2) = obs;
    mean2.tail(5) = once.mean;
    const auto twice = condition(make_gaussian(joint2, {}, mean2), {0, 1}, obs);
    CHECK((twice.covariance - once.covariance).norm() <= 1e-12 * c.norm());
    CHECK((twice.mean - once.mean).norm() <= 1e-12 * (1 + once.mean.norm()));
  }
}

TEST_CASE("nested conditioning equals joint conditioning") {
  Rng rng(8);
  MatX a(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) a(i, j) = rng.normal();
  const MatX c = a * a.transpose() + 0.2 * MatX::Identity(6, 6);
  const auto joint = make_gaussian(c);
  const VecX v = Eigen::Vector2d(0.4, -1.1);
  const auto both = condition(joint, {0, 1}, v);
  const auto step1 = condition(joint, {0}, v.head(1));
  const auto step2 = condition(make_gaussian(step1.covariance, {}, step1.mean), {0}, v.tail(1));
  CHECK((step2.covariance - both.covariance).norm() <= 1e-12 * c.norm());
  CHECK((step2.mean - both.mean).norm() <= 1e-12 * c.norm());
}

TEST_CASE("jet conditional law matches regression samples") {
  const auto dc = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 16);
  ModelParams p;
  p.n = 5;
  const auto m = build_model(ModelKind::ArithmeticWave, p, dc.domain);
  const Vec3 x(0.1, 0.2, 0), y(0.37, 0.26, 0);
  // (X(p), X(q), dX(p), dX(q)) is 6-dimensional.
  const MatX fp = jet_features(m, x, 1), fq = jet_features(m, y, 1);
  MatX f(6, fp.cols());
  f << fp.row(0), fq.row(0), fp.bottomRows(2), fq.bottomRows(2);
  const auto joint = make_gaussian(f * f.transpose());
  const auto cond = condition(joint, {0, 1}, VecX::Zero(2));
  const GaussianSampler sampler(cond);
  Rng rng(17);
  const int n = 100000;
  MatX s2 = MatX::Zero(4, 4), s4 = MatX::Zero(4, 4);
  for (int i = 0; i < n; ++i) {
    const VecX z = sampler.draw(rng);
    const MatX zz = z * z.transpose();
    s2 += zz;
    s4 += zz.cwiseProduct(zz);
  }
  s2 /= n;
  s4 /= n;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double se = std::sqrt((s4(i, j) - s2(i, j) * s2(i, j)) / n);
      CHECK(std::abs(s2(i, j) - cond.covariance(i, j)) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("Gauss rules integrate polynomials exactly") {
  const Rule1D gl = gauss_legendre(8, 0.0, 2.0);
  double s = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * std::pow(gl.nodes[i], 7);
  CHECK(s == doctest::Approx(256.0 / 8.0).epsilon(1e-13));
  const Rule1D gh = gauss_hermite_normal(10);
  double m4 = 0.0;
  for (std::size_t i = 0; i < gh.nodes.size(); ++i) m4 += gh.weights[i] * std::pow(gh.nodes[i], 4);
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
  const Rule1D lg = gauss_laguerre(10, 1.5);  // weight x^1.5 e^-x
  double m2 = 0.0;
  for (std::size_t i = 0; i < lg.nodes.size(); ++i) m2 += lg.weights[i] * lg.nodes[i] * lg.nodes[i];
  CHECK(m2 == doctest::Approx(std::tgamma(4.5)).epsilon(1e-11));
}

}  // TEST_SUITE
