#include "nodalab/fixtures.hpp"
#include "nodalab/nodal.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace nodalab;

TEST_SUITE("nodal") {

TEST_CASE("sine stripes on the torus") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 64);
  const auto z = extract_nodal_set(fixtures::sine(0), t.domain, t.chart);
  CHECK(nodal_volume(z) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(component_count(z) == 2);
  CHECK(z.boundary.empty());
}

TEST_CASE("circle of radius one half on the square") {
  const auto dc = make_domain(DomainKind::Rectangle, 2, {2, 2}, 256, {-1, -1});
  const auto z = extract_nodal_set(fixtures::circle(0.5), dc.domain, dc.chart);
  const double h = dc.chart.spacing[0];
  CHECK(std::abs(nodal_volume(z) - kPi) <= 2.0 * h * h);
  CHECK(component_count(z) == 1);
  CHECK(z.boundary.empty());
  for (const auto& e : z.elements) {
    REQUIRE(e.weight > 0.0);
    REQUIRE(e.grad_norm >= 1e-6 * z.field_scale);
  }
  CHECK(z.max_residual <= 1e-9 * z.field_scale);
}

TEST_CASE("circle volume converges at second order") {
  std::vector<double> err;
  for (int res : {64, 128, 256, 512}) {
    const auto dc = make_domain(DomainKind::Rectangle, 2, {2, 2}, res, {-1, -1});
    err.push_back(std::abs(nodal_volume(extract_nodal_set(fixtures::circle(0.5), dc.domain, dc.chart)) - kPi));
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double ratio = err[i - 1] / err[i];
    CHECK(ratio >= 3.2);
    CHECK(ratio <= 4.8);
  }
}

TEST_CASE("linear field and height on the sphere give great circles") {
  const auto s = make_domain(DomainKind::Sphere2, 2, {}, 5);
  const auto eq = extract_nodal_set(fixtures::height(), s.domain, s.chart);
  CHECK(std::abs(nodal_volume(eq) / kTwoPi - 1.0) <= 5e-3);
  CHECK(component_count(eq) == 1);
  ModelParams p;
  const auto lin = build_model(ModelKind::LinearField, p, s.domain);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto z = extract_nodal_set(sample_field(lin, seed), s.domain, s.chart);
    CHECK(std::abs(nodal_volume(z) / kTwoPi - 1.0) <= 5e-3);
  }
}

TEST_CASE("empty nodal set has zero volume") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 32);
  const auto z = extract_nodal_set(fixtures::constant(1.0), t.domain, t.chart);
  CHECK(z.empty());
  CHECK_FALSE(z.any_sign_change);
  CHECK(nodal_volume(z) == 0.0);
  CHECK(component_count(z) == 0);
}

TEST_CASE("scale and sign-flip invariance") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 128);
  ModelParams p;
  p.n = 5;
  const auto m = build_model(ModelKind::ArithmeticWave, p, t.domain);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FieldFunction f = sample_field(m, seed);
    const double v = nodal_volume(extract_nodal_set(f, t.domain, t.chart));
    const double v3 = nodal_volume(extract_nodal_set(f.scaled(3.0), t.domain, t.chart));
    const double vm = nodal_volume(extract_nodal_set(f.scaled(-1.0), t.domain, t.chart));
    CHECK(std::abs(v3 - v) <= 1e-12 * v);
    CHECK(std::abs(vm - v) <= 1e-12 * v);
  }
}

TEST_CASE("component count matches the sign-region flood fill") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 128);
  for (double offset : {0.1, -0.3, 0.5}) {
    const FieldFunction f = fixtures::checker(offset);
    const auto z = extract_nodal_set(f, t.domain, t.chart);
    CHECK(component_count(z) == sign_region_count(f, t.domain, t.chart));
  }
}

TEST_CASE("integrals over the nodal set") {
  const auto dc = make_domain(DomainKind::Rectangle, 2, {4, 4}, 512, {-2, -2});
  const auto z = extract_nodal_set(fixtures::circle(1.0), dc.domain, dc.chart);
  const double v = nodal_volume(z);
  CHECK(integrate_over_nodal(z, [](const NodalElement&) { return 1.0; }) == doctest::Approx(v).epsilon(1e-15));
  CHECK(integrate_over_nodal(z, [](const NodalElement& e) { return e.grad_norm / e.grad_norm; }) ==
        doctest::Approx(v).epsilon(1e-15));
  const double h = dc.chart.spacing[0];
  const double curv = integrate_over_nodal(z, [](const NodalElement& e) {
    return e.tilde_laplacian / (e.grad_norm * e.grad_norm);
  });
  CHECK(std::abs(curv - kPi) <= 4.0 * h * h);
  auto bad = [](const NodalElement&) { return std::nan(""); };
  try {
    integrate_over_nodal(z, bad);
    FAIL("expected IntegrandFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IntegrandFailure);
  }
}

TEST_CASE("ball in a cube and a plane meeting the boundary") {
  const auto b3 = make_domain(DomainKind::Rectangle, 3, {2, 2, 2}, 48, {-1, -1, -1});
  const auto ball = extract_nodal_set(fixtures::ball(0.5), b3.domain, b3.chart);
  CHECK(nodal_volume(ball) == doctest::Approx(kPi).epsilon(0.01));
  CHECK(component_count(ball) == 1);
  CHECK(ball.boundary.empty());

  const auto cube = make_domain(DomainKind::Rectangle, 3, {1, 1, 1}, 32, {-0.5, -0.5, -0.5});
  const auto plane = extract_nodal_set(fixtures::linear(Vec3(0, 0, 1)).plus(fixtures::constant(1.0), 0.1),
                                       cube.domain, cube.chart);
  CHECK(nodal_volume(plane) == doctest::Approx(1.0).epsilon(1e-12));
  double perimeter = 0.0;
  for (const auto& e : plane.boundary) {
    perimeter += e.weight;
    CHECK(std::abs(e.g_n_nu) <= 1e-12);  // orthogonal intersection
  }
  CHECK(perimeter == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("boundary trace of a line through a rectangle") {
  const auto dc = make_domain(DomainKind::Rectangle, 2, {1, 1}, 64);
  // x + y/4 = 1/2 runs from (1/2, 0) to (1/4, 1).
  const FieldFunction f = fixtures::linear(Vec3(1, 0.25, 0)).plus(fixtures::constant(1.0), -0.5);
  const auto z = extract_nodal_set(f, dc.domain, dc.chart);
  CHECK(nodal_volume(z) == doctest::Approx(std::sqrt(1.0625)).epsilon(1e-12));
  REQUIRE(z.boundary.size() == 2);
  const double expected = 0.25 / std::sqrt(1.0625);
  for (const auto& e : z.boundary) {
    CHECK(e.weight == 1.0);
    CHECK(std::abs(e.g_n_nu) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(e.restricted_grad_norm == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("random samples pass the regularity guard") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 64);
  ModelParams p;
  p.n = 5;
  const auto m = build_model(ModelKind::ArithmeticWave, p, t.domain);
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    CHECK_NOTHROW(extract_nodal_set(sample_field(m, seed), t.domain, t.chart));
}

TEST_CASE("nodal set CSV export") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 16);
  const auto z = extract_nodal_set(fixtures::sine(1), t.domain, t.chart);
  std::ostringstream out;
  write_nodal_csv(z, out);
  const std::string text = out.str();
  CHECK(text.rfind("kind,x,y,z,weight", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == z.elements.size() + 1);
}

}  // TEST_SUITE
