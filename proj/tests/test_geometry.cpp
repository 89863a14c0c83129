#include "nodalab/geometry.hpp"
#include "nodalab/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace nodalab;

TEST_SUITE("geometry") {

TEST_CASE("unit torus has area one and no boundary") {
  const auto dc = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 64);
  CHECK(dc.domain.volume() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_FALSE(dc.domain.has_boundary());
  CHECK(dc.domain.faces().empty());
  CHECK(std::abs(grid_volume(dc.domain, dc.chart) - 1.0) <= 1e-10);
}

TEST_CASE("unit cube boundary area is six") {
  const auto dc = make_domain(DomainKind::Rectangle, 3, {1, 1, 1}, 32);
  CHECK(dc.domain.boundary_volume() == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(dc.domain.faces().size() == 6);
  CHECK(std::abs(grid_volume(dc.domain, dc.chart) - 1.0) <= 1e-10);
  for (const auto& face : dc.domain.faces()) CHECK(face.normal.norm() == doctest::Approx(1.0));
}

TEST_CASE("rectangle grid volume matches the product of extents") {
  const auto dc = make_domain(DomainKind::Rectangle, 2, {2.5, 0.75}, {40, 12, 1}, {-1, 3});
  CHECK(std::abs(grid_volume(dc.domain, dc.chart) / 1.875 - 1.0) <= 1e-10);
  const auto t3 = make_domain(DomainKind::FlatTorus, 3, {1, 2, 3}, 16);
  CHECK(std::abs(grid_volume(t3.domain, t3.chart) / 6.0 - 1.0) <= 1e-10);
}

TEST_CASE("spacing is extent over resolution") {
  const auto dc = make_domain(DomainKind::Rectangle, 2, {2, 3}, {20, 30, 1});
  CHECK(dc.chart.spacing[0] == 2.0 / 20);
  CHECK(dc.chart.spacing[1] == 3.0 / 30);
  CHECK(dc.chart.nodes_along(0) == 21);  // boundary nodes included
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 16);
  CHECK(t.chart.periodic);
  CHECK(t.chart.nodes_along(0) == 16);
}

TEST_CASE("icosphere area converges to 4 pi at second order") {
  // Polyhedral area deficit should shrink by about 4 per subdivision.
  double previous = 0.0;
  for (int level = 2; level <= 5; ++level) {
    const SphereMesh mesh = make_icosphere(level);
    const double deficit = 4.0 * kPi - mesh.flat_area();
    CHECK(deficit > 0.0);
    if (level > 2) CHECK(previous / deficit == doctest::Approx(4.0).epsilon(0.05));
    previous = deficit;
    CHECK(std::abs(mesh.spherical_area() - 4.0 * kPi) <= 1e-10);
  }
  const auto dc = make_domain(DomainKind::Sphere2, 2, {}, 5);
  CHECK(std::abs(dc.domain.mesh->flat_area() / (4.0 * kPi) - 1.0) <= 1e-3);
  CHECK(std::abs(grid_volume(dc.domain, dc.chart) - 4.0 * kPi) <= 1e-10);
}

TEST_CASE("invalid domains are rejected") {
  CHECK_THROWS_AS(make_domain(DomainKind::Sphere2, 3, {}, 3), Error);
  CHECK_THROWS_AS(make_domain(DomainKind::FlatTorus, 2, {1, -1}, 16), Error);
  CHECK_THROWS_AS(make_domain(DomainKind::Rectangle, 2, {1, 0}, 16), Error);
  CHECK_THROWS_AS(make_domain(DomainKind::Rectangle, 4, {1, 1, 1, 1}, 16), Error);
  CHECK_THROWS_AS(domain_kind_from_string("Klein"), Error);
}

TEST_CASE("geodesic distance examples") {
  const auto torus = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 16).domain;
  CHECK(geodesic_distance(torus, {0.1, 0, 0}, {0.9, 0, 0}) == doctest::Approx(0.2).epsilon(1e-14));
  const auto rect = make_domain(DomainKind::Rectangle, 2, {1, 1}, 16).domain;
  CHECK(geodesic_distance(rect, {0.1, 0.2, 0}, {0.4, 0.6, 0}) == doctest::Approx(0.5).epsilon(1e-14));
  const auto sphere = make_domain(DomainKind::Sphere2, 2, {}, 2).domain;
  CHECK(geodesic_distance(sphere, {0, 0, 1}, {1, 0, 0}) == doctest::Approx(kPi / 2).epsilon(1e-14));
  CHECK(geodesic_distance(sphere, {0, 0, 1}, {0, 0, -1}) == doctest::Approx(kPi).epsilon(1e-12));
}

TEST_CASE("geodesic distance is a metric on random triples") {
  Rng rng(7);
  const auto torus = make_domain(DomainKind::FlatTorus, 3, {1, 2, 1}, 8).domain;
  const auto rect = make_domain(DomainKind::Rectangle, 2, {3, 1}, 8).domain;
  const auto sphere = make_domain(DomainKind::Sphere2, 2, {}, 1).domain;
  auto flat_point = [&](const Domain& d) {
    Vec3 p = Vec3::Zero();
    for (int a = 0; a < d.dims; ++a) p[a] = d.origin[a] + d.extents[a] * rng.uniform();
    return p;
  };
  auto sphere_point = [&]() { return Vec3(rng.normal(), rng.normal(), rng.normal()).normalized(); };
  for (int i = 0; i < 1000; ++i) {
    for (int which = 0; which < 3; ++which) {
      const Domain& d = which == 0 ? torus : (which == 1 ? rect : sphere);
      const double tol = which == 2 ? 1e-9 : 1e-12;
      Vec3 a, b, c;
      if (which == 2) {
        a = sphere_point(), b = sphere_point(), c = sphere_point();
      } else {
        a = flat_point(d), b = flat_point(d), c = flat_point(d);
      }
      const double ab = geodesic_distance(d, a, b), bc = geodesic_distance(d, b, c), ac = geodesic_distance(d, a, c);
      REQUIRE(ac <= ab + bc + tol);
      REQUIRE(ab >= 0.0);
      REQUIRE(std::abs(ab - geodesic_distance(d, b, a)) <= tol);
      REQUIRE(geodesic_distance(d, a, a) <= tol);
    }
  }
}

TEST_CASE("torus wrap and displacement use the minimal image") {
  const auto torus = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 16).domain;
  const Vec3 w = torus.wrap({1.25, -0.25, 0});
  CHECK(w[0] == doctest::Approx(0.25));
  CHECK(w[1] == doctest::Approx(0.75));
  const Vec3 d = torus.displacement({0.9, 0.1, 0}, {0.1, 0.9, 0});
  CHECK(d[0] == doctest::Approx(0.2));
  CHECK(d[1] == doctest::Approx(-0.2));
}

TEST_CASE("tangent frame is orthonormal and tangent") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const auto [u, v] = tangent_frame(p);
    CHECK(std::abs(u.dot(p)) <= 1e-14);
    CHECK(std::abs(v.dot(p)) <= 1e-14);
    CHECK(std::abs(u.dot(v)) <= 1e-14);
    CHECK(u.norm() == doctest::Approx(1.0));
    CHECK(v.norm() == doctest::Approx(1.0));
  }
}

}  // TEST_SUITE
