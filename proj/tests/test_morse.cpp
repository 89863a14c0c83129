#include "nodalab/fixtures.hpp"
#include "nodalab/morse.hpp"
#include "nodalab/nodal.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace nodalab;

namespace {

std::vector<int> sorted_indices(const CriticalLevel& level) {
  std::vector<int> out;
  for (const auto& z : level.zeros) out.push_back(z.index);
  std::sort(out.begin(), out.end());
  return out;
}

const CriticalLevel* level_at(const LevelProfile& p, double t) {
  for (const auto& c : p.critical)
    if (std::abs(c.t - t) <= 1e-8) return &c;
  return nullptr;
}

}  // namespace

TEST_SUITE("morse") {

TEST_CASE("Morse index of diagonal Hessians") {
  CHECK(morse_index(Eigen::Vector2d(2, 2).asDiagonal().toDenseMatrix()) == 0);
  CHECK(morse_index(Eigen::Vector2d(2, -2).asDiagonal().toDenseMatrix()) == 1);
  CHECK(morse_index(Eigen::Vector3d(-1, -3, -5).asDiagonal().toDenseMatrix()) == 3);
  try {
    morse_index(Eigen::Vector2d(1, 1e-9).asDiagonal().toDenseMatrix());
    FAIL("expected MorseFloorViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MorseFloorViolation);
  }
}

TEST_CASE("critical zeros of the paraboloid and the saddle") {
  const auto sq = make_domain(DomainKind::Rectangle, 2, {2, 2}, 64, {-1, -1});
  auto z = find_critical_zeros_on_segment(fixtures::circle(0.5), fixtures::constant(1.0), 0, 1, sq.domain);
  REQUIRE(z.size() == 1);
  CHECK(z[0].point.norm() <= 1e-10);
  CHECK(z[0].t == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(z[0].index == 0);
  CHECK(z[0].certificate != 0.0);

  z = find_critical_zeros_on_segment(fixtures::circle(0.5), fixtures::constant(-1.0), -1, 0, sq.domain);
  REQUIRE(z.size() == 1);
  CHECK(z[0].t == doctest::Approx(-0.25).epsilon(1e-12));

  z = find_critical_zeros_on_segment(fixtures::saddle(), fixtures::constant(-1.0), -0.5, 0.5, sq.domain);
  REQUIRE(z.size() == 1);
  CHECK(z[0].point.norm() <= 1e-10);
  CHECK(std::abs(z[0].t) <= 1e-12);
  CHECK(z[0].index == 1);
  CHECK(z[0].stratum == Stratum::Interior);
}

TEST_CASE("critical levels of the separable torus potential") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 64);
  const auto z = find_critical_zeros_on_segment(fixtures::cos_sum(), fixtures::constant(-1.0), -2.5, 2.5, t.domain);
  REQUIRE(z.size() == 4);
  std::vector<std::pair<double, int>> levels;
  for (const auto& c : z) levels.emplace_back(std::round(c.t * 1e8) / 1e8, c.index);
  std::sort(levels.begin(), levels.end());
  CHECK(levels[0] == std::pair{-2.0, 0});
  CHECK(levels[1] == std::pair{0.0, 1});
  CHECK(levels[2] == std::pair{0.0, 1});
  CHECK(levels[3] == std::pair{2.0, 2});
}

TEST_CASE("profile templates match the indices in two dimensions") {
  const auto sq = make_domain(DomainKind::Rectangle, 2, {2, 2}, 256, {-1, -1});
  ProfileOptions po;
  struct Case {
    FieldFunction f;
    Template expected;
    int index;
  };
  for (const auto& c : {Case{fixtures::paraboloid(1.0), Template::G0, 0}, Case{fixtures::saddle(), Template::G1, 1},
                        Case{fixtures::paraboloid(-1.0), Template::G2, 2}}) {
    const auto prof = level_profile(c.f, sq.domain, sq.chart, -0.5, 0.5, 11, po);
    REQUIRE(prof.critical.size() == 1);
    const auto& lv = prof.critical[0];
    CHECK(lv.match == c.expected);
    REQUIRE(lv.zeros.size() == 1);
    CHECK(lv.zeros[0].index == c.index);
    for (const auto* fit : {&lv.left, &lv.right})
      if (*fit && (*fit)->shape == Shape::PowerLaw) CHECK(std::abs((*fit)->alpha + 0.5) <= 0.05);
  }
}

TEST_CASE("paraboloid profile near the minimum") {
  const auto sq = make_domain(DomainKind::Rectangle, 2, {2, 2}, 512, {-1, -1});
  const auto prof = level_profile(fixtures::paraboloid(1.0), sq.domain, sq.chart, -0.5, 0.5, 11);
  for (const auto& s : prof.samples)
    if (s.t > 1e-3 && s.t < 0.5) {
      CAPTURE(s.t);
      CHECK(s.phi == doctest::Approx(kTwoPi * std::sqrt(s.t)).epsilon(2e-3));
      CHECK(s.dphi == doctest::Approx(kPi / std::sqrt(s.t)).epsilon(0.02));
    }
}

TEST_CASE("torus potential profile") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 256);
  const auto prof = level_profile(fixtures::cos_sum(), t.domain, t.chart, -2.5, 2.5, 21);
  REQUIRE(prof.critical.size() == 3);
  const auto* lo = level_at(prof, -2.0);
  const auto* mid = level_at(prof, 0.0);
  const auto* hi = level_at(prof, 2.0);
  REQUIRE(lo);
  REQUIRE(mid);
  REQUIRE(hi);
  CHECK(sorted_indices(*lo) == std::vector<int>{0});
  CHECK(sorted_indices(*mid) == std::vector<int>{1, 1});
  CHECK(sorted_indices(*hi) == std::vector<int>{2});
  CHECK(lo->match == Template::G0);
  CHECK(mid->match == Template::G1);
  CHECK(hi->match == Template::G2);
}

TEST_CASE("boundary critical point") {
  const auto rect = make_domain(DomainKind::Rectangle, 2, {2, 1}, 256, {-1, 0});
  const auto prof = level_profile(fixtures::boundary_cap(), rect.domain, rect.chart, -0.5, 0.5, 11);
  REQUIRE(prof.critical.size() == 1);
  const auto& lv = prof.critical[0];
  REQUIRE(lv.zeros.size() == 1);
  CHECK(lv.zeros[0].stratum == Stratum::Boundary);
  CHECK(lv.zeros[0].index == 0);
  REQUIRE(lv.right);
  CHECK(lv.right->shape == Shape::PowerLaw);
  CHECK(std::abs(lv.right->alpha + 0.5) <= 0.05);
  CHECK(lv.match == Template::G0);
}

TEST_CASE("index-0 and index-2 points on one level") {
  const auto comp = make_domain(DomainKind::Rectangle, 2, {3.2, 2}, 320, {-1.6, -1});
  const auto prof = level_profile(fixtures::compensation(), comp.domain, comp.chart, -0.2, 0.2, 11);
  REQUIRE(prof.critical.size() == 1);
  CHECK(sorted_indices(prof.critical[0]) == std::vector<int>{0, 2});
  CHECK(prof.critical[0].match == Template::G0PlusG2);
}

TEST_CASE("height on the sphere") {
  const auto s = make_domain(DomainKind::Sphere2, 2, {}, 5);
  const auto prof = level_profile(fixtures::height(), s.domain, s.chart, -1.2, 1.2, 25);
  REQUIRE(prof.critical.size() == 2);
  CHECK(prof.critical[0].t == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(prof.critical[1].t == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(sorted_indices(prof.critical[0]) == std::vector<int>{0});
  CHECK(sorted_indices(prof.critical[1]) == std::vector<int>{2});
  for (const auto& sm : prof.samples)
    if (std::abs(sm.t) < 0.9) {
      CAPTURE(sm.t);
      CHECK(sm.phi == doctest::Approx(kTwoPi * std::sqrt(1 - sm.t * sm.t)).epsilon(5e-3));
    }
}

TEST_CASE("level volume is continuous across a critical value") {
  // Index 0 (one-sided birth) and an index-1 saddle on an asymmetric box.
  const auto sq = make_domain(DomainKind::Rectangle, 2, {2, 2}, 512, {-1, -1});
  const auto box = make_domain(DomainKind::Rectangle, 2, {2, 1.4}, 512, {-1, -0.7});
  const std::vector<std::pair<FieldFunction, const DomainChart*>> cases = {{fixtures::paraboloid(1.0), &sq},
                                                                           {fixtures::saddle(), &box}};
  for (const auto& [f, dc] : cases) {
    std::vector<double> gaps;
    for (double d = 0.04; d > 0.002; d /= 2) {
      const double up = nodal_volume(extract_nodal_set(f.plus(fixtures::constant(1.0), -d), dc->domain, dc->chart));
      const double dn = nodal_volume(extract_nodal_set(f.plus(fixtures::constant(1.0), d), dc->domain, dc->chart));
      gaps.push_back(std::abs(up - dn));
    }
    for (std::size_t i = 1; i < gaps.size(); ++i) {
      CAPTURE(i);
      CHECK(gaps[i] < gaps[i - 1]);
      // Order at least one half: the gap shrinks by >= sqrt(2) per halving.
      CHECK(std::log(gaps[i - 1] / gaps[i]) / std::log(2.0) >= 0.5 - 0.05);
    }
  }
}

TEST_CASE("model level integrals") {
  const MatX i2 = MatX::Identity(2, 2), i3 = MatX::Identity(3, 3);
  for (double t : {1e-2, 1e-3, 1e-4})
    CHECK(model_level_integral(2, 0, i2, LevelIntegrand::Volume, t, 1.0) ==
          doctest::Approx(kTwoPi * std::sqrt(t)).epsilon(1e-12));

  // Saddle x^2 - y^2 = t inside |y| < eps against marching squares.
  const double t = 0.01, eps = 0.5;
  const auto strip = make_domain(DomainKind::Rectangle, 2, {2, 2 * eps}, 1024, {-1, -eps});
  const double marched = nodal_volume(
      extract_nodal_set(fixtures::saddle().plus(fixtures::constant(1.0), -t), strip.domain, strip.chart));
  CHECK(std::abs(model_level_integral(1, 1, i2, LevelIntegrand::Volume, t, eps) / marched - 1.0) <= 5e-3);

  std::vector<double> ts, vals;
  for (double s : {1e-3, 5e-4, 2.5e-4}) {
    ts.push_back(s);
    vals.push_back(model_level_integral(2, 1, i3, LevelIntegrand::MeanCurvature, s, 1.0));
  }
  const LogFit lf = fit_log(ts, vals);
  CHECK(lf.r2 >= 0.99);
  CHECK(lf.c > 0.0);

  MatX g4 = MatX::Zero(4, 4);
  g4.diagonal() << 1.0, 1.5, 0.7, 2.0;
  std::vector<double> v4;
  for (double s = 1e-4; s >= 0.99e-6; s /= std::sqrt(10.0))
    v4.push_back(model_level_integral(2, 2, g4, LevelIntegrand::MeanCurvature, s, 1.0));
  CHECK(relative_variation(v4) <= 0.10);
}

TEST_CASE("exponent fit needs five samples per side") {
  try {
    fit_exponent(std::vector<double>{1e-1, 1e-2, 1e-3}, std::vector<double>{1, 3, 10}, Side::Right);
    FAIL("expected InsufficientSamples");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientSamples);
  }
  // Pure power law with a plateau.
  std::vector<double> tau, d;
  for (int j = 0; j <= 10; ++j) {
    tau.push_back(std::ldexp(0.1, -j));
    d.push_back(2.0 / std::sqrt(tau.back()) + 0.7);
  }
  const ExponentFit fit = fit_exponent(tau, d, Side::Right);
  CHECK(fit.shape == Shape::PowerLaw);
  CHECK(fit.alpha == doctest::Approx(-0.5).epsilon(1e-3));
  CHECK(fit.sign == 1);
  CHECK(fit.plateau == doctest::Approx(0.7).epsilon(1e-3));
}

TEST_CASE("random segments are transverse") {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 64);
  ModelParams p;
  p.n = 5;
  const auto m = build_model(ModelKind::ArithmeticWave, p, t.domain);
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto scan = scan_segment(sample_field(m, 2 * i), sample_field(m, 2 * i + 1), -1.0, 1.0, t.domain);
    for (const auto& z : scan.zeros) {
      CHECK(z.certificate != 0.0);
      CHECK(z.residual <= 1e-8);
    }
  }
}

}  // TEST_SUITE
