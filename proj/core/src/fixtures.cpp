#include "nodalab/fixtures.hpp"

#include <cmath>

namespace nodalab::fixtures {

using std::cos;
using std::sin;

FieldFunction circle(double r, double cx, double cy) {
  return make("circle", [=](auto x, auto y, auto) { return square(x - cx) + square(y - cy) - r * r; });
}

FieldFunction ball(double r) {
  return make("ball", [=](auto x, auto y, auto z) { return x * x + y * y + z * z - r * r; });
}

FieldFunction paraboloid(double sign) {
  return make("paraboloid", [=](auto x, auto y, auto) { return sign * (x * x + y * y); });
}

FieldFunction saddle() {
  return make("saddle", [](auto x, auto y, auto) { return x * x - y * y; });
}

FieldFunction sine(int axis, double freq, double amp, double phase) {
  return make("sine", [=](auto x, auto y, auto z) {
    const auto& u = axis == 0 ? x : (axis == 1 ? y : z);
    return amp * sin(kTwoPi * freq * u + phase);
  });
}

FieldFunction cosine(int axis, double freq, double amp) {
  return make("cosine", [=](auto x, auto y, auto z) {
    const auto& u = axis == 0 ? x : (axis == 1 ? y : z);
    return amp * cos(kTwoPi * freq * u);
  });
}

FieldFunction cos_sum() {
  return make("cos_sum", [](auto x, auto y, auto) { return cos(kTwoPi * x) + cos(kTwoPi * y); });
}

FieldFunction checker(double offset) {
  return make("checker", [=](auto x, auto y, auto) { return sin(kTwoPi * x) * sin(kTwoPi * y) + offset; });
}

FieldFunction compensation(double kappa) {
  return make("compensation", [=](auto x, auto y, auto) {
    const auto w = x * x - 1.0;
    return x * (w * w) + kappa * (x * (y * y));
  });
}

FieldFunction boundary_cap() {
  return make("boundary_cap", [](auto x, auto y, auto) { return y + x * x; });
}

FieldFunction linear(const Vec3& a, bool sphere) {
  const double a0 = a[0], a1 = a[1], a2 = a[2];
  return make("linear", [=](auto x, auto y, auto z) { return a0 * x + a1 * y + a2 * z; }, sphere);
}

FieldFunction height() {
  return make("height", [](auto, auto, auto z) { return 1.0 * z; }, true);
}

FieldFunction constant(double c, bool sphere) { return FieldFunction::constant(c, sphere); }

std::string fixture_names() {
  return "circle, ball, paraboloid, saddle, sine, cosine, cos_sum, checker, compensation, boundary_cap, linear, "
         "height, constant";
}

FieldFunction by_name(const std::string& name, const std::vector<double>& params, bool sphere) {
  if (sphere) return by_name(name, params, false).restricted_to_sphere();
  auto arg = [&](std::size_t i, double fallback) { return i < params.size() ? params[i] : fallback; };
  if (name == "circle") return circle(arg(0, 0.5), arg(1, 0.0), arg(2, 0.0));
  if (name == "ball") return ball(arg(0, 0.5));
  if (name == "paraboloid") return paraboloid(arg(0, 1.0));
  if (name == "saddle") return saddle();
  if (name == "sine") return sine(static_cast<int>(arg(0, 0)), arg(1, 1.0), arg(2, 1.0), arg(3, 0.0));
  if (name == "cosine") return cosine(static_cast<int>(arg(0, 0)), arg(1, 1.0), arg(2, 1.0));
  if (name == "cos_sum") return cos_sum();
  if (name == "checker") return checker(arg(0, 0.1));
  if (name == "compensation") return compensation(arg(0, 1.0));
  if (name == "boundary_cap") return boundary_cap();
  if (name == "linear") return linear(Vec3(arg(0, 0.0), arg(1, 0.0), arg(2, 1.0)), params.size() > 3 && params[3] != 0);
  if (name == "height") return height();
  if (name == "constant") return constant(arg(0, 1.0));
  fail(ErrorKind::Config, "fields", "fixture", "unknown fixture '" + name + "'; valid names: " + fixture_names());
}

}  // namespace nodalab::fixtures
