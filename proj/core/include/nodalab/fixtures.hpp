#pragma once

#include "nodalab/fields.hpp"

#include <string>
#include <vector>

// Deterministic closed-form test functions with exact jets.
namespace nodalab::fixtures {

// Wrap a generic callable F(x, y, z) usable with double and Jet2 arguments.
template <class F>
FieldFunction make(std::string name, F f, bool sphere = false) {
  ClosedForm form;
  form.name = std::move(name);
  form.value = [f](const Vec3& p) { return f(p[0], p[1], p[2]); };
  form.jet = [f](const Vec3& p) {
    return f(Jet2::coordinate(0, p[0]), Jet2::coordinate(1, p[1]), Jet2::coordinate(2, p[2]));
  };
  return FieldFunction::closed_form(std::move(form), sphere);
}

// x^2 + y^2 - r^2 about (cx, cy)
FieldFunction circle(double r, double cx = 0.0, double cy = 0.0);
// x^2 + y^2 + z^2 - r^2
FieldFunction ball(double r);
// sign * (x^2 + y^2)
FieldFunction paraboloid(double sign = 1.0);
// x^2 - y^2
FieldFunction saddle();
// amp * sin(2 pi freq x_axis + phase)
FieldFunction sine(int axis, double freq = 1.0, double amp = 1.0, double phase = 0.0);
// amp * cos(2 pi freq x_axis)
FieldFunction cosine(int axis, double freq = 1.0, double amp = 1.0);
// cos(2 pi x) + cos(2 pi y)
FieldFunction cos_sum();
// sin(2 pi x) sin(2 pi y) + offset
FieldFunction checker(double offset);
// x (x^2 - 1)^2 + kappa x y^2: index-0 point at (1,0) and index-2 point at
// (-1,0), both on level 0.
FieldFunction compensation(double kappa = 1.0);
// y + x^2 on a rectangle with bottom face y = 0.
FieldFunction boundary_cap();
// a . x
FieldFunction linear(const Vec3& a, bool sphere = false);
// x_3 on the unit sphere
FieldFunction height();
FieldFunction constant(double c, bool sphere = false);

// Named lookup used by the command line tool; `sphere` reads the formula on
// the unit sphere.
FieldFunction by_name(const std::string& name, const std::vector<double>& params = {}, bool sphere = false);
std::string fixture_names();

}  // namespace nodalab::fixtures
