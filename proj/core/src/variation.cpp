#include "nodalab/variation.hpp"

#include "nodalab/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace nodalab {

namespace {

constexpr const char* kModule = "variation";

double volume_of(const FieldFunction& f, const Domain& domain, const GridChart& chart) {
  ExtractOptions opt;
  opt.with_jets = false;
  opt.boundary = false;
  return refined_volume(extract_nodal_set(f, domain, chart, opt), f, domain);
}

double max_abs_on_nodes(const FieldFunction& f, const Domain& domain, const GridChart& chart) {
  const auto q = chart_quadrature(domain, chart);
  double m = 0.0;
  for (const auto& p : q.points) m = std::max(m, std::abs(f.value(p)));
  return m;
}

double tilde_over_grad_sq(const Jet2& j) {
  const double g = j.grad.norm();
  const Vec3 n = j.grad / g;
  return (j.hess.trace() - n.dot(j.hess * n)) / (g * g);
}

// Interior quadrature: points and weights c_k with sum_k c_k h(p_k) ~ int_Z h tilde(f)/|df|^2.
// Segments use Simpson on the crossing vertices and the projected midpoint; triangles
// use the centroid.
struct InteriorRule {
  std::vector<Vec3> points;
  std::vector<double> weights;
};

InteriorRule interior_rule(const NodalSet& nodal) {
  InteriorRule r;
  const bool simpson = nodal.vertex_jets.size() == nodal.vertices.size();
  std::vector<double> vertex_length(simpson ? nodal.vertices.size() : 0, 0.0);
  for (const auto& e : nodal.elements) {
    const double a = e.tilde_laplacian / (e.grad_norm * e.grad_norm);
    if (!simpson || e.vertex_count != 2) {
      r.points.push_back(e.point);
      r.weights.push_back(e.weight * a);
      continue;
    }
    const double len = e.arc_length;
    r.points.push_back(e.point);
    r.weights.push_back(4.0 * len / 6.0 * a);
    vertex_length[e.vertices[0]] += len / 6.0;
    vertex_length[e.vertices[1]] += len / 6.0;
  }
  for (std::size_t v = 0; v < vertex_length.size(); ++v) {
    if (vertex_length[v] == 0.0) continue;
    r.points.push_back(nodal.vertices[v]);
    r.weights.push_back(vertex_length[v] * tilde_over_grad_sq(nodal.vertex_jets[v]));
  }
  return r;
}

}  // namespace

VariationReport first_variation(const NodalSet& nodal, const FieldFunction& h) {
  if (!nodal.has_jets) fail(ErrorKind::InvalidArgument, kModule, "first_variation", "nodal set was extracted without jets");
  VariationReport r;
  const InteriorRule rule = interior_rule(nodal);
  r.interior_term = 0.0;
  for (std::size_t k = 0; k < rule.points.size(); ++k) r.interior_term += rule.weights[k] * h.value(rule.points[k]);
  if (!std::isfinite(r.interior_term))
    fail(ErrorKind::IntegrandFailure, kModule, "first_variation", "integrand is not finite on Z");
  r.boundary_term = integrate_over_boundary(nodal, [&](const BoundaryElement& b) {
    return h.value(b.point) * b.g_n_nu / b.restricted_grad_norm;
  });
  r.total = r.boundary_term - r.interior_term;
  r.elements = nodal.elements.size();
  r.boundary_elements = nodal.boundary.size();
  return r;
}

VariationReport first_variation(const FieldFunction& f, const FieldFunction& h, const Domain& domain,
                                const GridChart& chart) {
  return first_variation(extract_nodal_set(f, domain, chart), h);
}

double default_fd_step(const FieldFunction& f, const FieldFunction& h, const Domain& domain, const GridChart& chart) {
  const double sf = max_abs_on_nodes(f, domain, chart);
  const double sh = max_abs_on_nodes(h, domain, chart);
  if (!(sh > 0.0)) return 1e-3;
  return 1e-3 * (sf > 0.0 ? sf : 1.0) / sh;
}

double fd_first_variation(const FieldFunction& f, const FieldFunction& h, const Domain& domain, const GridChart& chart,
                          double eps) {
  if (!(eps > 0.0)) fail(ErrorKind::InvalidArgument, kModule, "fd_first_variation", "step must be positive");
  auto central = [&](double e) {
    return (volume_of(f.plus(h, e), domain, chart) - volume_of(f.plus(h, -e), domain, chart)) / (2.0 * e);
  };
  const double d1 = central(eps), d2 = central(0.5 * eps);
  return (4.0 * d2 - d1) / 3.0;
}

double fd_second_variation(const FieldFunction& f, const FieldFunction& h, const Domain& domain,
                           const GridChart& chart, double eps) {
  if (!(eps > 0.0)) fail(ErrorKind::InvalidArgument, kModule, "fd_second_variation", "step must be positive");
  const double v0 = volume_of(f, domain, chart);
  auto second = [&](double e) {
    return (volume_of(f.plus(h, e), domain, chart) - 2.0 * v0 + volume_of(f.plus(h, -e), domain, chart)) / (e * e);
  };
  const double d1 = second(eps), d2 = second(0.5 * eps);
  return (4.0 * d2 - d1) / 3.0;
}

VariationMeasure variation_measure(const NodalSet& nodal) {
  if (!nodal.has_jets)
    fail(ErrorKind::InvalidArgument, kModule, "variation_measure", "nodal set was extracted without jets");
  VariationMeasure m;
  m.points.reserve(nodal.elements.size() + nodal.boundary.size());
  m.weights.reserve(m.points.capacity());
  const InteriorRule rule = interior_rule(nodal);
  for (std::size_t k = 0; k < rule.points.size(); ++k) {
    m.points.push_back(rule.points[k]);
    m.weights.push_back(-rule.weights[k]);
  }
  for (const auto& b : nodal.boundary) {
    m.points.push_back(b.point);
    m.weights.push_back(b.weight * b.g_n_nu / b.restricted_grad_norm);
  }
  for (double w : m.weights)
    if (!std::isfinite(w)) fail(ErrorKind::IntegrandFailure, kModule, "variation_measure", "non-finite nodal weight");
  return m;
}

double cm_norm_sq(const NodalSet& nodal, const CovarianceModel& model, double kernel_scale) {
  const VariationMeasure m = variation_measure(nodal);
  const std::size_t n = m.points.size();
  const auto kernel = model.closed_kernel
                          ? model.closed_kernel
                          : std::function<double(const Vec3&, const Vec3&)>(
                                [&model](const Vec3& p, const Vec3& q) { return model.kernel(p, q); });
  std::vector<double> rows(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += m.weights[j] * kernel(m.points[i], m.points[j]);
    rows[i] = m.weights[i] * s;
  });
  double total = 0.0;
  for (double r : rows) total += r;
  return kernel_scale * total;
}

double cm_norm_sq(const FieldFunction& f, const CovarianceModel& model, const Domain& domain, const GridChart& chart) {
  return cm_norm_sq(extract_nodal_set(f, domain, chart), model);
}

double second_variation_minimal(const FieldFunction& f, const FieldFunction& h, const Domain& domain,
                                const GridChart& chart, const SecondVariationOptions& options) {
  const NodalSet nodal = extract_nodal_set(f, domain, chart);
  const bool sphere = domain.kind == DomainKind::Sphere2;
  double max_h = 0.0;
  for (const auto& e : nodal.elements) max_h = std::max(max_h, std::abs(e.tilde_laplacian / e.grad_norm));
  if (max_h > options.minimality_threshold)
    fail(ErrorKind::NotMinimal, kModule, "second_variation_minimal",
         "zero set is not minimal (max |mean curvature| = " + std::to_string(max_h) + ")");
  const double ric = options.ricci.value_or(sphere ? 1.0 : 0.0);

  // psi = -h / |df| at the vertices
  std::vector<double> psi(nodal.vertices.size());
  parallel_for(psi.size(), [&](std::size_t i) {
    const Vec3& v = nodal.vertices[i];
    psi[i] = -h.value(v) / f.jet(v).grad.norm();
  });

  std::vector<double> contrib(nodal.elements.size());
  parallel_for(nodal.elements.size(), [&](std::size_t i) {
    const NodalElement& e = nodal.elements[i];
    const Vec3& A = nodal.vertices[e.vertices[0]];
    const Vec3& B = nodal.vertices[e.vertices[1]];
    double dpsi2;
    if (e.vertex_count == 2) {
      const double d = (psi[e.vertices[1]] - psi[e.vertices[0]]) / e.weight;
      dpsi2 = d * d;
    } else {
      // gradient of the linear interpolant on the triangle
      const Vec3 d1 = domain.displacement(A, B), d2 = domain.displacement(A, nodal.vertices[e.vertices[2]]);
      Eigen::Matrix2d G;
      G << d1.dot(d1), d1.dot(d2), d1.dot(d2), d2.dot(d2);
      const Eigen::Vector2d b(psi[e.vertices[1]] - psi[e.vertices[0]], psi[e.vertices[2]] - psi[e.vertices[0]]);
      dpsi2 = b.dot(G.ldlt().solve(b));
    }
    Mat3 P = Mat3::Identity() - e.normal * e.normal.transpose();
    if (sphere) {
      const Vec3 n = e.point.normalized();
      P -= n * n.transpose();
    } else if (domain.dims == 2) {
      P(2, 2) = 0.0;
    }
    const double ii2 = (P * e.jet.hess * P).squaredNorm() / (e.grad_norm * e.grad_norm);
    const double psi_e = -h.value(e.point) / e.grad_norm;
    contrib[i] = e.weight * (dpsi2 - psi_e * psi_e * (ii2 + ric));
  });
  double total = 0.0;
  for (double c : contrib) total += c;
  return total;
}

}  // namespace nodalab
