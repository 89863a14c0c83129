#include "nodalab/geometry.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace nodalab {

const char* to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::FlatTorus: return "FlatTorus";
    case DomainKind::Rectangle: return "Rectangle";
    case DomainKind::Sphere2: return "Sphere2";
  }
  return "FlatTorus";
}

DomainKind domain_kind_from_string(const std::string& name) {
  if (name == "FlatTorus" || name == "torus") return DomainKind::FlatTorus;
  if (name == "Rectangle" || name == "rectangle" || name == "box") return DomainKind::Rectangle;
  if (name == "Sphere2" || name == "sphere") return DomainKind::Sphere2;
  fail(ErrorKind::Config, "geometry", "make_domain",
       "unknown domain kind '" + name + "' (valid: FlatTorus, Rectangle, Sphere2)");
}

namespace {

double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double num = std::abs(a.dot(b.cross(c)));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

}  // namespace

double SphereMesh::flat_area() const {
  double area = 0.0;
  for (const auto& t : triangles) {
    const Vec3& a = vertices[t[0]];
    const Vec3& b = vertices[t[1]];
    const Vec3& c = vertices[t[2]];
    area += 0.5 * (b - a).cross(c - a).norm();
  }
  return area;
}

double SphereMesh::spherical_area() const {
  double area = 0.0;
  for (const auto& t : triangles) area += spherical_triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
  return area;
}

double SphereMesh::mean_edge_length() const {
  if (edges.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : edges) s += (vertices[e[0]] - vertices[e[1]]).norm();
  return s / static_cast<double>(edges.size());
}

SphereMesh make_icosphere(int level) {
  if (level < 0 || level > 9) fail(ErrorKind::InvalidArgument, "geometry", "make_domain", "mesh level must be in [0, 9]");
  SphereMesh mesh;
  mesh.level = level;
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
                         {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1},  {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& x : v) x.normalize();
  std::vector<std::array<int, 3>> tri = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(tri.size() * 4);
    for (const auto& t : tri) {
      const int a = mid(t[0], t[1]);
      const int b = mid(t[1], t[2]);
      const int c = mid(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    tri.swap(next);
  }
  mesh.vertices = std::move(v);
  mesh.triangles = std::move(tri);
  std::map<std::pair<int, int>, int> edge_ids;
  mesh.vertex_weights.assign(mesh.vertices.size(), 0.0);
  for (const auto& t : mesh.triangles) {
    const double area = spherical_triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    for (int k = 0; k < 3; ++k) {
      mesh.vertex_weights[t[k]] += area / 3.0;
      const auto key = std::minmax(t[k], t[(k + 1) % 3]);
      if (edge_ids.emplace(key, static_cast<int>(mesh.edges.size())).second) mesh.edges.push_back({key.first, key.second});
    }
  }
  return mesh;
}

double Domain::volume() const {
  if (kind == DomainKind::Sphere2) return 4.0 * kPi;
  double v = 1.0;
  for (int a = 0; a < dims; ++a) v *= extents[a];
  return v;
}

double Domain::boundary_volume() const {
  if (kind != DomainKind::Rectangle) return 0.0;
  double total = 0.0;
  for (int a = 0; a < dims; ++a) {
    double face = 1.0;
    for (int b = 0; b < dims; ++b)
      if (b != a) face *= extents[b];
    total += 2.0 * face;
  }
  return total;
}

std::vector<Face> Domain::faces() const {
  std::vector<Face> out;
  if (kind != DomainKind::Rectangle) return out;
  for (int a = 0; a < dims; ++a) {
    for (int side : {-1, 1}) {
      Face f;
      f.axis = a;
      f.side = side;
      f.normal = Vec3::Zero();
      f.normal[a] = side;
      out.push_back(f);
    }
  }
  return out;
}

Vec3 Domain::displacement(const Vec3& p, const Vec3& q) const {
  Vec3 d = q - p;
  if (kind == DomainKind::FlatTorus) {
    for (int a = 0; a < dims; ++a) d[a] -= extents[a] * std::round(d[a] / extents[a]);
  }
  if (kind != DomainKind::Sphere2 && dims == 2) d[2] = 0.0;
  return d;
}

Vec3 Domain::wrap(const Vec3& p) const {
  if (kind != DomainKind::FlatTorus) return p;
  Vec3 w = p;
  for (int a = 0; a < dims; ++a) {
    const double rel = (w[a] - origin[a]) / extents[a];
    w[a] = origin[a] + extents[a] * (rel - std::floor(rel));
  }
  return w;
}

Vec3 Domain::canonical(const Vec3& p) const {
  if (kind == DomainKind::Sphere2) return p.normalized();
  Vec3 c = wrap(p);
  if (dims == 2) c[2] = 0.0;
  return c;
}

bool Domain::contains(const Vec3& p, double tol) const {
  if (kind == DomainKind::Sphere2) return std::abs(p.norm() - 1.0) <= std::max(tol, 1e-9);
  if (kind == DomainKind::FlatTorus) return p.allFinite();
  for (int a = 0; a < dims; ++a)
    if (p[a] < origin[a] - tol || p[a] > origin[a] + extents[a] + tol) return false;
  return true;
}

int GridChart::nodes_along(int axis) const {
  if (axis >= dims) return 1;
  return periodic ? resolution[axis] : resolution[axis] + 1;
}

std::size_t GridChart::node_count() const {
  return static_cast<std::size_t>(nodes_along(0)) * nodes_along(1) * nodes_along(2);
}

std::size_t GridChart::index(int i, int j, int k) const {
  return (static_cast<std::size_t>(k) * nodes_along(1) + j) * nodes_along(0) + i;
}

Vec3 GridChart::node(int i, int j, int k) const {
  Vec3 p = origin;
  p[0] += i * spacing[0];
  p[1] += j * spacing[1];
  if (dims == 3) p[2] += k * spacing[2];
  return p;
}

double GridChart::min_spacing() const {
  double h = spacing[0];
  for (int a = 1; a < dims; ++a) h = std::min(h, spacing[a]);
  return h;
}

GridChart make_chart(const Domain& domain, const std::array<int, 3>& resolution) {
  GridChart chart;
  chart.dims = domain.dims;
  if (domain.kind == DomainKind::Sphere2) {
    chart.mesh_level = resolution[0];
    chart.periodic = false;
    chart.resolution = {resolution[0], 1, 1};
    const bool same = domain.mesh && domain.mesh->level == resolution[0];
    chart.spacing = Vec3::Constant(same ? domain.mesh->mean_edge_length() : 1.0515 / std::ldexp(1.0, resolution[0]));
    return chart;
  }
  for (int a = 0; a < domain.dims; ++a) {
    if (resolution[a] < 8)
      fail(ErrorKind::InvalidArgument, "geometry", "make_domain", "resolution must be >= 8 cells per axis");
  }
  chart.periodic = domain.kind == DomainKind::FlatTorus;
  chart.origin = domain.origin;
  for (int a = 0; a < 3; ++a) {
    if (a < domain.dims) {
      chart.resolution[a] = resolution[a];
      chart.spacing[a] = domain.extents[a] / resolution[a];
    } else {
      chart.resolution[a] = 1;
      chart.spacing[a] = 1.0;
    }
  }
  return chart;
}

GridChart make_chart(const Domain& domain, int resolution) {
  return make_chart(domain, std::array<int, 3>{resolution, resolution, resolution});
}

DomainChart make_domain(DomainKind kind, int dims, const std::vector<double>& extents,
                        const std::array<int, 3>& resolution, const std::vector<double>& origin) {
  if (dims != 2 && dims != 3) fail(ErrorKind::InvalidArgument, "geometry", "make_domain", "dims must be 2 or 3");
  Domain d;
  d.kind = kind;
  d.dims = dims;
  if (kind == DomainKind::Sphere2) {
    if (dims != 2) fail(ErrorKind::InvalidArgument, "geometry", "make_domain", "Sphere2 is two-dimensional");
    d.extents = Vec3::Ones();
    d.origin = Vec3::Zero();
    auto mesh = std::make_shared<SphereMesh>(make_icosphere(resolution[0]));
    d.mesh = mesh;
    return {d, make_chart(d, resolution)};
  }
  if (static_cast<int>(extents.size()) != dims)
    fail(ErrorKind::InvalidArgument, "geometry", "make_domain", "extents must have one entry per axis");
  d.extents = Vec3::Ones();
  d.origin = Vec3::Zero();
  for (int a = 0; a < dims; ++a) {
    if (!(extents[a] > 0.0) || !std::isfinite(extents[a]))
      fail(ErrorKind::InvalidArgument, "geometry", "make_domain", "extents must be strictly positive");
    d.extents[a] = extents[a];
  }
  if (!origin.empty()) {
    if (static_cast<int>(origin.size()) != dims)
      fail(ErrorKind::InvalidArgument, "geometry", "make_domain", "origin must have one entry per axis");
    for (int a = 0; a < dims; ++a) d.origin[a] = origin[a];
  }
  return {d, make_chart(d, resolution)};
}

DomainChart make_domain(DomainKind kind, int dims, const std::vector<double>& extents, int resolution,
                        const std::vector<double>& origin) {
  return make_domain(kind, dims, extents, std::array<int, 3>{resolution, resolution, resolution}, origin);
}

std::shared_ptr<const SphereMesh> chart_mesh(const Domain& domain, const GridChart& chart) {
  if (domain.kind != DomainKind::Sphere2)
    fail(ErrorKind::DomainMismatch, "geometry", "chart_mesh", "only Sphere2 charts carry a mesh");
  if (domain.mesh && domain.mesh->level == chart.mesh_level) return domain.mesh;
  static std::mutex cache_mutex;
  static std::map<int, std::shared_ptr<const SphereMesh>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto& slot = cache[chart.mesh_level];
  if (!slot) slot = std::make_shared<SphereMesh>(make_icosphere(chart.mesh_level));
  return slot;
}

double geodesic_distance(const Domain& domain, const Vec3& p, const Vec3& q) {
  if (domain.kind == DomainKind::Sphere2) {
    const Vec3 a = p.normalized(), b = q.normalized();
    return std::atan2(a.cross(b).norm(), a.dot(b));
  }
  return domain.displacement(p, q).norm();
}

QuadratureNodes chart_quadrature(const Domain& domain, const GridChart& chart) {
  QuadratureNodes q;
  if (domain.kind == DomainKind::Sphere2) {
    const auto mesh = chart_mesh(domain, chart);
    q.points = mesh->vertices;
    q.weights = mesh->vertex_weights;
    return q;
  }
  const int nx = chart.nodes_along(0), ny = chart.nodes_along(1), nz = chart.nodes_along(2);
  q.points.reserve(chart.node_count());
  q.weights.reserve(chart.node_count());
  double cell = 1.0;
  for (int a = 0; a < domain.dims; ++a) cell *= chart.spacing[a];
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        double w = cell;
        if (!chart.periodic) {
          const int idx[3] = {i, j, k};
          for (int a = 0; a < domain.dims; ++a)
            if (idx[a] == 0 || idx[a] == chart.resolution[a]) w *= 0.5;
        }
        q.points.push_back(chart.node(i, j, k));
        q.weights.push_back(w);
      }
  return q;
}

double grid_volume(const Domain& domain, const GridChart& chart) {
  const auto q = chart_quadrature(domain, chart);
  double s = 0.0;
  for (double w : q.weights) s += w;
  return s;
}

std::pair<Vec3, Vec3> tangent_frame(const Vec3& p) {
  const Vec3 n = p.normalized();
  Vec3 seed = std::abs(n[2]) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
  Vec3 e1 = (seed - seed.dot(n) * n).normalized();
  Vec3 e2 = n.cross(e1);
  return {e1, e2};
}

}  // namespace nodalab
