#pragma once

#include "nodalab/common.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace nodalab {

enum class DomainKind { FlatTorus, Rectangle, Sphere2 };

const char* to_string(DomainKind kind);
DomainKind domain_kind_from_string(const std::string& name);

// Subdivided icosahedron with unit-norm vertices.
struct SphereMesh {
  int level = 0;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> edges;
  // One third of the spherical area of every incident triangle; sums to 4*pi.
  std::vector<double> vertex_weights;

  double flat_area() const;       // area of the polyhedron
  double spherical_area() const;  // sum of spherical triangle areas
  double mean_edge_length() const;
};

SphereMesh make_icosphere(int level);

// Open face of an axis-aligned box.
struct Face {
  int axis = 0;
  int side = -1;  // -1 lower face, +1 upper face
  Vec3 normal = Vec3::Zero();
};

class Domain {
 public:
  DomainKind kind = DomainKind::FlatTorus;
  int dims = 2;
  Vec3 extents = Vec3::Ones();
  Vec3 origin = Vec3::Zero();
  std::shared_ptr<const SphereMesh> mesh;

  double volume() const;
  double boundary_volume() const;
  bool has_boundary() const { return kind == DomainKind::Rectangle; }
  std::vector<Face> faces() const;
  Vec3 upper() const { return origin + extents; }

  // q - p; minimal image on the torus, chord on the sphere.
  Vec3 displacement(const Vec3& p, const Vec3& q) const;
  Vec3 wrap(const Vec3& p) const;
  bool contains(const Vec3& p, double tol = 1e-12) const;
  // Project a point back onto the domain (sphere normalization, torus wrap).
  Vec3 canonical(const Vec3& p) const;
};

struct GridChart {
  std::array<int, 3> resolution{1, 1, 1};
  Vec3 spacing = Vec3::Ones();
  Vec3 origin = Vec3::Zero();
  bool periodic = false;
  int dims = 2;
  int mesh_level = -1;  // Sphere2 only

  int nodes_along(int axis) const;
  std::size_t node_count() const;
  std::size_t index(int i, int j, int k = 0) const;
  Vec3 node(int i, int j, int k = 0) const;
  double min_spacing() const;
};

struct DomainChart {
  Domain domain;
  GridChart chart;
};

// resolution is cells per axis for flat domains and the icosphere level for
// Sphere2.
DomainChart make_domain(DomainKind kind, int dims, const std::vector<double>& extents, int resolution,
                        const std::vector<double>& origin = {});
DomainChart make_domain(DomainKind kind, int dims, const std::vector<double>& extents,
                        const std::array<int, 3>& resolution, const std::vector<double>& origin = {});

// Same domain, different chart resolution.
GridChart make_chart(const Domain& domain, int resolution);
GridChart make_chart(const Domain& domain, const std::array<int, 3>& resolution);

// Mesh of a sphere chart: the domain mesh, or a cached icosphere when the
// chart level differs.
std::shared_ptr<const SphereMesh> chart_mesh(const Domain& domain, const GridChart& chart);

double geodesic_distance(const Domain& domain, const Vec3& p, const Vec3& q);

// Quadrature of the constant 1 over the chart (trapezoid on flat charts,
// vertex weights on the sphere).
double grid_volume(const Domain& domain, const GridChart& chart);

// All chart nodes with their quadrature weights.
struct QuadratureNodes {
  std::vector<Vec3> points;
  std::vector<double> weights;
};
QuadratureNodes chart_quadrature(const Domain& domain, const GridChart& chart);

// Deterministic orthonormal tangent frame at a unit vector p.
std::pair<Vec3, Vec3> tangent_frame(const Vec3& p);

}  // namespace nodalab
