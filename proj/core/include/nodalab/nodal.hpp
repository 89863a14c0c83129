#pragma once

#include "nodalab/fields.hpp"
#include "nodalab/geometry.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace nodalab {

// Segment (m = 2, sphere) or triangle (m = 3) of the discretized zero set.
struct NodalElement {
  Vec3 point = Vec3::Zero();  // projected centroid
  double weight = 0.0;        // length or area
  double arc_length = 0.0;    // segments with jets: length through `point`, Richardson-corrected
  std::array<int, 3> vertices{-1, -1, -1};
  int vertex_count = 0;
  // Jet data at `point` (filled when extraction runs with jets).
  Jet2 jet;
  Vec3 normal = Vec3::Zero();  // grad f / |grad f|
  double grad_norm = 0.0;
  double laplacian = 0.0;
  double hess_nn = 0.0;
  double tilde_laplacian = 0.0;  // laplacian - Hess f(nu, nu)
};

// Point (m = 2) or segment (m = 3) of the boundary trace Z cap dM on an open face.
struct BoundaryElement {
  Vec3 point = Vec3::Zero();
  double weight = 0.0;  // 1 for points, length for segments
  int face = -1;        // index into Domain::faces()
  Vec3 face_normal = Vec3::Zero();
  double g_n_nu = 0.0;                // <n, nu>
  double restricted_grad_norm = 0.0;  // |d(f restricted to the face)|
  double grad_norm = 0.0;
};

struct NodalSet {
  DomainKind domain_kind = DomainKind::FlatTorus;
  int dims = 2;
  bool has_jets = false;
  bool any_sign_change = false;  // false: the zero set is empty
  double field_scale = 0.0;      // max |f| over the chart nodes
  double max_residual = 0.0;     // max |f(point)| after projection
  std::vector<Vec3> vertices;    // refined edge crossings
  std::vector<Jet2> vertex_jets;  // jets at `vertices` (extraction with jets)
  std::vector<NodalElement> elements;
  std::vector<BoundaryElement> boundary;

  bool empty() const { return elements.empty() && boundary.empty(); }
};

struct ExtractOptions {
  bool with_jets = true;
  bool boundary = true;
  int bisection_steps = 12;
  int projection_steps = 2;
  // Minimum |df| on Z relative to field_scale / domain length.
  double regularity_floor = 1e-6;
};

NodalSet extract_nodal_set(const FieldFunction& f, const Domain& domain, const GridChart& chart,
                           const ExtractOptions& options = {});

double nodal_volume(const NodalSet& nodal);
// Fourth-order volume: every element is split at the projections of its edge
// midpoints onto Z and the two measures are Richardson-combined. Used by the
// finite-difference oracles, where the kinks of the plain chord measure under
// small shifts of Z would dominate.
double refined_volume(const NodalSet& nodal, const FieldFunction& f, const Domain& domain);
int component_count(const NodalSet& nodal);
// Component id per element.
std::vector<int> component_labels(const NodalSet& nodal);

double integrate_over_nodal(const NodalSet& nodal, const std::function<double(const NodalElement&)>& integrand);
double integrate_over_boundary(const NodalSet& nodal,
                               const std::function<double(const BoundaryElement&)>& integrand);

// Sign regions of the node lattice (4-neighbour, periodic on the torus) minus 1.
int sign_region_count(const FieldFunction& f, const Domain& domain, const GridChart& chart);

void write_nodal_csv(const NodalSet& nodal, std::ostream& out);

}  // namespace nodalab
