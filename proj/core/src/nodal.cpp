#include "nodalab/nodal.hpp"

#include "nodalab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_map>

namespace nodalab {

namespace {

constexpr const char* kModule = "nodal";

bool positive(double v) { return v > 0.0; }

// Crossing request: the zero of f on the segment (flat) or arc (sphere) a -> b.
struct PendingCrossing {
  Vec3 a, b;
  double fa = 0.0, fb = 0.0;
  bool exact = false;  // vertex sits on a zero-valued node at a
};

class VertexStore {
 public:
  int get(std::uint64_t key, const PendingCrossing& c) {
    auto [it, inserted] = ids_.emplace(key, static_cast<int>(pending_.size()));
    if (inserted) pending_.push_back(c);
    return it->second;
  }
  std::vector<PendingCrossing>& pending() { return pending_; }
  std::size_t size() const { return pending_.size(); }

 private:
  std::unordered_map<std::uint64_t, int> ids_;
  std::vector<PendingCrossing> pending_;
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

struct Context {
  const FieldFunction& f;
  const Domain& domain;
  const ExtractOptions& opt;
  bool sphere;

  Vec3 along(const PendingCrossing& c, double s) const {
    const Vec3 p = c.a + s * (c.b - c.a);
    return sphere ? p.normalized() : p;
  }

  // Bisection on the sign class, then one Newton step (secant without jets).
  Vec3 refine(const PendingCrossing& c) const {
    if (c.exact) return domain.canonical(c.a);
    double lo = 0.0, hi = 1.0;
    const bool pos_lo = positive(c.fa);
    for (int it = 0; it < opt.bisection_steps; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (positive(f.value(along(c, mid))) == pos_lo) lo = mid;
      else hi = mid;
    }
    double s = 0.5 * (lo + hi);
    const Vec3 p = along(c, s);
    double ds = 0.0;
    if (opt.with_jets) {
      const Jet2 j = f.ambient_jet(p);
      Vec3 dp = c.b - c.a;
      if (sphere) {
        const double r = (c.a + s * (c.b - c.a)).norm();
        dp = (dp - p.dot(dp) * p) / r;
      }
      const double slope = j.grad.dot(dp);
      if (slope != 0.0) ds = -j.value / slope;
    } else {
      const double flo = f.value(along(c, lo)), fhi = f.value(along(c, hi));
      if (fhi != flo) ds = -(f.value(p)) * (hi - lo) / (fhi - flo);
    }
    if (std::isfinite(ds)) s = std::clamp(s + ds, lo, hi);
    return domain.canonical(along(c, s));
  }

  Vec3 project(Vec3 p, const Face* face = nullptr) const {
    for (int it = 0; it < opt.projection_steps; ++it) {
      const Jet2 j = f.jet(p);
      Vec3 g = j.grad;
      if (face) g -= g.dot(face->normal) * face->normal;
      const double g2 = g.squaredNorm();
      if (!(g2 > 0.0)) break;
      const Vec3 step = j.value / g2 * g;
      if (!step.allFinite()) break;
      p -= step;
      if (sphere) p.normalize();
    }
    if (domain.kind == DomainKind::Rectangle) {
      for (int a = 0; a < domain.dims; ++a) p[a] = std::clamp(p[a], domain.origin[a], domain.origin[a] + domain.extents[a]);
    }
    return domain.canonical(p);
  }
};

void fill_jet(NodalElement& e, const Jet2& j) {
  e.jet = j;
  e.grad_norm = j.grad.norm();
  e.normal = e.grad_norm > 0.0 ? Vec3(j.grad / e.grad_norm) : Vec3::Zero();
  e.laplacian = j.hess.trace();
  e.hess_nn = e.normal.dot(j.hess * e.normal);
  e.tilde_laplacian = e.laplacian - e.hess_nn;
}

std::uint64_t edge_key(std::size_t node, int code) { return static_cast<std::uint64_t>(node) * 16u + code; }

// Vertex for the sign change between node u (at pu, value fu) and node v.
// Orientation follows the lattice edge so that shared edges give one key.
int crossing_vertex(VertexStore& store, std::size_t base_node, std::size_t other_node, int code, const Vec3& pu,
                    const Vec3& pv, double fu, double fv) {
  // the nonpositive endpoint may carry an exact zero
  if (!positive(fu) && fu == 0.0) return store.get(edge_key(base_node, 0), {pu, pu, 0.0, 0.0, true});
  if (!positive(fv) && fv == 0.0) return store.get(edge_key(other_node, 0), {pv, pv, 0.0, 0.0, true});
  return store.get(edge_key(base_node, code), {pu, pv, fu, fv, false});
}

// Marching squares over a sheet of nodes. node(iu, iv) -> (global id, position,
// value); cells wrap when periodic.
template <class NodeFn, class CenterFn, class Emit>
void march_sheet(VertexStore& store, int cells_u, int cells_v, int nodes_u, int nodes_v, int code_u, int code_v,
                 NodeFn&& node, CenterFn&& center, Emit&& emit) {
  for (int jv = 0; jv < cells_v; ++jv) {
    for (int iu = 0; iu < cells_u; ++iu) {
      std::size_t id[4];
      Vec3 pos[4];
      double val[4];
      const int cu[4] = {0, 1, 1, 0}, cv[4] = {0, 0, 1, 1};
      for (int c = 0; c < 4; ++c) {
        const int u = iu + cu[c], v = jv + cv[c];
        node(u % nodes_u, v % nodes_v, u, v, id[c], pos[c], val[c]);
      }
      const int mask = (positive(val[0]) ? 1 : 0) | (positive(val[1]) ? 2 : 0) | (positive(val[2]) ? 4 : 0) |
                       (positive(val[3]) ? 8 : 0);
      if (mask == 0 || mask == 15) continue;
      // edges: e0 c0->c1, e1 c1->c2, e2 c3->c2, e3 c0->c3
      const int ea[4] = {0, 1, 3, 0}, eb[4] = {1, 2, 2, 3};
      const int ecode[4] = {code_u, code_v, code_u, code_v};
      int vid[4] = {-1, -1, -1, -1};
      int count = 0;
      for (int e = 0; e < 4; ++e) {
        const int a = ea[e], b = eb[e];
        if (positive(val[a]) == positive(val[b])) continue;
        vid[e] = crossing_vertex(store, id[a], id[b], ecode[e], pos[a], pos[b], val[a], val[b]);
        ++count;
      }
      if (count == 2) {
        int first = -1, second = -1;
        for (int e = 0; e < 4; ++e)
          if (vid[e] >= 0) (first < 0 ? first : second) = vid[e];
        emit(first, second);
      } else if (count == 4) {
        const double fc = center(pos[0], pos[2]);
        if (positive(fc) == positive(val[0])) {
          emit(vid[0], vid[1]);
          emit(vid[2], vid[3]);
        } else {
          emit(vid[3], vid[0]);
          emit(vid[1], vid[2]);
        }
      }
    }
  }
}

struct RawElement {
  std::array<int, 3> v{-1, -1, -1};
  int count = 0;
};

struct RawBoundary {
  std::array<int, 2> v{-1, -1};
  int count = 0;
  int face = -1;
};

}  // namespace

NodalSet extract_nodal_set(const FieldFunction& f, const Domain& domain, const GridChart& chart,
                           const ExtractOptions& opt) {
  const bool sphere = domain.kind == DomainKind::Sphere2;
  if (sphere != f.on_sphere() && !f.empty())
    fail(ErrorKind::DomainMismatch, kModule, "extract_nodal_set", "field and domain disagree about the sphere");
  Context ctx{f, domain, opt, sphere};
  NodalSet out;
  out.domain_kind = domain.kind;
  out.dims = domain.dims;
  out.has_jets = opt.with_jets;

  VertexStore store;
  std::vector<RawElement> raw;
  std::vector<RawBoundary> raw_boundary;
  std::vector<double> values;
  double length_scale = 1.0;

  if (sphere) {
    const auto mesh = chart_mesh(domain, chart);
    const auto& V = mesh->vertices;
    values.resize(V.size());
    parallel_for(V.size(), [&](std::size_t i) { values[i] = f.value(V[i]); });
    for (const auto& t : mesh->triangles) {
      const bool s0 = positive(values[t[0]]), s1 = positive(values[t[1]]), s2 = positive(values[t[2]]);
      if (s0 == s1 && s1 == s2) continue;
      int vid[2], c = 0;
      for (int e = 0; e < 3; ++e) {
        int a = t[e], b = t[(e + 1) % 3];
        if (positive(values[a]) == positive(values[b])) continue;
        if (a > b) std::swap(a, b);
        const std::size_t n = V.size();
        const std::size_t key_node = static_cast<std::size_t>(a) * n + b;
        // zero-valued nodes get their own key space above n^2
        double fa = values[a], fb = values[b];
        int id;
        if (!positive(fa) && fa == 0.0) id = store.get(edge_key(n * n + a, 0), {V[a], V[a], 0, 0, true});
        else if (!positive(fb) && fb == 0.0) id = store.get(edge_key(n * n + b, 0), {V[b], V[b], 0, 0, true});
        else id = store.get(edge_key(key_node, 1), {V[a], V[b], fa, fb, false});
        vid[c++] = id;
      }
      raw.push_back({{vid[0], vid[1], -1}, 2});
    }
  } else {
    length_scale = domain.extents.head(domain.dims).minCoeff();
    const int nx = chart.nodes_along(0), ny = chart.nodes_along(1), nz = chart.nodes_along(2);
    values.resize(chart.node_count());
    parallel_for(values.size(), [&](std::size_t idx) {
      const int i = static_cast<int>(idx % nx);
      const int j = static_cast<int>((idx / nx) % ny);
      const int k = static_cast<int>(idx / (static_cast<std::size_t>(nx) * ny));
      values[idx] = f.value(chart.node(i, j, k));
    });
    const int cx = chart.resolution[0], cy = chart.resolution[1];
    auto center = [&](const Vec3& a, const Vec3& b) { return f.value(0.5 * (a + b)); };

    if (domain.dims == 2) {
      auto node = [&](int i, int j, int ui, int uj, std::size_t& id, Vec3& pos, double& val) {
        id = chart.index(i, j);
        pos = chart.node(ui, uj);
        val = values[id];
      };
      march_sheet(store, cx, cy, nx, ny, 1, 2, node, center,
                  [&](int a, int b) { raw.push_back({{a, b, -1}, 2}); });
    } else {
      const int cz = chart.resolution[2];
      // Kuhn split of each cube into six tetrahedra along the main diagonal
      static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
      for (int k = 0; k < cz; ++k)
        for (int j = 0; j < cy; ++j)
          for (int i = 0; i < cx; ++i) {
            std::size_t cid[8];
            double cval[8];
            bool any_pos = false, any_neg = false;
            for (int c = 0; c < 8; ++c) {
              const int o[3] = {c & 1, (c >> 1) & 1, (c >> 2) & 1};
              cid[c] = chart.index((i + o[0]) % nx, (j + o[1]) % ny, (k + o[2]) % nz);
              cval[c] = values[cid[c]];
              (positive(cval[c]) ? any_pos : any_neg) = true;
            }
            if (!(any_pos && any_neg)) continue;
            auto corner_pos = [&](int c) { return chart.node(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)); };
            for (const auto& perm : perms) {
              int tv[4];
              tv[0] = 0;
              tv[1] = 1 << perm[0];
              tv[2] = tv[1] | (1 << perm[1]);
              tv[3] = 7;
              int npos = 0;
              for (int a = 0; a < 4; ++a) npos += positive(cval[tv[a]]) ? 1 : 0;
              if (npos == 0 || npos == 4) continue;
              auto ev = [&](int a, int b) {
                if (a > b) std::swap(a, b);
                const int code = tv[b] - tv[a];  // nonnegative 0/1 offset
                return crossing_vertex(store, cid[tv[a]], cid[tv[b]], code, corner_pos(tv[a]), corner_pos(tv[b]),
                                       cval[tv[a]], cval[tv[b]]);
              };
              if (npos == 1 || npos == 3) {
                const bool lone_pos = npos == 1;
                int lone = 0;
                for (int a = 0; a < 4; ++a)
                  if (positive(cval[tv[a]]) == lone_pos) lone = a;
                int ids[3], c = 0;
                for (int a = 0; a < 4; ++a)
                  if (a != lone) ids[c++] = ev(lone, a);
                raw.push_back({{ids[0], ids[1], ids[2]}, 3});
              } else {
                int P[2], N[2], pc = 0, nc = 0;
                for (int a = 0; a < 4; ++a) (positive(cval[tv[a]]) ? P[pc++] : N[nc++]) = a;
                const int ac = ev(P[0], N[0]), ad = ev(P[0], N[1]), bd = ev(P[1], N[1]), bc = ev(P[1], N[0]);
                raw.push_back({{ac, ad, bd}, 3});
                raw.push_back({{ac, bd, bc}, 3});
              }
            }
          }
    }

    if (domain.has_boundary() && opt.boundary) {
      const auto faces = domain.faces();
      for (std::size_t fi = 0; fi < faces.size(); ++fi) {
        const Face& face = faces[fi];
        const int a = face.axis;
        const int fixed = face.side < 0 ? 0 : chart.resolution[a];
        int axes[2], na = 0;
        for (int b = 0; b < domain.dims; ++b)
          if (b != a) axes[na++] = b;
        auto node_at = [&](int u, int v) {
          int idx[3] = {0, 0, 0};
          idx[a] = fixed;
          idx[axes[0]] = u;
          if (domain.dims == 3) idx[axes[1]] = v;
          return std::array<int, 3>{idx[0], idx[1], idx[2]};
        };
        if (domain.dims == 2) {
          const int b = axes[0];
          const int n = chart.resolution[b];
          for (int u = 0; u < n; ++u) {
            const auto p0 = node_at(u, 0), p1 = node_at(u + 1, 0);
            const std::size_t i0 = chart.index(p0[0], p0[1]), i1 = chart.index(p1[0], p1[1]);
            if (positive(values[i0]) == positive(values[i1])) continue;
            // open face: drop zeros sitting on the corners
            if ((u == 0 && values[i0] == 0.0) || (u + 1 == n && values[i1] == 0.0)) continue;
            const int id = crossing_vertex(store, i0, i1, 1 << b, chart.node(p0[0], p0[1]), chart.node(p1[0], p1[1]),
                                           values[i0], values[i1]);
            bool seen = false;
            for (const auto& rb : raw_boundary)
              if (rb.face == static_cast<int>(fi) && rb.v[0] == id) seen = true;
            if (!seen) raw_boundary.push_back({{id, -1}, 1, static_cast<int>(fi)});
          }
        } else {
          const int nu = chart.resolution[axes[0]], nv = chart.resolution[axes[1]];
          auto node = [&](int u, int v, int, int, std::size_t& id, Vec3& pos, double& val) {
            const auto q = node_at(u, v);
            id = chart.index(q[0], q[1], q[2]);
            pos = chart.node(q[0], q[1], q[2]);
            val = values[id];
          };
          march_sheet(store, nu, nv, nu + 1, nv + 1, 1 << axes[0], 1 << axes[1], node, center, [&](int p, int q) {
            raw_boundary.push_back({{p, q}, 2, static_cast<int>(fi)});
          });
        }
      }
    }
  }

  for (double v : values) out.field_scale = std::max(out.field_scale, std::abs(v));
  if (!(out.field_scale > 0.0)) out.field_scale = 1.0;
  out.any_sign_change = store.size() > 0;
  const double grad_floor = opt.regularity_floor * out.field_scale / length_scale;

  // refine crossings
  auto& pending = store.pending();
  out.vertices.resize(pending.size());
  parallel_for(pending.size(), [&](std::size_t i) { out.vertices[i] = ctx.refine(pending[i]); });
  if (!opt.with_jets) {
    for (const auto& c : pending) {
      if (c.exact) continue;
      const double len = sphere ? std::acos(std::clamp(c.a.dot(c.b), -1.0, 1.0)) : (c.b - c.a).norm();
      if (std::abs(c.fa - c.fb) / len < grad_floor)
        fail(ErrorKind::RegularityViolation, kModule, "extract_nodal_set",
             "edge secant slope below the regularity floor");
    }
  }

  // element geometry
  std::vector<NodalElement> elems(raw.size());
  std::vector<char> keep(raw.size(), 0);
  parallel_for(raw.size(), [&](std::size_t i) {
    const RawElement& r = raw[i];
    NodalElement& e = elems[i];
    e.vertices = r.v;
    e.vertex_count = r.count;
    const Vec3& A = out.vertices[r.v[0]];
    const Vec3& B = out.vertices[r.v[1]];
    Vec3 centroid;
    if (r.count == 2) {
      if (sphere) {
        e.weight = std::atan2(A.cross(B).norm(), A.dot(B));
        centroid = (A + B).normalized();
      } else {
        const Vec3 d = domain.displacement(A, B);
        e.weight = d.norm();
        centroid = A + 0.5 * d;
      }
    } else {
      const Vec3 d1 = domain.displacement(A, B), d2 = domain.displacement(A, out.vertices[r.v[2]]);
      e.weight = 0.5 * d1.cross(d2).norm();
      centroid = A + (d1 + d2) / 3.0;
    }
    if (!(e.weight > 0.0)) return;
    keep[i] = 1;
    centroid = domain.canonical(centroid);
    if (opt.with_jets) {
      e.point = ctx.project(centroid);
      fill_jet(e, f.jet(e.point));
      if (r.count == 2) {
        auto dist = [&](const Vec3& a, const Vec3& b) {
          return sphere ? std::atan2(a.cross(b).norm(), a.dot(b)) : domain.displacement(a, b).norm();
        };
        e.arc_length = (4.0 * (dist(A, e.point) + dist(e.point, B)) - e.weight) / 3.0;
      }
    } else {
      e.point = centroid;
    }
  });
  out.elements.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (keep[i]) out.elements.push_back(std::move(elems[i]));

  if (opt.with_jets) {
    out.vertex_jets.resize(out.vertices.size());
    parallel_for(out.vertices.size(), [&](std::size_t i) { out.vertex_jets[i] = f.jet(out.vertices[i]); });
    for (const auto& j : out.vertex_jets)
      if (!(j.grad.norm() >= grad_floor))
        fail(ErrorKind::RegularityViolation, kModule, "extract_nodal_set",
             "|df| = " + std::to_string(j.grad.norm()) + " below the regularity floor at a crossing");
    for (const auto& e : out.elements) {
      if (!(e.grad_norm >= grad_floor))
        fail(ErrorKind::RegularityViolation, kModule, "extract_nodal_set",
             "|df| = " + std::to_string(e.grad_norm) + " below the regularity floor on Z");
      out.max_residual = std::max(out.max_residual, std::abs(e.jet.value));
    }
  }

  // boundary trace
  if (!raw_boundary.empty()) {
    const auto faces = domain.faces();
    std::vector<BoundaryElement> be(raw_boundary.size());
    std::vector<char> bkeep(raw_boundary.size(), 0);
    parallel_for(raw_boundary.size(), [&](std::size_t i) {
      const RawBoundary& r = raw_boundary[i];
      const Face& face = faces[r.face];
      BoundaryElement& b = be[i];
      b.face = r.face;
      b.face_normal = face.normal;
      if (r.count == 1) {
        b.weight = 1.0;
        b.point = out.vertices[r.v[0]];
      } else {
        const Vec3& A = out.vertices[r.v[0]];
        const Vec3& B = out.vertices[r.v[1]];
        b.weight = (B - A).norm();
        b.point = 0.5 * (A + B);
        if (opt.with_jets) b.point = ctx.project(b.point, &face);
      }
      if (!(b.weight > 0.0)) return;
      bkeep[i] = 1;
      if (opt.with_jets) {
        const Jet2 j = f.jet(b.point);
        b.grad_norm = j.grad.norm();
        const double gn = j.grad.dot(face.normal);
        b.g_n_nu = b.grad_norm > 0.0 ? gn / b.grad_norm : 0.0;
        b.restricted_grad_norm = (j.grad - gn * face.normal).norm();
      }
    });
    for (std::size_t i = 0; i < be.size(); ++i)
      if (bkeep[i]) out.boundary.push_back(be[i]);
    if (opt.with_jets)
      for (const auto& b : out.boundary)
        if (!(b.restricted_grad_norm >= grad_floor))
          fail(ErrorKind::RegularityViolation, kModule, "extract_nodal_set",
               "|d(f restricted to the boundary)| below the regularity floor");
  }
  return out;
}

double nodal_volume(const NodalSet& nodal) {
  double s = 0.0;
  for (const auto& e : nodal.elements) s += e.weight;
  return s;
}

double refined_volume(const NodalSet& nodal, const FieldFunction& f, const Domain& domain) {
  const bool sphere = domain.kind == DomainKind::Sphere2;
  auto project = [&](Vec3 p) {
    for (int it = 0; it < 3; ++it) {
      const Jet2 j = f.jet(p);
      const double g2 = j.grad.squaredNorm();
      if (!(g2 > 0.0)) break;
      p -= j.value / g2 * j.grad;
      if (sphere) p.normalize();
    }
    return p;
  };
  auto seg = [&](const Vec3& a, const Vec3& b) {
    return sphere ? std::atan2(a.cross(b).norm(), a.dot(b)) : domain.displacement(a, b).norm();
  };
  std::vector<double> part(nodal.elements.size());
  parallel_for(part.size(), [&](std::size_t i) {
    const NodalElement& e = nodal.elements[i];
    const Vec3& A = nodal.vertices[e.vertices[0]];
    if (e.vertex_count == 2) {
      const Vec3& B = nodal.vertices[e.vertices[1]];
      const Vec3 mid = sphere ? Vec3((A + B).normalized()) : Vec3(A + 0.5 * domain.displacement(A, B));
      const Vec3 M = project(mid);
      part[i] = (4.0 * (seg(A, M) + seg(M, B)) - e.weight) / 3.0;
    } else {
      // unwrapped copies around A
      const Vec3 B = A + domain.displacement(A, nodal.vertices[e.vertices[1]]);
      const Vec3 C = A + domain.displacement(A, nodal.vertices[e.vertices[2]]);
      const Vec3 ab = project(0.5 * (A + B)), bc = project(0.5 * (B + C)), ca = project(0.5 * (C + A));
      auto area = [](const Vec3& p, const Vec3& q, const Vec3& r) { return 0.5 * (q - p).cross(r - p).norm(); };
      const double fine = area(A, ab, ca) + area(ab, B, bc) + area(ca, bc, C) + area(ab, bc, ca);
      part[i] = (4.0 * fine - e.weight) / 3.0;
    }
  });
  double s = 0.0;
  for (double v : part) s += v;
  return s;
}

std::vector<int> component_labels(const NodalSet& nodal) {
  UnionFind uf(nodal.vertices.size());
  for (const auto& e : nodal.elements)
    for (int k = 1; k < e.vertex_count; ++k) uf.unite(e.vertices[0], e.vertices[k]);
  std::unordered_map<int, int> ids;
  std::vector<int> labels;
  labels.reserve(nodal.elements.size());
  for (const auto& e : nodal.elements) {
    const int root = uf.find(e.vertices[0]);
    auto it = ids.emplace(root, static_cast<int>(ids.size())).first;
    labels.push_back(it->second);
  }
  return labels;
}

int component_count(const NodalSet& nodal) {
  const auto labels = component_labels(nodal);
  int n = 0;
  for (int l : labels) n = std::max(n, l + 1);
  return n;
}

double integrate_over_nodal(const NodalSet& nodal, const std::function<double(const NodalElement&)>& integrand) {
  double s = 0.0;
  for (const auto& e : nodal.elements) {
    const double v = integrand(e);
    if (!std::isfinite(v))
      fail(ErrorKind::IntegrandFailure, kModule, "integrate_over_nodal", "integrand is not finite on Z");
    s += v * e.weight;
  }
  return s;
}

double integrate_over_boundary(const NodalSet& nodal,
                               const std::function<double(const BoundaryElement&)>& integrand) {
  double s = 0.0;
  for (const auto& b : nodal.boundary) {
    const double v = integrand(b);
    if (!std::isfinite(v))
      fail(ErrorKind::IntegrandFailure, kModule, "integrate_over_boundary", "integrand is not finite on the boundary trace");
    s += v * b.weight;
  }
  return s;
}

int sign_region_count(const FieldFunction& f, const Domain& domain, const GridChart& chart) {
  if (domain.kind == DomainKind::Sphere2)
    fail(ErrorKind::DomainMismatch, kModule, "sign_region_count", "lattice flood fill needs a flat chart");
  const int nx = chart.nodes_along(0), ny = chart.nodes_along(1), nz = chart.nodes_along(2);
  std::vector<char> sgn(chart.node_count());
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) sgn[chart.index(i, j, k)] = positive(f.value(chart.node(i, j, k)));
  UnionFind uf(sgn.size());
  const int n[3] = {nx, ny, nz};
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int idx[3] = {i, j, k};
        for (int a = 0; a < domain.dims; ++a) {
          int nb[3] = {i, j, k};
          nb[a] = idx[a] + 1;
          if (nb[a] >= n[a]) {
            if (!chart.periodic) continue;
            nb[a] = 0;
          }
          const std::size_t p = chart.index(i, j, k), q = chart.index(nb[0], nb[1], nb[2]);
          if (sgn[p] == sgn[q]) uf.unite(static_cast<int>(p), static_cast<int>(q));
        }
      }
  int regions = 0;
  for (std::size_t i = 0; i < sgn.size(); ++i)
    if (uf.find(static_cast<int>(i)) == static_cast<int>(i)) ++regions;
  return regions - 1;
}

void write_nodal_csv(const NodalSet& nodal, std::ostream& out) {
  out << "kind,x,y,z,weight,grad_norm,laplacian,hess_nn,tilde_laplacian,g_n_nu,restricted_grad_norm\n";
  out.precision(17);
  for (const auto& e : nodal.elements)
    out << "interior," << e.point[0] << ',' << e.point[1] << ',' << e.point[2] << ',' << e.weight << ','
        << e.grad_norm << ',' << e.laplacian << ',' << e.hess_nn << ',' << e.tilde_laplacian << ",,\n";
  for (const auto& b : nodal.boundary)
    out << "boundary," << b.point[0] << ',' << b.point[1] << ',' << b.point[2] << ',' << b.weight << ','
        << b.grad_norm << ",,,," << b.g_n_nu << ',' << b.restricted_grad_norm << '\n';
}

}  // namespace nodalab
