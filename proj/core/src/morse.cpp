#include "nodalab/morse.hpp"

#include "nodalab/nodal.hpp"
#include "nodalab/parallel.hpp"
#include "nodalab/variation.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace nodalab {

namespace {

constexpr const char* kModule = "morse";

// One stratum of the domain: the interior, or an open face of a rectangle.
// Points move along `axes` (flat) or the tangent frame (sphere).
struct StratumChart {
  Stratum stratum = Stratum::Interior;
  int face = -1;
  int dims = 2;              // dimension of the stratum
  std::vector<int> axes;     // free ambient axes on flat domains
  Vec3 normal = Vec3::Zero();
  std::vector<Vec3> points;  // seed nodes
  std::vector<std::vector<int>> neighbours;
  double spacing = 1.0;
};

// Value, gradient and Hessian of a function in the stratum frame at p.
struct LocalJet {
  double v = 0.0;
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
};

std::vector<Vec3> stratum_frame(const StratumChart& s, const Domain& domain, const Vec3& p) {
  if (domain.kind == DomainKind::Sphere2) {
    const auto [e1, e2] = tangent_frame(p);
    return {e1, e2};
  }
  std::vector<Vec3> f;
  for (int a : s.axes) f.push_back(Vec3::Unit(a));
  return f;
}

LocalJet local_jet(const FieldFunction& f, const StratumChart& s, const Domain& domain, const Vec3& p) {
  const Jet2 j = f.jet(p);
  const auto frame = stratum_frame(s, domain, p);
  LocalJet out;
  out.v = j.value;
  for (int a = 0; a < s.dims; ++a) {
    out.g[a] = frame[a].dot(j.grad);
    for (int b = 0; b < s.dims; ++b) out.H(a, b) = frame[a].dot(j.hess * frame[b]);
  }
  return out;
}

StratumChart interior_chart(const Domain& domain, int resolution) {
  StratumChart s;
  s.dims = domain.kind == DomainKind::Sphere2 ? 2 : domain.dims;
  if (domain.kind == DomainKind::Sphere2) {
    const GridChart chart = make_chart(domain, resolution > 0 ? resolution : 4);
    const auto mesh = chart_mesh(domain, chart);
    s.points = mesh->vertices;
    s.neighbours.assign(s.points.size(), {});
    for (const auto& e : mesh->edges) {
      s.neighbours[e[0]].push_back(e[1]);
      s.neighbours[e[1]].push_back(e[0]);
    }
    s.spacing = mesh->mean_edge_length();
    return s;
  }
  for (int a = 0; a < domain.dims; ++a) s.axes.push_back(a);
  const GridChart chart = make_chart(domain, resolution > 0 ? resolution : (domain.dims == 2 ? 48 : 16));
  s.spacing = chart.min_spacing();
  const int nx = chart.nodes_along(0), ny = chart.nodes_along(1), nz = chart.nodes_along(2);
  s.points.resize(chart.node_count());
  s.neighbours.assign(chart.node_count(), {});
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t id = chart.index(i, j, k);
        s.points[id] = chart.node(i, j, k);
        for (int dk = (domain.dims == 3 ? -1 : 0); dk <= (domain.dims == 3 ? 1 : 0); ++dk)
          for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
              if (!di && !dj && !dk) continue;
              int a = i + di, b = j + dj, c = k + dk;
              if (chart.periodic) {
                a = (a + nx) % nx;
                b = (b + ny) % ny;
                c = (c + nz) % nz;
              } else if (a < 0 || b < 0 || c < 0 || a >= nx || b >= ny || c >= nz) {
                continue;
              }
              s.neighbours[id].push_back(static_cast<int>(chart.index(a, b, c)));
            }
      }
  return s;
}

std::vector<StratumChart> face_charts(const Domain& domain, int resolution) {
  std::vector<StratumChart> out;
  if (!domain.has_boundary()) return out;
  const GridChart chart = make_chart(domain, resolution > 0 ? resolution : (domain.dims == 2 ? 48 : 16));
  const auto faces = domain.faces();
  for (std::size_t fi = 0; fi < faces.size(); ++fi) {
    const Face& face = faces[fi];
    StratumChart s;
    s.stratum = Stratum::Boundary;
    s.face = static_cast<int>(fi);
    s.dims = domain.dims - 1;
    s.normal = face.normal;
    for (int a = 0; a < domain.dims; ++a)
      if (a != face.axis) s.axes.push_back(a);
    s.spacing = chart.min_spacing();
    std::array<int, 3> n{chart.nodes_along(0), chart.nodes_along(1), chart.nodes_along(2)};
    const int fixed = face.side < 0 ? 0 : n[face.axis] - 1;
    std::array<int, 3> lo{0, 0, 0}, hi{n[0] - 1, n[1] - 1, n[2] - 1};
    lo[face.axis] = hi[face.axis] = fixed;
    std::map<std::array<int, 3>, int> id;
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i) {
          id[{i, j, k}] = static_cast<int>(s.points.size());
          s.points.push_back(chart.node(i, j, k));
        }
    s.neighbours.assign(s.points.size(), {});
    for (const auto& [ijk, me] : id) {
      for (int dk = -1; dk <= 1; ++dk)
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            if (!di && !dj && !dk) continue;
            const std::array<int, 3> q{ijk[0] + di, ijk[1] + dj, ijk[2] + dk};
            const auto it = id.find(q);
            if (it != id.end()) s.neighbours[me].push_back(it->second);
          }
    }
    out.push_back(std::move(s));
  }
  return out;
}

Vec3 retract(const StratumChart& s, const Domain& domain, const Vec3& p, const Eigen::Vector3d& step) {
  const auto frame = stratum_frame(s, domain, p);
  Vec3 q = p;
  for (int a = 0; a < s.dims; ++a) q += step[a] * frame[a];
  if (domain.kind == DomainKind::Sphere2) return q.normalized();
  if (domain.kind == DomainKind::FlatTorus) return domain.wrap(q);
  return q;
}

enum class Outcome { Root, Stall, OutsideInterval, OutsideStratum };

struct NewtonResult {
  Outcome outcome = Outcome::Stall;
  Vec3 p = Vec3::Zero();
  double t = 0.0;
  double residual = 0.0;
};

NewtonResult newton(const FieldFunction& f, const FieldFunction& h, const StratumChart& s, const Domain& domain,
                    Vec3 p, double t, double scale, const ScanOptions& opt, double t0, double t1) {
  const int n = s.dims;
  auto eval = [&](const Vec3& x, double tt, LocalJet& jf, LocalJet& jh) {
    jf = local_jet(f, s, domain, x);
    jh = local_jet(h, s, domain, x);
    double r = std::abs(jf.v + tt * jh.v);
    for (int a = 0; a < n; ++a) r = std::max(r, std::abs(jf.g[a] + tt * jh.g[a]));
    return r / scale;
  };
  LocalJet jf, jh;
  double res = eval(p, t, jf, jh);
  NewtonResult out;
  for (int it = 0; it < opt.newton_iterations && res > opt.tolerance; ++it) {
    MatX J = MatX::Zero(n + 1, n + 1);
    VecX F(n + 1);
    F[0] = jf.v + t * jh.v;
    for (int a = 0; a < n; ++a) {
      J(0, a) = jf.g[a] + t * jh.g[a];
      F[a + 1] = jf.g[a] + t * jh.g[a];
      for (int b = 0; b < n; ++b) J(a + 1, b) = jf.H(a, b) + t * jh.H(a, b);
      J(a + 1, n) = jh.g[a];
    }
    J(0, n) = jh.v;
    Eigen::FullPivLU<MatX> lu(J);
    if (lu.rank() < n + 1) return out;
    const VecX d = -lu.solve(F);
    double lambda = 1.0;
    bool improved = false;
    for (int k = 0; k < 10; ++k, lambda *= 0.5) {
      Eigen::Vector3d step = Eigen::Vector3d::Zero();
      for (int a = 0; a < n; ++a) step[a] = lambda * d[a];
      const Vec3 q = retract(s, domain, p, step);
      const double tq = t + lambda * d[n];
      LocalJet qf, qh;
      const double rq = eval(q, tq, qf, qh);
      if (rq < res || rq <= opt.tolerance) {
        p = q;
        t = tq;
        jf = qf;
        jh = qh;
        res = rq;
        improved = true;
        break;
      }
    }
    if (!improved) return out;
  }
  out.p = p;
  out.t = t;
  out.residual = res;
  if (res > opt.tolerance) return out;
  const double span = std::max(1.0, std::abs(t1 - t0));
  if (t < t0 - 1e-12 * span || t > t1 + 1e-12 * span) {
    out.outcome = Outcome::OutsideInterval;
    return out;
  }
  if (domain.kind == DomainKind::Rectangle) {
    const double margin = 1e-9 * domain.extents.head(domain.dims).maxCoeff();
    for (int a : s.axes) {
      if (p[a] < domain.origin[a] + margin || p[a] > domain.origin[a] + domain.extents[a] - margin) {
        out.outcome = Outcome::OutsideStratum;
        return out;
      }
    }
  }
  out.outcome = Outcome::Root;
  return out;
}

double max_abs_on(const FieldFunction& f, const std::vector<Vec3>& pts) {
  double m = 0.0;
  for (const auto& p : pts) m = std::max(m, std::abs(f.value(p)));
  return m;
}

struct Seed {
  int stratum = 0;
  int node = 0;
  double t = 0.0;
};

struct Candidate {
  NewtonResult newton;
  CriticalZero zero;
  bool floor_violation = false;
  std::string floor_message;
};

}  // namespace

const char* to_string(Stratum stratum) { return stratum == Stratum::Interior ? "interior" : "boundary"; }

const char* to_string(Shape shape) {
  switch (shape) {
    case Shape::PowerLaw: return "power";
    case Shape::Log: return "log";
    case Shape::Bounded: return "bounded";
  }
  return "?";
}

const char* to_string(Side side) { return side == Side::Left ? "left" : "right"; }

const char* to_string(Template t) {
  switch (t) {
    case Template::G0: return "g0";
    case Template::G1: return "g1";
    case Template::G2: return "g2";
    case Template::G0PlusG2: return "g0+g2";
    case Template::Log: return "log";
    case Template::Bounded: return "bounded";
    case Template::Unclassified: return "unclassified";
  }
  return "?";
}

int morse_index(const MatX& hessian, Stratum stratum, double floor, std::optional<double> scale) {
  if (hessian.rows() != hessian.cols() || hessian.rows() == 0)
    fail(ErrorKind::InvalidArgument, kModule, "morse_index", "Hessian must be square and non-empty");
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (hessian + hessian.transpose()), Eigen::EigenvaluesOnly);
  const VecX ev = es.eigenvalues();
  const double top = scale ? *scale : ev.cwiseAbs().maxCoeff();
  const double low = ev.cwiseAbs().minCoeff();
  if (!(top > 0.0) || low < floor * top)
    fail(ErrorKind::MorseFloorViolation, kModule, "morse_index",
         std::string(to_string(stratum)) + " Hessian has |eigenvalue| " + std::to_string(low) + " below floor " +
             std::to_string(floor * top));
  int neg = 0;
  for (int i = 0; i < ev.size(); ++i) neg += ev[i] < 0.0;
  return neg;
}

SegmentScan scan_segment(const FieldFunction& f, const FieldFunction& h, double t0, double t1, const Domain& domain,
                         const ScanOptions& opt) {
  if (!(t1 > t0)) fail(ErrorKind::InvalidArgument, kModule, "find_critical_zeros_on_segment", "need t0 < t1");
  if (opt.t_steps < 1) fail(ErrorKind::InvalidArgument, kModule, "find_critical_zeros_on_segment", "t_steps < 1");
  std::vector<StratumChart> strata;
  strata.push_back(interior_chart(domain, opt.resolution));
  if (opt.boundary)
    for (auto& s : face_charts(domain, opt.resolution)) strata.push_back(std::move(s));

  SegmentScan out;
  const double tmax = std::max({1.0, std::abs(t0), std::abs(t1)});
  out.value_scale = max_abs_on(f, strata[0].points) + tmax * max_abs_on(h, strata[0].points);
  if (!(out.value_scale > 0.0)) out.value_scale = 1.0;
  const double scale = out.value_scale;

  // Node jets, reused across the t-sweep since f_t is linear in t.
  std::vector<std::vector<LocalJet>> jf(strata.size()), jh(strata.size());
  for (std::size_t si = 0; si < strata.size(); ++si) {
    const auto& s = strata[si];
    jf[si].resize(s.points.size());
    jh[si].resize(s.points.size());
    parallel_for(s.points.size(), [&](std::size_t i) {
      jf[si][i] = local_jet(f, s, domain, s.points[i]);
      jh[si][i] = local_jet(h, s, domain, s.points[i]);
    });
  }

  // Seeds: discrete minima of |d f_t| whose scaled residual is small, kept at
  // the sweep step where |f_t| is locally smallest for that node.
  std::vector<Seed> seeds;
  for (std::size_t si = 0; si < strata.size(); ++si) {
    const auto& s = strata[si];
    const std::size_t nn = s.points.size();
    std::vector<double> g2(nn), rn(nn);
    std::vector<std::vector<std::pair<int, double>>> hits(nn);  // (step, |f_t|)
    for (int k = 0; k <= opt.t_steps; ++k) {
      const double t = t0 + (t1 - t0) * k / opt.t_steps;
      double rmax = 0.0;
      for (std::size_t i = 0; i < nn; ++i) {
        const Eigen::Vector3d g = jf[si][i].g + t * jh[si][i].g;
        g2[i] = g.head(s.dims).squaredNorm();
        rn[i] = std::max(std::abs(jf[si][i].v + t * jh[si][i].v), std::sqrt(g2[i]) * s.spacing);
        rmax = std::max(rmax, rn[i]);
      }
      for (std::size_t i = 0; i < nn; ++i) {
        if (rn[i] >= opt.seed_threshold * rmax) continue;
        bool is_min = true;
        for (int j : s.neighbours[i])
          if (g2[j] < g2[i]) {
            is_min = false;
            break;
          }
        if (is_min) hits[i].push_back({k, std::abs(jf[si][i].v + t * jh[si][i].v)});
      }
    }
    for (std::size_t i = 0; i < nn; ++i) {
      const auto& hv = hits[i];
      for (std::size_t a = 0; a < hv.size(); ++a) {
        auto value_at = [&](int k) {
          const double t = t0 + (t1 - t0) * k / opt.t_steps;
          return std::abs(jf[si][i].v + t * jh[si][i].v);
        };
        const int k = hv[a].first;
        const bool left_ok = k == 0 || value_at(k - 1) >= hv[a].second;
        const bool right_ok = k == opt.t_steps || value_at(k + 1) > hv[a].second;
        if (left_ok && right_ok)
          seeds.push_back({static_cast<int>(si), static_cast<int>(i), t0 + (t1 - t0) * k / opt.t_steps});
      }
    }
  }
  out.seeds = seeds.size();

  std::vector<Candidate> cand(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    const Seed& sd = seeds[i];
    const auto& s = strata[sd.stratum];
    Candidate& c = cand[i];
    c.newton = newton(f, h, s, domain, s.points[sd.node], sd.t, scale, opt, t0, t1);
    if (c.newton.outcome != Outcome::Root) return;
    const Vec3 p = c.newton.p;
    const double t = c.newton.t;
    const LocalJet lf = local_jet(f, s, domain, p), lh = local_jet(h, s, domain, p);
    const MatX H = (lf.H + t * lh.H).topLeftCorner(s.dims, s.dims);
    double hscale = 0.0;
    for (std::size_t j = 0; j < s.points.size(); ++j)
      hscale = std::max(hscale, (jf[sd.stratum][j].H + t * jh[sd.stratum][j].H).topLeftCorner(s.dims, s.dims).norm());
    CriticalZero& z = c.zero;
    z.point = p;
    z.t = t;
    z.stratum = s.stratum;
    z.face = s.face;
    z.certificate = lh.v;
    z.residual = c.newton.residual;
    Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly);
    for (int a = 0; a < es.eigenvalues().size(); ++a) z.hessian_eigenvalues.push_back(es.eigenvalues()[a]);
    if (s.stratum == Stratum::Boundary) {
      const Jet2 af = f.jet(p), ah = h.jet(p);
      z.normal_derivative = s.normal.dot(af.grad + t * ah.grad);
    }
    try {
      z.index = morse_index(H, s.stratum, opt.morse_floor, hscale);
    } catch (const Error& e) {
      c.floor_violation = true;
      c.floor_message = e.what();
    }
  });

  const double length = domain.kind == DomainKind::Sphere2 ? 1.0 : domain.extents.head(domain.dims).maxCoeff();
  std::size_t outside_t = 0, outside_s = 0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    const Candidate& c = cand[i];
    switch (c.newton.outcome) {
      case Outcome::Stall: ++out.stalled; continue;
      case Outcome::OutsideInterval: ++outside_t; continue;
      case Outcome::OutsideStratum: ++outside_s; continue;
      case Outcome::Root: break;
    }
    bool dup = false;
    for (const auto& z : out.zeros) {
      if (z.stratum != c.zero.stratum || z.face != c.zero.face) continue;
      if (domain.displacement(z.point, c.zero.point).norm() <= 1e-6 * length &&
          std::abs(z.t - c.zero.t) <= 1e-7 * (1.0 + std::abs(z.t))) {
        dup = true;
        break;
      }
    }
    if (dup) continue;
    if (c.floor_violation)
      fail(ErrorKind::MorseFloorViolation, kModule, "find_critical_zeros_on_segment", c.floor_message);
    out.zeros.push_back(c.zero);
  }
  if (out.stalled) out.log.push_back("NewtonStall: " + std::to_string(out.stalled) + " seeds discarded");
  if (outside_t) out.log.push_back(std::to_string(outside_t) + " seeds converged outside the t-interval");
  if (outside_s) out.log.push_back(std::to_string(outside_s) + " seeds left their stratum");
  std::sort(out.zeros.begin(), out.zeros.end(), [](const CriticalZero& a, const CriticalZero& b) {
    if (a.t != b.t) return a.t < b.t;
    for (int k = 0; k < 3; ++k)
      if (a.point[k] != b.point[k]) return a.point[k] < b.point[k];
    return a.face < b.face;
  });
  return out;
}

std::vector<CriticalZero> find_critical_zeros_on_segment(const FieldFunction& f, const FieldFunction& h, double t0,
                                                         double t1, const Domain& domain, const ScanOptions& options) {
  return scan_segment(f, h, t0, t1, domain, options).zeros;
}

// ---------------------------------------------------------------------------
// Level profiles and exponent fits

LevelProfile level_profile(const FieldFunction& T, const Domain& domain, const GridChart& chart, double t_min,
                           double t_max, int t_resolution, const ProfileOptions& opt) {
  if (!(t_max > t_min)) fail(ErrorKind::InvalidArgument, kModule, "level_profile", "need t_min < t_max");
  if (t_resolution < 2) fail(ErrorKind::InvalidArgument, kModule, "level_profile", "t_resolution < 2");
  const bool sphere = domain.kind == DomainKind::Sphere2;
  const FieldFunction minus_one = FieldFunction::constant(-1.0, sphere);
  LevelProfile prof;
  prof.dims = sphere ? 2 : domain.dims;

  const auto zeros = find_critical_zeros_on_segment(T, minus_one, t_min, t_max, domain, opt.scan);
  for (const auto& z : zeros) {
    if (!prof.critical.empty() && std::abs(prof.critical.back().t - z.t) <= 1e-8 * (1.0 + std::abs(z.t))) {
      prof.critical.back().zeros.push_back(z);
      continue;
    }
    CriticalLevel level;
    level.t = z.t;
    level.zeros.push_back(z);
    prof.critical.push_back(level);
  }

  const double range = t_max - t_min;
  std::vector<double> widths(prof.critical.size());
  std::vector<std::pair<double, bool>> ts;
  for (int i = 0; i < t_resolution; ++i) ts.push_back({t_min + range * i / (t_resolution - 1), false});
  for (std::size_t c = 0; c < prof.critical.size(); ++c) {
    double w = opt.width ? *opt.width : 0.25 * range;
    if (!opt.width) {
      if (c > 0) w = std::min(w, 0.45 * (prof.critical[c].t - prof.critical[c - 1].t));
      if (c + 1 < prof.critical.size()) w = std::min(w, 0.45 * (prof.critical[c + 1].t - prof.critical[c].t));
    }
    widths[c] = w;
    for (int j = 0; j <= opt.refine_levels; ++j) {
      const double d = w * std::ldexp(1.0, -j);
      for (double t : {prof.critical[c].t - d, prof.critical[c].t + d})
        if (t >= t_min && t <= t_max) ts.push_back({t, true});
    }
  }
  std::sort(ts.begin(), ts.end());
  std::vector<std::pair<double, bool>> kept;
  for (const auto& e : ts) {
    bool skip = false;
    for (const auto& c : prof.critical)
      if (std::abs(e.first - c.t) <= 1e-10 * (1.0 + std::abs(c.t))) skip = true;
    if (!kept.empty() && std::abs(kept.back().first - e.first) <= 1e-14 * (1.0 + std::abs(e.first))) {
      kept.back().second = kept.back().second || e.second;
      skip = true;
    }
    if (!skip) kept.push_back(e);
  }

  prof.samples.resize(kept.size());
  parallel_for(kept.size(), [&](std::size_t i) {
    const double t = kept[i].first;
    const NodalSet nodal = extract_nodal_set(T.plus(minus_one, t), domain, chart);
    ProfileSample& s = prof.samples[i];
    s.t = t;
    s.refined = kept[i].second;
    s.phi = nodal_volume(nodal);
    s.dphi = first_variation(nodal, minus_one).total;
  });

  if (opt.fit) {
    for (std::size_t c = 0; c < prof.critical.size(); ++c) {
      CriticalLevel& level = prof.critical[c];
      for (Side side : {Side::Left, Side::Right}) {
        std::vector<double> off, val;
        for (const auto& s : prof.samples) {
          const double d = side == Side::Right ? s.t - level.t : level.t - s.t;
          if (d > 0.0 && d <= widths[c] * (1.0 + 1e-9)) {
            off.push_back(d);
            val.push_back(s.dphi);
          }
        }
        if (off.size() < 5) continue;
        (side == Side::Left ? level.left : level.right) = fit_exponent(off, val, side);
      }
      level.match = classify(level.left, level.right);
    }
  }
  return prof;
}

ExponentFit fit_exponent(const LevelProfile& profile, double t0, Side side) {
  double w = std::numeric_limits<double>::infinity();
  for (const auto& level : profile.critical)
    if (std::abs(level.t - t0) > 1e-8 * (1.0 + std::abs(t0))) w = std::min(w, 0.5 * std::abs(level.t - t0));
  std::vector<double> off, val;
  for (const auto& s : profile.samples) {
    const double d = side == Side::Right ? s.t - t0 : t0 - s.t;
    if (d > 0.0 && d < w) {
      off.push_back(d);
      val.push_back(s.dphi);
    }
  }
  return fit_exponent(off, val, side);
}

namespace {

struct PowerFit {
  double alpha = 0.0, A = 0.0, B = 0.0, sse = std::numeric_limits<double>::infinity();
};

PowerFit fit_power(const std::vector<double>& tau, const std::vector<double>& y, double alpha) {
  const std::size_t n = tau.size();
  MatX X(n, 2);
  VecX Y(n);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = std::pow(tau[i], alpha);
    X(i, 1) = 1.0;
    Y[i] = y[i];
  }
  const Eigen::Vector2d c = X.colPivHouseholderQr().solve(Y);
  PowerFit f;
  f.alpha = alpha;
  f.A = c[0];
  f.B = c[1];
  f.sse = (X * c - Y).squaredNorm();
  return f;
}

}  // namespace

ExponentFit fit_exponent(const std::vector<double>& offsets, const std::vector<double>& dphi, Side side) {
  if (offsets.size() != dphi.size())
    fail(ErrorKind::InvalidArgument, kModule, "fit_exponent", "offset and value counts differ");
  if (offsets.size() < 5)
    fail(ErrorKind::InsufficientSamples, kModule, "fit_exponent",
         "need at least 5 samples on the " + std::string(to_string(side)) + " side, have " +
             std::to_string(offsets.size()));
  for (double d : offsets)
    if (!(d > 0.0)) fail(ErrorKind::InvalidArgument, kModule, "fit_exponent", "offsets must be positive");
  ExponentFit out;
  out.side = side;
  out.samples = offsets.size();
  std::vector<std::size_t> order(offsets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return offsets[a] < offsets[b]; });
  std::vector<double> tau, y;
  for (std::size_t i : order) {
    tau.push_back(offsets[i]);
    y.push_back(dphi[i]);
  }
  const std::size_t n = tau.size();
  {
    std::vector<double> far(y.end() - 3, y.end());
    std::sort(far.begin(), far.end());
    out.plateau_estimate = far[1];
  }
  double ymax = 0.0, mean = 0.0;
  for (double v : y) {
    ymax = std::max(ymax, std::abs(v));
    mean += v / n;
  }
  double sst = 0.0;
  for (double v : y) sst += (v - mean) * (v - mean);
  if (!(ymax > 1e-14)) {
    out.r2 = out.log_r2 = 1.0;
    return out;
  }

  // Variable projection: linear least squares in (A, B) for each alpha.
  PowerFit best;
  for (int k = -150; k <= 100; ++k) {
    const double a = 0.01 * k;
    if (std::abs(a) < 0.005) continue;
    const PowerFit f = fit_power(tau, y, a);
    if (f.sse < best.sse) best = f;
  }
  double lo = best.alpha - 0.01, hi = best.alpha + 0.01;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 40; ++it) {
    const double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    const PowerFit fa = fit_power(tau, y, std::abs(a) < 0.005 ? 0.005 : a);
    const PowerFit fb = fit_power(tau, y, std::abs(b) < 0.005 ? 0.005 : b);
    if (fa.sse < best.sse) best = fa;
    if (fb.sse < best.sse) best = fb;
    if (fa.sse < fb.sse)
      hi = b;
    else
      lo = a;
  }
  out.alpha = best.alpha;
  out.amplitude = best.A;
  out.plateau = best.B;
  out.r2 = sst > 0.0 ? 1.0 - best.sse / sst : 1.0;

  const LogFit lf = fit_log(tau, y);
  out.log_amplitude = lf.c;
  out.log_r2 = lf.r2;

  const double tmin = tau.front(), tmax = tau.back();
  const bool divergent =
      best.alpha <= -0.2 && std::abs(best.A) * (std::pow(tmin, best.alpha) - std::pow(tmax, best.alpha)) >= 0.25 * ymax;
  if (divergent) {
    out.shape = Shape::PowerLaw;
    out.sign = best.A > 0.0 ? 1 : -1;
  } else if (lf.r2 >= 0.99 && std::abs(lf.c) * std::log(tmax / tmin) >= 0.25 * ymax) {
    out.shape = Shape::Log;
    out.sign = lf.c > 0.0 ? 1 : -1;
  } else {
    out.shape = Shape::Bounded;
    out.sign = 0;
  }
  return out;
}

Template classify(const std::optional<ExponentFit>& left, const std::optional<ExponentFit>& right) {
  if (!left || !right) return Template::Unclassified;
  const Shape L = left->shape, R = right->shape;
  if (L == Shape::Bounded && R == Shape::Bounded) return Template::Bounded;
  if (L == Shape::Log || R == Shape::Log) return Template::Log;
  if (R == Shape::PowerLaw && L == Shape::Bounded && right->sign > 0) return Template::G0;
  if (L == Shape::PowerLaw && R == Shape::Bounded && left->sign < 0) return Template::G2;
  if (L == Shape::PowerLaw && R == Shape::PowerLaw) {
    if (right->sign < 0 && left->sign > 0) return Template::G1;
    if (right->sign > 0 && left->sign < 0) return Template::G0PlusG2;
  }
  return Template::Unclassified;
}

LogFit fit_log(const std::vector<double>& t, const std::vector<double>& values) {
  if (t.size() != values.size() || t.size() < 2)
    fail(ErrorKind::InsufficientSamples, kModule, "fit_log", "need at least two matching samples");
  const std::size_t n = t.size();
  MatX X(n, 2);
  VecX Y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(t[i] > 0.0)) fail(ErrorKind::InvalidArgument, kModule, "fit_log", "t must be positive");
    X(i, 0) = std::log(1.0 / t[i]);
    X(i, 1) = 1.0;
    Y[i] = values[i];
  }
  const Eigen::Vector2d c = X.colPivHouseholderQr().solve(Y);
  const double sse = (X * c - Y).squaredNorm();
  const double mean = Y.mean();
  const double sst = (Y.array() - mean).square().sum();
  LogFit f;
  f.c = c[0];
  f.b = c[1];
  f.r2 = sst > 0.0 ? 1.0 - sse / sst : 1.0;
  return f;
}

double relative_variation(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double lo = values[0], hi = values[0], top = 0.0;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    top = std::max(top, std::abs(v));
  }
  return top > 0.0 ? (hi - lo) / top : 0.0;
}

}  // namespace nodalab
