#include "ffent/scaling.hpp"

#include <cmath>
#include <map>
#include <tuple>

namespace ffent {

namespace {

Vec2 to_cartesian(const std::vector<Vec2>& b, double k1, double k2) {
  if (b.size() == 1) return {k1 * b[0][0], 0.0};
  return {k1 * b[0][0] + k2 * b[1][0], k1 * b[0][1] + k2 * b[1][1]};
}

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

// Band values on the periodic mesh as a dense n1 x n2 table.
std::vector<double> band_table(const BandSolution& bands, int band) {
  std::vector<double> v(bands.mesh.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = bands.state(k, band).omega;
  return v;
}

// Largest frequency change between neighbouring mesh nodes, all bands.
double mesh_resolution(const BandSolution& bands) {
  const int n1 = bands.mesh.divisions[0];
  const int n2 = bands.mesh.divisions[1];
  double res = 0.0;
  for (int b = 0; b < bands.bands; ++b) {
    for (int i = 0; i < n1; ++i) {
      for (int j = 0; j < n2; ++j) {
        const double w = bands.state(static_cast<std::size_t>(i * n2 + j), b).omega;
        const int ip = (i + 1) % n1;
        const int jp = (j + 1) % n2;
        res = std::max(res, std::abs(bands.state(static_cast<std::size_t>(ip * n2 + j), b).omega - w));
        res = std::max(res, std::abs(bands.state(static_cast<std::size_t>(i * n2 + jp), b).omega - w));
      }
    }
  }
  return res;
}

// omega_F inside an on-mesh gap narrower than twice the mesh resolution: the
// bands touch somewhere between nodes. A linear crossing at the far corner of
// a mesh cell leaves an on-mesh gap of up to ~sqrt(3) steps.
void flag_unresolved_gaps(const BandSolution& bands, double omega_F, FermiContour& c) {
  const double res = mesh_resolution(bands);
  const auto b = bands.reciprocal_vectors();
  for (int n = 0; n + 1 < bands.bands; ++n) {
    double lower_max = -1e300, upper_min = 1e300, best_sep = 1e300;
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < bands.mesh.size(); ++k) {
      const double lo = bands.state(k, n).omega;
      const double hi = bands.state(k, n + 1).omega;
      lower_max = std::max(lower_max, lo);
      upper_min = std::min(upper_min, hi);
      if (hi - lo < best_sep) {
        best_sep = hi - lo;
        best_k = k;
      }
    }
    if (omega_F >= lower_max && omega_F <= upper_min && upper_min - lower_max <= 2.0 * res) {
      c.codimension_anomalous = true;
      const Vec2 kr = bands.mesh.reduced(best_k);
      c.anomalous_points.push_back(to_cartesian(b, kr[0], kr[1]));
    }
  }
}

// Catmull-Rom interpolant between p1 (t = 0) and p2 (t = 1).
double catmull_rom(double p0, double p1, double p2, double p3, double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

FermiContour contour_1d(const BandSolution& bands, double omega_F) {
  FermiContour c;
  c.dimension = 1;
  c.omega_F = omega_F;
  const int n = bands.mesh.divisions[0];
  const double bvec = bands.reciprocal_vectors()[0][0];
  const double off = bands.mesh.offset[0];
  const double tol = 1e-9 * std::max(1.0, std::abs(omega_F));
  for (int band = 0; band < bands.bands; ++band) {
    const auto w = band_table(bands, band);
    auto g = [&](int m) { return w[static_cast<std::size_t>(((m % n) + n) % n)] - omega_F; };
    auto sgn = [&](int m) {
      const double v = g(m);
      return std::abs(v) <= tol ? 0 : (v > 0 ? 1 : -1);
    };
    for (int m = 0; m < n; ++m) {
      const int s0 = sgn(m);
      const int s1 = sgn(m + 1);
      if (s0 == 0) {
        const int sp = sgn(m - 1);
        if (sp != 0 && s1 != 0 && sp != s1) {
          c.points.push_back({bvec * (m + off) / n, s1, band});
        } else {
          c.codimension_anomalous = true;
          c.anomalous_points.push_back({bvec * (m + off) / n, 0.0});
        }
        continue;
      }
      if (s1 == 0 || s0 == s1) continue;
      const double p0 = g(m - 1), p1 = g(m), p2 = g(m + 1), p3 = g(m + 2);
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double v = catmull_rom(p0, p1, p2, p3, mid);
        if ((v > 0) == (p1 > 0))
          lo = mid;
        else
          hi = mid;
      }
      const double t = 0.5 * (lo + hi);
      c.points.push_back({bvec * (m + off + t) / n, s1, band});
    }
  }
  if (c.points.empty()) flag_unresolved_gaps(bands, omega_F, c);
  return c;
}

struct Segment {
  std::array<Vec2, 2> k;   // reduced coordinates, cell-local unwrapping
  std::array<Vec2, 2> grad;  // reduced-coordinate gradient at each end
  std::array<std::tuple<int, int, int>, 2> edge;  // (orientation, i, j) wrapped
};

FermiContour contour_2d(const BandSolution& bands, double omega_F) {
  FermiContour c;
  c.dimension = 2;
  c.omega_F = omega_F;
  const int n1 = bands.mesh.divisions[0];
  const int n2 = bands.mesh.divisions[1];
  const double o1 = bands.mesh.offset[0];
  const double o2 = bands.mesh.offset[1];
  const auto b = bands.reciprocal_vectors();
  const auto& a = bands.lattice_vectors;

  for (int band = 0; band < bands.bands; ++band) {
    const auto w = band_table(bands, band);
    auto g = [&](int i, int j) {
      i = ((i % n1) + n1) % n1;
      j = ((j % n2) + n2) % n2;
      return w[static_cast<std::size_t>(i * n2 + j)] - omega_F;
    };
    auto grad = [&](int i, int j) -> Vec2 {
      return {(g(i + 1, j) - g(i - 1, j)) * n1 / 2.0, (g(i, j + 1) - g(i, j - 1)) * n2 / 2.0};
    };
    std::vector<Segment> segs;
    for (int i = 0; i < n1; ++i) {
      for (int j = 0; j < n2; ++j) {
        // corners counterclockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1)
        const std::array<std::array<int, 2>, 4> cn{{{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}}};
        std::array<double, 4> v{};
        int mask = 0;
        for (int q = 0; q < 4; ++q) {
          v[static_cast<std::size_t>(q)] = g(cn[q][0], cn[q][1]);
          if (v[static_cast<std::size_t>(q)] < 0.0) mask |= 1 << q;
        }
        if (mask == 0 || mask == 15) continue;
        // crossing point on edge e between corners e and e+1
        auto cross = [&](int e, Vec2& kk, Vec2& gg, std::tuple<int, int, int>& id) {
          const auto& p = cn[static_cast<std::size_t>(e)];
          const auto& q = cn[static_cast<std::size_t>((e + 1) % 4)];
          const double vp = v[static_cast<std::size_t>(e)];
          const double vq = v[static_cast<std::size_t>((e + 1) % 4)];
          const double t = vp / (vp - vq);
          kk = {((p[0] + o1) + t * (q[0] - p[0])) / n1, ((p[1] + o2) + t * (q[1] - p[1])) / n2};
          const Vec2 gp = grad(p[0], p[1]);
          const Vec2 gq = grad(q[0], q[1]);
          gg = {gp[0] + t * (gq[0] - gp[0]), gp[1] + t * (gq[1] - gp[1])};
          const int lo_i = std::min(p[0], q[0]);
          const int lo_j = std::min(p[1], q[1]);
          id = {p[0] == q[0] ? 1 : 0, ((lo_i % n1) + n1) % n1, ((lo_j % n2) + n2) % n2};
        };
        auto add = [&](int e0, int e1) {
          Segment s;
          cross(e0, s.k[0], s.grad[0], s.edge[0]);
          cross(e1, s.k[1], s.grad[1], s.edge[1]);
          segs.push_back(s);
        };
        std::vector<int> edges;
        for (int e = 0; e < 4; ++e) {
          const bool in0 = (mask >> e) & 1;
          const bool in1 = (mask >> ((e + 1) % 4)) & 1;
          if (in0 != in1) edges.push_back(e);
        }
        if (edges.size() == 2) {
          add(edges[0], edges[1]);
        } else {
          // saddle: the centre value decides which diagonal is connected
          const double centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
          const bool centre_in = centre < 0.0;
          const bool c0_in = mask & 1;
          if (centre_in == c0_in) {
            add(0, 1);
            add(2, 3);
          } else {
            add(3, 0);
            add(1, 2);
          }
        }
      }
    }

    // chain segments through shared edges
    std::map<std::tuple<int, int, int>, std::vector<std::size_t>> by_edge;
    for (std::size_t s = 0; s < segs.size(); ++s)
      for (int e = 0; e < 2; ++e) by_edge[segs[s].edge[static_cast<std::size_t>(e)]].push_back(s);
    std::vector<bool> used(segs.size(), false);

    auto make_vertex = [&](const Vec2& kr, const Vec2& gr) {
      ContourVertex vtx;
      vtx.k = to_cartesian(b, kr[0], kr[1]);
      // d omega / dk = sum_i (d omega / d kappa_i) a_i / (2 pi)
      Vec2 gc{(gr[0] * a[0][0] + gr[1] * a[1][0]) / kTwoPi,
              (gr[0] * a[0][1] + gr[1] * a[1][1]) / kTwoPi};
      const double norm = std::hypot(gc[0], gc[1]);
      if (norm > 0.0) vtx.normal = {gc[0] / norm, gc[1] / norm};
      return vtx;
    };

    for (std::size_t start = 0; start < segs.size(); ++start) {
      if (used[start]) continue;
      Polyline pl;
      pl.band = band;
      used[start] = true;
      Vec2 shift{0.0, 0.0};
      pl.vertices.push_back(make_vertex(segs[start].k[0], segs[start].grad[0]));
      pl.vertices.push_back(make_vertex(segs[start].k[1], segs[start].grad[1]));
      Vec2 tail = segs[start].k[1];
      auto edge = segs[start].edge[1];
      const auto first_edge = segs[start].edge[0];
      while (true) {
        if (edge == first_edge) {
          pl.closed = true;
          pl.vertices.pop_back();
          break;
        }
        std::size_t next = segs.size();
        for (std::size_t cand : by_edge[edge])
          if (!used[cand]) next = cand;
        if (next == segs.size()) break;
        used[next] = true;
        const Segment& s = segs[next];
        const int enter = s.edge[0] == edge ? 0 : 1;
        const Vec2 entry = s.k[static_cast<std::size_t>(enter)];
        shift = {std::round(tail[0] - entry[0]), std::round(tail[1] - entry[1])};
        const Vec2& exit_k = s.k[static_cast<std::size_t>(1 - enter)];
        tail = {exit_k[0] + shift[0], exit_k[1] + shift[1]};
        pl.vertices.push_back(make_vertex(tail, s.grad[static_cast<std::size_t>(1 - enter)]));
        edge = s.edge[static_cast<std::size_t>(1 - enter)];
      }
      c.polylines.push_back(std::move(pl));
    }
  }
  if (c.polylines.empty()) flag_unresolved_gaps(bands, omega_F, c);
  return c;
}

}  // namespace

double Polyline::length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < vertices.size(); ++i)
    len += dist(vertices[i - 1].k, vertices[i].k);
  if (closed && vertices.size() > 2) len += dist(vertices.back().k, vertices.front().k);
  return len;
}

double FermiContour::total_length() const {
  double len = 0.0;
  for (const auto& p : polylines) len += p.length();
  return len;
}

FermiContour FermiContour::from_polygons(const std::vector<std::vector<Vec2>>& polygons) {
  FermiContour c;
  c.dimension = 2;
  for (const auto& poly : polygons) {
    Polyline pl;
    pl.closed = true;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      // vertex normal: average of adjacent edge normals (outward for CCW)
      const Vec2& prev = poly[(i + n - 1) % n];
      const Vec2& next = poly[(i + 1) % n];
      Vec2 d{next[0] - prev[0], next[1] - prev[1]};
      const double len = std::hypot(d[0], d[1]);
      pl.vertices.push_back({poly[i], {d[1] / len, -d[0] / len}});
    }
    c.polylines.push_back(std::move(pl));
  }
  return c;
}

FermiContour fermi_contour(const BandSolution& bands, double omega_F) {
  const int min_div = bands.dimension == 1
                          ? bands.mesh.divisions[0]
                          : std::min(bands.mesh.divisions[0], bands.mesh.divisions[1]);
  if (min_div < 24) throw ConfigError("fermi_contour needs at least 24 mesh points per direction");
  return bands.dimension == 1 ? contour_1d(bands, omega_F) : contour_2d(bands, omega_F);
}

}  // namespace ffent
