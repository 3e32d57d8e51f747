#include "ffent/scaling.hpp"

#include <cmath>
#include <set>

namespace ffent {

namespace {

Vec2 rotate(const Vec2& v, double c, double s) { return {c * v[0] - s * v[1], s * v[0] + c * v[1]}; }

}  // namespace

double BoundarySegment::length() const { return std::hypot(end[0] - start[0], end[1] - start[1]); }

double SubsystemBoundary::total_length() const {
  if (dimension == 1) return static_cast<double>(endpoint_normals.size());
  double len = 0.0;
  for (const auto& s : segments) len += s.length();
  return len;
}

SubsystemBoundary SubsystemBoundary::interval() {
  SubsystemBoundary b;
  b.dimension = 1;
  b.endpoint_normals = {-1, +1};
  return b;
}

SubsystemBoundary SubsystemBoundary::parallelogram(const Vec2& e1, const Vec2& e2) {
  const double cross = e1[0] * e2[1] - e1[1] * e2[0];
  if (std::abs(cross) < 1e-14) throw ConfigError("parallelogram edges are collinear");
  SubsystemBoundary b;
  b.dimension = 2;
  const std::array<Vec2, 4> v{{{0.0, 0.0}, e1, {e1[0] + e2[0], e1[1] + e2[1]}, e2}};
  const double orient = cross > 0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < 4; ++i) {
    BoundarySegment s{v[i], v[(i + 1) % 4], {}};
    const double len = s.length();
    const Vec2 d{(s.end[0] - s.start[0]) / len, (s.end[1] - s.start[1]) / len};
    s.normal = {orient * d[1], -orient * d[0]};
    b.segments.push_back(s);
  }
  return b;
}

SubsystemBoundary SubsystemBoundary::block(const std::vector<Vec2>& lattice_vectors) {
  if (lattice_vectors.size() == 1) return interval();
  if (lattice_vectors.size() != 2) throw ConfigError("block boundary needs 1 or 2 lattice vectors");
  return parallelogram(lattice_vectors[0], lattice_vectors[1]);
}

SubsystemBoundary SubsystemBoundary::rotated(double angle) const {
  SubsystemBoundary out = *this;
  const double c = std::cos(angle), s = std::sin(angle);
  for (auto& seg : out.segments) {
    seg.start = rotate(seg.start, c, s);
    seg.end = rotate(seg.end, c, s);
    seg.normal = rotate(seg.normal, c, s);
  }
  return out;
}

FermiContour rotated(const FermiContour& contour, double angle) {
  FermiContour out = contour;
  const double c = std::cos(angle), s = std::sin(angle);
  for (auto& pl : out.polylines) {
    for (auto& v : pl.vertices) {
      v.k = rotate(v.k, c, s);
      v.normal = rotate(v.normal, c, s);
    }
  }
  for (auto& p : out.anomalous_points) p = rotate(p, c, s);
  return out;
}

double gkw_prefactor(const FermiContour& contour, const SubsystemBoundary& boundary) {
  if (contour.dimension != boundary.dimension)
    throw ConfigError("contour and boundary dimensions differ");
  if (contour.dimension == 1) {
    double sum = 0.0;
    for (const auto& p : contour.points)
      for (int n : boundary.endpoint_normals) sum += std::abs(static_cast<double>(p.normal * n));
    return sum / 12.0;
  }
  double sum = 0.0;
  for (const auto& pl : contour.polylines) {
    const std::size_t n = pl.vertices.size();
    const std::size_t nseg = pl.closed ? n : (n == 0 ? 0 : n - 1);
    for (std::size_t i = 0; i < nseg; ++i) {
      const Vec2& a = pl.vertices[i].k;
      const Vec2& b = pl.vertices[(i + 1) % n].k;
      const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
      if (len == 0.0) continue;
      const Vec2 nk{(b[1] - a[1]) / len, -(b[0] - a[0]) / len};
      for (const auto& seg : boundary.segments)
        sum += len * seg.length() * std::abs(nk[0] * seg.normal[0] + nk[1] * seg.normal[1]);
    }
  }
  return sum / (12.0 * kTwoPi);
}

std::string to_string(ScalingLaw law) {
  switch (law) {
    case ScalingLaw::area: return "area";
    case ScalingLaw::log1d: return "log1d";
    case ScalingLaw::gkw2d: return "gkw2d";
    case ScalingLaw::subarea: return "subarea";
  }
  return "?";
}

ScalingLaw scaling_law_from_string(const std::string& s) {
  for (auto law : {ScalingLaw::area, ScalingLaw::log1d, ScalingLaw::gkw2d, ScalingLaw::subarea})
    if (to_string(law) == s) return law;
  throw ConfigError("unknown scaling law '" + s + "'");
}

std::vector<double> scaling_basis(ScalingLaw law, double L) {
  const double lnL = std::log(L);
  switch (law) {
    case ScalingLaw::area: return {L, 1.0};
    case ScalingLaw::log1d: return {lnL, 1.0};
    case ScalingLaw::gkw2d: return {L * lnL, L, 1.0};
    case ScalingLaw::subarea: return {L, 1.0};
  }
  return {};
}

double ScalingFit::predict(double L) const {
  const auto basis = scaling_basis(law, L);
  double s = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) s += coefficients[i] * basis[i];
  return s;
}

std::vector<std::string> ScalingFit::basis_names() const {
  switch (law) {
    case ScalingLaw::area: return {"L", "1"};
    case ScalingLaw::log1d: return {"lnL", "1"};
    case ScalingLaw::gkw2d: return {"LlnL", "L", "1"};
    case ScalingLaw::subarea: return {"L", "1"};
  }
  return {};
}

ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& points, ScalingLaw law) {
  if (points.size() < 3) throw ConfigError("scaling fit needs at least 3 points");
  std::set<double> seen;
  for (const auto& [L, S] : points) {
    if (!(L > 0.0) || !std::isfinite(S)) throw ConfigError("scaling fit needs L > 0 and finite S");
    if (!seen.insert(L).second) throw ConfigError("scaling fit has repeated L values");
  }
  const auto ncols = static_cast<Eigen::Index>(scaling_basis(law, 1.0).size());
  const auto nrows = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd a(nrows, ncols);
  Eigen::VectorXd y(nrows);
  for (Eigen::Index r = 0; r < nrows; ++r) {
    const auto basis = scaling_basis(law, points[static_cast<std::size_t>(r)].first);
    for (Eigen::Index c = 0; c < ncols; ++c) a(r, c) = basis[static_cast<std::size_t>(c)];
    y(r) = points[static_cast<std::size_t>(r)].second;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < ncols) throw NumericalError("fit_scaling", "design matrix is rank deficient");
  const Eigen::VectorXd coef = qr.solve(y);
  const Eigen::VectorXd resid = a * coef - y;

  ScalingFit fit;
  fit.law = law;
  fit.coefficients.assign(coef.data(), coef.data() + coef.size());
  fit.residual_norm = resid.norm();
  const double ss_res = resid.squaredNorm();
  const double ss_tot = (y.array() - y.mean()).square().sum();
  if (ss_tot > 0.0)
    fit.r_squared = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  else
    fit.r_squared = ss_res <= 1e-24 * static_cast<double>(nrows) ? 1.0 : 0.0;
  return fit;
}

std::vector<std::pair<double, double>> entropy_vs_size(const BandSolution& bands,
                                                       const MaskFamily& family,
                                                       const FillingWindow& window,
                                                       const std::vector<int>& sizes,
                                                       int workers) {
  return parallel_map<std::pair<double, double>>(sizes.size(), workers, [&](std::size_t i) {
    const int L = sizes[i];
    const auto c = correlation_matrix(bands, family(L), window, 1);
    const auto es = entanglement_spectrum(c);
    return std::pair<double, double>{static_cast<double>(L), entanglement_entropy(es)};
  });
}

}  // namespace ffent
