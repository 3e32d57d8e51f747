#pragma once

// Fermi contours, the Widom/Gioev-Klich boundary double integral, and
// least-squares fits of entropy-vs-size data against competing laws.

#include "ffent/correlation.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ffent {

struct FermiPoint {
  double k = 0.0;   // Cartesian, units 1/a
  int normal = 0;   // +1 if omega increases through the crossing, -1 otherwise
  int band = 0;
};

struct ContourVertex {
  Vec2 k{};       // Cartesian, units 1/a (unwrapped along the polyline)
  Vec2 normal{};  // unit, pointing towards increasing omega (out of the Fermi sea)
};

struct Polyline {
  int band = 0;
  bool closed = false;  // closed modulo reciprocal vectors
  std::vector<ContourVertex> vertices;
  double length() const;
};

struct FermiContour {
  int dimension = 1;
  double omega_F = 0.0;
  std::vector<FermiPoint> points;    // d = 1
  std::vector<Polyline> polylines;   // d = 2
  /// Band touching (Dirac node) at omega_F: not a (d-1)-dimensional surface.
  bool codimension_anomalous = false;
  std::vector<Vec2> anomalous_points;

  bool empty() const { return points.empty() && polylines.empty(); }
  double total_length() const;

  /// Contour from explicit closed polygons (vertices ordered so the outward
  /// side is on the right when walking counterclockwise).
  static FermiContour from_polygons(const std::vector<std::vector<Vec2>>& polygons);
};

/// d = 1: sign changes bracketed on the mesh and refined by bisection on a
/// periodic cubic interpolant. d = 2: marching squares per band with linear
/// edge interpolation; normals from the central-difference gradient.
FermiContour fermi_contour(const BandSolution& bands, double omega_F);

struct BoundarySegment {
  Vec2 start{};
  Vec2 end{};
  Vec2 normal{};  // outward unit normal
  double length() const;
};

/// Closed real-space boundary of the subsystem, scaled to unit linear size.
struct SubsystemBoundary {
  int dimension = 1;
  std::vector<BoundarySegment> segments;  // d = 2
  std::vector<int> endpoint_normals;      // d = 1: +1 / -1 per endpoint

  double total_length() const;
  static SubsystemBoundary interval();
  /// Parallelogram spanned by e1, e2 (counterclockwise when e1 x e2 > 0).
  static SubsystemBoundary parallelogram(const Vec2& e1, const Vec2& e2);
  /// Unit-side block boundary of an L x L mask on the given lattice.
  static SubsystemBoundary block(const std::vector<Vec2>& lattice_vectors);
  SubsystemBoundary rotated(double angle) const;
};

/// Prefactor a of S ~ a L^{d-1} ln L:
/// a = 1 / (12 (2 pi)^{d-1}) * sum over boundary x contour of |n_x . n_k| dA_x dA_k.
/// Contour elements are the straight polyline segments with their geometric
/// normals; anomalous (point-like) contour pieces contribute nothing.
double gkw_prefactor(const FermiContour& contour, const SubsystemBoundary& boundary);

FermiContour rotated(const FermiContour& contour, double angle);

/// area: c L + b (the L^{d-1} term; in d = 1 a linear slope that should
/// vanish), log1d: a ln L + b, gkw2d: a L ln L + b L + c, subarea: c L + b.
enum class ScalingLaw { area, log1d, gkw2d, subarea };

std::string to_string(ScalingLaw law);
ScalingLaw scaling_law_from_string(const std::string& s);

struct ScalingFit {
  ScalingLaw law = ScalingLaw::area;
  std::vector<double> coefficients;  // in basis order, see basis_names()
  double residual_norm = 0.0;
  double r_squared = 0.0;

  double predict(double L) const;
  std::vector<std::string> basis_names() const;
};

/// Basis functions of a law evaluated at L (ln L with L in cells).
std::vector<double> scaling_basis(ScalingLaw law, double L);

/// Linear least squares in the law's basis. Throws ConfigError with fewer than
/// 3 points or repeated L values, NumericalError on a rank-deficient design.
ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& points, ScalingLaw law);

using MaskFamily = std::function<SubsystemMask(int)>;

/// Entropy for each subsystem size L with masks from `family`.
std::vector<std::pair<double, double>> entropy_vs_size(const BandSolution& bands,
                                                       const MaskFamily& family,
                                                       const FillingWindow& window,
                                                       const std::vector<int>& sizes,
                                                       int workers = 1);

}  // namespace ffent
