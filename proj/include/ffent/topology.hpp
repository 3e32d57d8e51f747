#pragma once

// Zak phase, entropy/ES transition scans, and k2-resolved cylinder
// entanglement spectra.

#include "ffent/correlation.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ffent {

/// Discrete Wilson loop -arg prod_j <u_j|u_{j+1}> over the closed 1D mesh,
/// reported in [0, 2pi). Throws NumericalError if an overlap drops below 0.1.
double zak_phase(const BandSolution& bands, int band);

/// Circular distance between two phases, in [0, pi].
double phase_distance(double a, double b);

struct TransitionPoint {
  double parameter = 0.0;
  double entropy = 0.0;
  double es_min_dist_to_half = 0.0;  // min_n |e_n - 1/2|
  double es_gap = 0.0;   // same, over modes farther than delta from 1/2
  int n_modes_at_half = 0;  // |e - 1/2| < half_tolerance
  std::vector<double> spectrum;
};

struct TransitionScan {
  std::string parameter_name;
  std::vector<TransitionPoint> points;

  std::size_t argmax_entropy() const;
  std::size_t argmin_dist_to_half() const;
  std::size_t argmin_es_gap() const;
};

using ModelFamily = std::function<LatticeModel(double)>;

struct ScanOptions {
  int n_cells = 40;
  double mesh_offset = 0.5;
  int subsystem_cells = 10;
  double delta = 0.05;
  double half_tolerance = 1e-2;
  int workers = 1;
};

/// Half-filling entropy and ES of an interval for each grid value.
TransitionScan transition_scan(const ModelFamily& family, std::string parameter_name,
                               const std::vector<double>& grid, const ScanOptions& options = {});

/// Spectrum summary helpers shared with the CLI.
double es_min_dist_to_half(const std::vector<double>& spectrum);
double es_gap(const std::vector<double>& spectrum, double delta);
int modes_near_half(const std::vector<double>& spectrum, double tolerance);

struct CylinderSlice {
  double k2 = 0.0;
  bool skipped = false;   // half filling undefined (bands touch on the mesh)
  std::string reason;
  std::vector<double> spectrum;
  double entropy = 0.0;
  bool in_gap = false;    // some |e - 1/2| < delta
};

struct CylinderES {
  int n1 = 0;
  int subsystem_cells = 0;
  double delta = 0.05;
  std::vector<CylinderSlice> slices;

  std::vector<double> flagged_k2() const;
};

/// Half-filling ES of an L-cell segment of the k2-fixed chain on an n1-cell
/// ring (n1 >= 4L), for every k2 of the grid.
CylinderES cylinder_es(const LatticeModel& model, int n1, int subsystem_cells,
                       const std::vector<double>& k2_grid, double delta = 0.05,
                       int workers = 1);

/// Same from precomputed cylinder band slices (e.g. recovered pipeline bands).
CylinderES cylinder_es_from_bands(const std::vector<BandSolution>& slices, int subsystem_cells,
                                  double delta = 0.05, int workers = 1);

/// (k2, S) for the non-skipped slices.
std::vector<std::pair<double, double>> entropy_vs_k2(const LatticeModel& model, int n1,
                                                     int subsystem_cells,
                                                     const std::vector<double>& k2_grid,
                                                     int workers = 1);

}  // namespace ffent
