#pragma once

// Subsystem correlation matrices under the fermion-filling analog, their
// entanglement spectrum and entropy, and a brute-force real-space oracle.

#include "ffent/models.hpp"
#include "ffent/realspace.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ffent {

struct Site {
  CellOffset cell{0, 0};
  int sublattice = 0;
  auto operator<=>(const Site&) const = default;
};

enum class MaskGeometry { interval, rectangle, rhombus, custom };

std::string to_string(MaskGeometry g);

/// Region A as an ordered site list (row-major by cell, then sublattice).
class SubsystemMask {
 public:
  /// L consecutive cells of a chain starting at `start`, all sublattices.
  static SubsystemMask interval(int length, int start = 0, int sublattices = 2);
  /// l1 x l2 block of cells in lattice coordinates.
  static SubsystemMask rectangle(int l1, int l2, CellOffset start = {0, 0},
                                 int sublattices = 2);
  /// Side-L block; with 60-degree lattice vectors this is the zigzag rhombus.
  static SubsystemMask rhombus(int side, CellOffset start = {0, 0}, int sublattices = 2);
  static SubsystemMask custom(std::vector<Site> sites, double boundary_length = 0.0);

  const std::vector<Site>& sites() const { return sites_; }
  std::size_t size() const { return sites_.size(); }
  MaskGeometry geometry() const { return geometry_; }
  double boundary_length() const { return boundary_length_; }
  std::string tag() const;

  /// Throws ConfigError if a site lies outside extent or a sublattice index
  /// is invalid.
  void check_within(std::array<int, 2> extent, int sublattice_count) const;

 private:
  SubsystemMask(std::vector<Site> sites, MaskGeometry g, double boundary,
                std::string label);
  std::vector<Site> sites_;
  MaskGeometry geometry_ = MaskGeometry::custom;
  double boundary_length_ = 0.0;
  std::string label_;
};

/// States with omega_b <= omega <= omega_F + tolerance are filled.
struct FillingWindow {
  double omega_b = 0.0;
  double omega_F = 0.0;
  double tolerance = 1e-9;

  void validate() const;
  bool contains(double omega) const {
    return omega >= omega_b && omega <= omega_F + tolerance;
  }
  /// omega_b one krad/s below the lowest state on the mesh.
  static FillingWindow up_to(const BandSolution& bands, double omega_F);
  /// Fills the lowest bands/2 bands, omega_F in the middle of the on-mesh gap.
  /// Throws NumericalError if the filled and empty bands overlap or touch on
  /// the mesh.
  static FillingWindow half(const BandSolution& bands);
  /// Every state on the mesh.
  static FillingWindow all(const BandSolution& bands);
};

struct CorrelationMatrix {
  CMatrix matrix;
  SubsystemMask mask;
  FillingWindow window;
  KMesh mesh;
  std::size_t filled_states = 0;
  bool empty_window = false;  // no state inside the window: matrix is zero
};

/// C[(i,a),(j,b)] = (1/N_k) sum_filled conj(psi(i,a)) psi(j,b) with
/// psi(i,a) = u(a) exp(2 pi i k.r_i). Accumulated in fixed chunks of k so the
/// result is bit-identical for every worker count.
CorrelationMatrix correlation_matrix(const BandSolution& bands, const SubsystemMask& mask,
                                     const FillingWindow& window, int workers = 1);

/// Frequency-resolved correlation binned on [lo, hi) with the given width.
/// Summing the bins whose states fall inside a window reproduces
/// correlation_matrix.
struct FrequencyBin {
  double omega_lo = 0.0;
  double omega_hi = 0.0;
  std::size_t states = 0;
  CMatrix matrix;
};
std::vector<FrequencyBin> frequency_resolved_correlation(const BandSolution& bands,
                                                         const SubsystemMask& mask,
                                                         double bin_width = 0.0);

/// Ascending eigenvalues of C, clamped into [0, 1]. Throws NumericalError when
/// an eigenvalue lies more than 1e-6 outside [0, 1].
std::vector<double> entanglement_spectrum(const CMatrix& c);
inline std::vector<double> entanglement_spectrum(const CorrelationMatrix& c) {
  return entanglement_spectrum(c.matrix);
}

/// S = -sum [e ln e + (1-e) ln(1-e)], natural log, 0 ln 0 = 0.
double entanglement_entropy(std::span<const double> spectrum);

struct EntanglementResult {
  std::string mask_tag;
  double omega_b = 0.0;
  double omega_F = 0.0;
  std::vector<double> spectrum;
  double entropy = 0.0;
};

EntanglementResult entanglement(const CorrelationMatrix& c);

/// Correlation matrix of the lowest `filling` eigenstates of the full
/// real-space Hamiltonian, restricted to the mask. Throws NumericalError if
/// states `filling - 1` and `filling` are degenerate.
CMatrix real_space_correlation(const LatticeModel& model, std::array<int, 2> extent,
                               const Boundary& boundary, const SubsystemMask& mask,
                               std::size_t filling);

EntanglementResult real_space_oracle(const LatticeModel& model, std::array<int, 2> extent,
                                     const Boundary& boundary, const SubsystemMask& mask,
                                     std::size_t filling);

/// Entropy for each omega_F of an ascending grid, with omega_b below every band.
std::vector<std::pair<double, double>> filling_sweep(const BandSolution& bands,
                                                     const SubsystemMask& mask,
                                                     const std::vector<double>& omega_grid,
                                                     int workers = 1);

}  // namespace ffent
