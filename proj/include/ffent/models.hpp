#pragma once

// Tight-binding lattice models and their band solutions in bulk, cylinder
// (k2 held fixed) and ribbon (one open direction) geometries.

#include "ffent/core.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace ffent {

using CellOffset = std::array<int, 2>;
using Vec2 = std::array<double, 2>;

/// Bond t * |R, from><R + offset, to| in the single-particle Hamiltonian.
/// The Hermitian partner is always implied and must not be listed.
struct Hopping {
  int from = 0;
  int to = 0;
  CellOffset offset{0, 0};
  cplx amplitude{0.0, 0.0};
};

/// Immutable tight-binding model. Frequencies and couplings in krad/s,
/// lengths in units of the lattice constant.
class LatticeModel {
 public:
  /// Validates and canonicalizes. Throws ConfigError on bad sublattice
  /// indices, offsets outside the model dimension, on-site "hoppings",
  /// non-finite values, or a bond listed together with its reverse.
  static LatticeModel create(std::string name, int dimension,
                             std::vector<Vec2> lattice_vectors,
                             std::vector<double> onsite,
                             std::vector<Hopping> hoppings);

  const std::string& name() const { return name_; }
  int dimension() const { return dimension_; }
  int sublattice_count() const { return static_cast<int>(onsite_.size()); }
  const std::vector<Vec2>& lattice_vectors() const { return lattice_vectors_; }
  const std::vector<double>& onsite() const { return onsite_; }
  const std::vector<Hopping>& hoppings() const { return hoppings_; }

  /// Effective 1D chain along a1 at fixed transverse phase k2 (radians).
  LatticeModel fold_k2(double k2) const;

 private:
  LatticeModel() = default;
  std::string name_;
  int dimension_ = 1;
  std::vector<Vec2> lattice_vectors_;
  std::vector<double> onsite_;
  std::vector<Hopping> hoppings_;
};

/// Dimerized chain: intra-cell t1, inter-cell t2.
LatticeModel ssh(double t1, double t2, double omega0);
/// Dimerized chain with staggered on-site detuning +delta (A) / -delta (B).
LatticeModel ssh_no_chiral(double t1, double t2, double omega0, double delta);
/// Nearest-neighbour honeycomb, a1 = (1,0), a2 = (1/2, sqrt3/2); sublattice
/// detuning +m/2 (A) and -m/2 (B).
LatticeModel honeycomb(double t, double omega0, double m);

/// Uniform Monkhorst-Pack style mesh in reduced coordinates:
/// kappa_i = (m_i + offset_i) / divisions_i, offset measured in mesh steps.
struct KMesh {
  std::array<int, 2> divisions{1, 1};
  std::array<double, 2> offset{0.0, 0.0};

  static KMesh line(int n, double offset = 0.5);
  static KMesh grid(int n1, int n2, double offset = 0.5);

  std::size_t size() const {
    return static_cast<std::size_t>(divisions[0]) *
           static_cast<std::size_t>(divisions[1]);
  }
  std::array<int, 2> indices(std::size_t k) const {
    return {static_cast<int>(k / divisions[1]),
            static_cast<int>(k % divisions[1])};
  }
  Vec2 reduced(std::size_t k) const;
  void validate() const;
};

/// Hermitian Bloch matrix at reduced wavevector k (fractions of the
/// reciprocal vectors; the phase of a bond with offset D is 2 pi k.D).
CMatrix bloch_hamiltonian(const LatticeModel& model, const Vec2& k);

struct BlochState {
  double omega = 0.0;
  double gamma = 0.0;  // 0 when undamped
  CVector u;
};

/// Band structure on a mesh. States are stored k-major (row-major k
/// indices), bands ascending within each k.
struct BandSolution {
  KMesh mesh;
  int bands = 0;
  int dimension = 1;
  std::vector<Vec2> lattice_vectors;
  std::optional<double> k2_parameter;  // set for cylinder slices
  std::vector<BlochState> states;

  const BlochState& state(std::size_t k, int band) const {
    return states[k * static_cast<std::size_t>(bands) + static_cast<std::size_t>(band)];
  }
  BlochState& state(std::size_t k, int band) {
    return states[k * static_cast<std::size_t>(bands) + static_cast<std::size_t>(band)];
  }
  double min_omega() const;
  double max_omega() const;
  /// Cartesian reciprocal vectors b_i with a_i . b_j = 2 pi delta_ij.
  std::vector<Vec2> reciprocal_vectors() const;
};

/// Diagonalizes H(k) for one k; gauge fixed, degenerate clusters sorted.
std::vector<BlochState> solve_bloch(const LatticeModel& model, const Vec2& k);

BandSolution band_solve(const LatticeModel& model, const KMesh& mesh,
                        int workers = 1);

/// Bands of the k2-fixed effective chain on an n1-point k1 mesh.
BandSolution cylinder_bands(const LatticeModel& model, double k2, int n1,
                            double offset = 0.5, int workers = 1);

struct RibbonSlice {
  double k2 = 0.0;
  std::vector<double> omega;        // ascending, 2 * n_open values
  std::vector<double> edge_weight;  // weight in the two outermost cells per end
  std::vector<bool> edge_flag;      // edge_weight > threshold
};

struct RibbonSpectrum {
  int n_open = 0;
  double edge_threshold = 0.9;
  std::vector<RibbonSlice> slices;
};

/// Ribbon open along a1 (n_open cells) and Bloch-periodic along a2.
RibbonSpectrum ribbon_bands(const LatticeModel& model, int n_open,
                            const std::vector<double>& k2_grid,
                            int workers = 1);

/// Open-chain Hamiltonian of the k2-fixed chain with n cells.
CMatrix ribbon_hamiltonian(const LatticeModel& model, int n_open, double k2);

/// Uniform grid of n angles k * 2pi / n.
std::vector<double> angle_grid(int n);

}  // namespace ffent
