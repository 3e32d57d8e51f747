#pragma once

#include "ffent/models.hpp"

namespace ffent {

enum class BoundaryKind { open, periodic };

/// Boundary conditions per lattice direction. A periodic direction with
/// twist x multiplies every bond that wraps once in the + direction by
/// exp(2 pi i x); twist = mesh offset reproduces the offset k-mesh exactly.
struct Boundary {
  std::array<BoundaryKind, 2> kind{BoundaryKind::open, BoundaryKind::open};
  std::array<double, 2> twist{0.0, 0.0};

  static Boundary open() { return {}; }
  static Boundary periodic(double twist1 = 0.0, double twist2 = 0.0) {
    return {{BoundaryKind::periodic, BoundaryKind::periodic}, {twist1, twist2}};
  }
  /// Twisted periodic boundary matching a k-mesh's offset.
  static Boundary matching(const KMesh& mesh) {
    return periodic(mesh.offset[0], mesh.offset[1]);
  }
};

/// Dense real-space Hamiltonian on extent[0] x extent[1] cells. Site index
/// is (n1 * extent[1] + n2) * sublattice_count + alpha.
CMatrix real_space_hamiltonian(const LatticeModel& model, std::array<int, 2> extent,
                               const Boundary& boundary);

}  // namespace ffent
