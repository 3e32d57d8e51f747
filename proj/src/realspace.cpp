#include "ffent/realspace.hpp"

#include <cstdlib>

namespace ffent {

CMatrix real_space_hamiltonian(const LatticeModel& model, std::array<int, 2> extent,
                               const Boundary& boundary) {
  if (extent[0] < 1 || extent[1] < 1) throw ConfigError("extent must be >= 1 cell");
  if (model.dimension() == 1 && extent[1] != 1)
    throw ConfigError("1D model needs extent[1] == 1");
  const int nsub = model.sublattice_count();
  const Eigen::Index dim =
      static_cast<Eigen::Index>(extent[0]) * extent[1] * nsub;
  CMatrix h = CMatrix::Zero(dim, dim);
  auto index = [&](int n1, int n2, int a) {
    return (static_cast<Eigen::Index>(n1) * extent[1] + n2) * nsub + a;
  };
  for (int n1 = 0; n1 < extent[0]; ++n1) {
    for (int n2 = 0; n2 < extent[1]; ++n2) {
      for (int a = 0; a < nsub; ++a)
        h(index(n1, n2, a), index(n1, n2, a)) += model.onsite()[static_cast<std::size_t>(a)];
      for (const Hopping& hop : model.hoppings()) {
        std::array<int, 2> target{n1 + hop.offset[0], n2 + hop.offset[1]};
        cplx amp = hop.amplitude;
        bool keep = true;
        for (int d = 0; d < 2; ++d) {
          const int n = extent[d];
          if (target[d] >= 0 && target[d] < n) continue;
          if (boundary.kind[d] == BoundaryKind::open) {
            keep = false;
            break;
          }
          // floor division: number of times the bond wraps in direction d
          const int wraps = target[d] >= 0 ? target[d] / n : -((-target[d] + n - 1) / n);
          target[d] -= wraps * n;
          amp *= std::polar(1.0, kTwoPi * boundary.twist[d] * wraps);
        }
        if (!keep) continue;
        const Eigen::Index i = index(n1, n2, hop.from);
        const Eigen::Index j = index(target[0], target[1], hop.to);
        h(i, j) += amp;
        h(j, i) += std::conj(amp);
      }
    }
  }
  return h;
}

}  // namespace ffent
