#include "ffent/models.hpp"
#include "ffent/realspace.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

namespace ffent {

namespace {

bool is_reverse(const Hopping& a, const Hopping& b) {
  return a.from == b.to && a.to == b.from && a.offset[0] == -b.offset[0] &&
         a.offset[1] == -b.offset[1];
}

bool same_bond(const Hopping& a, const Hopping& b) {
  return a.from == b.from && a.to == b.to && a.offset == b.offset;
}

std::string describe(const Hopping& h) {
  std::ostringstream os;
  os << "(" << h.from << " -> " << h.to << ", offset [" << h.offset[0] << ","
     << h.offset[1] << "], t = " << h.amplitude.real() << "+" << h.amplitude.imag()
     << "i)";
  return os.str();
}

// Lexicographic order on (re, im) components, used only to break exact ties
// between degenerate eigenvectors after gauge fixing.
bool lex_less(const CVector& a, const CVector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i).real() != b(i).real()) return a(i).real() < b(i).real();
    if (a(i).imag() != b(i).imag()) return a(i).imag() < b(i).imag();
  }
  return false;
}

}  // namespace

LatticeModel LatticeModel::create(std::string name, int dimension,
                                  std::vector<Vec2> lattice_vectors,
                                  std::vector<double> onsite,
                                  std::vector<Hopping> hoppings) {
  if (dimension != 1 && dimension != 2)
    throw ConfigError("model '" + name + "': dimension must be 1 or 2");
  if (static_cast<int>(lattice_vectors.size()) != dimension)
    throw ConfigError("model '" + name + "': need one lattice vector per dimension");
  if (onsite.empty())
    throw ConfigError("model '" + name + "': at least one sublattice required");
  for (double w : onsite)
    if (!std::isfinite(w))
      throw ConfigError("model '" + name + "': non-finite on-site frequency");
  const int nsub = static_cast<int>(onsite.size());
  for (std::size_t i = 0; i < hoppings.size(); ++i) {
    const Hopping& h = hoppings[i];
    if (h.from < 0 || h.from >= nsub || h.to < 0 || h.to >= nsub)
      throw ConfigError("model '" + name + "': sublattice index out of range in " +
                        describe(h));
    if (dimension == 1 && h.offset[1] != 0)
      throw ConfigError("model '" + name + "': 1D model with a k2 offset in " +
                        describe(h));
    if (!std::isfinite(h.amplitude.real()) || !std::isfinite(h.amplitude.imag()))
      throw ConfigError("model '" + name + "': non-finite amplitude in " + describe(h));
    if (h.from == h.to && h.offset == CellOffset{0, 0})
      throw ConfigError("model '" + name +
                        "': on-site term given as a hopping; use the on-site list");
    for (std::size_t j = 0; j < i; ++j) {
      const Hopping& g = hoppings[j];
      if (same_bond(g, h))
        throw ConfigError("model '" + name + "': bond listed twice: " + describe(h));
      if (is_reverse(g, h)) {
        if (std::abs(h.amplitude - std::conj(g.amplitude)) > 1e-12)
          throw ConfigError("model '" + name + "': non-Hermitian bond pair " +
                            describe(g) + " / " + describe(h));
        throw ConfigError("model '" + name + "': bond " + describe(h) +
                          " repeats the implied reverse of " + describe(g));
      }
    }
  }
  LatticeModel m;
  m.name_ = std::move(name);
  m.dimension_ = dimension;
  m.lattice_vectors_ = std::move(lattice_vectors);
  m.onsite_ = std::move(onsite);
  m.hoppings_ = std::move(hoppings);
  return m;
}

LatticeModel LatticeModel::fold_k2(double k2) const {
  if (dimension_ != 2) throw ConfigError("fold_k2 requires a 2D model");
  std::vector<double> onsite = onsite_;
  std::vector<Hopping> folded;
  for (const Hopping& h : hoppings_) {
    const cplx amp = h.amplitude * std::polar(1.0, k2 * h.offset[1]);
    Hopping f{h.from, h.to, {h.offset[0], 0}, amp};
    if (f.from == f.to && f.offset[0] == 0) {
      onsite[static_cast<std::size_t>(f.from)] += 2.0 * amp.real();
      continue;
    }
    bool merged = false;
    for (Hopping& g : folded) {
      if (same_bond(g, f)) {
        g.amplitude += f.amplitude;
        merged = true;
        break;
      }
      if (is_reverse(g, f)) {
        g.amplitude += std::conj(f.amplitude);
        merged = true;
        break;
      }
    }
    if (!merged) folded.push_back(f);
  }
  return create(name_ + "@k2", 1, {lattice_vectors_[0]}, std::move(onsite),
                std::move(folded));
}

LatticeModel ssh(double t1, double t2, double omega0) {
  return LatticeModel::create("ssh", 1, {{1.0, 0.0}}, {omega0, omega0},
                              {{0, 1, {0, 0}, t1}, {1, 0, {1, 0}, t2}});
}

LatticeModel ssh_no_chiral(double t1, double t2, double omega0, double delta) {
  return LatticeModel::create("ssh_no_chiral", 1, {{1.0, 0.0}},
                              {omega0 + delta, omega0 - delta},
                              {{0, 1, {0, 0}, t1}, {1, 0, {1, 0}, t2}});
}

LatticeModel honeycomb(double t, double omega0, double m) {
  const double s3 = std::sqrt(3.0);
  // B sits at (a1 + a2)/3; its three A neighbours are in cells 0, +a1, +a2.
  return LatticeModel::create(
      "honeycomb", 2, {{1.0, 0.0}, {0.5, s3 / 2.0}},
      {omega0 + 0.5 * m, omega0 - 0.5 * m},
      {{0, 1, {0, 0}, t}, {0, 1, {-1, 0}, t}, {0, 1, {0, -1}, t}});
}

KMesh KMesh::line(int n, double offset) { return KMesh{{n, 1}, {offset, 0.0}}; }

KMesh KMesh::grid(int n1, int n2, double offset) {
  return KMesh{{n1, n2}, {offset, offset}};
}

Vec2 KMesh::reduced(std::size_t k) const {
  const auto idx = indices(k);
  return {(idx[0] + offset[0]) / divisions[0], (idx[1] + offset[1]) / divisions[1]};
}

void KMesh::validate() const {
  for (int i = 0; i < 2; ++i) {
    if (divisions[i] < 1) throw ConfigError("k-mesh divisions must be >= 1");
    if (!(offset[i] >= 0.0 && offset[i] < 1.0))
      throw ConfigError("k-mesh offset must lie in [0, 1) mesh steps");
  }
}

CMatrix bloch_hamiltonian(const LatticeModel& model, const Vec2& k) {
  const int n = model.sublattice_count();
  CMatrix h = CMatrix::Zero(n, n);
  for (int a = 0; a < n; ++a) h(a, a) = model.onsite()[static_cast<std::size_t>(a)];
  for (const Hopping& hop : model.hoppings()) {
    // reduce to whole cycles first so k and k + G give the same matrix
    double cycles = k[0] * hop.offset[0] + k[1] * hop.offset[1];
    cycles -= std::floor(cycles);
    const double phase = kTwoPi * cycles;
    const cplx term = hop.amplitude * std::polar(1.0, phase);
    h(hop.from, hop.to) += term;
    h(hop.to, hop.from) += std::conj(term);
  }
  return h;
}

std::vector<BlochState> solve_bloch(const LatticeModel& model, const Vec2& k) {
  const CMatrix h = bloch_hamiltonian(model, k);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success)
    throw NumericalError("band_solve", "eigensolver did not converge");
  const Eigen::Index n = h.rows();
  std::vector<BlochState> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& s = out[static_cast<std::size_t>(i)];
    s.omega = es.eigenvalues()(i);
    s.u = es.eigenvectors().col(i);
    s.u.normalize();
    fix_gauge(s.u);
  }
  // eigenvalues arrive ascending; reorder exact-degenerate clusters
  std::size_t start = 0;
  while (start < out.size()) {
    std::size_t end = start + 1;
    while (end < out.size() && out[end].omega - out[end - 1].omega <= 1e-12) ++end;
    if (end - start > 1)
      std::stable_sort(out.begin() + static_cast<std::ptrdiff_t>(start),
                       out.begin() + static_cast<std::ptrdiff_t>(end),
                       [](const BlochState& a, const BlochState& b) {
                         return lex_less(a.u, b.u);
                       });
    start = end;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i; j < out.size(); ++j) {
      const cplx ov = out[i].u.dot(out[j].u);
      const double target = i == j ? 1.0 : 0.0;
      if (std::abs(ov - target) > 1e-10)
        throw NumericalError("band_solve", "eigenvectors not orthonormal");
    }
  }
  return out;
}

BandSolution band_solve(const LatticeModel& model, const KMesh& mesh, int workers) {
  mesh.validate();
  if (model.dimension() == 1 && mesh.divisions[1] != 1)
    throw ConfigError("1D model needs a mesh with a single k2 division");
  BandSolution bs;
  bs.mesh = mesh;
  bs.bands = model.sublattice_count();
  bs.dimension = model.dimension();
  bs.lattice_vectors = model.lattice_vectors();
  const std::size_t nk = mesh.size();
  auto per_k = parallel_map<std::vector<BlochState>>(nk, workers, [&](std::size_t k) {
    try {
      return solve_bloch(model, mesh.reduced(k));
    } catch (const NumericalError& e) {
      const auto idx = mesh.indices(k);
      throw NumericalError("band_solve", std::string(e.what()) + " at k-point (" +
                                             std::to_string(idx[0]) + "," +
                                             std::to_string(idx[1]) + ")");
    }
  });
  bs.states.reserve(nk * static_cast<std::size_t>(bs.bands));
  for (auto& v : per_k)
    for (auto& s : v) bs.states.push_back(std::move(s));
  return bs;
}

double BandSolution::min_omega() const {
  double lo = states.front().omega;
  for (const auto& s : states) lo = std::min(lo, s.omega);
  return lo;
}

double BandSolution::max_omega() const {
  double hi = states.front().omega;
  for (const auto& s : states) hi = std::max(hi, s.omega);
  return hi;
}

std::vector<Vec2> BandSolution::reciprocal_vectors() const {
  if (dimension == 1) {
    const double a = lattice_vectors[0][0];
    return {{kTwoPi / a, 0.0}};
  }
  const Vec2& a1 = lattice_vectors[0];
  const Vec2& a2 = lattice_vectors[1];
  const double det = a1[0] * a2[1] - a1[1] * a2[0];
  return {{kTwoPi * a2[1] / det, -kTwoPi * a2[0] / det},
          {-kTwoPi * a1[1] / det, kTwoPi * a1[0] / det}};
}

BandSolution cylinder_bands(const LatticeModel& model, double k2, int n1,
                            double offset, int workers) {
  if (model.dimension() != 2) throw ConfigError("cylinder_bands needs a 2D model");
  if (n1 < 2) throw ConfigError("cylinder_bands needs n1 >= 2");
  BandSolution bs = band_solve(model.fold_k2(k2), KMesh::line(n1, offset), workers);
  bs.k2_parameter = k2;
  return bs;
}

CMatrix ribbon_hamiltonian(const LatticeModel& model, int n_open, double k2) {
  if (model.dimension() != 2) throw ConfigError("ribbon needs a 2D model");
  return real_space_hamiltonian(model.fold_k2(k2), {n_open, 1}, Boundary::open());
}

RibbonSpectrum ribbon_bands(const LatticeModel& model, int n_open,
                            const std::vector<double>& k2_grid, int workers) {
  if (n_open < 8) throw ConfigError("ribbon_bands needs n_open >= 8");
  RibbonSpectrum out;
  out.n_open = n_open;
  const int nsub = model.sublattice_count();
  out.slices = parallel_map<RibbonSlice>(k2_grid.size(), workers, [&](std::size_t i) {
    const double k2 = k2_grid[i];
    Eigen::SelfAdjointEigenSolver<CMatrix> es(ribbon_hamiltonian(model, n_open, k2));
    if (es.info() != Eigen::Success)
      throw NumericalError("ribbon_bands", "eigensolver failed at k2 = " +
                                               std::to_string(k2));
    RibbonSlice s;
    s.k2 = k2;
    const Eigen::Index n = es.eigenvalues().size();
    for (Eigen::Index j = 0; j < n; ++j) {
      s.omega.push_back(es.eigenvalues()(j));
      double w = 0.0;
      for (int cell : {0, 1, n_open - 2, n_open - 1})
        for (int a = 0; a < nsub; ++a)
          w += std::norm(es.eigenvectors()(cell * nsub + a, j));
      s.edge_weight.push_back(w);
      s.edge_flag.push_back(w > out.edge_threshold);
    }
    return s;
  });
  return out;
}

std::vector<double> angle_grid(int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = kTwoPi * i / n;
  return g;
}

}  // namespace ffent
