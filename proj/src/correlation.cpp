#include "ffent/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace ffent {

namespace {

constexpr std::size_t kChunkK = 64;

// Bloch amplitudes psi(i, a) = u(a) exp(2 pi i k.r_i) over the mask sites.
CVector mask_amplitudes(const SubsystemMask& mask, const Vec2& k, const CVector& u) {
  CVector psi(static_cast<Eigen::Index>(mask.size()));
  for (std::size_t s = 0; s < mask.size(); ++s) {
    const Site& site = mask.sites()[s];
    const double phase = kTwoPi * (k[0] * site.cell[0] + k[1] * site.cell[1]);
    psi(static_cast<Eigen::Index>(s)) = u(site.sublattice) * std::polar(1.0, phase);
  }
  return psi;
}

}  // namespace

std::string to_string(MaskGeometry g) {
  switch (g) {
    case MaskGeometry::interval: return "interval";
    case MaskGeometry::rectangle: return "rectangle";
    case MaskGeometry::rhombus: return "rhombus";
    case MaskGeometry::custom: return "custom";
  }
  return "custom";
}

SubsystemMask::SubsystemMask(std::vector<Site> sites, MaskGeometry g, double boundary,
                             std::string label)
    : sites_(std::move(sites)), geometry_(g), boundary_length_(boundary),
      label_(std::move(label)) {}

SubsystemMask SubsystemMask::interval(int length, int start, int sublattices) {
  if (length < 1) throw ConfigError("interval length must be >= 1");
  std::vector<Site> sites;
  for (int i = 0; i < length; ++i)
    for (int a = 0; a < sublattices; ++a) sites.push_back({{start + i, 0}, a});
  return SubsystemMask(std::move(sites), MaskGeometry::interval, 2.0,
                       "interval_L" + std::to_string(length));
}

SubsystemMask SubsystemMask::rectangle(int l1, int l2, CellOffset start, int sublattices) {
  if (l1 < 1 || l2 < 1) throw ConfigError("rectangle sides must be >= 1");
  std::vector<Site> sites;
  for (int i = 0; i < l1; ++i)
    for (int j = 0; j < l2; ++j)
      for (int a = 0; a < sublattices; ++a)
        sites.push_back({{start[0] + i, start[1] + j}, a});
  return SubsystemMask(std::move(sites), MaskGeometry::rectangle, 2.0 * (l1 + l2),
                       "rectangle_" + std::to_string(l1) + "x" + std::to_string(l2));
}

SubsystemMask SubsystemMask::rhombus(int side, CellOffset start, int sublattices) {
  SubsystemMask m = rectangle(side, side, start, sublattices);
  m.geometry_ = MaskGeometry::rhombus;
  m.label_ = "rhombus_L" + std::to_string(side);
  return m;
}

SubsystemMask SubsystemMask::custom(std::vector<Site> sites, double boundary_length) {
  std::sort(sites.begin(), sites.end());
  if (std::adjacent_find(sites.begin(), sites.end()) != sites.end())
    throw ConfigError("mask contains duplicate sites");
  return SubsystemMask(std::move(sites), MaskGeometry::custom, boundary_length,
                       "custom");
}

std::string SubsystemMask::tag() const { return label_; }

void SubsystemMask::check_within(std::array<int, 2> extent, int sublattice_count) const {
  for (const Site& s : sites_) {
    if (s.cell[0] < 0 || s.cell[0] >= extent[0] || s.cell[1] < 0 ||
        s.cell[1] >= extent[1] || s.sublattice < 0 || s.sublattice >= sublattice_count) {
      std::ostringstream os;
      os << "mask site (" << s.cell[0] << "," << s.cell[1] << "; " << s.sublattice
         << ") outside the " << extent[0] << "x" << extent[1] << " system";
      throw ConfigError(os.str());
    }
  }
}

void FillingWindow::validate() const {
  if (!(omega_b < omega_F)) throw ConfigError("filling window needs omega_b < omega_F");
  if (!(tolerance >= 0.0)) throw ConfigError("filling tolerance must be >= 0");
}

FillingWindow FillingWindow::up_to(const BandSolution& bands, double omega_F) {
  const double lo = std::min(bands.min_omega(), omega_F) - 1.0;
  return {lo, omega_F, 1e-9};
}

FillingWindow FillingWindow::half(const BandSolution& bands) {
  const int filled = bands.bands / 2;
  if (filled == 0) throw ConfigError("half filling needs at least two bands");
  double lower_max = -std::numeric_limits<double>::infinity();
  double upper_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < bands.mesh.size(); ++k) {
    lower_max = std::max(lower_max, bands.state(k, filled - 1).omega);
    upper_min = std::min(upper_min, bands.state(k, filled).omega);
  }
  // omega_F mid-gap: the filled set is the same, and omega_F never sits on a band
  FillingWindow w = up_to(bands, 0.5 * (lower_max + upper_min));
  if (upper_min - lower_max <= 2.0 * w.tolerance) {
    std::ostringstream os;
    os << "half filling ill-defined: filled band reaches " << lower_max
       << " and empty band starts at " << upper_min;
    throw NumericalError("filling", os.str());
  }
  return w;
}

FillingWindow FillingWindow::all(const BandSolution& bands) {
  return up_to(bands, bands.max_omega());
}

CorrelationMatrix correlation_matrix(const BandSolution& bands, const SubsystemMask& mask,
                                     const FillingWindow& window, int workers) {
  window.validate();
  mask.check_within(bands.mesh.divisions, bands.bands);
  const std::size_t nk = bands.mesh.size();
  const Eigen::Index n = static_cast<Eigen::Index>(mask.size());
  const std::size_t chunks = (nk + kChunkK - 1) / kChunkK;

  struct Partial {
    CMatrix sum;
    std::size_t filled = 0;
  };
  auto partials = parallel_map<Partial>(chunks, workers, [&](std::size_t c) {
    const std::size_t k0 = c * kChunkK;
    const std::size_t k1 = std::min(nk, k0 + kChunkK);
    std::vector<CVector> cols;
    for (std::size_t k = k0; k < k1; ++k) {
      const Vec2 kr = bands.mesh.reduced(k);
      for (int b = 0; b < bands.bands; ++b) {
        const BlochState& s = bands.state(k, b);
        if (window.contains(s.omega)) cols.push_back(mask_amplitudes(mask, kr, s.u));
      }
    }
    Partial p;
    p.filled = cols.size();
    CMatrix psi(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) psi.col(static_cast<Eigen::Index>(j)) = cols[j];
    p.sum = psi.conjugate() * psi.transpose();
    return p;
  });

  CorrelationMatrix out{CMatrix::Zero(n, n), mask, window, bands.mesh, 0, false};
  for (const Partial& p : partials) {
    out.matrix += p.sum;
    out.filled_states += p.filled;
  }
  out.matrix /= static_cast<double>(nk);
  out.empty_window = out.filled_states == 0;
  return out;
}

std::vector<FrequencyBin> frequency_resolved_correlation(const BandSolution& bands,
                                                         const SubsystemMask& mask,
                                                         double bin_width) {
  mask.check_within(bands.mesh.divisions, bands.bands);
  const double lo = bands.min_omega();
  const double hi = bands.max_omega();
  if (bin_width <= 0.0) bin_width = (hi - lo) / 200.0;
  if (bin_width <= 0.0) bin_width = 1.0;  // flat spectrum: one bin
  const std::size_t nbins =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / bin_width)));
  const Eigen::Index n = static_cast<Eigen::Index>(mask.size());
  std::vector<FrequencyBin> bins(nbins);
  for (std::size_t b = 0; b < nbins; ++b) {
    bins[b].omega_lo = lo + bin_width * static_cast<double>(b);
    bins[b].omega_hi = bins[b].omega_lo + bin_width;
    bins[b].matrix = CMatrix::Zero(n, n);
  }
  const double norm = 1.0 / static_cast<double>(bands.mesh.size());
  for (std::size_t k = 0; k < bands.mesh.size(); ++k) {
    const Vec2 kr = bands.mesh.reduced(k);
    for (int b = 0; b < bands.bands; ++b) {
      const BlochState& s = bands.state(k, b);
      auto idx = static_cast<std::size_t>(std::floor((s.omega - lo) / bin_width));
      idx = std::min(idx, nbins - 1);
      const CVector psi = mask_amplitudes(mask, kr, s.u);
      bins[idx].matrix += norm * (psi.conjugate() * psi.transpose());
      ++bins[idx].states;
    }
  }
  return bins;
}

std::vector<double> entanglement_spectrum(const CMatrix& c) {
  if (c.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<CMatrix> es(c, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalError("entanglement_spectrum", "eigensolver failed");
  std::vector<double> eps(static_cast<std::size_t>(c.rows()));
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double e = es.eigenvalues()(i);
    if (e < -1e-6 || e > 1.0 + 1e-6) {
      std::ostringstream os;
      os << "eigenvalue " << e << " outside [0,1]: corrupted correlation matrix";
      throw NumericalError("entanglement_spectrum", os.str());
    }
    eps[static_cast<std::size_t>(i)] = std::clamp(e, 0.0, 1.0);
  }
  std::sort(eps.begin(), eps.end());
  return eps;
}

double entanglement_entropy(std::span<const double> spectrum) {
  // x ln x with the argument of the log guarded; exact zeros contribute 0
  auto xlogx = [](double x) {
    if (x <= 0.0) return 0.0;
    return x * std::log(std::max(x, 1e-300));
  };
  double s = 0.0;
  for (double e : spectrum) {
    const double p = std::clamp(e, 0.0, 1.0);
    s -= xlogx(p) + xlogx(1.0 - p);
  }
  return std::max(0.0, s);
}

EntanglementResult entanglement(const CorrelationMatrix& c) {
  EntanglementResult r;
  r.mask_tag = c.mask.tag();
  r.omega_b = c.window.omega_b;
  r.omega_F = c.window.omega_F;
  r.spectrum = entanglement_spectrum(c.matrix);
  r.entropy = entanglement_entropy(r.spectrum);
  return r;
}

CMatrix real_space_correlation(const LatticeModel& model, std::array<int, 2> extent,
                               const Boundary& boundary, const SubsystemMask& mask,
                               std::size_t filling) {
  const long total = static_cast<long>(extent[0]) * extent[1] * model.sublattice_count();
  if (total > 5000)
    throw ConfigError("real_space_oracle limited to 5000 sites, got " +
                      std::to_string(total));
  mask.check_within(extent, model.sublattice_count());
  if (filling > static_cast<std::size_t>(total))
    throw ConfigError("filling exceeds the number of states");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(real_space_hamiltonian(model, extent, boundary));
  if (es.info() != Eigen::Success)
    throw NumericalError("real_space_oracle", "eigensolver failed");
  const auto& e = es.eigenvalues();
  const auto f = static_cast<Eigen::Index>(filling);
  if (f > 0 && f < e.size() && std::abs(e(f) - e(f - 1)) < 1e-9) {
    std::ostringstream os;
    os.precision(15);
    os << "degenerate states at the filling boundary: omega[" << f - 1 << "] = " << e(f - 1)
       << ", omega[" << f << "] = " << e(f) << "; adjust filling or extent";
    throw NumericalError("real_space_oracle", os.str());
  }
  const int nsub = model.sublattice_count();
  const Eigen::Index n = static_cast<Eigen::Index>(mask.size());
  CMatrix va(n, f);
  for (Eigen::Index s = 0; s < n; ++s) {
    const Site& site = mask.sites()[static_cast<std::size_t>(s)];
    const Eigen::Index row =
        (static_cast<Eigen::Index>(site.cell[0]) * extent[1] + site.cell[1]) * nsub +
        site.sublattice;
    va.row(s) = es.eigenvectors().row(row).head(f);
  }
  return va.conjugate() * va.transpose();
}

EntanglementResult real_space_oracle(const LatticeModel& model, std::array<int, 2> extent,
                                     const Boundary& boundary, const SubsystemMask& mask,
                                     std::size_t filling) {
  EntanglementResult r;
  r.mask_tag = mask.tag();
  r.spectrum =
      entanglement_spectrum(real_space_correlation(model, extent, boundary, mask, filling));
  r.entropy = entanglement_entropy(r.spectrum);
  return r;
}

std::vector<std::pair<double, double>> filling_sweep(const BandSolution& bands,
                                                     const SubsystemMask& mask,
                                                     const std::vector<double>& omega_grid,
                                                     int workers) {
  if (!std::is_sorted(omega_grid.begin(), omega_grid.end()))
    throw ConfigError("filling_sweep grid must be ascending");
  mask.check_within(bands.mesh.divisions, bands.bands);
  const double tol = FillingWindow{}.tolerance;
  std::vector<std::size_t> order(bands.states.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return bands.states[a].omega < bands.states[b].omega;
  });
  const auto nb = static_cast<std::size_t>(bands.bands);
  const Eigen::Index n = static_cast<Eigen::Index>(mask.size());
  const double norm = 1.0 / static_cast<double>(bands.mesh.size());

  // running sum over states in ascending frequency; snapshot per grid point
  std::vector<CMatrix> snapshots;
  snapshots.reserve(omega_grid.size());
  CMatrix running = CMatrix::Zero(n, n);
  std::size_t next = 0;
  for (double wf : omega_grid) {
    while (next < order.size() && bands.states[order[next]].omega <= wf + tol) {
      const std::size_t idx = order[next++];
      const CVector psi =
          mask_amplitudes(mask, bands.mesh.reduced(idx / nb), bands.states[idx].u);
      running += norm * (psi.conjugate() * psi.transpose());
    }
    snapshots.push_back(running);
  }
  auto entropies = parallel_map<double>(snapshots.size(), workers, [&](std::size_t i) {
    return entanglement_entropy(entanglement_spectrum(snapshots[i]));
  });
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < omega_grid.size(); ++i)
    out.emplace_back(omega_grid[i], entropies[i]);
  return out;
}

}  // namespace ffent
