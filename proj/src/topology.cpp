#include "ffent/topology.hpp"

#include <cmath>
#include <numbers>

namespace ffent {

double zak_phase(const BandSolution& bands, int band) {
  if (bands.dimension != 1) throw ConfigError("zak_phase needs a 1D band solution");
  if (band < 0 || band >= bands.bands) throw ConfigError("band index out of range");
  const std::size_t n = bands.mesh.size();
  if (n < 2) throw ConfigError("zak_phase needs at least 2 k-points");
  cplx prod(1.0, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const cplx ov = bands.state(j, band).u.dot(bands.state((j + 1) % n, band).u);
    if (std::abs(ov) < 0.1)
      throw NumericalError("zak_phase", "overlap " + std::to_string(std::abs(ov)) +
                                            " between k-points " + std::to_string(j) + " and " +
                                            std::to_string((j + 1) % n));
    prod *= ov / std::abs(ov);
  }
  double phase = -std::arg(prod);
  phase = std::fmod(phase, kTwoPi);
  if (phase < 0.0) phase += kTwoPi;
  if (phase >= kTwoPi) phase = 0.0;
  return phase;
}

double phase_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

double es_min_dist_to_half(const std::vector<double>& spectrum) {
  double best = 0.5;
  for (double e : spectrum) best = std::min(best, std::abs(e - 0.5));
  return best;
}

double es_gap(const std::vector<double>& spectrum, double delta) {
  double best = 0.5;
  for (double e : spectrum) {
    const double d = std::abs(e - 0.5);
    if (d >= delta) best = std::min(best, d);
  }
  return best;
}

int modes_near_half(const std::vector<double>& spectrum, double tolerance) {
  int n = 0;
  for (double e : spectrum)
    if (std::abs(e - 0.5) < tolerance) ++n;
  return n;
}

namespace {

template <typename Key>
std::size_t arg_best(const std::vector<TransitionPoint>& pts, Key key) {
  if (pts.empty()) throw ConfigError("empty scan");
  std::size_t best = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (key(pts[i]) > key(pts[best])) best = i;
  return best;
}

}  // namespace

std::size_t TransitionScan::argmax_entropy() const {
  return arg_best(points, [](const TransitionPoint& p) { return p.entropy; });
}
std::size_t TransitionScan::argmin_dist_to_half() const {
  return arg_best(points, [](const TransitionPoint& p) { return -p.es_min_dist_to_half; });
}
std::size_t TransitionScan::argmin_es_gap() const {
  return arg_best(points, [](const TransitionPoint& p) { return -p.es_gap; });
}

TransitionScan transition_scan(const ModelFamily& family, std::string parameter_name,
                               const std::vector<double>& grid, const ScanOptions& options) {
  if (grid.empty()) throw ConfigError("transition scan grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ConfigError("transition scan grid must be ascending");
  if (options.subsystem_cells < 1 || options.subsystem_cells > options.n_cells)
    throw ConfigError("subsystem must fit inside the chain");
  TransitionScan scan;
  scan.parameter_name = std::move(parameter_name);
  scan.points = parallel_map<TransitionPoint>(grid.size(), options.workers, [&](std::size_t i) {
    const LatticeModel model = family(grid[i]);
    const auto bands = band_solve(model, KMesh::line(options.n_cells, options.mesh_offset));
    const auto mask = SubsystemMask::interval(options.subsystem_cells, 0, model.sublattice_count());
    const auto c = correlation_matrix(bands, mask, FillingWindow::half(bands));
    TransitionPoint p;
    p.parameter = grid[i];
    p.spectrum = entanglement_spectrum(c);
    p.entropy = entanglement_entropy(p.spectrum);
    p.es_min_dist_to_half = es_min_dist_to_half(p.spectrum);
    p.es_gap = es_gap(p.spectrum, options.delta);
    p.n_modes_at_half = modes_near_half(p.spectrum, options.half_tolerance);
    return p;
  });
  return scan;
}

std::vector<double> CylinderES::flagged_k2() const {
  std::vector<double> out;
  for (const auto& s : slices)
    if (!s.skipped && s.in_gap) out.push_back(s.k2);
  return out;
}

namespace {

CylinderSlice slice_es(const BandSolution& bands, int subsystem_cells, double delta) {
  CylinderSlice s;
  s.k2 = bands.k2_parameter.value_or(0.0);
  FillingWindow window;
  try {
    window = FillingWindow::half(bands);
  } catch (const NumericalError& e) {
    s.skipped = true;
    s.reason = e.what();
    return s;
  }
  const int nsub = static_cast<int>(bands.state(0, 0).u.size());
  const auto c = correlation_matrix(bands, SubsystemMask::interval(subsystem_cells, 0, nsub), window);
  s.spectrum = entanglement_spectrum(c);
  s.entropy = entanglement_entropy(s.spectrum);
  s.in_gap = es_min_dist_to_half(s.spectrum) < delta;
  return s;
}

}  // namespace

CylinderES cylinder_es(const LatticeModel& model, int n1, int subsystem_cells,
                       const std::vector<double>& k2_grid, double delta, int workers) {
  if (model.dimension() != 2) throw ConfigError("cylinder_es needs a 2D model");
  if (subsystem_cells < 1 || n1 < 4 * subsystem_cells)
    throw ConfigError("cylinder_es needs n1 >= 4 L and L >= 1");
  if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("delta must lie in (0, 0.5)");
  CylinderES out;
  out.n1 = n1;
  out.subsystem_cells = subsystem_cells;
  out.delta = delta;
  out.slices = parallel_map<CylinderSlice>(k2_grid.size(), workers, [&](std::size_t i) {
    return slice_es(cylinder_bands(model, k2_grid[i], n1), subsystem_cells, delta);
  });
  return out;
}

CylinderES cylinder_es_from_bands(const std::vector<BandSolution>& slices, int subsystem_cells,
                                  double delta, int workers) {
  if (slices.empty()) throw ConfigError("no cylinder slices");
  CylinderES out;
  out.n1 = slices.front().mesh.divisions[0];
  out.subsystem_cells = subsystem_cells;
  out.delta = delta;
  if (subsystem_cells < 1 || out.n1 < 4 * subsystem_cells)
    throw ConfigError("cylinder_es needs n1 >= 4 L and L >= 1");
  out.slices = parallel_map<CylinderSlice>(slices.size(), workers, [&](std::size_t i) {
    if (slices[i].dimension != 1) throw ConfigError("cylinder slices must be 1D band solutions");
    return slice_es(slices[i], subsystem_cells, delta);
  });
  return out;
}

std::vector<std::pair<double, double>> entropy_vs_k2(const LatticeModel& model, int n1,
                                                     int subsystem_cells,
                                                     const std::vector<double>& k2_grid,
                                                     int workers) {
  const auto es = cylinder_es(model, n1, subsystem_cells, k2_grid, 0.05, workers);
  std::vector<std::pair<double, double>> out;
  for (const auto& s : es.slices)
    if (!s.skipped) out.emplace_back(s.k2, s.entropy);
  return out;
}

}  // namespace ffent
