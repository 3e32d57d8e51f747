#include "ffent/pumprobe.hpp"

#include <cmath>
#include <set>

namespace ffent {

double Damping::at(std::size_t /*k*/, int band) const {
  if (!per_band.empty()) {
    if (band < 0 || static_cast<std::size_t>(band) >= per_band.size())
      throw ConfigError("damping has no entry for band " + std::to_string(band));
    return per_band[static_cast<std::size_t>(band)];
  }
  return uniform;
}

CMatrix synthesize_response(const BandSolution& bands, std::size_t k, double omega,
                            const Damping& damping) {
  const auto nsub = bands.state(k, 0).u.size();
  CMatrix chi = CMatrix::Zero(nsub, nsub);
  for (int n = 0; n < bands.bands; ++n) {
    const BlochState& s = bands.state(k, n);
    const double g = damping.at(k, n);
    if (g < 0.0) throw ConfigError("damping must be non-negative");
    const cplx den(omega - s.omega, -g);
    if (den == cplx(0.0, 0.0))
      throw NumericalError("synthesize_response", "omega sits on an undamped pole");
    chi += (s.u.conjugate() * s.u.transpose()) / den;
  }
  return chi;
}

std::vector<CMatrix> synthesize_stack(const BandSolution& bands, std::size_t k,
                                      const std::vector<double>& omega_grid,
                                      const Damping& damping, const NoiseSpec& noise,
                                      std::mt19937_64* rng) {
  std::vector<CMatrix> out;
  out.reserve(omega_grid.size());
  double sigma = 0.0;
  if (noise.enabled()) {
    if (rng == nullptr) throw ConfigError("noise requested without a random generator");
    double gmin = 1e300;
    for (int n = 0; n < bands.bands; ++n) gmin = std::min(gmin, damping.at(k, n));
    sigma = 1.0 / (gmin * noise.snr);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double w : omega_grid) {
    CMatrix chi = synthesize_response(bands, k, w, damping);
    if (sigma > 0.0) {
      for (Eigen::Index i = 0; i < chi.size(); ++i) {
        const double re = normal(*rng);
        const double im = normal(*rng);
        chi.data()[i] += sigma * std::sqrt(0.5) * cplx(re, im);
      }
    }
    out.push_back(std::move(chi));
  }
  return out;
}

std::vector<double> response_intensity(const std::vector<CMatrix>& stack) {
  std::vector<double> p;
  p.reserve(stack.size());
  for (const auto& chi : stack) p.push_back(chi.squaredNorm());
  return p;
}

ExtractedState extract_wavefunction(const CMatrix& chi) {
  if (chi.rows() != chi.cols() || chi.rows() == 0) throw ConfigError("chi must be square");
  Eigen::JacobiSVD<CMatrix> svd(chi, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(0) > 0.0)) throw NumericalError("extract_wavefunction", "chi vanishes");
  ExtractedState out;
  // chi ~ conj(u) u^T at a pole, so the right singular vector is conj(u)
  out.u = svd.matrixV().col(0).conjugate();
  out.u.normalize();
  fix_gauge(out.u);
  out.sigma_ratio = s.size() > 1 ? s(1) / s(0) : 0.0;
  out.contaminated = out.sigma_ratio > 0.5;
  return out;
}

bool PipelineResult::complete() const {
  for (const auto& r : per_k)
    if (!r.ok) return false;
  return true;
}

std::vector<std::size_t> PipelineResult::flagged_k() const {
  std::vector<std::size_t> out;
  for (const auto& r : per_k)
    if (!r.ok || r.unresolved || r.contaminated) out.push_back(r.k);
  return out;
}

namespace {

struct ZoomedPeak {
  LorentzianPeak estimate;
  std::vector<double> omega;
};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

// Repeatedly resamples around a coarse maximum until the grid resolves the
// peak with the requested samples per half-width.
template <typename Sampler>
ZoomedPeak zoom_peak(double center, double halfspan, int per_halfwidth, Sampler&& sample) {
  const int n = 16 * per_halfwidth + 1;
  for (int level = 0; level < 60; ++level) {
    const auto grid = linspace(center - halfspan, center + halfspan, n);
    const auto p = sample(grid);
    const auto imax = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    const double spacing = 2.0 * halfspan / (n - 1);
    const double half = 0.5 * p[imax];
    double hw = 0.0;
    for (int dir : {-1, +1}) {
      long j = static_cast<long>(imax);
      while (true) {
        const long next = j + dir;
        if (next < 0 || next >= n) break;
        const auto uj = static_cast<std::size_t>(j), un = static_cast<std::size_t>(next);
        if (p[un] <= half) {
          const double t = (p[uj] - half) / (p[uj] - p[un]);
          const double w = std::abs(grid[uj] + t * (grid[un] - grid[uj]) - grid[imax]);
          hw = hw == 0.0 ? w : std::min(hw, w);
          break;
        }
        j = next;
      }
    }
    center = grid[imax];
    if (hw == 0.0) {
      halfspan *= 4.0;  // peak wider than the window
      continue;
    }
    const bool fine = spacing <= hw / per_halfwidth * (1.0 + 1e-9);
    const bool wide = halfspan >= 7.9 * hw;
    if (fine && wide) return {{center, hw, p[imax] * hw * hw}, grid};
    halfspan = 8.0 * hw;
  }
  throw NumericalError("pipeline", "peak zoom did not settle");
}

}  // namespace

PipelineResult reconstruct_pipeline(const LatticeModel& model, const KMesh& mesh,
                                    const SubsystemMask& mask,
                                    const std::optional<FillingWindow>& window,
                                    const PipelineOptions& options) {
  if (!(options.omega_hi > options.omega_lo) || !(options.omega_step > 0.0))
    throw ConfigError("pipeline frequency grid is empty");
  if (options.samples_per_halfwidth < 2) throw ConfigError("samples_per_halfwidth must be >= 2");

  PipelineResult res;
  res.exact = band_solve(model, mesh, options.workers);
  for (std::size_t k = 0; k < mesh.size(); ++k)
    for (int n = 0; n < res.exact.bands; ++n)
      if (!(options.damping.at(k, n) > 0.0)) throw ConfigError("pipeline needs damping > 0");

  const int ncoarse =
      static_cast<int>(std::floor((options.omega_hi - options.omega_lo) / options.omega_step + 1e-9)) + 1;
  const auto coarse = linspace(options.omega_lo, options.omega_lo + (ncoarse - 1) * options.omega_step,
                               ncoarse);
  const int nb = res.exact.bands;

  std::vector<std::vector<BlochState>> recovered(mesh.size());
  res.per_k = parallel_map<PipelineKReport>(mesh.size(), options.workers, [&](std::size_t k) {
    PipelineKReport rep;
    rep.k = k;
    std::seed_seq seq{static_cast<std::uint64_t>(options.noise.seed), static_cast<std::uint64_t>(k)};
    std::mt19937_64 rng(seq);
    auto sample = [&](const std::vector<double>& grid) {
      return response_intensity(
          synthesize_stack(res.exact, k, grid, options.damping, options.noise, &rng));
    };
    try {
      const auto p0 = sample(coarse);
      std::vector<std::size_t> maxima;
      for (std::size_t i = 1; i + 1 < p0.size(); ++i)
        if (p0[i] > p0[i - 1] && p0[i] >= p0[i + 1]) maxima.push_back(i);
      if (static_cast<int>(maxima.size()) < nb)
        throw NumericalError("fit_lorentzians", "found " + std::to_string(maxima.size()) +
                                                    " local maxima, expected " + std::to_string(nb));
      std::stable_sort(maxima.begin(), maxima.end(),
                       [&](std::size_t a, std::size_t b) { return p0[a] > p0[b]; });
      maxima.resize(static_cast<std::size_t>(nb));

      std::set<double> grid(coarse.begin(), coarse.end());
      std::vector<LorentzianPeak> init;
      for (std::size_t i : maxima) {
        const auto z = zoom_peak(coarse[i], options.omega_step, options.samples_per_halfwidth, sample);
        init.push_back(z.estimate);
        grid.insert(z.omega.begin(), z.omega.end());
      }
      const std::vector<double> omega(grid.begin(), grid.end());
      const auto p = sample(omega);
      const auto fit = fit_lorentzians(omega, p, init, options.fit);
      rep.residual_norm = fit.residual_norm;
      rep.iterations = fit.iterations;
      rep.samples = omega.size();
      rep.unresolved = fit.unresolved;

      std::vector<BlochState> states;
      for (int n = 0; n < nb; ++n) {
        const auto& peak = fit.peaks[static_cast<std::size_t>(n)];
        auto chi = synthesize_stack(res.exact, k, {peak.center}, options.damping, options.noise,
                                    &rng)[0];
        const auto ex = extract_wavefunction(chi);
        const BlochState& truth = res.exact.state(k, n);
        rep.center_error.push_back(std::abs(peak.center - truth.omega));
        rep.gamma_error.push_back(std::abs(peak.gamma - options.damping.at(k, n)));
        rep.sigma_ratio.push_back(ex.sigma_ratio);
        rep.overlap.push_back(std::abs(ex.u.dot(truth.u)));
        rep.contaminated = rep.contaminated || ex.contaminated;
        // the correlation matrix treats the recovered system as undamped
        states.push_back({peak.center, 0.0, ex.u});
      }
      recovered[k] = std::move(states);
    } catch (const NumericalError& e) {
      rep.ok = false;
      rep.error = e.what();
    }
    return rep;
  });

  auto win_exact = window ? *window : FillingWindow::half(res.exact);
  res.exact_result = entanglement(correlation_matrix(res.exact, mask, win_exact, options.workers));
  for (const auto& r : res.per_k) {
    for (double e : r.center_error) res.max_center_error = std::max(res.max_center_error, e);
    for (double o : r.overlap) res.min_overlap = std::min(res.min_overlap, o);
  }
  if (!res.complete()) return res;

  res.recovered = res.exact;
  for (std::size_t k = 0; k < mesh.size(); ++k)
    for (int n = 0; n < nb; ++n) res.recovered.state(k, n) = recovered[k][static_cast<std::size_t>(n)];
  auto win_rec = window ? *window : FillingWindow::half(res.recovered);
  res.recovered_result =
      entanglement(correlation_matrix(res.recovered, mask, win_rec, options.workers));
  const auto& se = res.exact_result.spectrum;
  const auto& sr = res.recovered_result->spectrum;
  for (std::size_t i = 0; i < se.size(); ++i)
    res.max_spectral_deviation = std::max(res.max_spectral_deviation, std::abs(se[i] - sr[i]));
  res.entropy_abs_error = std::abs(res.recovered_result->entropy - res.exact_result.entropy);
  res.entropy_rel_error = res.exact_result.entropy > 0.0
                              ? res.entropy_abs_error / res.exact_result.entropy
                              : res.entropy_abs_error;
  return res;
}

}  // namespace ffent
