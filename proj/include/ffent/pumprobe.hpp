#pragma once

// In-silico pump-probe chain: damped response synthesis, Lorentzian fits of
// the intensity, SVD wavefunction recovery, and entanglement rebuilt from the
// recovered bands.

#include "ffent/correlation.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ffent {

/// Damping gamma_nk in krad/s: per-band values if given, else uniform.
struct Damping {
  double uniform = 0.02;
  std::vector<double> per_band;
  double at(std::size_t k, int band) const;
};

/// Additive complex Gaussian noise on chi. snr <= 0 disables it. The noise
/// standard deviation is (1 / gamma_min) / snr, i.e. relative to the
/// resonant response.
struct NoiseSpec {
  double snr = 0.0;
  std::uint64_t seed = 0;
  bool enabled() const { return snr > 0.0; }
};

/// chi_ab(k, w) = sum_n conj(u_n(a)) u_n(b) / (w - w_n - i gamma_n).
/// Throws NumericalError when w sits exactly on an undamped pole.
CMatrix synthesize_response(const BandSolution& bands, std::size_t k, double omega,
                            const Damping& damping);

/// chi over a frequency grid at one k, with optional noise drawn from rng.
std::vector<CMatrix> synthesize_stack(const BandSolution& bands, std::size_t k,
                                      const std::vector<double>& omega_grid,
                                      const Damping& damping, const NoiseSpec& noise = {},
                                      std::mt19937_64* rng = nullptr);

/// P = squared Frobenius norm of each chi.
std::vector<double> response_intensity(const std::vector<CMatrix>& stack);

struct LorentzianPeak {
  double center = 0.0;     // krad/s
  double gamma = 0.0;      // half-width, krad/s
  double amplitude = 0.0;  // P contribution amplitude / ((w - c)^2 + gamma^2)
};

struct LorentzianFit {
  std::vector<LorentzianPeak> peaks;  // ascending center
  double background = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;  // after every accepted step
  bool unresolved = false;                // some pair closer than 3 gamma
};

struct FitOptions {
  int max_iterations = 200;
  double resolvability_factor = 3.0;
};

/// Levenberg-Marquardt fit of sum_i A_i / ((w - c_i)^2 + g_i^2) + B.
/// Starts from the `expected` highest local maxima. Throws NumericalError when
/// there are fewer maxima than expected or the iteration limit is reached.
LorentzianFit fit_lorentzians(const std::vector<double>& omega, const std::vector<double>& p,
                              int expected, const FitOptions& options = {});

/// Same, starting from given peaks instead of local maxima.
LorentzianFit fit_lorentzians(const std::vector<double>& omega, const std::vector<double>& p,
                              std::vector<LorentzianPeak> initial, const FitOptions& options = {});

struct ExtractedState {
  CVector u;
  double sigma_ratio = 0.0;  // sigma_2 / sigma_1
  bool contaminated = false;  // sigma_ratio > 0.5
};

/// Dominant singular vector of chi at a resonance, mapped back to u (chi is
/// conj(u) u^T at an isolated pole) and gauge fixed.
ExtractedState extract_wavefunction(const CMatrix& chi);

struct PipelineOptions {
  Damping damping;
  NoiseSpec noise;
  double omega_lo = 40.0;
  double omega_hi = 60.0;
  double omega_step = 0.05;
  int samples_per_halfwidth = 8;
  FitOptions fit;
  int workers = 1;
};

struct PipelineKReport {
  std::size_t k = 0;
  bool ok = true;
  std::string error;
  double residual_norm = 0.0;
  int iterations = 0;
  std::size_t samples = 0;
  bool unresolved = false;
  bool contaminated = false;
  std::vector<double> center_error;
  std::vector<double> gamma_error;
  std::vector<double> sigma_ratio;
  std::vector<double> overlap;  // |<u_rec, u_true>|
};

struct PipelineResult {
  BandSolution exact;
  BandSolution recovered;  // valid only when complete()
  EntanglementResult exact_result;
  std::optional<EntanglementResult> recovered_result;
  std::vector<PipelineKReport> per_k;
  double entropy_abs_error = 0.0;
  double entropy_rel_error = 0.0;
  double max_center_error = 0.0;
  double max_spectral_deviation = 0.0;
  double min_overlap = 1.0;

  bool complete() const;
  std::vector<std::size_t> flagged_k() const;
};

/// Full round trip at every mesh k. `window` applies to both band sets; when
/// absent each set is filled to half (lowest bands/2 bands).
PipelineResult reconstruct_pipeline(const LatticeModel& model, const KMesh& mesh,
                                    const SubsystemMask& mask,
                                    const std::optional<FillingWindow>& window,
                                    const PipelineOptions& options);

}  // namespace ffent
