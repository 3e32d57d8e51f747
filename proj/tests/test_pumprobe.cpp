#include <doctest.h>

#include "ffent/pumprobe.hpp"

#include <cmath>
#include <numbers>

using namespace ffent;

namespace {

constexpr double pi = std::numbers::pi;

// One k-point, explicit states.
BandSolution single_k(std::vector<std::pair<double, CVector>> states) {
  BandSolution bs;
  bs.mesh = KMesh::line(1, 0.0);
  bs.bands = static_cast<int>(states.size());
  bs.lattice_vectors = {{1.0, 0.0}};
  for (auto& [w, u] : states) bs.states.push_back({w, 0.0, u});
  return bs;
}

CVector vec(cplx a, cplx b) {
  CVector v(2);
  v << a, b;
  return v;
}

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  const auto n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) g.push_back(lo + step * i);
  return g;
}

double lorentz(double w, double c, double g) { return 1.0 / ((w - c) * (w - c) + g * g); }

double overlap(const CVector& a, const CVector& b) { return std::abs(a.dot(b)); }

}  // namespace

TEST_CASE("single_flat_band_response") {
  const double w0 = 48.0, g = 0.05;
  const auto bs = single_k({{w0, vec(1, 0)}});
  const Damping d{g, {}};
  const CMatrix at = synthesize_response(bs, 0, w0, d);
  CHECK(std::abs(at(0, 0) - cplx(0.0, 1.0 / g)) < 1e-12);
  CHECK(at(0, 1) == cplx(0, 0));
  CHECK(at(1, 1) == cplx(0, 0));
  const CMatrix off = synthesize_response(bs, 0, 48.3, d);
  CHECK(std::abs(off(0, 0) - 1.0 / cplx(0.3, -g)) < 1e-12);
  // real part is odd about the centre
  CHECK(synthesize_response(bs, 0, w0 - 0.1, d)(0, 0).real() < 0.0);
  CHECK(synthesize_response(bs, 0, w0 + 0.1, d)(0, 0).real() > 0.0);
  // retarded: Im chi > 0 for a single pole below the real axis
  CHECK(synthesize_response(bs, 0, w0 + 0.7, d)(0, 0).imag() > 0.0);
  CHECK(synthesize_response(bs, 0, 1e7, d).norm() < 1e-6);
}

TEST_CASE("undamped_pole_is_an_error") {
  const auto bs = single_k({{48.0, vec(1, 0)}});
  CHECK_THROWS_AS(synthesize_response(bs, 0, 48.0, Damping{0.0, {}}), NumericalError);
  CHECK_NOTHROW(synthesize_response(bs, 0, 48.1, Damping{0.0, {}}));
  CHECK_THROWS_AS(synthesize_response(bs, 0, 48.0, Damping{-0.1, {}}), ConfigError);
}

TEST_CASE("off_resonant_bound_between_bands") {
  const auto bs = band_solve(ssh(2.0, 4.0, 48.0), KMesh::line(2, 0.0));
  const double lo = bs.state(1, 0).omega, hi = bs.state(1, 1).omega;
  const double gap = hi - lo;
  CHECK(gap == doctest::Approx(4.0));
  const double g = 0.01;
  const double norm = synthesize_response(bs, 1, 0.5 * (lo + hi), Damping{g, {}}).norm();
  CHECK(norm <= 2.0 / (gap / 2.0) * (1.0 + g * g / (gap * gap)));
}

TEST_CASE("intensity_single_band_is_exact_lorentzian") {
  const double w0 = 48.0, g = 0.05;
  const auto bs = single_k({{w0, vec(std::sqrt(0.5), cplx(0, std::sqrt(0.5)))}});
  const auto ws = grid(47.0, 49.0, 0.01);
  const auto p = response_intensity(synthesize_stack(bs, 0, ws, Damping{g, {}}));
  for (std::size_t i = 0; i < ws.size(); ++i) CHECK(std::abs(p[i] - lorentz(ws[i], w0, g)) < 1e-9 * lorentz(ws[i], w0, g));
}

TEST_CASE("intensity_orthogonal_bands_has_no_cross_terms") {
  const auto bs = band_solve(ssh(2.0, 4.0, 48.0), KMesh::line(8));
  const double g = 0.03;
  for (std::size_t k = 0; k < 8; ++k) {
    const auto ws = grid(41.0, 55.0, 0.1);
    const auto p = response_intensity(synthesize_stack(bs, k, ws, Damping{g, {}}));
    for (std::size_t i = 0; i < ws.size(); ++i) {
      const double expect = lorentz(ws[i], bs.state(k, 0).omega, g) + lorentz(ws[i], bs.state(k, 1).omega, g);
      CHECK(p[i] >= 0.0);
      CHECK(std::abs(p[i] - expect) < 1e-10 * expect);
    }
  }
}

TEST_CASE("intensity_integrates_to_pi_over_gamma") {
  const double w0 = 50.0, g = 0.02;
  const auto bs = single_k({{w0, vec(1, 0)}});
  const auto ws = grid(w0 - 1000 * g, w0 + 1000 * g, g / 20.0);
  const auto p = response_intensity(synthesize_stack(bs, 0, ws, Damping{g, {}}));
  double integral = 0.0;
  for (std::size_t i = 1; i < ws.size(); ++i) integral += 0.5 * (p[i] + p[i - 1]) * (ws[i] - ws[i - 1]);
  CHECK(std::abs(integral - pi / g) / (pi / g) < 0.01);
}

TEST_CASE("noise_is_seeded_and_reproducible") {
  const auto bs = band_solve(ssh(2.0, 4.0, 48.0), KMesh::line(4));
  const auto ws = grid(44.0, 52.0, 0.05);
  const NoiseSpec noise{50.0, 7};
  std::mt19937_64 a(7), b(7), c(8);
  const auto sa = synthesize_stack(bs, 1, ws, Damping{}, noise, &a);
  const auto sb = synthesize_stack(bs, 1, ws, Damping{}, noise, &b);
  const auto sc = synthesize_stack(bs, 1, ws, Damping{}, noise, &c);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    same = same && sa[i] == sb[i];
    differs = differs || sa[i] != sc[i];
  }
  CHECK(same);
  CHECK(differs);
  CHECK_THROWS_AS(synthesize_stack(bs, 1, ws, Damping{}, noise, nullptr), ConfigError);
}

TEST_CASE("fit_single_lorentzian_noiseless") {
  const double c = 48.0, g = 0.05;
  const auto ws = grid(47.0, 49.0, g / 8.0);
  std::vector<double> p;
  for (double w : ws) p.push_back(lorentz(w, c, g));
  const auto fit = fit_lorentzians(ws, p, 1);
  REQUIRE(fit.peaks.size() == 1u);
  CHECK(std::abs(fit.peaks[0].center - c) < 1e-6);
  CHECK(std::abs(fit.peaks[0].gamma - g) < 1e-6);
  CHECK(fit.peaks[0].amplitude > 0.0);
  CHECK_FALSE(fit.unresolved);
}

TEST_CASE("fit_two_separated_peaks") {
  const double g = 0.05, c1 = 48.0, c2 = 48.0 + 10.0 * g;
  const auto ws = grid(47.0, 49.5, g / 8.0);
  std::vector<double> p;
  for (double w : ws) p.push_back(lorentz(w, c1, g) + lorentz(w, c2, g));
  const auto fit = fit_lorentzians(ws, p, 2);
  REQUIRE(fit.peaks.size() == 2u);
  CHECK(std::abs(fit.peaks[0].center - c1) < g / 100.0);
  CHECK(std::abs(fit.peaks[1].center - c2) < g / 100.0);
  CHECK_FALSE(fit.unresolved);
  for (std::size_t i = 1; i < fit.residual_history.size(); ++i)
    CHECK(fit.residual_history[i] <= fit.residual_history[i - 1]);
}

TEST_CASE("fit_merged_peaks_flagged_unresolved") {
  const double g = 0.05, c1 = 48.0, c2 = 48.0 + 1.5 * g;
  const auto ws = grid(47.0, 49.0, g / 8.0);
  std::vector<double> p;
  for (double w : ws) p.push_back(lorentz(w, c1, g) + lorentz(w, c2, g));
  // two equal Lorentzians stay bimodal above 2g/sqrt(3)
  const auto fit = fit_lorentzians(ws, p, 2);
  REQUIRE(fit.peaks.size() == 2u);
  CHECK(std::abs(fit.peaks[0].center - c1) < g / 2.0);
  CHECK(std::abs(fit.peaks[1].center - c2) < g / 2.0);
  CHECK(fit.unresolved);
}

TEST_CASE("fit_needs_enough_maxima") {
  const double g = 0.05, c1 = 48.0, c2 = 48.0 + g;
  const auto ws = grid(47.0, 49.0, g / 8.0);
  std::vector<double> p;
  for (double w : ws) p.push_back(lorentz(w, c1, g) + lorentz(w, c2, g));
  CHECK_THROWS_AS(fit_lorentzians(ws, p, 2), NumericalError);
  const double mid = 0.5 * (c1 + c2);
  const auto fit = fit_lorentzians(ws, p, {{mid - g, g, 1.0}, {mid + g, g, 1.0}});
  REQUIRE(fit.peaks.size() == 2u);
  CHECK(std::abs(fit.peaks[0].center - c1) < g / 2.0);
  CHECK(std::abs(fit.peaks[1].center - c2) < g / 2.0);
  CHECK(fit.unresolved);
}

TEST_CASE("fit_iteration_limit_is_an_error") {
  const double g = 0.05;
  const auto ws = grid(47.0, 49.5, g / 8.0);
  std::vector<double> p;
  for (double w : ws) p.push_back(lorentz(w, 48.0, g) + lorentz(w, 48.5, 2 * g) + 3.0);
  FitOptions opts;
  opts.max_iterations = 1;
  CHECK_THROWS_AS(fit_lorentzians(ws, p, 2, opts), NumericalError);
}

TEST_CASE("fit_residual_monotone_with_background") {
  const double g = 0.04;
  const auto ws = grid(46.0, 50.0, g / 8.0);
  std::vector<double> p;
  for (double w : ws) p.push_back(2.0 * lorentz(w, 47.0, g) + lorentz(w, 48.6, 1.5 * g) + 7.0);
  const auto fit = fit_lorentzians(ws, p, 2);
  REQUIRE(fit.peaks.size() == 2u);
  CHECK(std::abs(fit.peaks[0].center - 47.0) < 1e-6);
  CHECK(std::abs(fit.peaks[1].gamma - 1.5 * g) < 1e-6);
  CHECK(fit.peaks[0].center < fit.peaks[1].center);
  for (std::size_t i = 1; i < fit.residual_history.size(); ++i)
    CHECK(fit.residual_history[i] <= fit.residual_history[i - 1]);
}

TEST_CASE("extract_rank_one_response") {
  const CVector u = vec(cplx(0.6, 0.0), cplx(0.0, 0.8));
  const double g = 0.02;
  const CMatrix chi = cplx(0.0, 1.0 / g) * (u.conjugate() * u.transpose());
  const auto e = extract_wavefunction(chi);
  CHECK(std::abs(e.u.norm() - 1.0) < 1e-12);
  CHECK(std::abs(overlap(e.u, u) - 1.0) < 1e-12);
  CHECK(e.sigma_ratio < 1e-12);
  CHECK_FALSE(e.contaminated);
  // gauge rule: largest component real and positive
  Eigen::Index imax;
  e.u.cwiseAbs().maxCoeff(&imax);
  CHECK(e.u(imax).imag() == 0.0);
  CHECK(e.u(imax).real() > 0.0);
  // deterministic
  const auto again = extract_wavefunction(chi);
  CHECK(again.u == e.u);
}

TEST_CASE("extract_off_centre_ssh_state") {
  const auto bs = band_solve(ssh(2.0, 4.0, 48.0), KMesh::line(4, 0.0));
  const std::size_t k = 1;  // k = pi/2
  const double delta = bs.state(k, 1).omega - bs.state(k, 0).omega;
  for (double frac : {1.0 / 50.0, 1.0 / 200.0}) {
    const double g = delta * frac;
    for (int n : {0, 1}) {
      const CMatrix chi = synthesize_response(bs, k, bs.state(k, n).omega, Damping{g, {}});
      const auto e = extract_wavefunction(chi);
      CHECK(overlap(e.u, bs.state(k, n).u) >= 1.0 - 10.0 * (g / delta) * (g / delta));
      CHECK_FALSE(e.contaminated);
    }
  }
}

TEST_CASE("extract_degenerate_point_is_flagged") {
  const auto bs = single_k({{48.0, vec(1, 0)}, {48.0, vec(0, 1)}});
  const auto e = extract_wavefunction(synthesize_response(bs, 0, 48.0, Damping{0.02, {}}));
  CHECK(e.sigma_ratio == doctest::Approx(1.0));
  CHECK(e.contaminated);
}

TEST_CASE("pipeline_ssh_round_trip") {
  PipelineOptions opts;
  opts.damping.uniform = 0.02;
  const auto r = reconstruct_pipeline(ssh(2.0, 4.0, 48.0), KMesh::line(40), SubsystemMask::interval(10),
                                      std::nullopt, opts);
  REQUIRE(r.complete());
  CHECK(r.flagged_k().empty());
  REQUIRE(r.recovered_result.has_value());
  CHECK(r.entropy_rel_error < 0.02);
  CHECK(r.max_center_error < 0.02 / 100.0);
  CHECK(r.min_overlap > 0.999);
  for (const auto& rep : r.per_k) {
    CHECK(rep.ok);
    CHECK_FALSE(rep.unresolved);
    CHECK_FALSE(rep.contaminated);
    for (double ge : rep.gamma_error) CHECK(ge < 0.02 / 100.0);
  }
}

TEST_CASE("pipeline_undamped_limit") {
  PipelineOptions opts;
  opts.damping.uniform = 1e-6;
  const auto r = reconstruct_pipeline(ssh(2.0, 4.0, 48.0), KMesh::line(40), SubsystemMask::interval(10),
                                      std::nullopt, opts);
  REQUIRE(r.complete());
  CHECK(r.entropy_rel_error <= 1e-6);
}

TEST_CASE("pipeline_error_trend_in_damping") {
  // ratios of successive errors; the recovery is exact to rounding for
  // isolated poles, so errors are floored at 1e-12
  const auto model = ssh(2.0, 4.0, 48.0);
  const double gap = 4.0;
  std::vector<double> errors;
  for (double f : {1e-4, 1e-3, 1e-2, 1e-1}) {
    PipelineOptions opts;
    opts.damping.uniform = f * gap;
    const auto r = reconstruct_pipeline(model, KMesh::line(40), SubsystemMask::interval(10), std::nullopt, opts);
    REQUIRE(r.complete());
    errors.push_back(std::max(r.entropy_abs_error, 1e-12));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) CHECK(errors[i] >= 0.5 * errors[i - 1]);
}

TEST_CASE("pipeline_with_noise_is_deterministic_for_any_worker_count") {
  PipelineOptions opts;
  opts.damping.uniform = 0.05;
  opts.noise = {200.0, 42};
  const auto model = ssh(2.0, 4.0, 48.0);
  const auto mask = SubsystemMask::interval(6);
  opts.workers = 1;
  const auto a = reconstruct_pipeline(model, KMesh::line(24), mask, std::nullopt, opts);
  opts.workers = 3;
  const auto b = reconstruct_pipeline(model, KMesh::line(24), mask, std::nullopt, opts);
  REQUIRE(a.complete());
  REQUIRE(b.complete());
  CHECK(a.recovered_result->entropy == b.recovered_result->entropy);
  CHECK(a.recovered_result->spectrum == b.recovered_result->spectrum);
  CHECK(a.entropy_rel_error < 0.05);
}

TEST_CASE("pipeline_flags_overlapping_resonances") {
  // dimer limit with a tiny splitting: the two bands cannot be resolved
  PipelineOptions opts;
  opts.damping.uniform = 0.05;
  const auto r = reconstruct_pipeline(ssh(0.01, 0.01, 48.0), KMesh::line(24), SubsystemMask::interval(4),
                                      FillingWindow{40.0, 47.0, 1e-9}, opts);
  CHECK_FALSE(r.complete());
  CHECK_FALSE(r.flagged_k().empty());
  CHECK_FALSE(r.recovered_result.has_value());
}
