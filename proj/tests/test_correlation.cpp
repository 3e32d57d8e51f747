#include <doctest.h>

#include "ffent/correlation.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace ffent;

namespace {

const double kLn2 = std::log(2.0);

bool hermitian(const CMatrix& c, double tol) { return (c - c.adjoint()).norm() < tol; }

}  // namespace

TEST_CASE("mask_sizes_and_tags") {
  CHECK(SubsystemMask::interval(7).size() == 14u);
  CHECK(SubsystemMask::rectangle(3, 3).size() == 18u);
  CHECK(SubsystemMask::rhombus(5).size() == 50u);
  CHECK(SubsystemMask::rhombus(5).tag() == "rhombus_L5");
  CHECK(SubsystemMask::interval(10).tag() == "interval_L10");
  CHECK_THROWS_AS(SubsystemMask::custom({{{0, 0}, 0}, {{0, 0}, 0}}), ConfigError);
  CHECK_THROWS_AS(SubsystemMask::interval(0), ConfigError);
  CHECK_THROWS_AS(SubsystemMask::interval(5, 38).check_within({40, 1}, 2), ConfigError);
  CHECK_NOTHROW(SubsystemMask::interval(5, 35).check_within({40, 1}, 2));
}

TEST_CASE("full_window_gives_identity_and_zero_entropy") {
  for (const auto& model : {ssh(2.0, 4.0, 48.0), honeycomb(2.5, 48.5, 0.0)}) {
    const auto bs = band_solve(model, model.dimension() == 1 ? KMesh::line(40) : KMesh::grid(12, 12));
    const auto mask = model.dimension() == 1 ? SubsystemMask::interval(6) : SubsystemMask::rhombus(3);
    const auto c = correlation_matrix(bs, mask, FillingWindow::all(bs));
    const auto n = static_cast<Eigen::Index>(mask.size());
    CHECK((c.matrix - CMatrix::Identity(n, n)).norm() < 1e-12);
    CHECK(entanglement(c).entropy < 1e-12);
  }
}

TEST_CASE("empty_window_gives_zero_matrix_with_flag") {
  const auto bs = band_solve(ssh(2.0, 4.0, 48.0), KMesh::line(40));
  const auto c = correlation_matrix(bs, SubsystemMask::interval(4), {30.0, 35.0, 1e-9});
  CHECK(c.empty_window);
  CHECK(c.filled_states == 0u);
  CHECK(c.matrix.norm() == 0.0);
}

TEST_CASE("dimerized_chain_has_two_half_modes") {
  const auto bs = band_solve(ssh(0.0, 1.0, 48.0), KMesh::line(40));
  for (int L : {3, 6, 10}) {
    const auto es = entanglement_spectrum(correlation_matrix(bs, SubsystemMask::interval(L), FillingWindow::half(bs)));
    int half = 0;
    for (double e : es) {
      if (std::abs(e - 0.5) < 1e-12) ++half;
      else CHECK((e < 1e-12 || e > 1.0 - 1e-12));
    }
    CHECK(half == 2);
  }
}

TEST_CASE("spectrum_of_simple_matrices") {
  auto es = entanglement_spectrum(CMatrix::Identity(3, 3));
  for (double e : es) CHECK(e == doctest::Approx(1.0));
  es = entanglement_spectrum(CMatrix(0.5 * CMatrix::Identity(2, 2)));
  CHECK(es.size() == 2u);
  CHECK(es[0] == doctest::Approx(0.5));
  CHECK(es[1] == doctest::Approx(0.5));
  CMatrix bad = CMatrix::Identity(2, 2);
  bad(0, 0) = 1.1;
  CHECK_THROWS_AS(entanglement_spectrum(bad), NumericalError);
  CMatrix near = CMatrix::Identity(2, 2);
  near(0, 0) = 1.0 + 1e-9;
  near(1, 1) = -1e-9;
  es = entanglement_spectrum(near);
  CHECK(es[0] == 0.0);
  CHECK(es[1] == 1.0);
}

TEST_CASE("entropy_of_simple_spectra") {
  CHECK(entanglement_entropy(std::vector<double>{0, 1, 1, 0}) == 0.0);
  CHECK(entanglement_entropy(std::vector<double>{0.5, 0.5}) == doctest::Approx(2.0 * kLn2).epsilon(1e-15));
  CHECK(entanglement_entropy(std::vector<double>{0.5}) == doctest::Approx(kLn2).epsilon(1e-15));
}

TEST_CASE("entropy_invariant_under_particle_hole_flip") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a, b;
  for (int i = 0; i < 30; ++i) {
    a.push_back(u(rng));
    b.push_back(1.0 - a.back());
  }
  CHECK(std::abs(entanglement_entropy(a) - entanglement_entropy(b)) < 1e-12);
}

TEST_CASE("topological_ssh_spectrum_has_two_isolated_half_modes") {
  const auto bs = band_solve(ssh(2.0, 4.0, 48.0), KMesh::line(40));
  const auto es = entanglement_spectrum(correlation_matrix(bs, SubsystemMask::interval(10), FillingWindow::half(bs)));
  int near = 0;
  for (double e : es) {
    if (std::abs(e - 0.5) < 1e-3) ++near;
    else CHECK(std::abs(e - 0.5) > 0.4);
  }
  CHECK(near == 2);
}

TEST_CASE("correlation_matrix_hermitian_bounded_and_trace") {
  const auto bs = band_solve(honeycomb(2.5, 48.5, 0.0), KMesh::grid(16, 16));
  const auto mask = SubsystemMask::rhombus(4);
  for (double wf : {44.0, 46.0, 48.5, 51.0}) {
    const auto c = correlation_matrix(bs, mask, FillingWindow::up_to(bs, wf));
    CHECK(hermitian(c.matrix, 1e-10));
    Eigen::SelfAdjointEigenSolver<CMatrix> es(c.matrix);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
    CHECK(es.eigenvalues().maxCoeff() < 1.0 + 1e-8);
    const double expected = static_cast<double>(c.filled_states) * static_cast<double>(mask.size()) /
                            (static_cast<double>(bs.mesh.size()) * 2.0);
    CHECK(std::abs(c.matrix.trace().real() - expected) < 1e-8);
  }
}

TEST_CASE("correlation_gauge_invariance") {
  auto bs = band_solve(honeycomb(2.5, 48.5, 0.4), KMesh::grid(12, 12));
  const auto mask = SubsystemMask::rhombus(3);
  const auto w = FillingWindow::up_to(bs, 47.0);
  const auto ref = correlation_matrix(bs, mask, w);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  for (auto& s : bs.states) s.u *= std::polar(1.0, phase(rng));
  const auto rot = correlation_matrix(bs, mask, w);
  CHECK((ref.matrix - rot.matrix).norm() < 1e-10);
  const auto a = entanglement(ref);
  const auto b = entanglement(rot);
  CHECK(std::abs(a.entropy - b.entropy) < 1e-10);
  for (std::size_t i = 0; i < a.spectrum.size(); ++i) CHECK(std::abs(a.spectrum[i] - b.spectrum[i]) < 1e-10);
}

TEST_CASE("correlation_bitwise_identical_for_any_worker_count") {
  const auto bs = band_solve(honeycomb(2.5, 48.5, 0.0), KMesh::grid(20, 20));
  const auto mask = SubsystemMask::rhombus(4);
  const auto w = FillingWindow::up_to(bs, 48.5);
  const auto a = correlation_matrix(bs, mask, w, 1);
  for (int workers : {2, 3, 5}) CHECK(correlation_matrix(bs, mask, w, workers).matrix == a.matrix);
}

TEST_CASE("frequency_bins_sum_to_window_correlation") {
  const auto bs = band_solve(honeycomb(2.5, 48.5, 0.0), KMesh::grid(12, 12));
  const auto mask = SubsystemMask::rhombus(2);
  const auto bins = frequency_resolved_correlation(bs, mask, 0.25);
  for (std::size_t j : {std::size_t{10}, bins.size() / 2, bins.size() - 5}) {
    const double wf = bins[j].omega_hi - 1e-6;
    CMatrix sum = CMatrix::Zero(static_cast<Eigen::Index>(mask.size()), static_cast<Eigen::Index>(mask.size()));
    std::size_t states = 0;
    for (std::size_t i = 0; i <= j; ++i) {
      sum += bins[i].matrix;
      states += bins[i].states;
    }
    const auto c = correlation_matrix(bs, mask, FillingWindow::up_to(bs, wf));
    CHECK(states == c.filled_states);
    CHECK((sum - c.matrix).norm() < 1e-12);
  }
  std::size_t total = 0;
  for (const auto& b : bins) total += b.states;
  CHECK(total == bs.states.size());
}

TEST_CASE("kspace_matches_real_space_oracle_ssh") {
  struct Case { double t1, t2; int n, L; };
  for (const auto& cs : {Case{1.0, 1.0, 200, 20}, Case{2.0, 4.0, 40, 10}, Case{4.0, 2.0, 40, 10}}) {
    const auto model = ssh(cs.t1, cs.t2, 48.0);
    const auto mesh = KMesh::line(cs.n);
    const auto bs = band_solve(model, mesh);
    const auto mask = SubsystemMask::interval(cs.L, 3);
    const auto c = correlation_matrix(bs, mask, FillingWindow::half(bs));
    const CMatrix r = real_space_correlation(model, {cs.n, 1}, Boundary::matching(mesh), mask,
                                             static_cast<std::size_t>(cs.n));
    CHECK((c.matrix - r).cwiseAbs().maxCoeff() < 1e-10);
    const auto oracle = real_space_oracle(model, {cs.n, 1}, Boundary::matching(mesh), mask,
                                          static_cast<std::size_t>(cs.n));
    CHECK(std::abs(oracle.entropy - entanglement(c).entropy) < 1e-10);
  }
}

TEST_CASE("kspace_matches_real_space_oracle_honeycomb") {
  const auto model = honeycomb(2.5, 48.5, 0.0);
  const auto mesh = KMesh::grid(12, 12);
  const auto bs = band_solve(model, mesh);
  const auto mask = SubsystemMask::rectangle(4, 4, {2, 5});
  const auto k = entanglement(correlation_matrix(bs, mask, FillingWindow::half(bs)));
  const auto r = real_space_oracle(model, {12, 12}, Boundary::matching(mesh), mask, 144);
  CHECK(std::abs(k.entropy - r.entropy) < 1e-8);
  for (std::size_t i = 0; i < k.spectrum.size(); ++i) CHECK(std::abs(k.spectrum[i] - r.spectrum[i]) < 1e-8);
}

TEST_CASE("open_dimerized_chain_severing_one_dimer") {
  const auto model = ssh(0.0, 1.0, 48.0);
  // The two dangling end sites sit at omega0; half filling would occupy one
  // of a degenerate pair, which the oracle refuses.
  CHECK_THROWS_AS(real_space_oracle(model, {20, 1}, Boundary::open(), SubsystemMask::interval(10), 20),
                  NumericalError);
  const auto r = real_space_oracle(model, {20, 1}, Boundary::open(), SubsystemMask::interval(10), 19);
  CHECK(std::abs(r.entropy - kLn2) < 1e-12);
}

TEST_CASE("complement_duality_on_periodic_system") {
  const auto model = honeycomb(2.5, 48.5, 0.5);
  const std::array<int, 2> extent{6, 6};
  const auto bc = Boundary::periodic(0.5, 0.5);
  std::vector<Site> a, b;
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.4);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      for (int s = 0; s < 2; ++s) (coin(rng) ? a : b).push_back({{i, j}, s});
  const auto sa = real_space_oracle(model, extent, bc, SubsystemMask::custom(a), 36).entropy;
  const auto sb = real_space_oracle(model, extent, bc, SubsystemMask::custom(b), 36).entropy;
  CHECK(sa > 0.1);
  CHECK(std::abs(sa - sb) < 1e-8);
}

TEST_CASE("ssh_without_chiral_symmetry_dimer_limit") {
  const double t2 = 1.5, delta = 0.3 * t2;
  const auto bs = band_solve(ssh_no_chiral(0.0, t2, 48.0, delta), KMesh::line(40));
  const auto es = entanglement_spectrum(correlation_matrix(bs, SubsystemMask::interval(8), FillingWindow::half(bs)));
  const double x = delta / (2.0 * std::sqrt(delta * delta + t2 * t2));
  int lo = 0, hi = 0;
  for (double e : es) {
    if (std::abs(e - (0.5 - x)) < 1e-12) ++lo;
    if (std::abs(e - (0.5 + x)) < 1e-12) ++hi;
  }
  CHECK(lo == 1);
  CHECK(hi == 1);
}

TEST_CASE("filling_sweep_edges_and_gap_plateau") {
  const auto bs = band_solve(honeycomb(2.5, 48.5, 2.0), KMesh::grid(16, 16));
  const auto mask = SubsystemMask::rhombus(3);
  std::vector<double> grid;
  for (double w = 40.0; w <= 57.0; w += 0.25) grid.push_back(w);
  const auto sweep = filling_sweep(bs, mask, grid);
  REQUIRE(sweep.size() == grid.size());
  CHECK(sweep.front().second == 0.0);
  CHECK(sweep.back().second < 1e-10);
  // points strictly inside the on-mesh gap share one filled set
  double lo = -1e300, hi = 1e300;
  for (std::size_t k = 0; k < bs.mesh.size(); ++k) {
    lo = std::max(lo, bs.state(k, 0).omega);
    hi = std::min(hi, bs.state(k, 1).omega);
  }
  std::vector<double> inside;
  for (const auto& [w, s] : sweep)
    if (w > lo && w < hi) inside.push_back(s);
  REQUIRE(inside.size() >= 2u);
  for (double s : inside) CHECK(s == inside.front());
  // each sweep point agrees with a direct window evaluation
  for (std::size_t i = 0; i < grid.size(); i += 9) {
    const auto c = correlation_matrix(bs, mask, FillingWindow::up_to(bs, grid[i]));
    CHECK(std::abs(entanglement(c).entropy - sweep[i].second) < 1e-9);
  }
  CHECK_THROWS(filling_sweep(bs, mask, {48.0, 47.0}));
}

TEST_CASE("window_validation") {
  CHECK_THROWS_AS((FillingWindow{50.0, 48.0, 1e-9}).validate(), ConfigError);
  const auto gapless = band_solve(ssh(1.0, 1.0, 48.0), KMesh::line(40, 0.0));
  CHECK_THROWS_AS(FillingWindow::half(gapless), NumericalError);
}
