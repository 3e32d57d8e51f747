#pragma once

// Shared numeric types, error hierarchy and the deterministic worker pool.

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ffent {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Invalid user input: model definitions, masks, windows, config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation that could not complete. `stage` names where it happened.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index writes
/// only its own output slot, so results never depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t nthreads =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      // static striding keeps the index -> thread map fixed
      for (std::size_t i = t; i < n; i += nthreads) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, int workers, Fn&& fn) {
  std::vector<T> out(n);
  parallel_for(n, workers, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

/// Multiplies v by a phase so that its first component of largest magnitude
/// is real and positive.
inline void fix_gauge(CVector& v) {
  if (v.size() == 0) return;
  Eigen::Index best = 0;
  double best_mag = std::abs(v(0));
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    if (mag > best_mag + 1e-12) {
      best = i;
      best_mag = mag;
    }
  }
  if (best_mag == 0.0) return;
  v *= std::conj(v(best)) / best_mag;
  v(best) = cplx(best_mag, 0.0);
}

}  // namespace ffent
