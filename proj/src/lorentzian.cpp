#include "ffent/pumprobe.hpp"

#include <cmath>
#include <numeric>

namespace ffent {

namespace {

// Distance from the sample `i` to where p falls below half of p[i] on one side
// (linear interpolation); returns 0 if it never does.
double half_width_side(const std::vector<double>& omega, const std::vector<double>& p,
                       std::size_t i, int dir) {
  const double half = 0.5 * p[i];
  long j = static_cast<long>(i);
  const long n = static_cast<long>(p.size());
  while (true) {
    const long next = j + dir;
    if (next < 0 || next >= n) return 0.0;
    const auto uj = static_cast<std::size_t>(j);
    const auto un = static_cast<std::size_t>(next);
    if (p[un] > p[uj]) return 0.0;  // climbing a neighbouring peak
    if (p[un] <= half) {
      const double t = (p[uj] - half) / (p[uj] - p[un]);
      return std::abs(omega[uj] + t * (omega[un] - omega[uj]) - omega[i]);
    }
    j = next;
  }
}

std::vector<std::size_t> local_maxima(const std::vector<double>& p) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < p.size(); ++i)
    if (p[i] > p[i - 1] && p[i] >= p[i + 1]) out.push_back(i);
  return out;
}

}  // namespace

LorentzianFit fit_lorentzians(const std::vector<double>& omega, const std::vector<double>& p,
                              int expected, const FitOptions& options) {
  if (omega.size() != p.size()) throw ConfigError("omega and P sizes differ");
  if (expected < 1) throw ConfigError("expected peak count must be >= 1");
  auto maxima = local_maxima(p);
  if (static_cast<int>(maxima.size()) < expected)
    throw NumericalError("fit_lorentzians", "found " + std::to_string(maxima.size()) +
                                                " local maxima, expected " +
                                                std::to_string(expected));
  std::stable_sort(maxima.begin(), maxima.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  maxima.resize(static_cast<std::size_t>(expected));
  std::vector<LorentzianPeak> init;
  const double spacing = std::abs(omega.back() - omega.front()) / static_cast<double>(omega.size());
  for (std::size_t i : maxima) {
    double hl = half_width_side(omega, p, i, -1);
    double hr = half_width_side(omega, p, i, +1);
    double hw = hl > 0 && hr > 0 ? std::min(hl, hr) : std::max(hl, hr);
    if (hw <= 0.0) hw = spacing;
    init.push_back({omega[i], hw, p[i] * hw * hw});
  }
  return fit_lorentzians(omega, p, std::move(init), options);
}

LorentzianFit fit_lorentzians(const std::vector<double>& omega, const std::vector<double>& p,
                              std::vector<LorentzianPeak> initial, const FitOptions& options) {
  if (omega.size() != p.size()) throw ConfigError("omega and P sizes differ");
  const std::size_t npk = initial.size();
  const auto npar = static_cast<Eigen::Index>(3 * npk + 1);
  if (omega.size() < static_cast<std::size_t>(npar))
    throw ConfigError("fewer samples than fit parameters");

  // work in units where max P = 1
  const double scale = *std::max_element(p.begin(), p.end());
  if (!(scale > 0.0)) throw NumericalError("fit_lorentzians", "intensity is not positive");
  const auto m = static_cast<Eigen::Index>(omega.size());
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) y(i) = p[static_cast<std::size_t>(i)] / scale;

  Eigen::VectorXd x(npar);
  for (std::size_t j = 0; j < npk; ++j) {
    x(static_cast<Eigen::Index>(3 * j)) = initial[j].center;
    x(static_cast<Eigen::Index>(3 * j + 1)) = initial[j].gamma;
    x(static_cast<Eigen::Index>(3 * j + 2)) = initial[j].amplitude / scale;
  }
  x(npar - 1) = 0.0;

  auto residual = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r) {
    r.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double w = omega[static_cast<std::size_t>(i)];
      double v = q(npar - 1);
      for (std::size_t j = 0; j < npk; ++j) {
        const auto b = static_cast<Eigen::Index>(3 * j);
        const double d = w - q(b);
        v += q(b + 2) / (d * d + q(b + 1) * q(b + 1));
      }
      r(i) = v - y(i);
    }
  };
  auto jacobian = [&](const Eigen::VectorXd& q, Eigen::MatrixXd& jac) {
    jac.resize(m, npar);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double w = omega[static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < npk; ++j) {
        const auto b = static_cast<Eigen::Index>(3 * j);
        const double d = w - q(b);
        const double g = q(b + 1);
        const double den = d * d + g * g;
        jac(i, b) = 2.0 * q(b + 2) * d / (den * den);
        jac(i, b + 1) = -2.0 * q(b + 2) * g / (den * den);
        jac(i, b + 2) = 1.0 / den;
      }
      jac(i, npar - 1) = 1.0;
    }
  };
  auto admissible = [&](const Eigen::VectorXd& q) {
    for (std::size_t j = 0; j < npk; ++j) {
      const auto b = static_cast<Eigen::Index>(3 * j);
      if (!(q(b + 1) > 0.0) || !(q(b + 2) > 0.0) || !std::isfinite(q(b))) return false;
    }
    return std::isfinite(q(npar - 1));
  };

  LorentzianFit fit;
  Eigen::VectorXd r, r_trial;
  Eigen::MatrixXd jac;
  residual(x, r);
  double cost = r.squaredNorm();
  fit.residual_history.push_back(std::sqrt(cost) * scale);
  double lambda = 1e-3;
  bool converged = false;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (cost == 0.0) {
      converged = true;
      break;
    }
    jacobian(x, jac);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    Eigen::MatrixXd a = jtj;
    for (Eigen::Index d = 0; d < npar; ++d) a(d, d) += lambda * std::max(jtj(d, d), 1e-300);
    const Eigen::VectorXd step = a.ldlt().solve(-grad);
    const Eigen::VectorXd trial = x + step;
    bool accepted = false;
    if (step.allFinite() && admissible(trial)) {
      residual(trial, r_trial);
      const double trial_cost = r_trial.squaredNorm();
      if (trial_cost <= cost) {
        const double drop = cost - trial_cost;
        x = trial;
        r = r_trial;
        cost = trial_cost;
        fit.residual_history.push_back(std::sqrt(cost) * scale);
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (step.norm() <= 1e-13 * (x.norm() + 1e-13) || drop <= 1e-15 * cost) {
          converged = true;
          ++it;
          break;
        }
      }
    }
    if (!accepted) {
      lambda *= 10.0;
      // no descent direction left at machine precision: stationary point
      if (lambda > 1e16) {
        converged = true;
        ++it;
        break;
      }
    }
  }
  fit.iterations = it;
  fit.residual_norm = std::sqrt(cost) * scale;
  if (!converged)
    throw NumericalError("fit_lorentzians", "no convergence after " + std::to_string(it) +
                                                " iterations, residual " +
                                                std::to_string(fit.residual_norm));
  for (std::size_t j = 0; j < npk; ++j) {
    const auto b = static_cast<Eigen::Index>(3 * j);
    fit.peaks.push_back({x(b), x(b + 1), x(b + 2) * scale});
  }
  fit.background = x(npar - 1) * scale;
  std::sort(fit.peaks.begin(), fit.peaks.end(),
            [](const LorentzianPeak& a, const LorentzianPeak& b) { return a.center < b.center; });
  for (std::size_t j = 1; j < fit.peaks.size(); ++j) {
    const double sep = fit.peaks[j].center - fit.peaks[j - 1].center;
    const double g = std::max(fit.peaks[j].gamma, fit.peaks[j - 1].gamma);
    if (sep < options.resolvability_factor * g) fit.unresolved = true;
  }
  return fit;
}

}  // namespace ffent
