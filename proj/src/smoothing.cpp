#include "sdpg/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <string>

#include "sdpg/error.hpp"

namespace sdpg::smoothing {

void SmoothingConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw UsageError("smoothing sigma must be positive and finite");
  }
  if (num_samples < 1) throw UsageError("smoothing num_samples must be >= 1");
  if (const auto* gh = std::get_if<GaussHermite>(&scheme)) {
    if (gh->nodes < 3 || gh->nodes % 2 == 0) {
      throw UsageError("gauss_hermite node count must be odd and >= 3");
    }
  }
}

namespace {

// Orthonormal probabilists' Hermite recurrence: returns p_n(x) and p_{n-1}(x)
// where p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k+1), p_0 = 1.
std::pair<double, double> hermite_pair(int n, double x) {
  double prev = 0.0;
  double cur = 1.0;
  for (int k = 0; k < n; ++k) {
    const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                        std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
  }
  return {cur, prev};
}

double newton_polish(int n, double x) {
  for (int it = 0; it < 100; ++it) {
    const auto [pn, pn1] = hermite_pair(n, x);
    const double dp = std::sqrt(static_cast<double>(n)) * pn1;  // p_n' = sqrt(n) p_{n-1}
    const double dx = pn / dp;
    x -= dx;
    if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

Quadrature compute_gauss_hermite(int n) {
  // Roots lie inside |x| < sqrt(4n + 2); bracket the positive ones by a scan
  // much finer than the minimum root spacing, then polish with Newton.
  std::vector<double> positive;
  const double limit = std::sqrt(4.0 * n + 2.0) + 1.0;
  const double step = 1e-3;
  double x0 = step * 0.5;
  double f0 = hermite_pair(n, x0).first;
  for (double x1 = x0 + step; x1 < limit; x1 += step) {
    const double f1 = hermite_pair(n, x1).first;
    if ((f0 < 0.0) != (f1 < 0.0)) {
      double lo = x0, hi = x1, flo = f0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = hermite_pair(n, mid).first;
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      positive.push_back(newton_polish(n, 0.5 * (lo + hi)));
    }
    x0 = x1;
    f0 = f1;
  }
  const std::size_t half = static_cast<std::size_t>(n / 2);
  if (positive.size() != half) {
    throw NumericalError("gauss_hermite: root bracketing failed for n=" + std::to_string(n));
  }

  auto weight_at = [n](double x) {
    // w = 1 / sum_{k<n} p_k(x)^2 for the orthonormal family.
    double prev = 0.0, cur = 1.0, sum = 1.0;
    for (int k = 0; k + 1 < n; ++k) {
      const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                          std::sqrt(static_cast<double>(k + 1));
      prev = cur;
      cur = next;
      sum += cur * cur;
    }
    return 1.0 / sum;
  };

  Quadrature q;
  q.nodes.resize(static_cast<std::size_t>(n));
  q.weights.resize(static_cast<std::size_t>(n));
  q.nodes[half] = 0.0;
  q.weights[half] = weight_at(0.0);
  for (std::size_t i = 0; i < half; ++i) {
    const double t = positive[half - 1 - i];  // descending magnitude toward the middle
    const double w = weight_at(t);
    q.nodes[i] = -t;
    q.nodes[static_cast<std::size_t>(n) - 1 - i] = t;
    q.weights[i] = w;
    q.weights[static_cast<std::size_t>(n) - 1 - i] = w;
  }
  double total = 0.0;
  for (double w : q.weights) total += w;
  for (double& w : q.weights) w /= total;
  return q;
}

// Calls visit(w, weight) for each evaluation point of the configured scheme.
template <class Visit>
void for_each_sample(std::size_t m, const SmoothingConfig& cfg, Rng& rng, Visit&& visit) {
  std::vector<double> w(m, 0.0);
  const auto* gh = std::get_if<GaussHermite>(&cfg.scheme);
  if (gh != nullptr && m <= 2) {
    const Quadrature q = gauss_hermite(gh->nodes);
    if (m == 1) {
      for (std::size_t i = 0; i < q.size(); ++i) {
        w[0] = q.nodes[i];
        visit(w, q.weights[i]);
      }
    } else {
      for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t j = 0; j < q.size(); ++j) {
          w[0] = q.nodes[i];
          w[1] = q.nodes[j];
          visit(w, q.weights[i] * q.weights[j]);
        }
      }
    }
    return;
  }
  // Monte Carlo, also the fallback for quadrature with m > 2.
  std::normal_distribution<double> normal(0.0, 1.0);
  const double weight = 1.0 / cfg.num_samples;
  for (int s = 0; s < cfg.num_samples; ++s) {
    for (double& wi : w) wi = normal(rng);
    visit(w, weight);
  }
}

double checked_eval(const ScalarField& f, std::span<const double> x, std::span<const double> w,
                    double sigma, std::vector<double>& probe) {
  for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] + sigma * w[i];
  const double fx = f(probe);
  if (!std::isfinite(fx)) {
    std::ostringstream os;
    os << "smoothed expectation: f is not finite at (";
    for (std::size_t i = 0; i < probe.size(); ++i) os << (i ? ", " : "") << probe[i];
    os << ")";
    throw EvaluationError(os.str(), probe);
  }
  return fx;
}

bool uses_monte_carlo(std::size_t m, const SmoothingConfig& cfg) {
  return !cfg.is_quadrature() || m > 2;
}

void finish_errors(Estimate& est, const std::vector<double>& sum_sq, std::size_t m,
                   const SmoothingConfig& cfg) {
  est.standard_error.assign(est.mean.size(), 0.0);
  if (!uses_monte_carlo(m, cfg) || cfg.num_samples < 2) return;
  const double n = cfg.num_samples;
  for (std::size_t i = 0; i < est.mean.size(); ++i) {
    const double var = std::max(0.0, (sum_sq[i] / n - est.mean[i] * est.mean[i]) * n / (n - 1.0));
    est.standard_error[i] = std::sqrt(var / n);
  }
}

}  // namespace

Quadrature gauss_hermite(int nodes) {
  if (nodes < 3 || nodes % 2 == 0) {
    throw UsageError("gauss_hermite node count must be odd and >= 3");
  }
  static std::mutex mu;
  static std::map<int, Quadrature> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(nodes);
  if (it == cache.end()) it = cache.emplace(nodes, compute_gauss_hermite(nodes)).first;
  return it->second;
}

Estimate smooth_eval_estimate(const ScalarField& f, std::span<const double> x,
                              const SmoothingConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<double> probe(x.size());
  Estimate est{{0.0}, {}};
  std::vector<double> sum_sq{0.0};
  for_each_sample(x.size(), cfg, rng, [&](std::span<const double> w, double weight) {
    const double fx = checked_eval(f, x, w, cfg.sigma, probe);
    est.mean[0] += weight * fx;
    sum_sq[0] += fx * fx;
  });
  finish_errors(est, sum_sq, x.size(), cfg);
  return est;
}

Estimate smooth_grad_estimate(const ScalarField& f, std::span<const double> x,
                              const SmoothingConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t m = x.size();
  std::vector<double> probe(m);
  Estimate est{std::vector<double>(m, 0.0), {}};
  std::vector<double> sum_sq(m, 0.0);
  for_each_sample(m, cfg, rng, [&](std::span<const double> w, double weight) {
    const double fx = checked_eval(f, x, w, cfg.sigma, probe);
    for (std::size_t i = 0; i < m; ++i) {
      const double g = fx * w[i] / cfg.sigma;
      est.mean[i] += weight * g;
      sum_sq[i] += g * g;
    }
  });
  finish_errors(est, sum_sq, m, cfg);
  return est;
}

double smooth_eval(const ScalarField& f, std::span<const double> x, const SmoothingConfig& cfg,
                   Rng& rng) {
  return smooth_eval_estimate(f, x, cfg, rng).mean[0];
}

std::vector<double> smooth_grad(const ScalarField& f, std::span<const double> x,
                                const SmoothingConfig& cfg, Rng& rng) {
  return smooth_grad_estimate(f, x, cfg, rng).mean;
}

}  // namespace sdpg::smoothing
