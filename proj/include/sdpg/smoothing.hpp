#pragma once

// Gaussian-smoothing primitives: f_sigma(x) = E_w[f(x + sigma w)] and its
// zeroth-order gradient E_w[f(x + sigma w) w / sigma], w ~ N(0, I).

#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "sdpg/rng.hpp"

namespace sdpg::smoothing {

struct MonteCarlo {};

struct GaussHermite {
  int nodes = 21;  // odd, >= 3, so that 0 is a node
};

using Scheme = std::variant<MonteCarlo, GaussHermite>;

struct SmoothingConfig {
  double sigma = 0.2;
  int num_samples = 50;
  Scheme scheme = GaussHermite{21};

  /// Throws UsageError when an invariant is violated.
  void validate() const;

  bool is_quadrature() const { return std::holds_alternative<GaussHermite>(scheme); }

  static SmoothingConfig quadrature(double sigma, int nodes = 21) {
    return {sigma, 1, GaussHermite{nodes}};
  }
  static SmoothingConfig monte_carlo(double sigma, int num_samples) {
    return {sigma, num_samples, MonteCarlo{}};
  }
};

/// Rule for E_{w ~ N(0,1)}[g(w)] ~= sum_i weights[i] * g(nodes[i]).
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  template <class G>
  double expect(G&& g) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * g(nodes[i]);
    return s;
  }
};

/// Gauss-Hermite rule for the standard normal measure (probabilists'
/// Hermite polynomials). Exact for polynomials of degree <= 2*nodes-1.
/// Nodes are exactly antisymmetric and the middle node is exactly 0.
Quadrature gauss_hermite(int nodes);

using ScalarField = std::function<double(std::span<const double>)>;

/// Estimate with its Monte Carlo standard error (zero under quadrature).
struct Estimate {
  std::vector<double> mean;
  std::vector<double> standard_error;
};

double smooth_eval(const ScalarField& f, std::span<const double> x, const SmoothingConfig& cfg,
                   Rng& rng);

std::vector<double> smooth_grad(const ScalarField& f, std::span<const double> x,
                                const SmoothingConfig& cfg, Rng& rng);

/// smooth_eval with a standard error (a one-element Estimate).
Estimate smooth_eval_estimate(const ScalarField& f, std::span<const double> x,
                              const SmoothingConfig& cfg, Rng& rng);

/// smooth_grad with per-coordinate standard errors.
Estimate smooth_grad_estimate(const ScalarField& f, std::span<const double> x,
                              const SmoothingConfig& cfg, Rng& rng);

}  // namespace sdpg::smoothing
