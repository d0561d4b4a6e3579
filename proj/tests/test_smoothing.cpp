#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sdpg/error.hpp"
#include "sdpg/smoothing.hpp"

using namespace sdpg;
using namespace sdpg::smoothing;

namespace {

constexpr double TOY_MC_PIN = 0.19733500000017667;

double f_at(const ScalarField& f, double x) { return f(std::span<const double>(&x, 1)); }

double eval1(const ScalarField& f, double x, const SmoothingConfig& cfg, Rng& rng) {
  return smooth_eval(f, std::span<const double>(&x, 1), cfg, rng);
}

double grad1(const ScalarField& f, double x, const SmoothingConfig& cfg, Rng& rng) {
  return smooth_grad(f, std::span<const double>(&x, 1), cfg, rng)[0];
}

/// Composite trapezoid of g(w) phi(w) over [-8, 8].
template <class G>
double trapezoid_gaussian(G&& g, int panels) {
  const double lo = -8.0, hi = 8.0, h = (hi - lo) / panels;
  const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  double s = 0.0;
  for (int i = 0; i <= panels; ++i) {
    const double w = lo + h * i;
    const double v = g(w) * c * std::exp(-0.5 * w * w);
    s += (i == 0 || i == panels) ? 0.5 * v : v;
  }
  return s * h;
}

double double_factorial(int n) {
  double r = 1.0;
  for (int k = n; k > 1; k -= 2) r *= k;
  return r;
}

// Floating-point floor for identities that hold exactly in real arithmetic.
constexpr double exact_tol = 1e-13;

}  // namespace

TEST_SUITE("smoothing") {
  TEST_CASE("config invariants") {
    CHECK_THROWS_AS(SmoothingConfig::quadrature(0.0).validate(), UsageError);
    CHECK_THROWS_AS(SmoothingConfig::quadrature(0.1, 4).validate(), UsageError);
    CHECK_THROWS_AS(SmoothingConfig::quadrature(0.1, 1).validate(), UsageError);
    CHECK_THROWS_AS(SmoothingConfig::monte_carlo(0.1, 0).validate(), UsageError);
    CHECK_NOTHROW(SmoothingConfig::quadrature(0.1, 3).validate());
    CHECK_THROWS_AS(gauss_hermite(6), UsageError);
  }

  TEST_CASE("gauss_hermite moments, symmetry and normalisation") {
    const auto q3 = gauss_hermite(3);
    CHECK(std::abs(q3.expect([](double w) { return w * w; }) - 1.0) <= exact_tol);

    const auto q = gauss_hermite(21);
    CHECK(std::abs(q.expect([](double w) { return std::pow(w, 4); }) - 3.0) <= 1e-10);
    double sum = 0.0;
    for (double w : q.weights) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(q.nodes[i] == -q.nodes[q.size() - 1 - i]);
    CHECK(q.nodes[10] == 0.0);

    // Exact through degree 2n - 1 = 41: odd moments vanish, even moments are (k-1)!!.
    for (int k = 0; k <= 41; ++k) {
      const double got = q.expect([k](double w) { return std::pow(w, k); });
      const double want = (k % 2) ? 0.0 : double_factorial(k - 1);
      // Odd moments cancel terms of size about k!!.
      const double scale = double_factorial(k % 2 ? k : k - 1);
      CAPTURE(k);
      CHECK(std::abs(got - want) <= 1e-13 * std::max(1.0, scale));
    }
  }

  TEST_CASE("smooth_eval closed forms") {
    Rng rng(1);
    const auto gh = SmoothingConfig::quadrature(0.5);
    const ScalarField c = [](std::span<const double>) { return 4.25; };
    CHECK(std::abs(eval1(c, 0.3, gh, rng) - 4.25) <= exact_tol);

    const ScalarField sq = [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return s;
    };
    CHECK(std::abs(eval1(sq, 0.0, gh, rng) - 0.25) <= exact_tol);

    // Tensor product in two dimensions: ||x||^2 + m sigma^2.
    const double x2[] = {0.3, -1.1};
    CHECK(std::abs(smooth_eval(sq, x2, gh, rng) - (0.09 + 1.21 + 2 * 0.25)) <= exact_tol);
    const ScalarField mixed = [](std::span<const double> x) { return x[0] * x[1] * x[1]; };
    // E[(a + s u)(b + s v)^2] = a (b^2 + s^2)
    CHECK(std::abs(smooth_eval(mixed, x2, gh, rng) - 0.3 * (1.21 + 0.25)) <= exact_tol);

    const auto mc = SmoothingConfig::monte_carlo(0.5, 100000);
    const auto est = smooth_eval_estimate(c, std::span<const double>(x2, 2), mc, rng);
    CHECK(est.mean[0] == doctest::Approx(4.25).epsilon(1e-10));
    CHECK(est.standard_error[0] == 0.0);
  }

  TEST_CASE("toy reward smoothed by Monte Carlo agrees with a trapezoid oracle") {
    const double eps = 0.05, sigma = 0.2;
    const ScalarField r = [eps](std::span<const double> a) { return std::abs(a[0] - 0.5) < eps ? 1.0 : 0.0; };
    const double oracle = trapezoid_gaussian([&](double w) { return f_at(r, 0.5 + sigma * w); }, 1000000);
    // The oracle itself against the normal CDF: P(|w| < eps / sigma).
    CHECK(std::abs(oracle - std::erf(eps / sigma / std::sqrt(2.0))) <= 1e-5);

    Rng rng(20240601);
    const auto est = smooth_eval_estimate(r, std::vector<double>{0.5}, SmoothingConfig::monte_carlo(sigma, 1000000), rng);
    CHECK(std::abs(est.mean[0] - oracle) <= 4.0 * est.standard_error[0]);
    // Regression pin for this seed and standard library.
    CHECK(est.mean[0] == doctest::Approx(TOY_MC_PIN).epsilon(1e-15));
  }

  TEST_CASE("smooth_grad closed forms under quadrature") {
    Rng rng(2);
    const ScalarField lin = [](std::span<const double> x) { return 3.0 * x[0]; };
    CHECK(std::abs(grad1(lin, 1.0, SmoothingConfig::quadrature(0.1), rng) - 3.0) <= exact_tol);

    const ScalarField sq = [](std::span<const double> x) { return x[0] * x[0]; };
    for (double s : {0.5, 0.1, 0.02}) {
      CAPTURE(s);
      CHECK(std::abs(grad1(sq, 1.0, SmoothingConfig::quadrature(s), rng) - 2.0) <= 1e-12);
    }
    const ScalarField absf = [](std::span<const double> x) { return std::abs(x[0]); };
    CHECK(std::abs(grad1(absf, 0.0, SmoothingConfig::quadrature(0.2), rng)) <= exact_tol);
  }

  TEST_CASE("Monte Carlo gradient of a linear function is unbiased") {
    Rng rng(3);
    const ScalarField lin = [](std::span<const double> x) { return 3.0 * x[0] - 2.0 * x[1]; };
    const double x[] = {0.4, 0.7};
    const auto est = smooth_grad_estimate(lin, x, SmoothingConfig::monte_carlo(0.3, 100000), rng);
    CHECK(std::abs(est.mean[0] - 3.0) <= 4.0 * est.standard_error[0]);
    CHECK(std::abs(est.mean[1] + 2.0) <= 4.0 * est.standard_error[1]);
    CHECK(est.standard_error[0] > 0.0);
  }

  TEST_CASE("gradient of smoothed sine converges to the cosine") {
    // grad f_sigma = exp(-sigma^2 / 2) cos(x) for f = sin.
    Rng rng(4);
    const ScalarField s = [](std::span<const double> x) { return std::sin(x[0]); };
    for (int i = 0; i < 20; ++i) {
      const double x = -3.0 + 6.0 * i / 19.0;
      double prev = INFINITY;
      for (double sigma : {0.5, 0.2, 0.05, 0.01}) {
        const double err = std::abs(grad1(s, x, SmoothingConfig::quadrature(sigma, 41), rng) - std::cos(x));
        CHECK(err <= prev);
        CHECK(std::abs(err - (1.0 - std::exp(-0.5 * sigma * sigma)) * std::abs(std::cos(x))) <= 1e-12);
        prev = err;
      }
      CHECK(prev < 1e-3);
    }
  }

  TEST_CASE("quadrature and Monte Carlo agree on a smooth function") {
    Rng rng(5);
    const ScalarField f = [](std::span<const double> x) { return std::sin(x[0]) + x[0] * x[0] / 3.0; };
    const double x = 0.8, sigma = 0.3;
    const auto gh = SmoothingConfig::quadrature(sigma);
    const auto mc = SmoothingConfig::monte_carlo(sigma, 1000000);
    const auto ev = smooth_eval_estimate(f, std::vector<double>{x}, mc, rng);
    CHECK(std::abs(ev.mean[0] - eval1(f, x, gh, rng)) <= 5.0 * ev.standard_error[0]);
    const auto gr = smooth_grad_estimate(f, std::vector<double>{x}, mc, rng);
    CHECK(std::abs(gr.mean[0] - grad1(f, x, gh, rng)) <= 5.0 * gr.standard_error[0]);
  }

  TEST_CASE("more than two dimensions fall back to Monte Carlo") {
    Rng a(6), b(6);
    const ScalarField f = [](std::span<const double> x) { return x[0] + x[1] + x[2]; };
    const std::vector<double> x{1.0, 2.0, 3.0};
    auto cfg = SmoothingConfig::quadrature(0.1);
    cfg.num_samples = 64;
    const double v = smooth_eval(f, x, cfg, a);
    const double w = smooth_eval(f, x, SmoothingConfig::monte_carlo(0.1, 64), b);
    CHECK(v == w);
    CHECK(a() == b());
  }

  TEST_CASE("non-finite values raise an evaluation error carrying the point") {
    Rng rng(7);
    const ScalarField f = [](std::span<const double> x) { return x[0] > 1.0 ? NAN : 0.0; };
    try {
      eval1(f, 1.0, SmoothingConfig::quadrature(0.2), rng);
      FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
      REQUIRE(e.point().size() == 1);
      CHECK(e.point()[0] > 1.0);
    }
  }
}
