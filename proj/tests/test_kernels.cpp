#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "sdpg/error.hpp"
#include "sdpg/kernels.hpp"

using namespace sdpg;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Reassociation changes rounding only; bound the gap relative to the sum of
// absolute products feeding each output.
constexpr double reassoc_tol = 1e-13;

void require_close(const std::vector<double>& a, const std::vector<double>& b, double scale) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(std::abs(a[i] - b[i]) <= reassoc_tol * scale);
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar table is always available and listed first") {
    const auto tables = kernels::available_tables();
    REQUIRE(!tables.empty());
    CHECK(std::string(tables.front()->name) == "scalar");
    CHECK_THROWS_AS(kernels::select("neon-or-whatever"), UsageError);
  }

  TEST_CASE("every variant matches the scalar reference") {
    const auto& ref = kernels::scalar_table();
    std::mt19937_64 rng(11);
    // Sizes straddle every vector width and tail path.
    const std::size_t dims[] = {1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 31, 33, 64};
    for (const auto* t : kernels::available_tables()) {
      CAPTURE(t->name);
      for (std::size_t m : {1u, 3u, 8u}) {
        for (std::size_t n : dims) {
          for (std::size_t k : dims) {
            const auto a = random_vec(m * k, rng), b = random_vec(n * k, rng), bias = random_vec(n, rng);
            std::vector<double> c1(m * n), c2(m * n);
            ref.gemm_abt_bias(a.data(), b.data(), bias.data(), c1.data(), m, n, k);
            t->gemm_abt_bias(a.data(), b.data(), bias.data(), c2.data(), m, n, k);
            require_close(c1, c2, static_cast<double>(k + 1));
            ref.gemm_abt_bias(a.data(), b.data(), nullptr, c1.data(), m, n, k);
            t->gemm_abt_bias(a.data(), b.data(), nullptr, c2.data(), m, n, k);
            require_close(c1, c2, static_cast<double>(k));

            const auto x = random_vec(m * n, rng), y = random_vec(n * k, rng), c0 = random_vec(m * k, rng);
            auto d1 = c0, d2 = c0;
            ref.gemm_ab_acc(x.data(), y.data(), d1.data(), m, n, k);
            t->gemm_ab_acc(x.data(), y.data(), d2.data(), m, n, k);
            require_close(d1, d2, static_cast<double>(n + 1));

            const auto e0 = random_vec(n * k, rng), z = random_vec(m * k, rng);
            auto e1 = e0, e2 = e0;
            ref.gemm_atb_acc(x.data(), z.data(), e1.data(), m, n, k);
            t->gemm_atb_acc(x.data(), z.data(), e2.data(), m, n, k);
            require_close(e1, e2, static_cast<double>(m + 1));
          }
        }
      }
      for (std::size_t n : dims) {
        const auto a = random_vec(n, rng), b = random_vec(n, rng);
        CHECK(std::abs(ref.dot(a.data(), b.data(), n) - t->dot(a.data(), b.data(), n)) <=
              reassoc_tol * static_cast<double>(n));
        auto y1 = b, y2 = b;
        ref.axpy(0.37, a.data(), y1.data(), n);
        t->axpy(0.37, a.data(), y2.data(), n);
        require_close(y1, y2, 2.0);
        y1 = y2 = b;
        ref.lerp(0.005, a.data(), y1.data(), n);
        t->lerp(0.005, a.data(), y2.data(), n);
        require_close(y1, y2, 2.0);

        auto g = random_vec(n, rng);
        auto p1 = a, p2 = a;
        std::vector<double> m1(n, 0.01), m2(n, 0.01), v1(n, 0.02), v2(n, 0.02);
        ref.adam(p1.data(), g.data(), m1.data(), v1.data(), n, 1e-3, 0.9, 0.999, 1e-8, 0.19, 0.002);
        t->adam(p2.data(), g.data(), m2.data(), v2.data(), n, 1e-3, 0.9, 0.999, 1e-8, 0.19, 0.002);
        require_close(p1, p2, 1.0);
        require_close(m1, m2, 1.0);
        require_close(v1, v2, 1.0);
      }
    }
  }

  TEST_CASE("lerp endpoints are exact in every variant") {
    std::mt19937_64 rng(3);
    for (const auto* t : kernels::available_tables()) {
      const auto src = random_vec(37, rng), dst0 = random_vec(37, rng);
      auto d = dst0;
      t->lerp(1.0, src.data(), d.data(), d.size());
      CHECK(d == src);
      d = dst0;
      t->lerp(0.0, src.data(), d.data(), d.size());
      CHECK(d == dst0);
    }
  }

  TEST_CASE("select switches the active table") {
    const std::string before = kernels::active().name;
    kernels::select("scalar");
    CHECK(std::string(kernels::active().name) == "scalar");
    kernels::select(before);
    CHECK(std::string(kernels::active().name) == before);
  }
}
