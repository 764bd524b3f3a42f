#include "nwfr/numeric.hpp"

#include <cmath>

#include "doctest.h"
#include "nwfr/errors.hpp"
#include "nwfr/parallel.hpp"
#include "nwfr/rng.hpp"

using namespace nwfr;

TEST_CASE("make_grid covers endpoints with even spacing") {
  const auto g = make_grid(0.0, 1.0, 201);
  REQUIRE(g.size() == 201);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  for (std::size_t i = 1; i < g.size(); ++i) {
    CHECK(g[i] - g[i - 1] == doctest::Approx(1.0 / 200).epsilon(1e-12));
  }
  CHECK_THROWS_AS(make_grid(0.0, 1.0, 1), Error);
  CHECK_THROWS_AS(make_grid(1.0, 1.0, 5), Error);
}

TEST_CASE("trapezoid is exact for linear functions on uneven grids") {
  const std::vector<double> grid{0.0, 0.1, 0.35, 0.6, 1.0};
  std::vector<double> vals;
  for (double t : grid) vals.push_back(3.0 * t - 2.0);
  // integral of 3t - 2 on [0,1] is -0.5
  CHECK(trapezoid(grid, vals) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK_THROWS_AS(trapezoid(grid, {1.0}), Error);
}

TEST_CASE("trapezoid error decays quadratically for smooth integrands") {
  auto err = [](int n) {
    const auto g = make_grid(0.0, 1.0, n);
    std::vector<double> v;
    for (double t : g) v.push_back(std::exp(t));
    return std::abs(trapezoid(g, v) - (std::exp(1.0) - 1.0));
  };
  const double e1 = err(51);
  const double e2 = err(101);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("gauss_legendre integrates polynomials of degree 2n-1 exactly") {
  for (int n = 1; n <= 8; ++n) {
    const auto q = gauss_legendre(n, -1.0, 1.0);
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += q.weights[i] * std::pow(q.nodes[i], deg);
      // integral of x^deg over [-1,1]
      const double exact = (deg % 2 == 1) ? 0.0 : 2.0 / (deg + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("gauss_legendre maps to general intervals") {
  const auto q = gauss_legendre(5, 2.0, 3.0);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += q.weights[i] * q.nodes[i] * q.nodes[i];
  CHECK(s == doctest::Approx((27.0 - 8.0) / 3.0).epsilon(1e-13));
  for (int i = 1; i < 5; ++i) CHECK(q.nodes[i] > q.nodes[i - 1]);
  CHECK(q.nodes.front() > 2.0);
  CHECK(q.nodes.back() < 3.0);
}

TEST_CASE("rng streams are deterministic and seed-sensitive") {
  Rng a(7), b(7), c(8);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  bool differs = false;
  Rng a2(7);
  for (int i = 0; i < 10; ++i) differs |= (a2.uniform() != c.uniform());
  CHECK(differs);
}

TEST_CASE("rng moments are sane") {
  Rng r(12345);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    const double z = r.normal();
    su += u;
    su2 += u * u;
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(su2 / n == doctest::Approx(1.0 / 3).epsilon(0.02));
  CHECK(sn / n == doctest::Approx(0.0).scale(1.0).epsilon(0.01));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("rng integer draws are unbiased over small ranges") {
  Rng r(42);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) counts[r.below(5)]++;
  for (int c : counts) CHECK(std::abs(c - 10000) < 400);
}

TEST_CASE("shuffle produces a permutation and depends on seed") {
  Rng r(3);
  auto p = r.permutation(20);
  std::vector<bool> seen(20, false);
  for (int v : p) {
    REQUIRE(v >= 0);
    REQUIRE(v < 20);
    CHECK(!seen[v]);
    seen[v] = true;
  }
  auto q = Rng(3).permutation(20);
  CHECK(p == q);
}

TEST_CASE("derive_seed decorrelates nearby inputs") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 2, 3) != derive_seed(5, 3, 2));
}

TEST_CASE("parallel_for covers every index exactly once") {
  const std::size_t n = 1000;
  std::vector<int> hits(n, 0);
  parallel_for(n, [&](std::size_t i) { hits[i]++; });
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("parallel_for propagates worker exceptions") {
  CHECK_THROWS_AS(parallel_for(
                      16,
                      [](std::size_t i) {
                        if (i == 7) fail(Errc::invalid_argument, "boom");
                      }),
                  Error);
}

TEST_CASE("error carries code, class, and name") {
  try {
    fail(Errc::nonpositive_bandwidth, "theta must be positive");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::nonpositive_bandwidth);
    CHECK(errc_class(e.code()) == ErrClass::usage);
    CHECK(std::string(e.what()).find("NonpositiveBandwidth") == 0);
    CHECK(std::string(e.what()).find("theta must be positive") !=
          std::string::npos);
  }
  CHECK(errc_class(Errc::singular_system) == ErrClass::numeric);
  CHECK(errc_class(Errc::duplicate_edge) == ErrClass::data);
}
