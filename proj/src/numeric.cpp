#include "nwfr/numeric.hpp"

#include <cmath>

#include "nwfr/errors.hpp"

namespace nwfr {

std::vector<double> make_grid(double lo, double hi, int n) {
  if (n < 2 || !(lo < hi)) fail(Errc::empty_range, "grid needs n >= 2 and lo < hi");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  }
  g.back() = hi;  // exact endpoint regardless of rounding
  return g;
}

std::vector<double> trapezoid_weights(const std::vector<double>& grid) {
  const std::size_t n = grid.size();
  if (n < 2) fail(Errc::empty_range, "trapezoid needs at least two points");
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = grid[i + 1] - grid[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

double trapezoid(const std::vector<double>& grid,
                 const std::vector<double>& values) {
  if (grid.size() != values.size())
    fail(Errc::length_mismatch, "grid and values differ in length");
  const auto w = trapezoid_weights(grid);
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) s += w[i] * values[i];
  return s;
}

Quadrature gauss_legendre(int n, double lo, double hi) {
  if (n < 1) fail(Errc::empty_range, "quadrature order must be positive");
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  // Newton iteration on P_n from Chebyshev-like initial guesses; exploits
  // root symmetry so only the first half is solved.
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // recurrence: (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
      double p0 = 1.0, p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.nodes[i] = x;
    q.weights[i] = w;
    q.nodes[n - 1 - i] = -x;
    q.weights[n - 1 - i] = w;
  }
  // map from [-1, 1]
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  for (int i = 0; i < n; ++i) {
    q.nodes[i] = mid - half * q.nodes[i];  // flips to ascending order
    q.weights[i] *= half;
  }
  return q;
}

}  // namespace nwfr
