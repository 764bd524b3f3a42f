#pragma once

#include <vector>

namespace nwfr {

// n evenly spaced points covering [lo, hi]; n >= 2
std::vector<double> make_grid(double lo, double hi, int n);

// trapezoid quadrature weights for an arbitrary sorted grid
std::vector<double> trapezoid_weights(const std::vector<double>& grid);

double trapezoid(const std::vector<double>& grid,
                 const std::vector<double>& values);

// Gauss-Legendre nodes and weights on [lo, hi]
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

Quadrature gauss_legendre(int n, double lo, double hi);

}  // namespace nwfr
