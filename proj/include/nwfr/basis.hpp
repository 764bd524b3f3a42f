#pragma once

#include <Eigen/Dense>
#include <vector>

namespace nwfr {

// Clamped B-spline system with uniform interior knots on [lo, hi].
class BasisSystem {
 public:
  BasisSystem() = default;
  BasisSystem(double lo, double hi, int n_basis, int order);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int size() const { return k_; }
  int order() const { return order_; }
  const std::vector<double>& knots() const { return knots_; }

  friend bool operator==(const BasisSystem& a, const BasisSystem& b) {
    return a.lo_ == b.lo_ && a.hi_ == b.hi_ && a.k_ == b.k_ &&
           a.order_ == b.order_;
  }

 private:
  double lo_ = 0.0, hi_ = 1.0;
  int k_ = 0, order_ = 0;
  std::vector<double> knots_;
};

BasisSystem make_bspline_basis(double lo, double hi, int n_basis, int order);

struct Curve {
  BasisSystem basis;
  Eigen::VectorXd coeffs;
};

using GramMatrix = Eigen::MatrixXd;

// |grid| x K matrix of basis values; rows are a partition of unity
Eigen::MatrixXd eval_basis(const BasisSystem& b,
                           const std::vector<double>& grid);

// Exact pairwise L2 inner products: Gauss-Legendre per knot span with one
// node per order integrates the degree-(2 order - 2) products without error.
GramMatrix gram_matrix(const BasisSystem& b);

// Penalized least squares fit of discrete samples; the penalty weighs
// squared second differences of the coefficient vector.
Curve smooth_curve(const std::vector<std::pair<double, double>>& samples,
                   const BasisSystem& b, double penalty);

// Generalized cross-validation score for the same fit; lower is better.
// Heuristic aid for choosing the basis size, nothing downstream depends
// on it.
double smoothing_gcv(const std::vector<std::pair<double, double>>& samples,
                     const BasisSystem& b, double penalty);

std::vector<double> curve_eval(const Curve& c, const std::vector<double>& grid);

// integral of a(t) c(t) over the domain, computed in coefficient space
double l2_inner(const Curve& a, const Curve& c, const GramMatrix& j);

}  // namespace nwfr
