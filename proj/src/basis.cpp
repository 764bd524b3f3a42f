#include "nwfr/basis.hpp"

#include <cmath>

#include "nwfr/errors.hpp"
#include "nwfr/numeric.hpp"

namespace nwfr {

BasisSystem::BasisSystem(double lo, double hi, int n_basis, int order)
    : lo_(lo), hi_(hi), k_(n_basis), order_(order) {
  if (!(hi > lo))
    fail(Errc::invalid_dimension, "basis domain must have positive length");
  if (order < 1 || n_basis < order)
    fail(Errc::invalid_dimension,
         "need n_basis >= order >= 1, got n_basis=" + std::to_string(n_basis) +
             " order=" + std::to_string(order));
  const int interior = n_basis - order;
  knots_.reserve(n_basis + order);
  for (int i = 0; i < order; ++i) knots_.push_back(lo);
  for (int i = 1; i <= interior; ++i) {
    knots_.push_back(lo + (hi - lo) * static_cast<double>(i) / (interior + 1));
  }
  for (int i = 0; i < order; ++i) knots_.push_back(hi);
}

BasisSystem make_bspline_basis(double lo, double hi, int n_basis, int order) {
  return BasisSystem(lo, hi, n_basis, order);
}

namespace {

// index of the knot span containing t: largest mu with knots[mu] <= t,
// clamped so the span is nonempty (handles t == hi)
int find_span(const BasisSystem& b, double t) {
  const auto& knots = b.knots();
  const int m = b.order();
  const int k = b.size();
  if (t == b.hi()) return k - 1;
  int lo = m - 1, hi = k;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (knots[mid] <= t ? lo : hi) = mid;
  }
  return lo;
}

// values of the order nonzero basis functions at t, spans mu-order+1 .. mu
void nonzero_basis(const BasisSystem& b, int mu, double t, double* out) {
  const auto& knots = b.knots();
  const int m = b.order();
  out[0] = 1.0;
  std::vector<double> left(m), right(m);
  for (int j = 1; j < m; ++j) {
    left[j] = t - knots[mu + 1 - j];
    right[j] = knots[mu + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double tmp = denom == 0.0 ? 0.0 : out[r] / denom;
      out[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    out[j] = saved;
  }
}

}  // namespace

Eigen::MatrixXd eval_basis(const BasisSystem& b,
                           const std::vector<double>& grid) {
  const int k = b.size();
  const int m = b.order();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grid.size(), k);
  std::vector<double> vals(m);
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const double t = grid[r];
    if (!(t >= b.lo() && t <= b.hi()))
      fail(Errc::out_of_domain, "point " + std::to_string(t) +
                                    " outside [" + std::to_string(b.lo()) +
                                    "," + std::to_string(b.hi()) + "]");
    const int mu = find_span(b, t);
    nonzero_basis(b, mu, t, vals.data());
    for (int j = 0; j < m; ++j) {
      out(static_cast<int>(r), mu - m + 1 + j) = vals[j];
    }
  }
  return out;
}

GramMatrix gram_matrix(const BasisSystem& b) {
  const int k = b.size();
  const int m = b.order();
  GramMatrix j = GramMatrix::Zero(k, k);
  const auto& knots = b.knots();
  std::vector<double> vals(m);
  for (int span = m - 1; span < k; ++span) {
    const double a = knots[span], c = knots[span + 1];
    if (!(c > a)) continue;
    const auto q = gauss_legendre(m, a, c);
    for (int node = 0; node < m; ++node) {
      nonzero_basis(b, span, q.nodes[node], vals.data());
      for (int r = 0; r < m; ++r) {
        for (int s = 0; s < m; ++s) {
          j(span - m + 1 + r, span - m + 1 + s) +=
              q.weights[node] * vals[r] * vals[s];
        }
      }
    }
  }
  // enforce bitwise symmetry against accumulation-order noise
  j = ((j + j.transpose()) * 0.5).eval();
  return j;
}

namespace {

Eigen::MatrixXd second_difference(int k) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k >= 2 ? k - 2 : 0, k);
  for (int r = 0; r + 2 < k; ++r) {
    d(r, r) = 1.0;
    d(r, r + 1) = -2.0;
    d(r, r + 2) = 1.0;
  }
  return d;
}

struct SmoothParts {
  Eigen::MatrixXd design;
  Eigen::VectorXd y;
  Eigen::MatrixXd normal;  // E'E + penalty D'D
};

SmoothParts smooth_parts(const std::vector<std::pair<double, double>>& samples,
                         const BasisSystem& b, double penalty) {
  if (samples.empty()) fail(Errc::rank_deficient, "no samples to smooth");
  if (penalty < 0.0) fail(Errc::invalid_argument, "penalty must be nonnegative");
  std::vector<double> ts;
  ts.reserve(samples.size());
  for (const auto& [t, v] : samples) {
    (void)v;
    ts.push_back(t);
  }
  SmoothParts p;
  p.design = eval_basis(b, ts);
  p.y.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) p.y[i] = samples[i].second;
  const Eigen::MatrixXd d = second_difference(b.size());
  p.normal = p.design.transpose() * p.design +
             penalty * (d.transpose() * d);
  return p;
}

}  // namespace

Curve smooth_curve(const std::vector<std::pair<double, double>>& samples,
                   const BasisSystem& b, double penalty) {
  const auto p = smooth_parts(samples, b, penalty);
  if (penalty == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(p.design);
    qr.setThreshold(1e-10);
    if (qr.rank() < b.size())
      fail(Errc::rank_deficient,
           "samples do not determine all " + std::to_string(b.size()) +
               " coefficients; add samples or a positive penalty");
    return {b, qr.solve(p.y)};
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(p.normal);
  if (ldlt.info() != Eigen::Success)
    fail(Errc::rank_deficient, "smoothing system could not be factored");
  return {b, ldlt.solve(p.design.transpose() * p.y)};
}

double smoothing_gcv(const std::vector<std::pair<double, double>>& samples,
                     const BasisSystem& b, double penalty) {
  const auto p = smooth_parts(samples, b, penalty);
  const double n = static_cast<double>(samples.size());
  const Eigen::MatrixXd inv_normal =
      p.normal.ldlt().solve(Eigen::MatrixXd::Identity(b.size(), b.size()));
  const Eigen::MatrixXd hat = p.design * inv_normal * p.design.transpose();
  const double trace = hat.trace();
  const Eigen::VectorXd fitted = hat * p.y;
  const double rss = (p.y - fitted).squaredNorm();
  const double denom = (n - trace) / n;
  if (denom <= 0.0)
    fail(Errc::rank_deficient, "effective dof exhaust the sample");
  return (rss / n) / (denom * denom);
}

std::vector<double> curve_eval(const Curve& c,
                               const std::vector<double>& grid) {
  if (c.coeffs.size() != c.basis.size())
    fail(Errc::basis_mismatch, "coefficient length differs from basis size");
  const Eigen::VectorXd v = eval_basis(c.basis, grid) * c.coeffs;
  return {v.data(), v.data() + v.size()};
}

double l2_inner(const Curve& a, const Curve& c, const GramMatrix& j) {
  if (!(a.basis == c.basis))
    fail(Errc::basis_mismatch, "curves use different basis systems");
  if (j.rows() != a.basis.size() || j.cols() != a.basis.size())
    fail(Errc::basis_mismatch, "inner-product matrix does not fit the basis");
  if (a.coeffs.size() != a.basis.size() || c.coeffs.size() != c.basis.size())
    fail(Errc::basis_mismatch, "coefficient length differs from basis size");
  return a.coeffs.dot(j * c.coeffs);
}

}  // namespace nwfr
