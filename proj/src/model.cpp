#include "nwfr/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>

#include "nwfr/errors.hpp"
#include "nwfr/parallel.hpp"
#include "nwfr/rng.hpp"

namespace nwfr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCondThreshold = 1e12;
}  // namespace

void FunctionalDataset::validate() const {
  const int n = n_vertices();
  if (n <= 0) fail(Errc::dimension_mismatch, "dataset has no vertices");
  if (response_coeffs.cols() != response_basis.size())
    fail(Errc::dimension_mismatch,
         "response coefficients do not match the response basis size");
  if (covariates.empty() && !include_intercept)
    fail(Errc::invalid_combination,
         "need at least one covariate or an intercept");
  for (const auto& cov : covariates) {
    if (cov.coeffs.rows() != n)
      fail(Errc::dimension_mismatch,
           "covariate coefficient rows differ from the vertex count");
    if (cov.coeffs.cols() != cov.basis.size())
      fail(Errc::dimension_mismatch,
           "covariate coefficients do not match their basis size");
  }
  if (!response_coeffs.allFinite())
    fail(Errc::dimension_mismatch, "response coefficients must be finite");
}

DistanceProvider DistanceProvider::Uniform() { return {}; }

DistanceProvider DistanceProvider::NetworkGeodesic(Eigen::MatrixXd distances) {
  if (distances.rows() != distances.cols())
    fail(Errc::dimension_mismatch, "distance matrix must be square");
  DistanceProvider p;
  p.kind_ = Kind::geodesic;
  p.data_ = std::move(distances);
  p.id_ = "geodesic";
  return p;
}

DistanceProvider DistanceProvider::SpatialEuclidean(
    Eigen::MatrixXd coordinates) {
  if (coordinates.rows() == 0)
    fail(Errc::dimension_mismatch, "coordinate matrix is empty");
  DistanceProvider p;
  p.kind_ = Kind::euclidean;
  p.data_ = std::move(coordinates);
  p.id_ = "euclidean";
  return p;
}

double DistanceProvider::distance(int i, int j) const {
  switch (kind_) {
    case Kind::uniform:
      return 0.0;
    case Kind::geodesic:
      if (i < 0 || j < 0 || i >= data_.rows() || j >= data_.rows())
        fail(Errc::uncovered_vertex,
             "vertex " + std::to_string(i < 0 || i >= data_.rows() ? i : j) +
                 " is outside the distance matrix");
      return data_(i, j);
    case Kind::euclidean:
      if (i < 0 || j < 0 || i >= data_.rows() || j >= data_.rows())
        fail(Errc::uncovered_vertex,
             "vertex " + std::to_string(i < 0 || i >= data_.rows() ? i : j) +
                 " has no coordinates");
      return (data_.row(i) - data_.row(j)).norm();
  }
  return 0.0;
}

int DistanceProvider::coverage() const {
  return kind_ == Kind::uniform ? std::numeric_limits<int>::max()
                                : static_cast<int>(data_.rows());
}

std::vector<double> kernel_weights(const std::vector<double>& dist_row,
                                   double theta) {
  if (!(theta > 0.0))
    fail(Errc::nonpositive_bandwidth,
         "bandwidth must be positive, got " + std::to_string(theta));
  std::vector<double> w(dist_row.size());
  for (std::size_t i = 0; i < dist_row.size(); ++i) {
    const double d = dist_row[i];
    if (std::isnan(d) || d < 0.0)
      fail(Errc::invalid_argument, "distances must be nonnegative");
    const double z = d / theta;
    w[i] = std::isinf(d) ? 0.0 : std::exp(-0.5 * z * z);
  }
  return w;
}

Eigen::VectorXd weight_matrix(int i, const DistanceProvider& provider,
                              double theta, const std::vector<int>& active) {
  std::vector<double> dists(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    dists[a] = provider.distance(i, active[a]);
  }
  const auto w = kernel_weights(dists, theta);
  return Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
}

Eigen::MatrixXd stack_design(const FunctionalDataset& d) {
  d.validate();
  const int n = d.n_vertices();
  int m = d.include_intercept ? 1 : 0;
  for (const auto& cov : d.covariates) m += cov.basis.size();
  Eigen::MatrixXd x(n, m);
  int off = 0;
  for (const auto& cov : d.covariates) {
    x.middleCols(off, cov.basis.size()) = cov.coeffs * gram_matrix(cov.basis);
    off += cov.basis.size();
  }
  if (d.include_intercept) {
    x.col(off).setConstant(d.response_basis.hi() - d.response_basis.lo());
  }
  return x;
}

Eigen::MatrixXd fit_vertex(const Eigen::MatrixXd& design_rows,
                           const Eigen::MatrixXd& y_rows,
                           const Eigen::VectorXd& weights, double lambda,
                           double* cond_out) {
  const int n = static_cast<int>(design_rows.rows());
  const int m = static_cast<int>(design_rows.cols());
  if (y_rows.rows() != n || weights.size() != n)
    fail(Errc::dimension_mismatch,
         "design, response, and weights disagree on the row count");
  if (lambda < 0.0) fail(Errc::invalid_argument, "ridge must be nonnegative");
  for (int i = 0; i < n; ++i) {
    if (!(weights[i] >= 0.0) || std::isinf(weights[i]))
      fail(Errc::invalid_argument, "weights must be finite and nonnegative");
  }
  Eigen::MatrixXd a = design_rows.transpose() *
                      weights.asDiagonal() * design_rows;
  a.diagonal().array() += lambda;
  const Eigen::MatrixXd b =
      design_rows.transpose() * weights.asDiagonal() * y_rows;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.compute(a, Eigen::EigenvaluesOnly);
  const double emin = es.eigenvalues().minCoeff();
  const double emax = es.eigenvalues().maxCoeff();
  const double cond = emin > 0.0 ? emax / emin : kInf;
  if (cond_out) *cond_out = cond;
  if (lambda == 0.0 && !(cond < kCondThreshold))
    fail(Errc::singular_system,
         "normal equations are numerically singular (condition " +
             std::to_string(cond) + "); supply a ridge or more neighbors");

  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success)
    fail(Errc::singular_system, "normal equations could not be factored");
  return ldlt.solve(b);
}

int NwfrFit::block_index(int vertex) const {
  const auto it = std::lower_bound(vertices.begin(), vertices.end(), vertex);
  if (it == vertices.end() || *it != vertex) return -1;
  return static_cast<int>(it - vertices.begin());
}

Eigen::MatrixXd NwfrFit::covariate_block(int vertex, int p) const {
  if (p < 0 || p >= static_cast<int>(covariate_bases.size()))
    fail(Errc::index_out_of_range,
         "covariate index " + std::to_string(p) + " out of range");
  const int idx = block_index(vertex);
  if (idx < 0)
    fail(Errc::missing_block,
         "no model was fitted for vertex " + std::to_string(vertex));
  return blocks[idx].middleRows(covariate_offsets[p], covariate_sizes[p]);
}

NwfrFit fit_all(const FunctionalDataset& d, const DistanceProvider& provider,
                double theta, const RidgePolicy& ridge,
                const std::vector<int>& training_set) {
  d.validate();
  if (training_set.empty())
    fail(Errc::invalid_argument, "training set is empty");
  const int n = d.n_vertices();
  std::set<int> uniq;
  for (int v : training_set) {
    if (v < 0 || v >= n)
      fail(Errc::id_out_of_range,
           "training vertex " + std::to_string(v) + " outside [0," +
               std::to_string(n) + ")");
    uniq.insert(v);
  }

  NwfrFit fit;
  fit.theta = theta;
  fit.ridge = ridge;
  fit.provider_id = provider.id();
  fit.include_intercept = d.include_intercept;
  fit.response_basis = d.response_basis;
  int off = 0;
  for (const auto& cov : d.covariates) {
    fit.covariate_bases.push_back(cov.basis);
    fit.covariate_offsets.push_back(off);
    fit.covariate_sizes.push_back(cov.basis.size());
    off += cov.basis.size();
  }
  fit.vertices.assign(uniq.begin(), uniq.end());
  fit.design = stack_design(d);

  const int nt = static_cast<int>(fit.vertices.size());
  const int m = static_cast<int>(fit.design.cols());
  Eigen::MatrixXd dtrain(nt, m);
  Eigen::MatrixXd ytrain(nt, d.response_basis.size());
  for (int r = 0; r < nt; ++r) {
    dtrain.row(r) = fit.design.row(fit.vertices[r]);
    ytrain.row(r) = d.response_coeffs.row(fit.vertices[r]);
  }

  fit.blocks.resize(nt);
  fit.cond.resize(nt);
  fit.lambda.resize(nt);
  parallel_for(static_cast<std::size_t>(nt), [&](std::size_t r) {
    const Eigen::VectorXd w =
        weight_matrix(fit.vertices[r], provider, theta, fit.vertices);
    double trace = 0.0;
    for (int j = 0; j < nt; ++j) trace += w[j] * dtrain.row(j).squaredNorm();
    const double lambda = ridge.effective(trace, m);
    fit.lambda[r] = lambda;
    fit.blocks[r] = fit_vertex(dtrain, ytrain, w, lambda, &fit.cond[r]);
  });
  return fit;
}

Curve predict_vertex(const NwfrFit& fit, int i) {
  if (i < 0 || i >= fit.design.rows())
    fail(Errc::id_out_of_range,
         "vertex " + std::to_string(i) + " has no design row");
  const int idx = fit.block_index(i);
  if (idx < 0)
    fail(Errc::missing_block,
         "no model was fitted for vertex " + std::to_string(i));
  return {fit.response_basis,
          (fit.design.row(i) * fit.blocks[idx]).transpose()};
}

Curve predict_new_vertex(const FunctionalDataset& training,
                         const DistanceProvider& provider, double theta,
                         const RidgePolicy& ridge,
                         const std::vector<Curve>& new_covariates,
                         const std::vector<double>& distances_to_training) {
  training.validate();
  const int n = training.n_vertices();
  if (static_cast<int>(distances_to_training.size()) != n)
    fail(Errc::length_mismatch,
         "need one distance per training vertex, got " +
             std::to_string(distances_to_training.size()) + " for " +
             std::to_string(n));
  if (new_covariates.size() != training.covariates.size())
    fail(Errc::length_mismatch,
         "covariate curve count differs from the training dataset");
  for (std::size_t p = 0; p < new_covariates.size(); ++p) {
    if (!(new_covariates[p].basis == training.covariates[p].basis))
      fail(Errc::basis_mismatch,
           "new covariate " + std::to_string(p) +
               " uses a different basis than the training data");
    if (new_covariates[p].coeffs.size() != new_covariates[p].basis.size())
      fail(Errc::basis_mismatch, "new covariate coefficients malformed");
  }

  Eigen::VectorXd w;
  if (provider.is_uniform()) {
    w = Eigen::VectorXd::Ones(n);
    if (!(theta > 0.0))
      fail(Errc::nonpositive_bandwidth, "bandwidth must be positive");
  } else {
    const auto kw = kernel_weights(distances_to_training, theta);
    w = Eigen::Map<const Eigen::VectorXd>(kw.data(), kw.size());
  }
  if (w.sum() <= 0.0)
    fail(Errc::uncovered_vertex,
         "no training vertex carries weight for the new vertex");

  const Eigen::MatrixXd x = stack_design(training);
  const int m = static_cast<int>(x.cols());
  double trace = 0.0;
  for (int j = 0; j < n; ++j) trace += w[j] * x.row(j).squaredNorm();
  const Eigen::MatrixXd block = fit_vertex(
      x, training.response_coeffs, w, ridge.effective(trace, m), nullptr);

  Eigen::RowVectorXd row(m);
  int off = 0;
  for (std::size_t p = 0; p < new_covariates.size(); ++p) {
    const int kp = new_covariates[p].basis.size();
    row.segment(off, kp) = new_covariates[p].coeffs.transpose() *
                           gram_matrix(new_covariates[p].basis);
    off += kp;
  }
  if (training.include_intercept) {
    row(off) = training.response_basis.hi() - training.response_basis.lo();
  }
  return {training.response_basis, (row * block).transpose()};
}

Eigen::MatrixXd beta_surface(const NwfrFit& fit, int i, int p,
                             const std::vector<double>& s_grid,
                             const std::vector<double>& t_grid) {
  const Eigen::MatrixXd bp = fit.covariate_block(i, p);
  const Eigen::MatrixXd phis = eval_basis(fit.covariate_bases[p], s_grid);
  const Eigen::MatrixXd psit = eval_basis(fit.response_basis, t_grid);
  return psit * bp.transpose() * phis.transpose();
}

GofReport gof(const std::vector<Curve>& observed,
              const std::vector<Curve>& predicted,
              const std::vector<double>& grid) {
  if (observed.empty() || observed.size() != predicted.size())
    fail(Errc::length_mismatch,
         "observed and predicted curve lists must be nonempty and equal");
  const BasisSystem& basis = observed.front().basis;
  for (const auto& c : observed) {
    if (!(c.basis == basis)) fail(Errc::basis_mismatch, "mixed bases");
  }
  for (const auto& c : predicted) {
    if (!(c.basis == basis)) fail(Errc::basis_mismatch, "mixed bases");
  }
  const int n = static_cast<int>(observed.size());
  const int k = basis.size();
  const GramMatrix j = gram_matrix(basis);

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  for (const auto& c : observed) mean += c.coeffs;
  mean /= n;

  double sse = 0.0, sst = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd de = observed[i].coeffs - predicted[i].coeffs;
    const Eigen::VectorXd dm = observed[i].coeffs - mean;
    sse += de.dot(j * de);
    sst += dm.dot(j * dm);
  }

  GofReport rep;
  rep.rimse = std::sqrt(std::max(0.0, sse) / n);
  if (sst <= 0.0)
    fail(Errc::degenerate_variance,
         "observed curves are all identical; fit quality is undefined");
  rep.r2_integrated = 1.0 - sse / sst;

  rep.grid = grid;
  rep.r2_pointwise.resize(grid.size());
  const Eigen::MatrixXd e = eval_basis(basis, grid);
  Eigen::MatrixXd obs(n, grid.size()), prd(n, grid.size());
  for (int i = 0; i < n; ++i) {
    obs.row(i) = (e * observed[i].coeffs).transpose();
    prd.row(i) = (e * predicted[i].coeffs).transpose();
  }
  const Eigen::RowVectorXd mrow = (e * mean).transpose();
  for (std::size_t t = 0; t < grid.size(); ++t) {
    const double sse_t = (obs.col(t) - prd.col(t)).squaredNorm();
    const double sst_t =
        (obs.col(t).array() - mrow(static_cast<int>(t))).matrix().squaredNorm();
    rep.r2_pointwise[t] =
        sst_t > 0.0 ? 1.0 - sse_t / sst_t : (sse_t == 0.0 ? 1.0 : 0.0);
  }
  return rep;
}

std::vector<double> default_theta_grid(const DistanceProvider& provider,
                                       int n_vertices, int n_candidates) {
  if (n_candidates < 1)
    fail(Errc::invalid_argument, "need at least one candidate");
  const int n = std::min(n_vertices, provider.coverage());
  double lo = kInf, hi = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = provider.distance(i, j);
      if (d > 0.0 && std::isfinite(d)) {
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
    }
  }
  if (!(hi > 0.0) || !std::isfinite(lo))
    fail(Errc::empty_range,
         "no positive finite distances; a bandwidth grid is undefined");
  lo /= 2.0;
  hi *= 2.0;
  std::vector<double> grid(n_candidates);
  if (n_candidates == 1) {
    grid[0] = hi;
    return grid;
  }
  for (int i = 0; i < n_candidates; ++i) {
    grid[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) *
                                          static_cast<double>(i) /
                                          (n_candidates - 1));
  }
  return grid;
}

double select_bandwidth(const FunctionalDataset& d,
                        const DistanceProvider& provider,
                        const std::vector<double>& theta_grid,
                        const RidgePolicy& ridge, std::uint64_t seed) {
  (void)seed;  // the LOO sweep is deterministic
  d.validate();
  if (theta_grid.empty())
    fail(Errc::invalid_argument, "bandwidth grid is empty");
  for (double t : theta_grid) {
    if (!(t > 0.0))
      fail(Errc::nonpositive_bandwidth, "bandwidth candidates must be positive");
  }
  const int n = d.n_vertices();
  if (n < 2)
    fail(Errc::invalid_argument, "leave-one-out needs at least two vertices");

  const Eigen::MatrixXd x = stack_design(d);
  const int m = static_cast<int>(x.cols());
  const GramMatrix j = gram_matrix(d.response_basis);

  std::vector<double> grid = theta_grid;
  std::sort(grid.begin(), grid.end());

  double best_theta = 0.0;
  double best_score = kInf;
  bool any = false;
  for (const double theta : grid) {
    std::vector<double> errs(n, 0.0);
    bool failed = false;
    try {
      parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        Eigen::MatrixXd xr(n - 1, m);
        Eigen::MatrixXd yr(n - 1, d.response_basis.size());
        Eigen::VectorXd w(n - 1);
        int r = 0;
        for (int v = 0; v < n; ++v) {
          if (v == static_cast<int>(i)) continue;
          xr.row(r) = x.row(v);
          yr.row(r) = d.response_coeffs.row(v);
          w[r] = provider.is_uniform()
                     ? 1.0
                     : std::exp(-0.5 * std::pow(provider.distance(
                                           static_cast<int>(i), v) /
                                           theta,
                                       2.0));
          ++r;
        }
        if (w.sum() <= 0.0)
          fail(Errc::uncovered_vertex,
               "vertex " + std::to_string(i) +
                   " is infinitely far from all others");
        double trace = 0.0;
        for (int q = 0; q < n - 1; ++q) trace += w[q] * xr.row(q).squaredNorm();
        const Eigen::MatrixXd block =
            fit_vertex(xr, yr, w, ridge.effective(trace, m), nullptr);
        const Eigen::VectorXd pred = (x.row(i) * block).transpose();
        const Eigen::VectorXd diff =
            d.response_coeffs.row(i).transpose() - pred;
        errs[i] = diff.dot(j * diff);
      });
    } catch (const Error&) {
      failed = true;
    }
    if (failed) continue;
    double sum = 0.0;
    for (double e : errs) sum += e;
    const double score = std::sqrt(sum / n);
    if (!std::isfinite(score)) continue;
    if (score <= best_score) {  // <= prefers the larger theta on ties
      best_score = score;
      best_theta = theta;
    }
    any = true;
  }
  if (!any)
    fail(Errc::all_fits_failed,
         "every bandwidth candidate failed leave-one-out evaluation");
  return best_theta;
}

double coef_variance_vk(const NwfrFit& fit, int k) {
  if (k < 0 || k >= static_cast<int>(fit.covariate_bases.size()))
    fail(Errc::index_out_of_range,
         "covariate index " + std::to_string(k) + " out of range");
  const int nt = static_cast<int>(fit.vertices.size());
  if (nt < 2)
    fail(Errc::invalid_argument,
         "coefficient dispersion needs at least two vertex models");
  const GramMatrix jphi = gram_matrix(fit.covariate_bases[k]);
  const GramMatrix jpsi = gram_matrix(fit.response_basis);
  const int off = fit.covariate_offsets[k];
  const int kp = fit.covariate_sizes[k];

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(kp, fit.response_basis.size());
  for (const auto& b : fit.blocks) mean += b.middleRows(off, kp);
  mean /= nt;

  double v = 0.0;
  for (const auto& b : fit.blocks) {
    const Eigen::MatrixXd delta = b.middleRows(off, kp) - mean;
    v += (jphi * delta * jpsi).cwiseProduct(delta).sum();
  }
  return v / nt;
}

namespace {

DistanceProvider permuted_provider(const DistanceProvider& base, int n,
                                   const std::vector<int>& perm) {
  if (base.is_uniform()) return base;
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = base.distance(perm[i], perm[j]);
    }
  }
  return DistanceProvider::NetworkGeodesic(std::move(d));
}

}  // namespace

PermTestResult permutation_test(const FunctionalDataset& d, const Network& g,
                                const DistanceProvider& provider, double theta,
                                int k, int n_perm, std::uint64_t seed,
                                const RidgePolicy& ridge) {
  d.validate();
  const int n = d.n_vertices();
  if (g.n_vertices() != n)
    fail(Errc::dimension_mismatch,
         "graph and dataset disagree on the vertex count");
  if (n_perm < 1)
    fail(Errc::invalid_argument, "need at least one permutation");
  if (k < 0 || k >= d.n_covariates())
    fail(Errc::index_out_of_range,
         "covariate index " + std::to_string(k) + " out of range");

  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;

  PermTestResult res;
  {
    const NwfrFit fit = fit_all(d, provider, theta, ridge, all);
    res.v_obs = coef_variance_vk(fit, k);
  }

  std::vector<std::vector<int>> perms(n_perm);
  for (int r = 0; r < n_perm; ++r) {
    Rng rng(derive_seed(seed, 0x7065726dull, static_cast<std::uint64_t>(r)));
    perms[r] = rng.permutation(n);
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> null(n_perm, nan);
  std::atomic<int> failed{0};
  parallel_for(static_cast<std::size_t>(n_perm), [&](std::size_t r) {
    try {
      const DistanceProvider pp = permuted_provider(provider, n, perms[r]);
      const NwfrFit fit = fit_all(d, pp, theta, ridge, all);
      null[r] = coef_variance_vk(fit, k);
    } catch (const Error&) {
      failed.fetch_add(1);
    }
  });

  int geq = 0;
  res.null_sample.reserve(n_perm);
  for (double v : null) {
    if (std::isnan(v)) continue;
    res.null_sample.push_back(v);
    if (v >= res.v_obs) ++geq;
  }
  res.n_failed = failed.load();
  res.p_value = (1.0 + geq) / (1.0 + n_perm);
  return res;
}

}  // namespace nwfr
