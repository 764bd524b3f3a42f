#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "nwfr/basis.hpp"
#include "nwfr/graph.hpp"

namespace nwfr {

// Functional observations over graph vertices, all represented by basis
// coefficients. Row i of every coefficient matrix belongs to vertex i.
struct FunctionalDataset {
  struct Covariate {
    BasisSystem basis;
    Eigen::MatrixXd coeffs;  // N x K_p
  };
  BasisSystem response_basis;
  Eigen::MatrixXd response_coeffs;  // N x K
  std::vector<Covariate> covariates;
  bool include_intercept = false;

  int n_vertices() const { return static_cast<int>(response_coeffs.rows()); }
  int n_covariates() const { return static_cast<int>(covariates.size()); }
  void validate() const;
};

// Pseudo-distance between vertices: graph geodesics, Euclidean coordinates,
// or the degenerate all-zero distance that makes every vertex equivalent.
class DistanceProvider {
 public:
  static DistanceProvider Uniform();
  static DistanceProvider NetworkGeodesic(Eigen::MatrixXd distances);
  static DistanceProvider SpatialEuclidean(Eigen::MatrixXd coordinates);

  double distance(int i, int j) const;
  bool is_uniform() const { return kind_ == Kind::uniform; }
  // number of vertices covered; uniform covers any id
  int coverage() const;
  const std::string& id() const { return id_; }

 private:
  enum class Kind { uniform, geodesic, euclidean } kind_ = Kind::uniform;
  Eigen::MatrixXd data_;
  std::string id_ = "uniform";
};

// Ridge strength for the per-vertex normal equations. The scaled form adapts
// to the local weight mass: lambda = c * trace(X'WX) / M.
struct RidgePolicy {
  enum class Kind { scaled, absolute } kind = Kind::scaled;
  double value = 1e-8;

  static RidgePolicy scaled(double c = 1e-8) { return {Kind::scaled, c}; }
  static RidgePolicy absolute(double lambda) { return {Kind::absolute, lambda}; }
  static RidgePolicy none() { return absolute(0.0); }
  double effective(double trace, int m) const {
    return kind == Kind::scaled ? value * trace / static_cast<double>(m)
                                : value;
  }
};

// Result of fitting one weighted regression per training vertex.
struct NwfrFit {
  double theta = 0.0;
  RidgePolicy ridge;
  std::string provider_id;
  bool include_intercept = false;
  BasisSystem response_basis;
  std::vector<BasisSystem> covariate_bases;
  std::vector<int> covariate_offsets;  // column offset of each block in X
  std::vector<int> covariate_sizes;

  std::vector<int> vertices;             // training ids, ascending
  std::vector<Eigen::MatrixXd> blocks;   // per training vertex, M x K
  std::vector<double> cond;              // condition number of each system
  std::vector<double> lambda;            // effective ridge of each system
  Eigen::MatrixXd design;                // full N x M stacked design

  int block_index(int vertex) const;  // -1 when the vertex was not fitted
  // rows of a vertex block belonging to covariate p (K_p x K)
  Eigen::MatrixXd covariate_block(int vertex, int p) const;
};

struct GofReport {
  double rimse = 0.0;
  std::vector<double> grid;
  std::vector<double> r2_pointwise;
  double r2_integrated = 0.0;
};

struct PermTestResult {
  double v_obs = 0.0;
  double p_value = 1.0;
  std::vector<double> null_sample;
  int n_failed = 0;
};

// w = exp(-0.5 (d/theta)^2); 1 at d=0, 0 at d=+inf
std::vector<double> kernel_weights(const std::vector<double>& dist_row,
                                   double theta);

// kernel weights of vertex i against the active subset
Eigen::VectorXd weight_matrix(int i, const DistanceProvider& provider,
                              double theta, const std::vector<int>& active);

// X = [X_1 J_1 | ... | X_P J_P | intercept column]; the intercept column is
// the constant |domain of the response basis|
Eigen::MatrixXd stack_design(const FunctionalDataset& d);

// solves (X'WX + lambda I) B = X'WY; cond_out reports the condition number
// of the (ridged) system
Eigen::MatrixXd fit_vertex(const Eigen::MatrixXd& design_rows,
                           const Eigen::MatrixXd& y_rows,
                           const Eigen::VectorXd& weights, double lambda,
                           double* cond_out = nullptr);

NwfrFit fit_all(const FunctionalDataset& d, const DistanceProvider& provider,
                double theta, const RidgePolicy& ridge,
                const std::vector<int>& training_set);

Curve predict_vertex(const NwfrFit& fit, int i);

// Fits a fresh block for an unseen vertex from the training dataset, using
// kernel weights of the supplied distances, then applies the new vertex's
// own covariates.
Curve predict_new_vertex(const FunctionalDataset& training,
                         const DistanceProvider& provider, double theta,
                         const RidgePolicy& ridge,
                         const std::vector<Curve>& new_covariates,
                         const std::vector<double>& distances_to_training);

// surface values beta_p(t, s) with t along rows and s along columns
Eigen::MatrixXd beta_surface(const NwfrFit& fit, int i, int p,
                             const std::vector<double>& s_grid,
                             const std::vector<double>& t_grid);

GofReport gof(const std::vector<Curve>& observed,
              const std::vector<Curve>& predicted,
              const std::vector<double>& grid);

// 20 log-spaced candidates from half the smallest positive distance to
// twice the largest finite one
std::vector<double> default_theta_grid(const DistanceProvider& provider,
                                       int n_vertices, int n_candidates = 20);

// leave-one-out bandwidth selection; ties break toward the larger theta.
// The seed is accepted for interface stability; the search is deterministic.
double select_bandwidth(const FunctionalDataset& d,
                        const DistanceProvider& provider,
                        const std::vector<double>& theta_grid,
                        const RidgePolicy& ridge, std::uint64_t seed);

// dispersion of covariate k's coefficient blocks across vertices
double coef_variance_vk(const NwfrFit& fit, int k);

// Refits the model under random data-to-vertex reassignments and compares
// the observed dispersion of covariate k against the permutation null.
// Replicate fits use a deliberately strong default ridge: permuted
// assignments concentrate conflicting rows inside small neighborhoods and
// the dispersion statistic otherwise explodes on near-singular refits.
// The same policy is applied to the observed fit, so the null stays exact.
PermTestResult permutation_test(const FunctionalDataset& d, const Network& g,
                                const DistanceProvider& provider, double theta,
                                int k, int n_perm, std::uint64_t seed,
                                const RidgePolicy& ridge = RidgePolicy::scaled(0.3));

}  // namespace nwfr
