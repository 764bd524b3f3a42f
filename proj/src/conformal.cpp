#include "nwfr/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "nwfr/errors.hpp"
#include "nwfr/numeric.hpp"
#include "nwfr/rng.hpp"

namespace nwfr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

SplitPlan stratified_split(const Network& g, const Partition& partition,
                           double frac, std::uint64_t seed, SplitMode mode,
                           const std::vector<int>& eligible) {
  const int n = g.n_vertices();
  if (static_cast<int>(partition.labels.size()) != n)
    fail(Errc::dimension_mismatch, "partition does not cover the graph");
  if (!(frac > 0.0 && frac < 1.0))
    fail(Errc::invalid_argument, "calibration fraction must lie in (0,1)");

  std::vector<char> in_pool(n, eligible.empty() ? 1 : 0);
  for (int v : eligible) {
    if (v < 0 || v >= n)
      fail(Errc::id_out_of_range, "eligible vertex outside the graph");
    in_pool[v] = 1;
  }

  // community members restricted to the pool, ascending ids
  std::vector<std::vector<int>> members(partition.k);
  int pool_size = 0;
  for (int v = 0; v < n; ++v) {
    if (in_pool[v]) {
      members[partition.labels[v]].push_back(v);
      ++pool_size;
    }
  }
  if (pool_size == 0) fail(Errc::empty_side, "no eligible vertices");

  std::vector<int> take(partition.k, 0);
  if (mode == SplitMode::one_per_community) {
    for (int c = 0; c < partition.k; ++c) {
      take[c] = members[c].size() >= 2 ? 1 : 0;
    }
  } else {
    // largest-remainder split of the rounded global count, so community
    // proportions are preserved and the total matches round(frac * pool)
    const long target = std::lround(frac * pool_size);
    std::vector<double> quota(partition.k);
    std::vector<long> base(partition.k);
    long assigned = 0;
    for (int c = 0; c < partition.k; ++c) {
      quota[c] = static_cast<double>(target) * members[c].size() / pool_size;
      base[c] = static_cast<long>(std::floor(quota[c]));
      assigned += base[c];
    }
    std::vector<int> order(partition.k);
    for (int c = 0; c < partition.k; ++c) order[c] = c;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return quota[a] - std::floor(quota[a]) > quota[b] - std::floor(quota[b]);
    });
    for (int idx = 0; assigned < target && idx < partition.k; ++idx) {
      base[order[idx]] += 1;
      ++assigned;
    }
    for (int c = 0; c < partition.k; ++c) {
      long t = base[c];
      const long sz = static_cast<long>(members[c].size());
      if (sz >= 2) t = std::min(t, sz - 1);  // keep one training vertex
      t = std::min(t, sz);
      take[c] = static_cast<int>(std::max(0l, t));
    }
  }

  SplitPlan plan;
  plan.frac = frac;
  plan.partition = partition;
  plan.seed = seed;
  for (int c = 0; c < partition.k; ++c) {
    std::vector<int> shuffled = members[c];
    Rng rng(derive_seed(seed, 0x73706c6974ull, static_cast<std::uint64_t>(c)));
    rng.shuffle(shuffled);
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      (static_cast<int>(i) < take[c] ? plan.calibration : plan.training)
          .push_back(shuffled[i]);
    }
  }
  std::sort(plan.training.begin(), plan.training.end());
  std::sort(plan.calibration.begin(), plan.calibration.end());
  if (plan.calibration.empty())
    fail(Errc::empty_side, "calibration side came out empty");
  if (plan.training.empty())
    fail(Errc::empty_side, "training side came out empty");
  return plan;
}

ModulationFn modulation_function(
    const std::vector<std::pair<Curve, Curve>>& pred_obs_pairs,
    const std::vector<double>& grid) {
  if (pred_obs_pairs.empty())
    fail(Errc::empty_scores, "need at least one calibration residual");
  if (grid.size() < 2) fail(Errc::empty_range, "grid too small");
  ModulationFn s;
  s.grid = grid;
  s.values.assign(grid.size(), 0.0);
  for (const auto& [pred, obs] : pred_obs_pairs) {
    const auto pv = curve_eval(pred, grid);
    const auto ov = curve_eval(obs, grid);
    for (std::size_t t = 0; t < grid.size(); ++t) {
      const double r = pv[t] - ov[t];
      s.values[t] += r * r;
    }
  }
  double smax = 0.0;
  for (auto& v : s.values) {
    v = std::sqrt(v / pred_obs_pairs.size());
    smax = std::max(smax, v);
  }
  s.floor_value = std::max(1e-6, 1e-3 * smax);
  for (auto& v : s.values) v = std::max(v, s.floor_value);
  return s;
}

double nonconformity(const Curve& pred, const Curve& obs,
                     const ModulationFn& s, ScoreKind kind) {
  if (s.grid.size() < 2 || s.grid.size() != s.values.size())
    fail(Errc::grid_mismatch, "modulation function carries no usable grid");
  if (!(pred.basis == obs.basis))
    fail(Errc::basis_mismatch, "curves use different basis systems");
  if (s.grid.front() < pred.basis.lo() || s.grid.back() > pred.basis.hi())
    fail(Errc::grid_mismatch, "grid leaves the curve domain");
  const auto pv = curve_eval(pred, s.grid);
  const auto ov = curve_eval(obs, s.grid);
  if (kind == ScoreKind::hinf) {
    double m = 0.0;
    for (std::size_t t = 0; t < s.grid.size(); ++t) {
      m = std::max(m, std::abs(pv[t] - ov[t]) / s.values[t]);
    }
    return m;
  }
  std::vector<double> sq(s.grid.size());
  for (std::size_t t = 0; t < s.grid.size(); ++t) {
    const double z = (pv[t] - ov[t]) / s.values[t];
    sq[t] = z * z;
  }
  return std::sqrt(trapezoid(s.grid, sq));
}

double conformal_quantile(const std::vector<double>& scores, double alpha) {
  if (scores.empty()) fail(Errc::empty_scores, "no calibration scores");
  if (!(alpha > 0.0 && alpha < 1.0))
    fail(Errc::invalid_argument, "alpha must lie in (0,1)");
  const std::size_t n = scores.size();
  const auto rank = static_cast<std::size_t>(
      std::ceil((1.0 - alpha) * static_cast<double>(n + 1)));
  if (rank > n) return kInf;
  std::vector<double> sorted = scores;
  std::nth_element(sorted.begin(), sorted.begin() + (rank - 1), sorted.end());
  return sorted[rank - 1];
}

PredictionBand build_band(const Curve& pred, double k_s,
                          const ModulationFn& s) {
  if (!(k_s >= 0.0)) fail(Errc::invalid_argument, "radius must be nonnegative");
  if (s.grid.empty() || s.grid.size() != s.values.size())
    fail(Errc::grid_mismatch, "modulation function carries no usable grid");
  return {pred, k_s, s};
}

std::vector<double> band_center_values(const PredictionBand& band) {
  return curve_eval(band.center, band.modulation.grid);
}

std::vector<double> band_lower_values(const PredictionBand& band) {
  auto v = band_center_values(band);
  for (std::size_t t = 0; t < v.size(); ++t) {
    v[t] -= band.radius * band.modulation.values[t];
  }
  return v;
}

std::vector<double> band_upper_values(const PredictionBand& band) {
  auto v = band_center_values(band);
  for (std::size_t t = 0; t < v.size(); ++t) {
    v[t] += band.radius * band.modulation.values[t];
  }
  return v;
}

CpReport evaluate(const std::vector<PredictionBand>& bands,
                  const std::vector<Curve>& observed, double alpha,
                  const std::vector<double>& grid, ScoreKind kind) {
  if (bands.empty() || bands.size() != observed.size())
    fail(Errc::length_mismatch,
         "need one observed curve per band, nonempty on both sides");
  if (!(alpha > 0.0 && alpha < 1.0))
    fail(Errc::invalid_argument, "alpha must lie in (0,1)");
  for (const auto& b : bands) {
    if (b.modulation.grid != grid)
      fail(Errc::grid_mismatch, "bands were built on a different grid");
  }
  const double domain = grid.back() - grid.front();
  if (!(domain > 0.0)) fail(Errc::empty_range, "degenerate evaluation grid");

  CpReport rep;
  rep.alpha = alpha;
  rep.kind = kind;
  const double pen = 2.0 / alpha;
  double cov_g = 0.0, cov_l = 0.0, abw = 0.0, sint = 0.0;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const auto lo = band_lower_values(bands[i]);
    const auto hi = band_upper_values(bands[i]);
    const auto y = curve_eval(observed[i], grid);
    std::vector<double> inside(grid.size());
    std::vector<double> width(grid.size());
    std::vector<double> score(grid.size());
    bool all_inside = true;
    for (std::size_t t = 0; t < grid.size(); ++t) {
      const bool in = lo[t] <= y[t] && y[t] <= hi[t];
      inside[t] = in ? 1.0 : 0.0;
      all_inside = all_inside && in;
      width[t] = hi[t] - lo[t];
      score[t] = width[t] + pen * std::max(0.0, lo[t] - y[t]) +
                 pen * std::max(0.0, y[t] - hi[t]);
    }
    cov_g += all_inside ? 1.0 : 0.0;
    cov_l += trapezoid(grid, inside) / domain;
    abw += trapezoid(grid, width);
    sint += trapezoid(grid, score);
  }
  const double n = static_cast<double>(bands.size());
  rep.cov_g = cov_g / n;
  rep.cov_l = cov_l / n;
  rep.abw = abw / n;
  rep.interval_score = sint / n;
  return rep;
}

ConformalResult run_split_conformal(
    const FunctionalDataset& d, const Network& g,
    const DistanceProvider& provider, double theta, double alpha,
    ScoreKind kind, double frac, std::uint64_t seed,
    const std::vector<int>& test_set, const RidgePolicy& ridge,
    SplitMode mode, int grid_points) {
  d.validate();
  const int n = d.n_vertices();
  if (g.n_vertices() != n)
    fail(Errc::dimension_mismatch,
         "graph and dataset disagree on the vertex count");
  std::set<int> test(test_set.begin(), test_set.end());
  for (int v : test) {
    if (v < 0 || v >= n)
      fail(Errc::id_out_of_range, "test vertex outside the graph");
  }
  std::vector<int> pool;
  for (int v = 0; v < n; ++v) {
    if (!test.count(v)) pool.push_back(v);
  }
  if (pool.empty()) fail(Errc::empty_side, "every vertex was held out");

  ConformalResult out;
  out.theta = theta;
  const Partition partition =
      louvain_communities(g, derive_seed(seed, 0x636f6d6dull));
  out.plan = stratified_split(g, partition, frac,
                              derive_seed(seed, 0x63616cull), mode, pool);

  const auto& train = out.plan.training;
  FunctionalDataset training;
  training.response_basis = d.response_basis;
  training.include_intercept = d.include_intercept;
  training.response_coeffs.resize(train.size(), d.response_basis.size());
  for (const auto& cov : d.covariates) {
    FunctionalDataset::Covariate c;
    c.basis = cov.basis;
    c.coeffs.resize(train.size(), cov.basis.size());
    training.covariates.push_back(std::move(c));
  }
  for (std::size_t r = 0; r < train.size(); ++r) {
    training.response_coeffs.row(r) = d.response_coeffs.row(train[r]);
    for (std::size_t p = 0; p < d.covariates.size(); ++p) {
      training.covariates[p].coeffs.row(r) =
          d.covariates[p].coeffs.row(train[r]);
    }
  }

  const auto grid =
      make_grid(d.response_basis.lo(), d.response_basis.hi(), grid_points);

  const auto predict_at = [&](int v) {
    std::vector<Curve> covs;
    covs.reserve(d.covariates.size());
    for (const auto& cov : d.covariates) {
      covs.push_back({cov.basis, cov.coeffs.row(v).transpose()});
    }
    std::vector<double> dist(train.size());
    for (std::size_t r = 0; r < train.size(); ++r) {
      dist[r] = provider.distance(v, train[r]);
    }
    return predict_new_vertex(training, provider, theta, ridge, covs, dist);
  };

  std::vector<std::pair<Curve, Curve>> pairs;
  pairs.reserve(out.plan.calibration.size());
  for (int v : out.plan.calibration) {
    pairs.emplace_back(predict_at(v),
                       Curve{d.response_basis, d.response_coeffs.row(v).transpose()});
  }
  out.modulation = modulation_function(pairs, grid);

  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& [pred, obs] : pairs) {
    scores.push_back(nonconformity(pred, obs, out.modulation, kind));
  }
  out.k_s = conformal_quantile(scores, alpha);

  out.test_ids.assign(test.begin(), test.end());
  std::vector<Curve> observed;
  for (int v : out.test_ids) {
    out.bands.push_back(build_band(predict_at(v), out.k_s, out.modulation));
    observed.push_back({d.response_basis, d.response_coeffs.row(v).transpose()});
  }
  if (!out.bands.empty()) {
    out.report = evaluate(out.bands, observed, alpha, grid, kind);
  } else {
    out.report.alpha = alpha;
    out.report.kind = kind;
  }
  return out;
}

}  // namespace nwfr
