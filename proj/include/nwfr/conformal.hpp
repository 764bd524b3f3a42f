#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "nwfr/graph.hpp"
#include "nwfr/model.hpp"

namespace nwfr {

struct SplitPlan {
  std::vector<int> training;
  std::vector<int> calibration;
  double frac = 0.0;
  Partition partition;
  std::uint64_t seed = 0;
};

enum class SplitMode {
  proportional,        // calibration spread over communities by size
  one_per_community,   // strict: at most one calibration vertex per community
};

// Samples the calibration set community by community. `eligible` restricts
// the vertices that may be used at all (empty means everyone); vertices
// outside it belong to neither side.
SplitPlan stratified_split(const Network& g, const Partition& partition,
                           double frac, std::uint64_t seed,
                           SplitMode mode = SplitMode::proportional,
                           const std::vector<int>& eligible = {});

// Pointwise scale S(t) for residuals, floored away from zero so that
// normalized scores stay finite.
struct ModulationFn {
  std::vector<double> grid;
  std::vector<double> values;
  double floor_value = 0.0;
};

ModulationFn modulation_function(
    const std::vector<std::pair<Curve, Curve>>& pred_obs_pairs,
    const std::vector<double>& grid);

enum class ScoreKind { h2, hinf };

// h2: L2 norm of the S-normalized residual; hinf: its sup over the grid
double nonconformity(const Curve& pred, const Curve& obs,
                     const ModulationFn& s, ScoreKind kind);

// the ceil((1-alpha)(n+1))-th smallest score, +inf when that exceeds n
double conformal_quantile(const std::vector<double>& scores, double alpha);

struct PredictionBand {
  Curve center;
  double radius = 0.0;  // quantile multiplier applied to S(t)
  ModulationFn modulation;
};

PredictionBand build_band(const Curve& pred, double k_s,
                          const ModulationFn& s);

std::vector<double> band_center_values(const PredictionBand& band);
std::vector<double> band_lower_values(const PredictionBand& band);
std::vector<double> band_upper_values(const PredictionBand& band);

struct CpReport {
  double cov_g = 0.0;           // fraction of curves inside everywhere
  double cov_l = 0.0;           // mean covered fraction of the domain
  double abw = 0.0;             // mean integrated band width
  double interval_score = 0.0;  // abw plus miscoverage penalties
  double alpha = 0.0;
  ScoreKind kind = ScoreKind::h2;
};

CpReport evaluate(const std::vector<PredictionBand>& bands,
                  const std::vector<Curve>& observed, double alpha,
                  const std::vector<double>& grid,
                  ScoreKind kind = ScoreKind::h2);

struct ConformalResult {
  SplitPlan plan;
  double theta = 0.0;
  ModulationFn modulation;
  double k_s = 0.0;
  std::vector<int> test_ids;
  std::vector<PredictionBand> bands;
  CpReport report;
};

// Full split-conformal pipeline: community detection, stratified split over
// the non-test vertices, training fit, calibration scoring, and bands plus
// coverage metrics for the held-out test vertices.
ConformalResult run_split_conformal(
    const FunctionalDataset& d, const Network& g,
    const DistanceProvider& provider, double theta, double alpha,
    ScoreKind kind, double frac, std::uint64_t seed,
    const std::vector<int>& test_set,
    const RidgePolicy& ridge = RidgePolicy::scaled(),
    SplitMode mode = SplitMode::proportional, int grid_points = 201);

}  // namespace nwfr
